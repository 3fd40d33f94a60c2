//! `design` subcommand: solve the CRB-matching separation for the
//! configured query, print a table, and emit the same row as CSV.

use std::io::Write;

use nfvel_core::design::match_design;

use crate::config::ResolvedConfig;
use crate::csvout::{fmt_float, CsvWriter};
use crate::{CliError, RunOptions};

const COLUMNS: [&str; 9] = [
    "m0",
    "k",
    "m_bar",
    "eta",
    "l_bar_real",
    "l_bar",
    "saving_pct",
    "transverse_ratio",
    "radial_penalty_db",
];

pub fn run<W: Write, T: Write>(
    cfg: &ResolvedConfig,
    _opts: &RunOptions,
    csv_out: W,
    mut table_out: T,
) -> Result<(), CliError> {
    let spec = &cfg.design;
    let design = match_design(spec.m0, spec.k, spec.target, spec.rounding)
        .map_err(|e| CliError::Infeasible(e.to_string()))?;

    writeln!(
        table_out,
        "{:>6} {:>4} {:>6} {:>10} {:>11} {:>6} {:>10} {:>10} {:>12}",
        "M0", "K", "M_bar", "eta", "L_bar_real", "L_bar", "saving_%", "vt_ratio", "vr_pen_dB"
    )?;
    writeln!(
        table_out,
        "{:>6} {:>4} {:>6} {:>10.6} {:>11.4} {:>6} {:>10.2} {:>10.6} {:>12.4}",
        design.query.reference_ula_count,
        design.query.num_modules,
        design.query.per_module_count,
        design.eta,
        design.l_bar_real,
        design.l_bar,
        100.0 * design.antenna_saving,
        design.transverse_ratio,
        design.radial_penalty_db,
    )?;
    table_out.flush()?;

    let mut w = CsvWriter::new(csv_out);
    w.metadata("nfvel design")?;
    for line in &cfg.echo_lines {
        w.metadata(line)?;
    }
    w.header(&COLUMNS)?;
    w.row(&[
        design.query.reference_ula_count.to_string(),
        design.query.num_modules.to_string(),
        design.query.per_module_count.to_string(),
        fmt_float(design.eta),
        fmt_float(design.l_bar_real),
        design.l_bar.to_string(),
        fmt_float(100.0 * design.antenna_saving),
        fmt_float(design.transverse_ratio),
        fmt_float(design.radial_penalty_db),
    ])?;
    w.finish()?;
    Ok(())
}
