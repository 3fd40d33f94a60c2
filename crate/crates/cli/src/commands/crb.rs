//! `crb` subcommand: exact and closed-form velocity CRBs over a distance
//! grid, one row per (array, distance).

use std::io::Write;

use nfvel_core::fisher::{crb_closed_mla, crb_closed_ula, crb_from_fim, fim_exact};
use nfvel_core::TargetState;

use crate::config::ResolvedConfig;
use crate::csvout::{fmt_float, CsvWriter};
use crate::{CliError, RunOptions};

const COLUMNS: [&str; 10] = [
    "array",
    "r_m",
    "below_fresnel",
    "crb_vr_exact",
    "crb_vt_exact",
    "crb_vr_closed",
    "crb_vt_closed",
    "crb_vr_ula_equiv",
    "crb_vt_ula_equiv",
    "status",
];

pub fn run<W: Write>(cfg: &ResolvedConfig, opts: &RunOptions, out: W) -> Result<(), CliError> {
    let geoms: Vec<_> = cfg.arrays.iter().map(|a| &a.geom).collect();
    let grid = cfg.crb.grid(&geoms);
    let theta = cfg.target.angle_rad;

    let mut w = CsvWriter::new(out);
    w.metadata("nfvel crb")?;
    for line in &cfg.echo_lines {
        w.metadata(line)?;
    }
    for a in &cfg.arrays {
        w.metadata(&format!(
            "array label={} m={} k={} l={} delta_m={} aperture_m={} fresnel_m={}",
            a.label,
            a.geom.num_per_module,
            a.geom.num_modules,
            a.geom.module_spacing_param,
            fmt_float(a.geom.element_spacing),
            fmt_float(a.geom.aperture()),
            fmt_float(a.geom.fresnel_distance()),
        ))?;
    }
    w.header(&COLUMNS)?;

    let empty = || (String::new(), String::new());
    let mut rows_with_values = 0usize;
    for a in &cfg.arrays {
        let d_f = a.geom.fresnel_distance();
        for &r in &grid {
            let target = TargetState::new(r, theta, cfg.target.v_r, cfg.target.v_t)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let gamma = cfg
                .budget
                .snr_gamma(&cfg.cpi, r)
                .map_err(|e| CliError::Config(e.to_string()))?;

            let mut singular = false;
            let (vr_exact, vt_exact) = if opts.closed_only {
                empty()
            } else {
                match crb_from_fim(&fim_exact(&a.geom, &target, gamma)) {
                    Ok(pair) => (fmt_float(pair.v_r), fmt_float(pair.v_t)),
                    Err(_) => {
                        singular = true;
                        empty()
                    }
                }
            };
            let ((vr_closed, vt_closed), (vr_ula, vt_ula)) = if opts.exact_only {
                (empty(), empty())
            } else {
                let closed = match crb_closed_mla(&a.geom, &target, gamma) {
                    Ok(pair) => (fmt_float(pair.v_r), fmt_float(pair.v_t)),
                    Err(_) => {
                        singular = true;
                        empty()
                    }
                };
                // collocated array with the same element count and spacing
                let ula = match crb_closed_ula(
                    a.geom.num_elements(),
                    a.geom.element_spacing,
                    r,
                    theta,
                    gamma,
                ) {
                    Ok(pair) => (fmt_float(pair.v_r), fmt_float(pair.v_t)),
                    Err(_) => {
                        singular = true;
                        empty()
                    }
                };
                (closed, ula)
            };

            let any_value = [&vr_exact, &vr_closed, &vr_ula].iter().any(|s| !s.is_empty());
            if any_value {
                rows_with_values += 1;
            }
            w.row(&[
                a.label.clone(),
                fmt_float(r),
                if r < d_f { "1" } else { "0" }.to_string(),
                vr_exact,
                vt_exact,
                vr_closed,
                vt_closed,
                vr_ula,
                vt_ula,
                if singular { "singular" } else { "ok" }.to_string(),
            ])?;
        }
    }
    w.finish()?;
    if rows_with_values == 0 {
        return Err(CliError::Infeasible(
            "every requested point is singular; no bounds computed".into(),
        ));
    }
    Ok(())
}
