//! Experiment configuration: TOML ingestion with built-in defaults, unit
//! conversion at the boundary (degrees, dBm, dB), and validation into the
//! core domain types.
//!
//! Unknown keys are rejected. Angles are accepted in degrees, powers in
//! dBm, gains and RCS in dB; everything becomes linear SI units here and
//! stays linear from this point on.

use serde::Deserialize;

use nfvel_core::design::{DesignTarget, SpacingRounding};
use nfvel_core::link::{db_to_linear, dbm_to_watts};
use nfvel_core::simulate::SearchConfig;
use nfvel_core::{ArrayGeometry, CpiConfig, LinkBudget};

use crate::CliError;

// ─── Raw TOML layer ──────────────────────────────────────────────────

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: Option<RawGeometry>,
    waveform: Option<RawWaveform>,
    link: Option<RawLink>,
    target: Option<RawTarget>,
    arrays: Option<Vec<RawArray>>,
    crb: Option<RawCrb>,
    gain: Option<RawGain>,
    mse: Option<RawMse>,
    search: Option<RawSearch>,
    design: Option<RawDesign>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    m: Option<usize>,
    k: Option<usize>,
    l: Option<usize>,
    /// Absolute element spacing in meters; omit for half-wavelength.
    delta_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    label: Option<String>,
    m: usize,
    k: usize,
    l: usize,
    delta_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaveform {
    carrier_freq_hz: Option<f64>,
    symbol_duration_s: Option<f64>,
    num_symbols: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    tx_power_dbm: Option<f64>,
    antenna_gain_db: Option<f64>,
    rcs_db: Option<f64>,
    noise_density_dbm_hz: Option<f64>,
    bandwidth_hz: Option<f64>,
    unit_pathloss: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    /// Omit to place the target at the geometry's Fresnel distance.
    range_m: Option<f64>,
    angle_deg: Option<f64>,
    v_r_mps: Option<f64>,
    v_t_mps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrb {
    r_start_m: Option<f64>,
    r_stop_m: Option<f64>,
    r_points: Option<usize>,
    log_spacing: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGain {
    vr_span_mps: Option<f64>,
    vt_span_mps: Option<f64>,
    points_per_axis: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMse {
    /// "power" (default) or "distance".
    sweep: Option<String>,
    powers_dbm: Option<Vec<f64>>,
    distances_m: Option<Vec<f64>>,
    trials: Option<usize>,
    base_seed: Option<u64>,
    init_v_r_mps: Option<f64>,
    init_v_t_mps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    box_half_mps: Option<f64>,
    coarse_step_mps: Option<f64>,
    tol_mps: Option<f64>,
    max_iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDesign {
    m0: Option<usize>,
    k: Option<usize>,
    m_bar: Option<usize>,
    h: Option<f64>,
    max_radial_penalty_db: Option<f64>,
    round_to_odd: Option<bool>,
}

// ─── Resolved layer ──────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct LabeledArray {
    pub label: String,
    pub geom: ArrayGeometry,
}

/// Target specification with the range left symbolic until a geometry is
/// chosen (the default range is the geometry's Fresnel distance).
#[derive(Debug, Clone, Copy)]
pub struct TargetSpec {
    pub range_m: Option<f64>,
    pub angle_rad: f64,
    pub v_r: f64,
    pub v_t: f64,
}

impl TargetSpec {
    /// Resolve against a set of geometries; the default range is the
    /// largest Fresnel distance so the target is valid for every array.
    pub fn range_for(&self, geoms: &[&ArrayGeometry]) -> f64 {
        self.range_m.unwrap_or_else(|| {
            geoms
                .iter()
                .map(|g| g.fresnel_distance())
                .fold(0.0f64, f64::max)
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CrbSweep {
    pub r_start_m: Option<f64>,
    pub r_stop_m: Option<f64>,
    pub r_points: usize,
    pub log_spacing: bool,
}

impl CrbSweep {
    /// Concrete distance grid; defaults span `[max d_F, 10 max d_F]`.
    pub fn grid(&self, geoms: &[&ArrayGeometry]) -> Vec<f64> {
        let d_f_max = geoms
            .iter()
            .map(|g| g.fresnel_distance())
            .fold(0.0f64, f64::max);
        let start = self.r_start_m.unwrap_or(d_f_max);
        let stop = self.r_stop_m.unwrap_or(10.0 * start);
        let n = self.r_points.max(1);
        if n == 1 {
            return vec![start];
        }
        (0..n)
            .map(|i| {
                let frac = i as f64 / (n - 1) as f64;
                if self.log_spacing {
                    start * (stop / start).powf(frac)
                } else {
                    start + (stop - start) * frac
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GainGrid {
    pub vr_span_mps: f64,
    pub vt_span_mps: f64,
    pub points_per_axis: usize,
}

impl GainGrid {
    pub fn axis(&self, span: f64) -> Vec<f64> {
        let n = self.points_per_axis.max(1);
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Power,
    Distance,
}

#[derive(Debug, Clone)]
pub struct MseSweep {
    pub sweep: SweepAxis,
    pub powers_dbm: Vec<f64>,
    pub distances_m: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub init: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
pub struct DesignSpec {
    pub m0: usize,
    pub k: usize,
    pub target: DesignTarget,
    pub rounding: SpacingRounding,
}

#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    /// Default geometry plus any extra arrays; always at least one entry.
    pub arrays: Vec<LabeledArray>,
    pub cpi: CpiConfig,
    pub budget: LinkBudget,
    pub target: TargetSpec,
    pub crb: CrbSweep,
    pub gain: GainGrid,
    pub mse: MseSweep,
    pub search: SearchConfig,
    pub design: DesignSpec,
    /// Fully-resolved configuration echo for `#` metadata lines; excludes
    /// runtime knobs (thread count) so outputs stay run-invariant.
    pub echo_lines: Vec<String>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn build_geometry(
    m: usize,
    k: usize,
    l: usize,
    delta_m: Option<f64>,
    wavelength: f64,
) -> Result<ArrayGeometry, CliError> {
    let geom = match delta_m {
        Some(delta) => ArrayGeometry::new(m, k, l, delta, wavelength),
        None => ArrayGeometry::half_wavelength(m, k, l, wavelength),
    };
    geom.map_err(|e| CliError::Config(e.to_string()))
}

/// Parse a TOML string and resolve it against the built-in defaults.
pub fn resolve(text: &str) -> Result<ResolvedConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    resolve_raw(raw)
}

/// Default configuration (no file given).
pub fn resolve_default() -> Result<ResolvedConfig, CliError> {
    resolve_raw(RawConfig::default())
}

fn resolve_raw(raw: RawConfig) -> Result<ResolvedConfig, CliError> {
    let waveform = raw.waveform.unwrap_or_default();
    let carrier_freq = waveform.carrier_freq_hz.unwrap_or(28e9);
    let symbol_duration = waveform.symbol_duration_s.unwrap_or(1e-5);
    let num_symbols = waveform.num_symbols.unwrap_or(200);
    let cpi = CpiConfig::new(carrier_freq, symbol_duration, num_symbols)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let wavelength = cpi.wavelength();

    let g = raw.geometry.unwrap_or_default();
    let (gm, gk, gl) = (g.m.unwrap_or(120), g.k.unwrap_or(2), g.l.unwrap_or(61));
    let default_geom = build_geometry(gm, gk, gl, g.delta_m, wavelength)?;

    let mut arrays = Vec::new();
    match raw.arrays {
        Some(list) if !list.is_empty() => {
            for (i, a) in list.into_iter().enumerate() {
                let label = a.label.unwrap_or_else(|| format!("array{i}"));
                if arrays.iter().any(|x: &LabeledArray| x.label == label) {
                    return config_err(format!("duplicate array label '{label}'"));
                }
                arrays.push(LabeledArray {
                    label,
                    geom: build_geometry(a.m, a.k, a.l, a.delta_m, wavelength)?,
                });
            }
        }
        _ => arrays.push(LabeledArray {
            label: format!("MLA-M{gm}-K{gk}-L{gl}"),
            geom: default_geom,
        }),
    }

    let link = raw.link.unwrap_or_default();
    let tx_power_dbm = link.tx_power_dbm.unwrap_or(-10.0);
    let antenna_gain_db = link.antenna_gain_db.unwrap_or(0.0);
    let rcs_db = link.rcs_db.unwrap_or(-23.0);
    let noise_density_dbm_hz = link.noise_density_dbm_hz.unwrap_or(-174.0);
    let bandwidth_hz = link.bandwidth_hz.unwrap_or(1e5);
    let unit_pathloss = link.unit_pathloss.unwrap_or(false);
    let budget = LinkBudget::monostatic(
        dbm_to_watts(tx_power_dbm),
        db_to_linear(antenna_gain_db),
        db_to_linear(rcs_db),
        dbm_to_watts(noise_density_dbm_hz),
        bandwidth_hz,
    )
    .map_err(|e| CliError::Config(e.to_string()))?
    .with_unit_pathloss(unit_pathloss);

    let t = raw.target.unwrap_or_default();
    let angle_deg = t.angle_deg.unwrap_or(90.0);
    let target = TargetSpec {
        range_m: t.range_m,
        angle_rad: angle_deg.to_radians(),
        v_r: t.v_r_mps.unwrap_or(10.0),
        v_t: t.v_t_mps.unwrap_or(8.0),
    };
    if !target.angle_rad.is_finite()
        || target.angle_rad <= 0.0
        || target.angle_rad >= std::f64::consts::PI
    {
        return config_err(format!(
            "target angle must lie strictly between 0 and 180 degrees, got {angle_deg}"
        ));
    }
    if let Some(r) = target.range_m {
        if r.is_nan() || r <= 0.0 {
            return config_err(format!("target range must be positive, got {r}"));
        }
    }

    let c = raw.crb.unwrap_or_default();
    let crb = CrbSweep {
        r_start_m: c.r_start_m,
        r_stop_m: c.r_stop_m,
        r_points: c.r_points.unwrap_or(20),
        log_spacing: c.log_spacing.unwrap_or(true),
    };
    if let (Some(a), Some(b)) = (crb.r_start_m, crb.r_stop_m) {
        if !(a > 0.0 && b >= a) {
            return config_err(format!("crb sweep needs 0 < r_start <= r_stop, got [{a}, {b}]"));
        }
    }

    let gr = raw.gain.unwrap_or_default();
    let gain = GainGrid {
        vr_span_mps: gr.vr_span_mps.unwrap_or(30.0),
        vt_span_mps: gr.vt_span_mps.unwrap_or(30.0),
        points_per_axis: gr.points_per_axis.unwrap_or(41),
    };
    if gain.points_per_axis == 0 || gain.vr_span_mps < 0.0 || gain.vt_span_mps < 0.0 {
        return config_err("gain grid needs non-negative spans and at least one point");
    }

    let m = raw.mse.unwrap_or_default();
    let sweep = match m.sweep.as_deref() {
        None | Some("power") => SweepAxis::Power,
        Some("distance") => SweepAxis::Distance,
        Some(other) => return config_err(format!("unknown mse sweep axis '{other}'")),
    };
    let mse = MseSweep {
        sweep,
        powers_dbm: m.powers_dbm.unwrap_or_else(|| vec![-20.0, -15.0, -10.0, -5.0, 0.0]),
        distances_m: m.distances_m.unwrap_or_default(),
        trials: m.trials.unwrap_or(1000),
        base_seed: m.base_seed.unwrap_or(1),
        init: (m.init_v_r_mps.unwrap_or(11.0), m.init_v_t_mps.unwrap_or(7.0)),
    };
    if mse.trials == 0 {
        return config_err("mse trials must be >= 1");
    }
    if mse.sweep == SweepAxis::Power && mse.powers_dbm.is_empty() {
        return config_err("mse power sweep needs at least one power point");
    }
    if mse.sweep == SweepAxis::Distance && mse.distances_m.is_empty() {
        return config_err("mse distance sweep needs distances_m");
    }

    let s = raw.search.unwrap_or_default();
    let defaults = SearchConfig::default();
    let search = SearchConfig {
        box_half_width: s.box_half_mps.unwrap_or(defaults.box_half_width),
        coarse_step: s.coarse_step_mps.unwrap_or(defaults.coarse_step),
        tol_v: s.tol_mps.unwrap_or(defaults.tol_v),
        max_iters: s.max_iters.unwrap_or(defaults.max_iters),
    };
    if !(search.box_half_width > 0.0 && search.coarse_step > 0.0 && search.tol_v > 0.0) {
        return config_err("search box, step, and tolerance must be positive");
    }

    let d = raw.design.unwrap_or_default();
    let design_m0 = d.m0.unwrap_or(240);
    let design_k = d.k.unwrap_or(2);
    let given = [d.m_bar.is_some(), d.h.is_some(), d.max_radial_penalty_db.is_some()]
        .iter()
        .filter(|&&x| x)
        .count();
    if given > 1 {
        return config_err("specify at most one of design.m_bar, design.h, design.max_radial_penalty_db");
    }
    let design_target = if let Some(m_bar) = d.m_bar {
        DesignTarget::FixedPerModule(m_bar)
    } else if let Some(h) = d.h {
        DesignTarget::Fraction(h)
    } else if let Some(cap) = d.max_radial_penalty_db {
        DesignTarget::MinAntennas {
            max_radial_penalty_db: cap,
        }
    } else {
        DesignTarget::FixedPerModule(99)
    };
    let design = DesignSpec {
        m0: design_m0,
        k: design_k,
        target: design_target,
        rounding: if d.round_to_odd.unwrap_or(true) {
            SpacingRounding::CeilToOdd
        } else {
            SpacingRounding::Ceil
        },
    };

    // resolved-configuration echo, in fixed order
    let mut echo_lines = Vec::new();
    echo_lines.push(format!(
        "waveform: carrier_freq_hz={carrier_freq} symbol_duration_s={symbol_duration} num_symbols={num_symbols}"
    ));
    echo_lines.push(format!(
        "link: tx_power_dbm={tx_power_dbm} antenna_gain_db={antenna_gain_db} rcs_db={rcs_db} \
         noise_density_dbm_hz={noise_density_dbm_hz} bandwidth_hz={bandwidth_hz} unit_pathloss={unit_pathloss}"
    ));
    echo_lines.push(format!(
        "target: range_m={} angle_deg={angle_deg} v_r_mps={} v_t_mps={}",
        target
            .range_m
            .map_or_else(|| "fresnel".to_string(), |r| r.to_string()),
        target.v_r,
        target.v_t
    ));
    echo_lines.push(format!(
        "search: box_half_mps={} coarse_step_mps={} tol_mps={} max_iters={}",
        search.box_half_width, search.coarse_step, search.tol_v, search.max_iters
    ));

    Ok(ResolvedConfig {
        arrays,
        cpi,
        budget,
        target,
        crb,
        gain,
        mse,
        search,
        design,
        echo_lines,
    })
}
