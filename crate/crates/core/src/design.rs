//! Antenna-saving design rule: the inter-module separation that lets a
//! modular array with fewer elements match the transverse-velocity CRB of a
//! larger collocated ULA.
//!
//! The separation is parameterized as `L_bar = 1 + eta (M0 - 1)`, where
//! `eta` is the fraction of the reference ULA aperture inserted between
//! adjacent modules. `eta_exact` solves the CRB-matching equation directly;
//! `eta_simplified` is the large-`M0` limit in terms of the retained antenna
//! fraction `h = K M_bar / M0`.

use crate::error::{Error, Result};

/// A CRB-matching query: reference ULA size and modular layout candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignQuery {
    /// Reference collocated ULA element count `M0`.
    pub reference_ula_count: usize,
    /// Number of modules `K` (at least 2).
    pub num_modules: usize,
    /// Antennas per module `M_bar`, with `K * M_bar < M0`.
    pub per_module_count: usize,
}

impl DesignQuery {
    pub fn new(reference_ula_count: usize, num_modules: usize, per_module_count: usize) -> Result<Self> {
        if num_modules < 2 {
            return Err(Error::InfeasibleDesign(format!(
                "at least 2 modules required, got {num_modules}"
            )));
        }
        if per_module_count == 0 {
            return Err(Error::InfeasibleDesign("per-module count must be >= 1".into()));
        }
        if num_modules * per_module_count >= reference_ula_count {
            return Err(Error::InfeasibleDesign(format!(
                "K * M_bar = {} must be strictly less than M0 = {}",
                num_modules * per_module_count,
                reference_ula_count
            )));
        }
        Ok(Self {
            reference_ula_count,
            num_modules,
            per_module_count,
        })
    }

    /// Query from a retained-antenna fraction `h`; `M_bar = round(h M0 / K)`
    /// with the feasibility constraint re-checked after rounding.
    pub fn from_fraction(reference_ula_count: usize, num_modules: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InfeasibleDesign(format!(
                "antenna fraction h must lie in (0, 1), got {h}"
            )));
        }
        let m_bar = (h * reference_ula_count as f64 / num_modules as f64).round() as usize;
        Self::new(reference_ula_count, num_modules, m_bar.max(1))
    }

    /// Fraction of the reference antennas retained, `K M_bar / M0`.
    pub fn retained_fraction(&self) -> f64 {
        (self.num_modules * self.per_module_count) as f64 / self.reference_ula_count as f64
    }
}

/// Exact aperture-fraction separation solving the CRB-matching equation:
///
/// `eta = [sqrt((M0^2 (M0^2 - 1) - (M_bar^2 - 1)(M_bar K)^2) /
///              ((K^2 - 1)(M_bar K)^2)) - M_bar] / (M0 - 1)`.
pub fn eta_exact(query: &DesignQuery) -> Result<f64> {
    let m0 = query.reference_ula_count as f64;
    let mb = query.per_module_count as f64;
    let k = query.num_modules as f64;
    let total = mb * k;
    let radicand =
        (m0 * m0 * (m0 * m0 - 1.0) - (mb * mb - 1.0) * total * total) / ((k * k - 1.0) * total * total);
    if radicand <= 0.0 {
        return Err(Error::InfeasibleDesign(format!(
            "matching equation has no real solution (radicand = {radicand:.3e})"
        )));
    }
    Ok((radicand.sqrt() - mb) / (m0 - 1.0))
}

/// Large-`M0` separation in terms of the retained fraction `h` and module
/// count `K`: `eta = sqrt((K^2 - h^4) / (K^2 (K^2 - 1) h^2)) - h / K`.
///
/// Callers must supply `0 < h < 1` and `K >= 2`.
pub fn eta_simplified(h: f64, num_modules: usize) -> f64 {
    let k = num_modules as f64;
    ((k * k - h.powi(4)) / (k * k * (k * k - 1.0) * h * h)).sqrt() - h / k
}

/// Transverse-CRB ratio `CRB_Mod / CRB_ULA` for a modular layout
/// `(M_bar, K, L_bar)` against an `M0`-element collocated reference.
///
/// `L_bar` may be fractional so the pre-rounding match can be verified;
/// the ratio is independent of range, angle, and SNR.
pub fn transverse_crb_ratio(m0: usize, num_modules: usize, m_bar: usize, l_bar: f64) -> f64 {
    let m0 = m0 as f64;
    let k = num_modules as f64;
    let mb = m_bar as f64;
    let u = mb + l_bar - 1.0;
    let total = mb * k;
    m0 * m0 * (m0 * m0 - 1.0) / (total * total * (u * u * (k * k - 1.0) + mb * mb - 1.0))
}

/// How the fractional matched spacing is forced to an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpacingRounding {
    /// Round up; the matched transverse CRB is then never worse than the
    /// ULA target (the bound is decreasing in the spacing).
    Ceil,
    /// Round up, then bump even results to the next odd integer.
    #[default]
    CeilToOdd,
}

/// Target of a matching query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignTarget {
    /// Match with a fixed per-module count.
    FixedPerModule(usize),
    /// Match with a retained antenna fraction `h`.
    Fraction(f64),
    /// Fewest antennas whose radial-CRB penalty stays within the given cap.
    MinAntennas { max_radial_penalty_db: f64 },
}

/// A solved CRB-matching design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedDesign {
    pub query: DesignQuery,
    /// Exact aperture-fraction separation before rounding.
    pub eta: f64,
    /// Fractional matched spacing `1 + eta (M0 - 1)`.
    pub l_bar_real: f64,
    /// Integer spacing after rounding.
    pub l_bar: usize,
    /// Fraction of reference antennas removed.
    pub antenna_saving: f64,
    /// Achieved transverse-CRB ratio (modular over ULA) after rounding.
    pub transverse_ratio: f64,
    /// Radial-CRB penalty in dB in the `(delta / r)^2 -> 0` limit.
    pub radial_penalty_db: f64,
}

/// Solve a matching query and round the spacing to an integer.
pub fn match_design(
    reference_ula_count: usize,
    num_modules: usize,
    target: DesignTarget,
    rounding: SpacingRounding,
) -> Result<MatchedDesign> {
    let query = match target {
        DesignTarget::FixedPerModule(m_bar) => {
            DesignQuery::new(reference_ula_count, num_modules, m_bar)?
        }
        DesignTarget::Fraction(h) => DesignQuery::from_fraction(reference_ula_count, num_modules, h)?,
        DesignTarget::MinAntennas { max_radial_penalty_db } => {
            if max_radial_penalty_db <= 0.0 {
                return Err(Error::InfeasibleDesign(
                    "radial penalty cap must be positive".into(),
                ));
            }
            // penalty = 20 log10(M0 / (K M_bar)), monotone decreasing in M_bar
            let m0 = reference_ula_count as f64;
            let k = num_modules as f64;
            let min_total = m0 * 10f64.powf(-max_radial_penalty_db / 20.0);
            let m_bar = (min_total / k).ceil() as usize;
            DesignQuery::new(reference_ula_count, num_modules, m_bar.max(1))?
        }
    };
    let eta = eta_exact(&query)?;
    let l_bar_real = 1.0 + eta * (query.reference_ula_count as f64 - 1.0);
    let mut l_bar = l_bar_real.ceil() as usize;
    if rounding == SpacingRounding::CeilToOdd && l_bar.is_multiple_of(2) {
        l_bar += 1;
    }
    let total = query.num_modules * query.per_module_count;
    Ok(MatchedDesign {
        query,
        eta,
        l_bar_real,
        l_bar,
        antenna_saving: 1.0 - query.retained_fraction(),
        transverse_ratio: transverse_crb_ratio(
            query.reference_ula_count,
            query.num_modules,
            query.per_module_count,
            l_bar as f64,
        ),
        radial_penalty_db: 20.0 * (query.reference_ula_count as f64 / total as f64).log10(),
    })
}
