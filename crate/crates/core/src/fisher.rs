//! Fisher information and Cramér–Rao bounds for the joint radial/transverse
//! velocity pair.
//!
//! Two routes are exposed side by side:
//!
//! * the exact route: brute-force sums of the projection coefficients over
//!   the full index set, assembled into a 2x2 FIM and inverted;
//! * the closed-form route: the approximate sums (valid beyond the Fresnel
//!   distance for apertures much larger than the wavelength) substituted
//!   into explicit bound expressions for modular and collocated arrays.
//!
//! The exact route always uses exact projections, so tests can measure the
//! approximation error of the closed forms instead of inheriting it.

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::nearfield::{ElementGeometry, TargetState};

/// Relative determinant threshold below which the FIM is declared singular.
const SINGULARITY_EPS: f64 = 1e-12;

/// Aperture-to-wavelength ratio under which the closed-form sums carry a
/// small-aperture warning (the "much greater than" premise).
const APERTURE_MARGIN: f64 = 10.0;

/// 2x2 Fisher information over `(v_r, v_t)`, units 1/(m/s)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimMatrix {
    pub j_rr: f64,
    pub j_tt: f64,
    pub j_rt: f64,
}

impl FimMatrix {
    /// Determinant `J_rr J_tt - J_rt^2`.
    pub fn det(&self) -> f64 {
        self.j_rr * self.j_tt - self.j_rt * self.j_rt
    }

    /// Singular when `det <= eps * J_rr * J_tt` with `eps = 1e-12`.
    pub fn is_singular(&self) -> bool {
        self.det() <= SINGULARITY_EPS * self.j_rr * self.j_tt
    }
}

/// Variance lower bounds for the two velocity components, (m/s)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbPair {
    pub v_r: f64,
    pub v_t: f64,
}

/// A closed-form sum with validity flags for its premises.
///
/// Violations degrade accuracy but do not make the value uncomputable, so
/// they are reported as warnings rather than errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxSum {
    pub value: f64,
    /// Target closer than the Fresnel distance.
    pub below_fresnel: bool,
    /// Aperture not much larger than the wavelength.
    pub small_aperture: bool,
}

impl ApproxSum {
    pub fn is_clean(&self) -> bool {
        !self.below_fresnel && !self.small_aperture
    }
}

/// Exact projection-coefficient sums `(sum q^2, sum p^2, sum q p)` over the
/// full index set.
pub fn projection_sums(geom: &ArrayGeometry, target: &TargetState) -> (f64, f64, f64) {
    let elems = ElementGeometry::compute(geom, target);
    let mut sum_q2 = 0.0;
    let mut sum_p2 = 0.0;
    let mut sum_qp = 0.0;
    for (&q, &p) in elems.q.iter().zip(&elems.p) {
        sum_q2 += q * q;
        sum_p2 += p * p;
        sum_qp += q * p;
    }
    (sum_q2, sum_p2, sum_qp)
}

/// Exact FIM: `J_rr = gamma M K sum q^2`, `J_tt = gamma M K sum p^2`,
/// `J_rt = gamma M K sum q p`, with exact per-element projections.
pub fn fim_exact(geom: &ArrayGeometry, target: &TargetState, gamma: f64) -> FimMatrix {
    let (sum_q2, sum_p2, sum_qp) = projection_sums(geom, target);
    let mk = geom.num_elements() as f64;
    FimMatrix {
        j_rr: gamma * mk * sum_q2,
        j_tt: gamma * mk * sum_p2,
        j_rt: gamma * mk * sum_qp,
    }
}

/// Bounds from the inverse-FIM diagonal:
/// `CRB(v_r) = J_tt / det F`, `CRB(v_t) = J_rr / det F`.
pub fn crb_from_fim(fim: &FimMatrix) -> Result<CrbPair> {
    if fim.is_singular() {
        return Err(Error::SingularFim(format!(
            "det F = {:.3e} <= {SINGULARITY_EPS:e} * J_rr * J_tt; existence requires \
             12 / (U^2 (K^2 - 1) + M^2 - 1) > (delta / r)^2",
            fim.det()
        )));
    }
    let det = fim.det();
    Ok(CrbPair {
        v_r: fim.j_tt / det,
        v_t: fim.j_rr / det,
    })
}

/// Geometry factor `U^2 (K^2 - 1) + M^2 - 1` shared by the closed forms.
fn geometry_term(geom: &ArrayGeometry) -> f64 {
    let m = geom.num_per_module as f64;
    let k = geom.num_modules as f64;
    let u = geom.module_period();
    u * u * (k * k - 1.0) + (m * m - 1.0)
}

fn aperture_warning(geom: &ArrayGeometry) -> bool {
    let aperture_in_deltas = geom.aperture() / geom.element_spacing;
    aperture_in_deltas < APERTURE_MARGIN * geom.wavelength / geom.element_spacing
}

/// Closed-form transverse sum:
/// `sum p^2 ~= (M K / 12) (U^2 (K^2 - 1) + M^2 - 1) (delta / r)^2 sin^2(theta)`.
pub fn sum_p2_approx(geom: &ArrayGeometry, target: &TargetState) -> ApproxSum {
    let eps = geom.element_spacing / target.range;
    let sin_t = target.angle.sin();
    let mk = geom.num_elements() as f64;
    ApproxSum {
        value: mk / 12.0 * geometry_term(geom) * eps * eps * sin_t * sin_t,
        below_fresnel: target.range < geom.fresnel_distance(),
        small_aperture: aperture_warning(geom),
    }
}

/// Closed-form cross sum: as `sum_p2_approx` with `cos(theta) sin(theta)`.
pub fn sum_qp_approx(geom: &ArrayGeometry, target: &TargetState) -> ApproxSum {
    let eps = geom.element_spacing / target.range;
    let mk = geom.num_elements() as f64;
    ApproxSum {
        value: mk / 12.0 * geometry_term(geom) * eps * eps * target.angle.cos() * target.angle.sin(),
        below_fresnel: target.range < geom.fresnel_distance(),
        small_aperture: aperture_warning(geom),
    }
}

/// Signed existence margin `12 / (U^2 (K^2 - 1) + M^2 - 1) - (delta / r)^2`;
/// the closed-form bounds exist when it is positive.
pub fn existence_margin(geom: &ArrayGeometry, range: f64) -> f64 {
    let eps = geom.element_spacing / range;
    12.0 / geometry_term(geom) - eps * eps
}

/// Closed-form bounds for the modular array.
///
/// Errors when the existence condition fails or the angle makes the
/// transverse component unobservable.
pub fn crb_closed_mla(geom: &ArrayGeometry, target: &TargetState, gamma: f64) -> Result<CrbPair> {
    let mk = geom.num_elements() as f64;
    let mk_sq = mk * mk;
    let term = geometry_term(geom);
    closed_pair(
        gamma,
        mk_sq,
        term,
        geom.element_spacing,
        target.range,
        target.angle,
    )
}

/// Closed-form bounds for a collocated `M0`-element uniform linear array
/// (the modular expressions with the inter-module terms collapsed).
pub fn crb_closed_ula(m0: usize, delta: f64, range: f64, theta: f64, gamma: f64) -> Result<CrbPair> {
    let m0f = m0 as f64;
    let m0_sq = m0f * m0f;
    let term = m0_sq - 1.0;
    closed_pair(gamma, m0_sq, term, delta, range, theta)
}

/// Shared arithmetic core of the two closed forms. Keeping one code path
/// guarantees the `K = 1, L = 1` reduction is bit-for-bit.
fn closed_pair(
    gamma: f64,
    count_sq: f64,
    term: f64,
    delta: f64,
    range: f64,
    theta: f64,
) -> Result<CrbPair> {
    let sin_t = theta.sin();
    if sin_t == 0.0 || theta <= 0.0 || theta >= std::f64::consts::PI {
        return Err(Error::Unobservable { theta });
    }
    let eps = delta / range;
    let existence = 12.0 - eps * eps * term;
    if existence <= 0.0 {
        return Err(Error::SingularFim(format!(
            "existence condition 12 / (U^2 (K^2 - 1) + M^2 - 1) > (delta / r)^2 violated: \
             12 - (delta/r)^2 * {term} = {existence:.3e} at r = {range}"
        )));
    }
    let r_over_delta = range / delta;
    Ok(CrbPair {
        v_r: 12.0 / (gamma * count_sq * existence),
        v_t: 12.0 * r_over_delta * r_over_delta / (gamma * count_sq * term * sin_t * sin_t),
    })
}
