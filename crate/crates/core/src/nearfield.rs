//! Near-field propagation: per-element range, projection coefficients, and
//! the time-indexed array response vector.
//!
//! Under the spherical-wavefront model each element sees its own range
//! `r_{m,k}` and its own Doppler projection `v_{m,k} = q v_r + p v_t`.
//! The projections `(q, p)` decompose target motion onto each element's
//! line of sight and satisfy `q^2 + p^2 = 1`; in the far-field limit
//! `q -> 1, p -> 0`, which is what makes the transverse velocity
//! unobservable there.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::link::CpiConfig;

/// Target position and velocity in array-centered polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    /// Range from the array origin, meters. Strictly positive.
    pub range: f64,
    /// Angle from the array axis, radians, open interval (0, pi).
    pub angle: f64,
    /// Radial velocity (along the line of sight), m/s.
    pub radial_velocity: f64,
    /// Transverse velocity (perpendicular to the line of sight), m/s.
    pub transverse_velocity: f64,
}

impl TargetState {
    /// Build a target state, validating `r > 0` and `theta` in (0, pi).
    pub fn new(range: f64, angle: f64, radial_velocity: f64, transverse_velocity: f64) -> Result<Self> {
        if range <= 0.0 || !range.is_finite() {
            return Err(Error::InvalidTarget(format!("range must be positive, got {range}")));
        }
        if !(angle > 0.0 && angle < PI) {
            return Err(Error::InvalidTarget(format!(
                "angle must lie in the open interval (0, pi), got {angle}"
            )));
        }
        if !radial_velocity.is_finite() || !transverse_velocity.is_finite() {
            return Err(Error::InvalidTarget("velocities must be finite".into()));
        }
        Ok(Self {
            range,
            angle,
            radial_velocity,
            transverse_velocity,
        })
    }

    /// Same position, different velocities.
    pub fn with_velocities(&self, radial: f64, transverse: f64) -> Self {
        Self {
            radial_velocity: radial,
            transverse_velocity: transverse,
            ..*self
        }
    }
}

/// Range between the target and element `(m, k)`:
/// `sqrt(r^2 - 2 r (U k + m) delta cos(theta) + ((U k + m) delta)^2)`.
pub fn element_range(geom: &ArrayGeometry, target: &TargetState, m: f64, k: f64) -> Result<f64> {
    if !geom.contains_index(m, k) {
        return Err(Error::IndexOutOfSet { m, k });
    }
    let x = (geom.module_period() * k + m) * geom.element_spacing;
    Ok(range_from_offset(target, x))
}

#[inline]
fn range_from_offset(target: &TargetState, x: f64) -> f64 {
    let r = target.range;
    (r * r - 2.0 * r * x * target.angle.cos() + x * x).sqrt()
}

/// Projection coefficients `(q, p)` of element `(m, k)` per the spherical
/// wavefront model; `q^2 + p^2 = 1`.
pub fn projection_coeffs(
    geom: &ArrayGeometry,
    target: &TargetState,
    m: f64,
    k: f64,
) -> Result<(f64, f64)> {
    if !geom.contains_index(m, k) {
        return Err(Error::IndexOutOfSet { m, k });
    }
    let x = (geom.module_period() * k + m) * geom.element_spacing;
    Ok(projection_from_offset(target, x))
}

#[inline]
fn projection_from_offset(target: &TargetState, x: f64) -> (f64, f64) {
    let r_mk = range_from_offset(target, x);
    let q = (target.range - x * target.angle.cos()) / r_mk;
    let p = x * target.angle.sin() / r_mk;
    (q, p)
}

/// Per-element kinematics for every element of the array, in index-set order.
///
/// Precomputing these once avoids re-deriving `(r_{m,k}, q, p)` inside hot
/// loops; all near-field operations in this crate consume this layout.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// Per-element range to the target, meters.
    pub ranges: Vec<f64>,
    /// Radial projection coefficients `q`.
    pub q: Vec<f64>,
    /// Transverse projection coefficients `p`.
    pub p: Vec<f64>,
}

impl ElementGeometry {
    /// Evaluate ranges and exact projections for all elements.
    pub fn compute(geom: &ArrayGeometry, target: &TargetState) -> Self {
        let offsets = geom.signed_offsets();
        let mut ranges = Vec::with_capacity(offsets.len());
        let mut q = Vec::with_capacity(offsets.len());
        let mut p = Vec::with_capacity(offsets.len());
        for &g in &offsets {
            let x = g * geom.element_spacing;
            let r_mk = range_from_offset(target, x);
            let (qe, pe) = projection_from_offset(target, x);
            ranges.push(r_mk);
            q.push(qe);
            p.push(pe);
        }
        Self { ranges, q, p }
    }

    /// Per-element Doppler projections `v_{m,k} = q v_r + p v_t` for the
    /// given velocity pair.
    pub fn doppler(&self, radial: f64, transverse: f64) -> Vec<f64> {
        self.q
            .iter()
            .zip(&self.p)
            .map(|(&qe, &pe)| qe * radial + pe * transverse)
            .collect()
    }
}

/// Array response vector at symbol index `n` (1-based, `1 <= n <= N`).
///
/// Entry `(m, k)` is `exp{-j (2 pi / lambda) (r_{m,k} + v_{m,k} n T_s)}`;
/// all entries have unit modulus.
pub fn array_response(
    geom: &ArrayGeometry,
    target: &TargetState,
    cpi: &CpiConfig,
    n: usize,
) -> Result<Vec<Complex64>> {
    if n == 0 || n > cpi.num_symbols {
        return Err(Error::InvalidArgument(format!(
            "symbol index n must satisfy 1 <= n <= {}, got {n}",
            cpi.num_symbols
        )));
    }
    let elems = ElementGeometry::compute(geom, target);
    let wavenumber = 2.0 * PI / geom.wavelength;
    let t = n as f64 * cpi.symbol_duration;
    Ok(elems
        .ranges
        .iter()
        .zip(elems.q.iter().zip(&elems.p))
        .map(|(&r_mk, (&qe, &pe))| {
            let v = qe * target.radial_velocity + pe * target.transverse_velocity;
            Complex64::from_polar(1.0, -wavenumber * (r_mk + v * t))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: f64 = 299_792_458.0;

    fn reference_geometry() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(120, 2, 61, C / 28e9).unwrap()
    }

    fn cpi() -> CpiConfig {
        CpiConfig::new(28e9, 1e-5, 200).unwrap()
    }

    #[test]
    fn target_state_domain() {
        assert!(TargetState::new(10.0, PI / 2.0, 0.0, 0.0).is_ok());
        assert!(TargetState::new(0.0, PI / 2.0, 0.0, 0.0).is_err());
        assert!(TargetState::new(-1.0, PI / 2.0, 0.0, 0.0).is_err());
        assert!(TargetState::new(10.0, 0.0, 0.0, 0.0).is_err());
        assert!(TargetState::new(10.0, PI, 0.0, 0.0).is_err());
    }

    #[test]
    fn origin_element_sees_exact_range() {
        let geom = ArrayGeometry::new(3, 1, 1, 0.005, 0.01).unwrap();
        let target = TargetState::new(12.3, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(element_range(&geom, &target, 0.0, 0.0).unwrap(), 12.3);
        let (q, p) = projection_coeffs(&geom, &target, 0.0, 0.0).unwrap();
        assert_eq!((q, p), (1.0, 0.0));
    }

    #[test]
    fn broadside_range_is_pythagorean() {
        let geom = reference_geometry();
        let target = TargetState::new(9.79, PI / 2.0, 0.0, 0.0).unwrap();
        let r = element_range(&geom, &target, 59.5, 0.5).unwrap();
        let x = geom.element_position(59.5, 0.5).unwrap();
        assert!((r - (9.79f64.powi(2) + x * x).sqrt()).abs() < 1e-12);
        assert!((r - 9.822656).abs() < 1e-5, "edge range = {r}");
    }

    #[test]
    fn broadside_projections() {
        let geom = reference_geometry();
        let target = TargetState::new(9.79, PI / 2.0, 0.0, 0.0).unwrap();
        for (m, k) in [(59.5, 0.5), (-0.5, -0.5), (10.5, 0.5)] {
            let (q, p) = projection_coeffs(&geom, &target, m, k).unwrap();
            let r_mk = element_range(&geom, &target, m, k).unwrap();
            let x = geom.element_position(m, k).unwrap();
            assert!((q - target.range / r_mk).abs() < 1e-14);
            assert!((p - x / r_mk).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_parity_at_broadside() {
        // p is odd and q is even in the signed offset g at theta = pi/2
        let geom = reference_geometry();
        let target = TargetState::new(15.0, PI / 2.0, 0.0, 0.0).unwrap();
        let e = ElementGeometry::compute(&geom, &target);
        let n = e.q.len();
        for i in 0..n {
            let j = n - 1 - i; // mirrored element in k-major symmetric ordering
            assert!((e.q[i] - e.q[j]).abs() < 1e-14);
            assert!((e.p[i] + e.p[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn far_field_substitution_degenerates() {
        // replacing r_{m,k} by its planar approximation forces (q, p) = (1, 0)
        let geom = reference_geometry();
        let target = TargetState::new(50.0, 1.1, 0.0, 0.0).unwrap();
        for &g in &geom.signed_offsets() {
            let x = g * geom.element_spacing;
            let r_ff = target.range - x * target.angle.cos();
            let q_ff = (target.range - x * target.angle.cos()) / r_ff;
            let p_ff = x * target.angle.sin() / r_ff * 0.0; // planar model drops the transverse term
            assert_eq!(q_ff, 1.0);
            assert_eq!(p_ff, 0.0);
        }
    }

    #[test]
    fn response_is_unit_modulus_and_static_without_motion() {
        let geom = reference_geometry();
        let cpi = cpi();
        let still = TargetState::new(20.0, 1.3, 0.0, 0.0).unwrap();
        let a1 = array_response(&geom, &still, &cpi, 1).unwrap();
        let a7 = array_response(&geom, &still, &cpi, 7).unwrap();
        for (x, y) in a1.iter().zip(&a7) {
            assert!((x.norm() - 1.0).abs() < 1e-12);
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_advances_by_doppler_between_symbols() {
        let geom = reference_geometry();
        let cpi = cpi();
        let target = TargetState::new(20.0, PI / 2.0, 10.0, 8.0).unwrap();
        let a1 = array_response(&geom, &target, &cpi, 1).unwrap();
        let a2 = array_response(&geom, &target, &cpi, 2).unwrap();
        let elems = ElementGeometry::compute(&geom, &target);
        let wavenumber = 2.0 * PI / geom.wavelength;
        for ((x, y), v) in a1.iter().zip(&a2).zip(elems.doppler(10.0, 8.0)) {
            // a2 = a1 * exp(-j k v T_s); the absolute phases are thousands of
            // radians, so rounding of the reduced arguments leaves ~1e-12
            let step = Complex64::from_polar(1.0, -wavenumber * v * cpi.symbol_duration);
            assert!((y - x * step).norm() < 1e-9);
        }
    }

    #[test]
    fn response_rejects_out_of_cpi_index() {
        let geom = reference_geometry();
        let cpi = cpi();
        let target = TargetState::new(20.0, 1.0, 1.0, 1.0).unwrap();
        assert!(array_response(&geom, &target, &cpi, 0).is_err());
        assert!(array_response(&geom, &target, &cpi, 201).is_err());
    }

    proptest! {
        #[test]
        fn projections_lie_on_unit_circle(
            r in 1.0f64..100.0,
            theta in 0.05f64..3.09,
            m_idx in 0usize..120,
            k_idx in 0usize..2,
        ) {
            let geom = reference_geometry();
            let target = TargetState::new(r, theta, 0.0, 0.0).unwrap();
            let (m, k) = geom.index_set()[k_idx * 120 + m_idx];
            let (q, p) = projection_coeffs(&geom, &target, m, k).unwrap();
            prop_assert!((q * q + p * p - 1.0).abs() < 1e-12);
        }
    }
}
