//! Array-gain function under velocity mismatch: exact double sum, Dirichlet
//! closed form, and the worst-case reduction over a CPI.
//!
//! When the precoder is built from mismatched velocity estimates, the
//! residual coherent-combining gain after beamforming is
//! `psi(n) = (1/sqrt(MK)) sum exp{-j (2 pi / lambda)(q dvr + p dvt) n T_s}`.
//! Approximating `q -> 1` and `p -> g delta sin(theta) / r` factors the sum
//! into two Dirichlet kernels, one per lattice level.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::link::CpiConfig;
use crate::nearfield::{ElementGeometry, TargetState};

/// Velocity mismatch `(true - estimated)` in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MismatchSpec {
    pub delta_vr: f64,
    pub delta_vt: f64,
}

impl MismatchSpec {
    pub fn new(delta_vr: f64, delta_vt: f64) -> Self {
        Self { delta_vr, delta_vt }
    }
}

/// Which array-gain evaluation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiForm {
    /// Exact double sum with exact projections.
    Exact,
    /// Dirichlet-kernel closed form.
    Dirichlet,
}

/// Dirichlet kernel `sin(count x / 2) / sin(x / 2)` for a symmetric lattice
/// of `count` points, with the removable singularities evaluated by their
/// limit (`count cos(count x / 2) / cos(x / 2)` wherever `sin(x / 2)` is
/// numerically zero).
pub fn dirichlet_kernel(count: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let denom = half.sin();
    let c = count as f64;
    if denom.abs() < 1e-9 {
        c * (c * half).cos() / half.cos()
    } else {
        (c * half).sin() / denom
    }
}

/// Exact array gain at symbol `n` (1-based):
/// `(1/sqrt(MK)) sum exp{-j (2 pi / lambda)(q dvr + p dvt) n T_s}`.
pub fn psi_exact(
    geom: &ArrayGeometry,
    target: &TargetState,
    cpi: &CpiConfig,
    mismatch: &MismatchSpec,
    n: usize,
) -> Result<Complex64> {
    check_symbol_index(cpi, n)?;
    let elems = ElementGeometry::compute(geom, target);
    let scale = 2.0 * PI / geom.wavelength * n as f64 * cpi.symbol_duration;
    let sum: Complex64 = elems
        .q
        .iter()
        .zip(&elems.p)
        .map(|(&q, &p)| Complex64::from_polar(1.0, -scale * (q * mismatch.delta_vr + p * mismatch.delta_vt)))
        .sum();
    Ok(sum / (geom.num_elements() as f64).sqrt())
}

/// Dirichlet closed form of the array gain:
/// `e^{-j (2 pi / lambda) dvr n T_s} / sqrt(MK) * D_M(x) * D_K(U x)` with
/// `x = (2 pi / lambda)(delta sin(theta) / r) dvt n T_s`.
pub fn psi_dirichlet(
    geom: &ArrayGeometry,
    target: &TargetState,
    cpi: &CpiConfig,
    mismatch: &MismatchSpec,
    n: usize,
) -> Result<Complex64> {
    check_symbol_index(cpi, n)?;
    let t = n as f64 * cpi.symbol_duration;
    let wavenumber = 2.0 * PI / geom.wavelength;
    let x = wavenumber * geom.element_spacing * target.angle.sin() / target.range
        * mismatch.delta_vt
        * t;
    let kernels = dirichlet_kernel(geom.num_per_module, x)
        * dirichlet_kernel(geom.num_modules, geom.module_period() * x);
    let phase = Complex64::from_polar(1.0, -wavenumber * mismatch.delta_vr * t);
    Ok(phase * kernels / (geom.num_elements() as f64).sqrt())
}

/// Worst (minimum) normalized gain `|psi(n)|^2 / (MK)` over the CPI;
/// 1 at zero mismatch, in `[0, 1]`.
pub fn worst_gain_over_cpi(
    geom: &ArrayGeometry,
    target: &TargetState,
    cpi: &CpiConfig,
    mismatch: &MismatchSpec,
    form: PsiForm,
) -> f64 {
    let mk = geom.num_elements() as f64;
    let norm = mk * mk;
    match form {
        PsiForm::Exact => {
            // one recurrence pass over the CPI instead of N full phase grids
            let elems = ElementGeometry::compute(geom, target);
            let scale = 2.0 * PI / geom.wavelength * cpi.symbol_duration;
            let steps: Vec<Complex64> = elems
                .q
                .iter()
                .zip(&elems.p)
                .map(|(&q, &p)| {
                    Complex64::from_polar(1.0, -scale * (q * mismatch.delta_vr + p * mismatch.delta_vt))
                })
                .collect();
            let mut cur = vec![Complex64::new(1.0, 0.0); steps.len()];
            let mut worst = f64::INFINITY;
            for _ in 0..cpi.num_symbols {
                let mut sum = Complex64::new(0.0, 0.0);
                for (c, s) in cur.iter_mut().zip(&steps) {
                    *c *= s;
                    sum += *c;
                }
                worst = worst.min(sum.norm_sqr() / norm);
            }
            worst
        }
        PsiForm::Dirichlet => {
            let wavenumber = 2.0 * PI / geom.wavelength;
            let x_per_symbol = wavenumber * geom.element_spacing * target.angle.sin()
                / target.range
                * mismatch.delta_vt
                * cpi.symbol_duration;
            let mut worst = f64::INFINITY;
            for n in 1..=cpi.num_symbols {
                let x = x_per_symbol * n as f64;
                let kernels = dirichlet_kernel(geom.num_per_module, x)
                    * dirichlet_kernel(geom.num_modules, geom.module_period() * x);
                worst = worst.min(kernels * kernels / norm);
            }
            worst
        }
    }
}

fn check_symbol_index(cpi: &CpiConfig, n: usize) -> Result<()> {
    if n == 0 || n > cpi.num_symbols {
        return Err(Error::InvalidArgument(format!(
            "symbol index n must satisfy 1 <= n <= {}, got {n}",
            cpi.num_symbols
        )));
    }
    Ok(())
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

    fn fresnel_target(geom: &ArrayGeometry) -> TargetState {
        TargetState::new(geom.fresnel_distance(), PI / 2.0, 10.0, 8.0).unwrap()
    }

    /// Direct summation of the approximated phases (q -> 1,
    /// p -> g delta sin(theta) / r); the closed form must match this
    /// identically, including at the removable singularities.
    fn psi_approx_direct(
        geom: &ArrayGeometry,
        target: &TargetState,
        cpi: &CpiConfig,
        mismatch: &MismatchSpec,
        n: usize,
    ) -> Complex64 {
        let t = n as f64 * cpi.symbol_duration;
        let wavenumber = 2.0 * PI / geom.wavelength;
        let sum: Complex64 = geom
            .signed_offsets()
            .iter()
            .map(|&g| {
                let p = g * geom.element_spacing * target.angle.sin() / target.range;
                Complex64::from_polar(
                    1.0,
                    -wavenumber * (mismatch.delta_vr + p * mismatch.delta_vt) * t,
                )
            })
            .sum();
        sum / (geom.num_elements() as f64).sqrt()
    }

    #[test]
    fn zero_mismatch_is_full_gain() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        let zero = MismatchSpec::default();
        let psi = psi_exact(&geom, &target, &cpi, &zero, 1).unwrap();
        let sqrt_mk = (geom.num_elements() as f64).sqrt();
        assert!((psi.re - sqrt_mk).abs() < 1e-12 && psi.im.abs() < 1e-12);
        assert_eq!(
            worst_gain_over_cpi(&geom, &target, &cpi, &zero, PsiForm::Exact),
            1.0
        );
        assert_eq!(
            worst_gain_over_cpi(&geom, &target, &cpi, &zero, PsiForm::Dirichlet),
            1.0
        );
    }

    #[test]
    fn pure_radial_mismatch_keeps_magnitude() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        let mm = MismatchSpec::new(3.0, 0.0);
        for n in [1, 50, 200] {
            let psi = psi_dirichlet(&geom, &target, &cpi, &mm, n).unwrap();
            let sqrt_mk = (geom.num_elements() as f64).sqrt();
            assert!((psi.norm() - sqrt_mk).abs() < 1e-9);
            let expected_phase = -2.0 * PI / geom.wavelength * 3.0 * n as f64 * cpi.symbol_duration;
            let diff = (psi.arg() - expected_phase).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-9);
        }
    }

    #[test]
    fn dirichlet_matches_direct_approximated_sum() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        let sqrt_mk = (geom.num_elements() as f64).sqrt();
        // includes zero, generic points, and mismatches near kernel nulls
        let u = geom.module_period();
        let x_to_dvt = |x: f64, n: usize| {
            x * geom.wavelength * target.range
                / (2.0 * PI * geom.element_spacing * n as f64 * cpi.symbol_duration)
        };
        let mut cases = vec![0.0, 0.31, -4.7, 12.0, 27.0];
        for n in [1usize, 200] {
            cases.push(x_to_dvt(2.0 * PI / u, n)); // singular point of the second kernel
            cases.push(x_to_dvt(2.0 * PI / u + 1e-12, n));
            cases.push(x_to_dvt(2.0 * PI, n)); // singular point of both kernels
        }
        for dvt in cases {
            for n in [1usize, 73, 200] {
                let mm = MismatchSpec::new(1.3, dvt);
                let closed = psi_dirichlet(&geom, &target, &cpi, &mm, n).unwrap();
                let direct = psi_approx_direct(&geom, &target, &cpi, &mm, n);
                assert!(
                    (closed - direct).norm() <= 1e-12 * sqrt_mk,
                    "dvt = {dvt}, n = {n}: |diff| = {}",
                    (closed - direct).norm()
                );
            }
        }
    }

    #[test]
    fn single_element_kernels_collapse() {
        let geom = ArrayGeometry::new(1, 1, 1, 0.005, 0.01).unwrap();
        let target = TargetState::new(5.0, 1.2, 0.0, 0.0).unwrap();
        let cpi = CpiConfig::new(28e9, 1e-5, 10).unwrap();
        let mm = MismatchSpec::new(2.0, 5.0);
        let psi = psi_dirichlet(&geom, &target, &cpi, &mm, 3).unwrap();
        let expected = Complex64::from_polar(
            1.0,
            -2.0 * PI / geom.wavelength * 2.0 * 3.0 * cpi.symbol_duration,
        );
        assert!((psi - expected).norm() < 1e-12);
    }

    #[test]
    fn transverse_sign_symmetry_at_broadside() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        for dvt in [4.0, 11.0, 26.0] {
            let plus = psi_exact(&geom, &target, &cpi, &MismatchSpec::new(0.0, dvt), 100).unwrap();
            let minus = psi_exact(&geom, &target, &cpi, &MismatchSpec::new(0.0, -dvt), 100).unwrap();
            assert!((plus.norm_sqr() - minus.norm_sqr()).abs() < 1e-9 * plus.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn worst_gain_decays_along_transverse_axis() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        // within the first Dirichlet lobe the minimum-over-CPI gain is
        // monotone non-increasing in |dvt|
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let dvt = i as f64;
            let g = worst_gain_over_cpi(&geom, &target, &cpi, &MismatchSpec::new(0.0, dvt), PsiForm::Exact);
            assert!(g <= last * (1.0 + 1e-12), "gain rose at dvt = {dvt}");
            last = g;
        }
    }

    #[test]
    fn transverse_mismatch_hurts_more_than_radial() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        let radial = worst_gain_over_cpi(&geom, &target, &cpi, &MismatchSpec::new(5.0, 0.0), PsiForm::Exact);
        let transverse =
            worst_gain_over_cpi(&geom, &target, &cpi, &MismatchSpec::new(0.0, 5.0), PsiForm::Exact);
        assert!(
            transverse < radial - 0.05,
            "transverse {transverse} vs radial {radial}"
        );
    }

    #[test]
    fn dirichlet_tracks_exact_gain_at_reference_config() {
        let geom = reference_geometry();
        let target = fresnel_target(&geom);
        let cpi = cpi();
        let sqrt_mk = (geom.num_elements() as f64).sqrt();
        for (dvr, dvt) in [(0.0, 3.0), (10.0, 10.0), (-5.0, 20.0), (2.0, -15.0)] {
            let mm = MismatchSpec::new(dvr, dvt);
            let exact = psi_exact(&geom, &target, &cpi, &mm, 200).unwrap();
            let closed = psi_dirichlet(&geom, &target, &cpi, &mm, 200).unwrap();
            assert!(
                (exact - closed).norm() / sqrt_mk < 0.05,
                "dvr={dvr} dvt={dvt}: {}",
                (exact - closed).norm() / sqrt_mk
            );
        }
    }

    proptest! {
        #[test]
        fn gain_never_exceeds_full_combining(
            dvr in -40.0f64..40.0,
            dvt in -40.0f64..40.0,
            n in 1usize..=200,
        ) {
            let geom = reference_geometry();
            let target = fresnel_target(&geom);
            let cpi = cpi();
            let psi = psi_exact(&geom, &target, &cpi, &MismatchSpec::new(dvr, dvt), n).unwrap();
            let sqrt_mk = (geom.num_elements() as f64).sqrt();
            prop_assert!(psi.norm() <= sqrt_mk * (1.0 + 1e-12));
        }
    }
}
