//! Modular linear array layout: element index set, positions, aperture,
//! and Fresnel distance.
//!
//! The array consists of `K` modules of `M` elements each, placed on the
//! x-axis with uniform element spacing `delta` and inter-module spacing
//! `L * delta`. Element `(m, k)` sits at `(U k + m) * delta` with
//! `U = M + L - 1`. Indices run symmetrically about the origin, so for even
//! `M` or `K` they take half-integer values; this keeps the index set
//! mirror-symmetric, which downstream closed forms rely on.

use crate::error::{Error, Result};

/// Tolerance for deciding whether an (m, k) pair lies on the index lattice.
const INDEX_TOL: f64 = 1e-9;

/// Modular linear array layout.
///
/// A collocated uniform linear array is the special case `K = 1, L = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Antennas per module (`M`).
    pub num_per_module: usize,
    /// Number of modules (`K`).
    pub num_modules: usize,
    /// Module spacing in element-spacing units (`L`); `L = 1` collocates modules.
    pub module_spacing_param: usize,
    /// Element spacing `delta` in meters.
    pub element_spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayGeometry {
    /// Build a geometry, validating `M >= 1`, `K >= 1`, `L >= 1`,
    /// `delta > 0`, `lambda > 0`.
    pub fn new(
        num_per_module: usize,
        num_modules: usize,
        module_spacing_param: usize,
        element_spacing: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if num_per_module == 0 || num_modules == 0 || module_spacing_param == 0 {
            return Err(Error::InvalidGeometry(format!(
                "counts must be >= 1 (M={num_per_module}, K={num_modules}, L={module_spacing_param})"
            )));
        }
        if element_spacing <= 0.0 || !element_spacing.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "element spacing must be positive, got {element_spacing}"
            )));
        }
        if wavelength <= 0.0 || !wavelength.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            num_per_module,
            num_modules,
            module_spacing_param,
            element_spacing,
            wavelength,
        })
    }

    /// Geometry with half-wavelength element spacing.
    pub fn half_wavelength(
        num_per_module: usize,
        num_modules: usize,
        module_spacing_param: usize,
        wavelength: f64,
    ) -> Result<Self> {
        Self::new(
            num_per_module,
            num_modules,
            module_spacing_param,
            wavelength / 2.0,
            wavelength,
        )
    }

    /// Collocated uniform linear array of `m0` elements (`K = 1, L = 1`).
    pub fn ula(m0: usize, element_spacing: f64, wavelength: f64) -> Result<Self> {
        Self::new(m0, 1, 1, element_spacing, wavelength)
    }

    /// Module period in element-spacing units: `U = M + L - 1`.
    pub fn module_period(&self) -> f64 {
        (self.num_per_module + self.module_spacing_param - 1) as f64
    }

    /// Total number of antennas `M * K`.
    pub fn num_elements(&self) -> usize {
        self.num_per_module * self.num_modules
    }

    /// Ordered element index set, k-major with m ascending within each module.
    ///
    /// `m` spans `-(M-1)/2 ..= (M-1)/2` and `k` spans `-(K-1)/2 ..= (K-1)/2`
    /// in unit steps; even counts give half-integer indices.
    pub fn index_set(&self) -> Vec<(f64, f64)> {
        let m_lo = (self.num_per_module as f64 - 1.0) / 2.0;
        let k_lo = (self.num_modules as f64 - 1.0) / 2.0;
        let mut set = Vec::with_capacity(self.num_elements());
        for ki in 0..self.num_modules {
            let k = ki as f64 - k_lo;
            for mi in 0..self.num_per_module {
                let m = mi as f64 - m_lo;
                set.push((m, k));
            }
        }
        set
    }

    /// Signed element offsets `g = U k + m` in index-set order.
    pub fn signed_offsets(&self) -> Vec<f64> {
        let u = self.module_period();
        self.index_set().iter().map(|&(m, k)| u * k + m).collect()
    }

    fn index_on_lattice(count: usize, v: f64) -> bool {
        let shifted = v + (count as f64 - 1.0) / 2.0;
        let nearest = shifted.round();
        (shifted - nearest).abs() <= INDEX_TOL && nearest >= -INDEX_TOL && (nearest as usize) < count
    }

    /// Whether `(m, k)` belongs to the index set.
    pub fn contains_index(&self, m: f64, k: f64) -> bool {
        Self::index_on_lattice(self.num_per_module, m) && Self::index_on_lattice(self.num_modules, k)
    }

    /// Position of element `(m, k)` on the x-axis: `(U k + m) * delta` meters.
    pub fn element_position(&self, m: f64, k: f64) -> Result<f64> {
        if !self.contains_index(m, k) {
            return Err(Error::IndexOutOfSet { m, k });
        }
        Ok((self.module_period() * k + m) * self.element_spacing)
    }

    /// Aperture `A = delta * [U (K - 1) + M - 1]` in meters.
    pub fn aperture(&self) -> f64 {
        let u = self.module_period();
        self.element_spacing
            * (u * (self.num_modules as f64 - 1.0) + self.num_per_module as f64 - 1.0)
    }

    /// Fresnel distance `d_F = 0.5 * sqrt(A^3 / lambda)` in meters; the
    /// radiating near field starts here.
    pub fn fresnel_distance(&self) -> f64 {
        let a = self.aperture();
        0.5 * (a.powi(3) / self.wavelength).sqrt()
    }
}
