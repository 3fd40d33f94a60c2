//! Waveform timing and radar link budget: reflection power, noise variance,
//! and the composite SNR factor `gamma` that scales the Fisher information.
//!
//! Everything here works in linear SI units (watts, meters, seconds).
//! dB/dBm conversions happen only at configuration boundaries via the
//! helpers at the bottom of this module.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Coherent processing interval timing: carrier, symbol duration, symbol count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpiConfig {
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// Symbol duration `T_s` in seconds.
    pub symbol_duration: f64,
    /// Symbols per CPI (`N`); symbol indices run 1..=N.
    pub num_symbols: usize,
}

impl CpiConfig {
    pub fn new(carrier_freq: f64, symbol_duration: f64, num_symbols: usize) -> Result<Self> {
        if !carrier_freq.is_finite()
            || carrier_freq <= 0.0
            || !symbol_duration.is_finite()
            || symbol_duration <= 0.0
            || num_symbols == 0
        {
            return Err(Error::InvalidArgument(format!(
                "CPI parameters must be positive (f_c={carrier_freq}, T_s={symbol_duration}, N={num_symbols})"
            )));
        }
        Ok(Self {
            carrier_freq,
            symbol_duration,
            num_symbols,
        })
    }

    /// Carrier wavelength `lambda = c / f_c` in meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// CPI duration `N * T_s` in seconds.
    pub fn cpi_duration(&self) -> f64 {
        self.num_symbols as f64 * self.symbol_duration
    }
}

/// Monostatic link budget in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit power `P_t` in watts.
    pub transmit_power: f64,
    /// Transmit antenna gain, linear.
    pub tx_gain: f64,
    /// Receive antenna gain, linear (equals `tx_gain` for monostatic setups).
    pub rx_gain: f64,
    /// Radar cross section in m^2, linear.
    pub rcs: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density: f64,
    /// Receiver bandwidth in Hz.
    pub bandwidth: f64,
    /// When set, `reflection_power` returns 1 (pathloss-free sweeps).
    pub unit_pathloss: bool,
}

impl LinkBudget {
    pub fn new(
        transmit_power: f64,
        tx_gain: f64,
        rx_gain: f64,
        rcs: f64,
        noise_density: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("transmit_power", transmit_power),
            ("tx_gain", tx_gain),
            ("rx_gain", rx_gain),
            ("rcs", rcs),
            ("noise_density", noise_density),
            ("bandwidth", bandwidth),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "link budget field {name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            transmit_power,
            tx_gain,
            rx_gain,
            rcs,
            noise_density,
            bandwidth,
            unit_pathloss: false,
        })
    }

    /// Monostatic budget with equal antenna gains.
    pub fn monostatic(
        transmit_power: f64,
        antenna_gain: f64,
        rcs: f64,
        noise_density: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        Self::new(transmit_power, antenna_gain, antenna_gain, rcs, noise_density, bandwidth)
    }

    /// Same budget with the pathloss-free flag set.
    pub fn with_unit_pathloss(mut self, unit: bool) -> Self {
        self.unit_pathloss = unit;
        self
    }

    /// Point-scatterer reflection power
    /// `|beta|^2 = P_t G_t G_r lambda^2 sigma_RCS / ((4 pi)^3 r^4)` in watts.
    ///
    /// Returns 1 when `unit_pathloss` is set.
    pub fn reflection_power(&self, cpi: &CpiConfig, range: f64) -> Result<f64> {
        if range <= 0.0 || range.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "range must be positive, got {range}"
            )));
        }
        if self.unit_pathloss {
            return Ok(1.0);
        }
        let lambda = cpi.wavelength();
        Ok(self.transmit_power * self.tx_gain * self.rx_gain * lambda * lambda * self.rcs
            / ((4.0 * PI).powi(3) * range.powi(4)))
    }

    /// Noise variance `sigma^2 = noise_density * bandwidth` in watts.
    pub fn noise_variance(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Composite SNR factor
    /// `gamma = (2 pi / lambda)^2 |beta|^2 N (N + 1)(2N + 1) T_s^2 / (3 sigma^2)`,
    /// units 1/(m/s)^2.
    pub fn snr_gamma(&self, cpi: &CpiConfig, range: f64) -> Result<f64> {
        let beta_sq = self.reflection_power(cpi, range)?;
        Ok(gamma_from_parts(beta_sq, self.noise_variance(), cpi))
    }
}

/// `gamma` from an explicit `|beta|^2` and noise variance; shared by the
/// budget path and pathloss-free sweeps.
pub fn gamma_from_parts(beta_sq: f64, noise_variance: f64, cpi: &CpiConfig) -> f64 {
    let n = cpi.num_symbols as f64;
    let wavenumber = 2.0 * PI / cpi.wavelength();
    let symbol_factor = n * (n + 1.0) * (2.0 * n + 1.0) / 3.0;
    wavenumber * wavenumber * beta_sq * symbol_factor * cpi.symbol_duration * cpi.symbol_duration
        / noise_variance
}

// ── dB / dBm boundary conversions ────────────────────────────────────

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

/// dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
