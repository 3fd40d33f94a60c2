//! Echo-signal synthesis, maximum-likelihood velocity estimation, kinematic
//! prediction, and the Monte Carlo MSE harness.
//!
//! The echo model is built two ways: the full product form
//! `y(n) = beta a_n(phi) a_n^T(phi) x(n) + z(n)` and the beamformed form
//! `y(n) = beta psi(n) a_n(phi) s(n) + z(n)`; both are exposed so their
//! equivalence can be checked. The estimator treats `(r, theta)` as known
//! (previous-CPI estimates), concentrates the unknown reflection
//! coefficient out of the Gaussian likelihood by least squares, and
//! maximizes the concentrated objective with a coarse grid followed by
//! Nelder–Mead refinement.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gain::{psi_exact, MismatchSpec};
use crate::geometry::ArrayGeometry;
use crate::link::{CpiConfig, LinkBudget};
use crate::nearfield::{array_response, ElementGeometry, TargetState};

// ─── Echo synthesis ──────────────────────────────────────────────────

/// One synthesized CPI of echo data together with everything needed to
/// reproduce and post-process it.
#[derive(Debug, Clone)]
pub struct EchoRecord {
    /// Received vectors `y(n)`, indexed `[n - 1][element]`.
    pub samples: Vec<Vec<Complex64>>,
    /// Transmitted precoded vectors `x(n)`, known at the receiver.
    pub transmit: Vec<Vec<Complex64>>,
    /// Information symbols `s(n)`.
    pub symbols: Vec<Complex64>,
    /// Ground-truth target.
    pub true_target: TargetState,
    /// Complex reflection coefficient actually applied.
    pub beta: Complex64,
    /// Per-element complex noise variance in watts.
    pub noise_variance: f64,
    /// Seed that generated the noise and the reflection phase.
    pub rng_seed: u64,
}

/// Unit-modulus symbol stream of all ones (the default transmit stream).
pub fn constant_symbols(num_symbols: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); num_symbols]
}

/// Seeded QPSK stream; any constant-modulus stream is information-equivalent
/// for velocity estimation.
pub fn qpsk_symbols(num_symbols: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..num_symbols)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0u8..4) as f64 * PI / 2.0))
        .collect()
}

fn check_symbol(symbol: Complex64) -> Result<()> {
    if (symbol.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "information symbol must be unit modulus, got |s|^2 = {}",
            symbol.norm_sqr()
        )));
    }
    Ok(())
}

/// Precoded transmit vector `x(n) = a_n^*(phi_hat) s(n) / sqrt(MK)`;
/// unit squared norm by construction.
pub fn precode(
    geom: &ArrayGeometry,
    predicted: &TargetState,
    cpi: &CpiConfig,
    n: usize,
    symbol: Complex64,
) -> Result<Vec<Complex64>> {
    check_symbol(symbol)?;
    let response = array_response(geom, predicted, cpi, n)?;
    let scale = 1.0 / (geom.num_elements() as f64).sqrt();
    Ok(response.iter().map(|a| a.conj() * symbol * scale).collect())
}

fn draw_noise(rng: &mut StdRng, len: usize, variance: f64) -> Vec<Complex64> {
    let sigma = (variance / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

fn echo_preamble(
    geom: &ArrayGeometry,
    true_target: &TargetState,
    budget: &LinkBudget,
    cpi: &CpiConfig,
    symbols: &[Complex64],
    seed: u64,
) -> Result<(Complex64, f64, StdRng)> {
    if true_target.range < geom.fresnel_distance() {
        return Err(Error::InvalidTarget(format!(
            "true target at r = {} m is inside the Fresnel distance {} m",
            true_target.range,
            geom.fresnel_distance()
        )));
    }
    if symbols.len() != cpi.num_symbols {
        return Err(Error::InvalidArgument(format!(
            "symbol stream length {} does not match N = {}",
            symbols.len(),
            cpi.num_symbols
        )));
    }
    for &s in symbols {
        check_symbol(s)?;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let magnitude = budget.reflection_power(cpi, true_target.range)?.sqrt();
    let beta = Complex64::from_polar(magnitude, rng.gen_range(0.0..2.0 * PI));
    Ok((beta, budget.noise_variance(), rng))
}

/// Synthesize one CPI through the full product model
/// `y(n) = beta a_n(phi) a_n^T(phi) x(n) + z(n)`, with `x(n)` precoded for
/// the predicted target.
pub fn synthesize_echo(
    geom: &ArrayGeometry,
    true_target: &TargetState,
    predicted: &TargetState,
    cpi: &CpiConfig,
    budget: &LinkBudget,
    symbols: &[Complex64],
    seed: u64,
) -> Result<EchoRecord> {
    let (beta, noise_variance, mut rng) =
        echo_preamble(geom, true_target, budget, cpi, symbols, seed)?;
    let mut samples = Vec::with_capacity(cpi.num_symbols);
    let mut transmit = Vec::with_capacity(cpi.num_symbols);
    for n in 1..=cpi.num_symbols {
        let a_true = array_response(geom, true_target, cpi, n)?;
        let x = precode(geom, predicted, cpi, n, symbols[n - 1])?;
        let projected: Complex64 = a_true.iter().zip(&x).map(|(a, xe)| a * xe).sum();
        let noise = draw_noise(&mut rng, a_true.len(), noise_variance);
        samples.push(
            a_true
                .iter()
                .zip(&noise)
                .map(|(a, z)| beta * projected * a + z)
                .collect(),
        );
        transmit.push(x);
    }
    Ok(EchoRecord {
        samples,
        transmit,
        symbols: symbols.to_vec(),
        true_target: *true_target,
        beta,
        noise_variance,
        rng_seed: seed,
    })
}

/// Synthesize one CPI through the beamformed model
/// `y(n) = beta psi(n) a_n(phi) s(n) + z(n)`, where the precoder mismatch
/// is expressed as `(true - predicted)` velocities at the same position.
///
/// With the same seed this draws identical noise to [`synthesize_echo`], so
/// the two paths agree sample-for-sample whenever the product model uses a
/// predictor that differs only in velocities.
pub fn synthesize_echo_factored(
    geom: &ArrayGeometry,
    true_target: &TargetState,
    mismatch: &MismatchSpec,
    cpi: &CpiConfig,
    budget: &LinkBudget,
    symbols: &[Complex64],
    seed: u64,
) -> Result<EchoRecord> {
    let (beta, noise_variance, mut rng) =
        echo_preamble(geom, true_target, budget, cpi, symbols, seed)?;
    let predicted = true_target.with_velocities(
        true_target.radial_velocity - mismatch.delta_vr,
        true_target.transverse_velocity - mismatch.delta_vt,
    );
    let mut samples = Vec::with_capacity(cpi.num_symbols);
    let mut transmit = Vec::with_capacity(cpi.num_symbols);
    for n in 1..=cpi.num_symbols {
        let a_true = array_response(geom, true_target, cpi, n)?;
        let psi = psi_exact(geom, true_target, cpi, mismatch, n)?;
        let noise = draw_noise(&mut rng, a_true.len(), noise_variance);
        samples.push(
            a_true
                .iter()
                .zip(&noise)
                .map(|(a, z)| beta * psi * symbols[n - 1] * a + z)
                .collect(),
        );
        transmit.push(precode(geom, &predicted, cpi, n, symbols[n - 1])?);
    }
    Ok(EchoRecord {
        samples,
        transmit,
        symbols: symbols.to_vec(),
        true_target: *true_target,
        beta,
        noise_variance,
        rng_seed: seed,
    })
}

// ─── Concentrated likelihood ─────────────────────────────────────────

/// Precomputed data for fast repeated likelihood evaluations over velocity
/// hypotheses at known `(r, theta)`.
///
/// The model direction at hypothesis `(v_r, v_t)` is
/// `u_n = a_n(v_r, v_t) (a_n^T(v_r, v_t) x(n))`; the unknown reflection
/// coefficient is concentrated out by least squares, leaving the objective
/// `|sum_n u_n^H y(n)|^2 / sum_n ||u_n||^2`.
pub struct MleProblem {
    num_symbols: usize,
    num_elements: usize,
    phase_per_mps: f64, // (2 pi / lambda) T_s
    q: Vec<f64>,
    p: Vec<f64>,
    a0_re: Vec<f64>,
    a0_im: Vec<f64>,
    x_re: Vec<f64>,
    x_im: Vec<f64>,
    y_re: Vec<f64>,
    y_im: Vec<f64>,
}

impl MleProblem {
    /// Stage the echo record against known `(r, theta)`.
    pub fn new(
        echo: &EchoRecord,
        geom: &ArrayGeometry,
        known_r_theta: (f64, f64),
        cpi: &CpiConfig,
    ) -> Result<Self> {
        let (r, theta) = known_r_theta;
        let position = TargetState::new(r, theta, 0.0, 0.0)?;
        let elems = ElementGeometry::compute(geom, &position);
        let e = geom.num_elements();
        let n = cpi.num_symbols;
        if echo.samples.len() != n || echo.samples.iter().any(|row| row.len() != e) {
            return Err(Error::InvalidArgument(
                "echo record does not match the geometry/CPI dimensions".into(),
            ));
        }
        let wavenumber = 2.0 * PI / geom.wavelength;
        let (a0_re, a0_im): (Vec<f64>, Vec<f64>) = elems
            .ranges
            .iter()
            .map(|&re| {
                let (s, c) = (-wavenumber * re).sin_cos();
                (c, s)
            })
            .unzip();
        let mut x_re = Vec::with_capacity(n * e);
        let mut x_im = Vec::with_capacity(n * e);
        let mut y_re = Vec::with_capacity(n * e);
        let mut y_im = Vec::with_capacity(n * e);
        for row in &echo.transmit {
            for v in row {
                x_re.push(v.re);
                x_im.push(v.im);
            }
        }
        for row in &echo.samples {
            for v in row {
                y_re.push(v.re);
                y_im.push(v.im);
            }
        }
        Ok(Self {
            num_symbols: n,
            num_elements: e,
            phase_per_mps: wavenumber * cpi.symbol_duration,
            q: elems.q,
            p: elems.p,
            a0_re,
            a0_im,
            x_re,
            x_im,
            y_re,
            y_im,
        })
    }

    /// Concentrated objective and the least-squares reflection estimate at
    /// the hypothesis.
    pub fn objective_and_beta(&self, v_r: f64, v_t: f64) -> (f64, Complex64) {
        let e = self.num_elements;
        let mut step_re = vec![0.0; e];
        let mut step_im = vec![0.0; e];
        for i in 0..e {
            let (s, c) = (-self.phase_per_mps * (self.q[i] * v_r + self.p[i] * v_t)).sin_cos();
            step_re[i] = c;
            step_im[i] = s;
        }
        let mut cur_re = self.a0_re.clone();
        let mut cur_im = self.a0_im.clone();
        let mut num_re = 0.0;
        let mut num_im = 0.0;
        let mut den = 0.0;
        for n in 0..self.num_symbols {
            let xb_re = &self.x_re[n * e..(n + 1) * e];
            let xb_im = &self.x_im[n * e..(n + 1) * e];
            let yb_re = &self.y_re[n * e..(n + 1) * e];
            let yb_im = &self.y_im[n * e..(n + 1) * e];
            let mut s1_re = 0.0;
            let mut s1_im = 0.0;
            let mut s2_re = 0.0;
            let mut s2_im = 0.0;
            for i in 0..e {
                let cr = cur_re[i] * step_re[i] - cur_im[i] * step_im[i];
                let ci = cur_re[i] * step_im[i] + cur_im[i] * step_re[i];
                cur_re[i] = cr;
                cur_im[i] = ci;
                s1_re += cr * xb_re[i] - ci * xb_im[i];
                s1_im += cr * xb_im[i] + ci * xb_re[i];
                s2_re += cr * yb_re[i] + ci * yb_im[i];
                s2_im += cr * yb_im[i] - ci * yb_re[i];
            }
            num_re += s1_re * s2_re + s1_im * s2_im;
            num_im += s1_re * s2_im - s1_im * s2_re;
            den += s1_re * s1_re + s1_im * s1_im;
        }
        let den_u = self.num_elements as f64 * den;
        if den_u <= f64::MIN_POSITIVE {
            return (0.0, Complex64::new(0.0, 0.0));
        }
        let numerator = Complex64::new(num_re, num_im);
        ((num_re * num_re + num_im * num_im) / den_u, numerator / den_u)
    }

    /// Concentrated log-likelihood objective at the hypothesis.
    pub fn objective(&self, v_r: f64, v_t: f64) -> f64 {
        self.objective_and_beta(v_r, v_t).0
    }
}

/// Concentrated log-likelihood objective for a single hypothesis; see
/// [`MleProblem`] for the staged variant used inside search loops.
pub fn concentrated_loglik(
    echo: &EchoRecord,
    geom: &ArrayGeometry,
    known_r_theta: (f64, f64),
    cpi: &CpiConfig,
    v_r: f64,
    v_t: f64,
) -> Result<f64> {
    Ok(MleProblem::new(echo, geom, known_r_theta, cpi)?.objective(v_r, v_t))
}

// ─── Search ──────────────────────────────────────────────────────────

/// Velocity-search configuration: a box around the initialization scanned
/// coarsely, then refined without derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Half-width of the search box around the initialization, m/s.
    pub box_half_width: f64,
    /// Coarse grid step, m/s.
    pub coarse_step: f64,
    /// Convergence tolerance on the simplex width, m/s.
    pub tol_v: f64,
    /// Refinement iteration cap.
    pub max_iters: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            box_half_width: 5.0,
            coarse_step: 0.25,
            tol_v: 1e-4,
            max_iters: 400,
        }
    }
}

/// Estimator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleResult {
    pub v_r_hat: f64,
    pub v_t_hat: f64,
    pub log_likelihood_peak: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct SearchBox {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl SearchBox {
    fn clamp(&self, point: [f64; 2]) -> [f64; 2] {
        [
            point[0].clamp(self.lo[0], self.hi[0]),
            point[1].clamp(self.lo[1], self.hi[1]),
        ]
    }
}

/// Nelder–Mead maximization of `f` within `bounds`, started at `start`.
/// Returns (best point, best value, iterations, converged).
fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    initial_step: f64,
    bounds: &SearchBox,
    tol: f64,
    max_iters: usize,
) -> ([f64; 2], f64, usize, bool) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut simplex: Vec<[f64; 2]> = vec![
        bounds.clamp(start),
        bounds.clamp([start[0] + initial_step, start[1]]),
        bounds.clamp([start[0], start[1] + initial_step]),
    ];
    // degenerate clamped vertices (start on the box edge) get nudged inward
    for d in 0..2 {
        if (simplex[d + 1][d] - simplex[0][d]).abs() < tol {
            simplex[d + 1][d] = bounds.clamp([
                simplex[0][0] - if d == 0 { initial_step } else { 0.0 },
                simplex[0][1] - if d == 1 { initial_step } else { 0.0 },
            ])[d];
        }
    }
    let mut values: Vec<f64> = simplex.iter().map(|&pt| f(pt)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        // order descending: index 0 best (maximization)
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        let (best, mid, worst) = (order[0], order[1], order[2]);

        let width = simplex
            .iter()
            .map(|pt| {
                (pt[0] - simplex[best][0])
                    .abs()
                    .max((pt[1] - simplex[best][1]).abs())
            })
            .fold(0.0f64, f64::max);
        if width < tol {
            converged = true;
            break;
        }

        let centroid = [
            0.5 * (simplex[best][0] + simplex[mid][0]),
            0.5 * (simplex[best][1] + simplex[mid][1]),
        ];
        let reflect = bounds.clamp([
            centroid[0] + ALPHA * (centroid[0] - simplex[worst][0]),
            centroid[1] + ALPHA * (centroid[1] - simplex[worst][1]),
        ]);
        let f_reflect = f(reflect);

        if f_reflect > values[best] {
            let expand = bounds.clamp([
                centroid[0] + GAMMA * (reflect[0] - centroid[0]),
                centroid[1] + GAMMA * (reflect[1] - centroid[1]),
            ]);
            let f_expand = f(expand);
            if f_expand > f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect > values[mid] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract = bounds.clamp([
                centroid[0] + RHO * (simplex[worst][0] - centroid[0]),
                centroid[1] + RHO * (simplex[worst][1] - centroid[1]),
            ]);
            let f_contract = f(contract);
            if f_contract > values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                for idx in [mid, worst] {
                    simplex[idx] = bounds.clamp([
                        simplex[best][0] + SIGMA * (simplex[idx][0] - simplex[best][0]),
                        simplex[best][1] + SIGMA * (simplex[idx][1] - simplex[best][1]),
                    ]);
                    values[idx] = f(simplex[idx]);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..3 {
        if values[i] > values[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx], values[best_idx], iterations, converged)
}

/// Maximum-likelihood velocity estimate: coarse grid over the search box,
/// then Nelder–Mead refinement from the best grid point and from the
/// initialization, keeping the better of the two.
pub fn mle_estimate(
    echo: &EchoRecord,
    geom: &ArrayGeometry,
    known_r_theta: (f64, f64),
    cpi: &CpiConfig,
    init: (f64, f64),
    search: &SearchConfig,
) -> Result<MleResult> {
    let problem = MleProblem::new(echo, geom, known_r_theta, cpi)?;
    let bounds = SearchBox {
        lo: [init.0 - search.box_half_width, init.1 - search.box_half_width],
        hi: [init.0 + search.box_half_width, init.1 + search.box_half_width],
    };

    let steps = (2.0 * search.box_half_width / search.coarse_step).round() as usize;
    let mut best_point = [init.0, init.1];
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..=steps {
        let v_r = bounds.lo[0] + i as f64 * search.coarse_step;
        for j in 0..=steps {
            let v_t = bounds.lo[1] + j as f64 * search.coarse_step;
            let value = problem.objective(v_r, v_t);
            if value > best_value {
                best_value = value;
                best_point = [v_r, v_t];
            }
        }
    }

    let initial_step = 0.5 * search.coarse_step;
    let mut total_iterations = 0;
    let mut overall: Option<([f64; 2], f64, bool)> = None;
    for start in [best_point, [init.0, init.1]] {
        let (point, value, iters, converged) = nelder_mead(
            |pt| problem.objective(pt[0], pt[1]),
            start,
            initial_step,
            &bounds,
            search.tol_v,
            search.max_iters,
        );
        total_iterations += iters;
        let better = match &overall {
            Some((_, best, _)) => value > *best,
            None => true,
        };
        if better {
            overall = Some((point, value, converged));
        }
    }
    let (point, value, converged) = overall.expect("at least one refinement ran");
    Ok(MleResult {
        v_r_hat: point[0],
        v_t_hat: point[1],
        log_likelihood_peak: value,
        iterations: total_iterations,
        converged,
    })
}

// ─── Kinematics ──────────────────────────────────────────────────────

/// One-CPI kinematic prediction: `r' = r + v_r N T_s`,
/// `theta' = theta + v_t N T_s / r`, velocities carried unchanged.
pub fn kinematic_predict(state: &TargetState, cpi: &CpiConfig) -> Result<TargetState> {
    let dt = cpi.cpi_duration();
    let new_range = state.range + state.radial_velocity * dt;
    if new_range <= 0.0 {
        return Err(Error::InvalidTarget(format!(
            "predicted range {new_range} m is not positive (target crossed the array)"
        )));
    }
    let new_angle = state.angle + state.transverse_velocity * dt / state.range;
    TargetState::new(
        new_range,
        new_angle,
        state.radial_velocity,
        state.transverse_velocity,
    )
}

// ─── Monte Carlo ─────────────────────────────────────────────────────

/// Everything one Monte Carlo trial needs.
#[derive(Debug, Clone)]
pub struct McScenario {
    pub geom: ArrayGeometry,
    pub cpi: CpiConfig,
    pub budget: LinkBudget,
    pub true_target: TargetState,
    /// Velocities assumed by the precoder (previous-CPI estimates).
    pub predicted_velocities: (f64, f64),
    /// Estimator initialization, usually the predicted velocities.
    pub mle_init: (f64, f64),
    pub search: SearchConfig,
    /// Symbol stream; `None` means the all-ones default.
    pub symbols: Option<Vec<Complex64>>,
}

impl McScenario {
    fn symbols(&self) -> Vec<Complex64> {
        self.symbols
            .clone()
            .unwrap_or_else(|| constant_symbols(self.cpi.num_symbols))
    }
}

/// Aggregated Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub num_trials: usize,
    /// Mean squared radial-velocity error, (m/s)^2.
    pub mse_vr: f64,
    /// Mean squared transverse-velocity error, (m/s)^2.
    pub mse_vt: f64,
    /// Empirical bias of each component, m/s.
    pub mean_err_vr: f64,
    pub mean_err_vt: f64,
    /// Trials whose refinement did not converge (still counted).
    pub num_failed: usize,
    /// Per-trial seeds, `base_seed + t`.
    pub trial_seeds: Vec<u64>,
}

/// Run `num_trials` independent trials; trial `t` is seeded with
/// `base_seed + t`, so parallel and serial runs produce identical output.
pub fn run_monte_carlo(scenario: &McScenario, num_trials: usize, base_seed: u64) -> Result<McStats> {
    if num_trials == 0 {
        return Err(Error::InvalidArgument("num_trials must be >= 1".into()));
    }
    let symbols = scenario.symbols();
    let predicted = scenario.true_target.with_velocities(
        scenario.predicted_velocities.0,
        scenario.predicted_velocities.1,
    );
    let known = (scenario.true_target.range, scenario.true_target.angle);

    let trials: Result<Vec<(f64, f64, bool)>> = (0..num_trials)
        .into_par_iter()
        .map(|t| {
            let seed = base_seed.wrapping_add(t as u64);
            let echo = synthesize_echo(
                &scenario.geom,
                &scenario.true_target,
                &predicted,
                &scenario.cpi,
                &scenario.budget,
                &symbols,
                seed,
            )?;
            let result = mle_estimate(
                &echo,
                &scenario.geom,
                known,
                &scenario.cpi,
                scenario.mle_init,
                &scenario.search,
            )?;
            Ok((
                result.v_r_hat - scenario.true_target.radial_velocity,
                result.v_t_hat - scenario.true_target.transverse_velocity,
                result.converged,
            ))
        })
        .collect();
    let trials = trials?;

    // sequential reduction in trial order keeps the result thread-count
    // independent
    let mut sum_sq = [0.0f64; 2];
    let mut sum = [0.0f64; 2];
    let mut num_failed = 0;
    for &(err_r, err_t, converged) in &trials {
        sum_sq[0] += err_r * err_r;
        sum_sq[1] += err_t * err_t;
        sum[0] += err_r;
        sum[1] += err_t;
        if !converged {
            num_failed += 1;
        }
    }
    let t = num_trials as f64;
    Ok(McStats {
        num_trials,
        mse_vr: sum_sq[0] / t,
        mse_vt: sum_sq[1] / t,
        mean_err_vr: sum[0] / t,
        mean_err_vt: sum[1] / t,
        num_failed,
        trial_seeds: (0..num_trials as u64).map(|t| base_seed.wrapping_add(t)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::dbm_to_watts;

    const C: f64 = 299_792_458.0;

    /// Small but still modular test geometry to keep unit tests fast.
    fn small_geometry() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(8, 2, 5, C / 28e9).unwrap()
    }

    fn small_cpi() -> CpiConfig {
        CpiConfig::new(28e9, 1e-5, 32).unwrap()
    }

    fn quiet_budget() -> LinkBudget {
        LinkBudget::monostatic(
            dbm_to_watts(20.0),
            1.0,
            1.0,
            dbm_to_watts(-174.0),
            1e5,
        )
        .unwrap()
    }

    fn far_target(geom: &ArrayGeometry) -> TargetState {
        TargetState::new(geom.fresnel_distance().max(0.5) * 4.0, PI / 2.0, 10.0, 8.0).unwrap()
    }

    #[test]
    fn precoder_is_unit_norm_and_matched() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        for n in [1, 16, 32] {
            let x = precode(&geom, &target, &cpi, n, Complex64::new(1.0, 0.0)).unwrap();
            let norm_sq: f64 = x.iter().map(|v| v.norm_sqr()).sum();
            assert!((norm_sq - 1.0).abs() < 1e-12);
            // matched filter: a^T x = sqrt(MK) s(n)
            let a = array_response(&geom, &target, &cpi, n).unwrap();
            let dot: Complex64 = a.iter().zip(&x).map(|(ae, xe)| ae * xe).sum();
            let sqrt_mk = (geom.num_elements() as f64).sqrt();
            assert!((dot - Complex64::new(sqrt_mk, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn precoder_rejects_non_unit_symbol() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        assert!(precode(&geom, &target, &cpi, 1, Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn synthesis_rejects_target_inside_fresnel() {
        let geom = ArrayGeometry::half_wavelength(120, 2, 61, C / 28e9).unwrap();
        let close = TargetState::new(geom.fresnel_distance() * 0.5, PI / 2.0, 0.0, 0.0).unwrap();
        let cpi = small_cpi();
        let symbols = constant_symbols(cpi.num_symbols);
        assert!(matches!(
            synthesize_echo(&geom, &close, &close, &cpi, &quiet_budget(), &symbols, 1),
            Err(Error::InvalidTarget(_))
        ));
    }

    #[test]
    fn echo_is_reproducible_from_seed() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let predicted = target.with_velocities(11.0, 7.0);
        let symbols = constant_symbols(cpi.num_symbols);
        let a = synthesize_echo(&geom, &target, &predicted, &cpi, &quiet_budget(), &symbols, 99).unwrap();
        let b = synthesize_echo(&geom, &target, &predicted, &cpi, &quiet_budget(), &symbols, 99).unwrap();
        assert_eq!(a.beta, b.beta);
        for (ra, rb) in a.samples.iter().zip(&b.samples) {
            for (va, vb) in ra.iter().zip(rb) {
                assert_eq!(va.re.to_bits(), vb.re.to_bits());
                assert_eq!(va.im.to_bits(), vb.im.to_bits());
            }
        }
        let c = synthesize_echo(&geom, &target, &predicted, &cpi, &quiet_budget(), &symbols, 100).unwrap();
        assert_ne!(a.beta, c.beta);
    }

    #[test]
    fn product_and_factored_models_agree() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let budget = quiet_budget().with_unit_pathloss(true);
        let symbols = qpsk_symbols(cpi.num_symbols, 3);
        for (seed, (dvr, dvt)) in [(1u64, (0.0, 0.0)), (2, (1.5, -2.0)), (3, (-7.3, 12.0))] {
            let mismatch = MismatchSpec::new(dvr, dvt);
            let predicted = target.with_velocities(
                target.radial_velocity - dvr,
                target.transverse_velocity - dvt,
            );
            let via_product =
                synthesize_echo(&geom, &target, &predicted, &cpi, &budget, &symbols, seed).unwrap();
            let via_factored =
                synthesize_echo_factored(&geom, &target, &mismatch, &cpi, &budget, &symbols, seed)
                    .unwrap();
            let scale = via_product.beta.norm() * (geom.num_elements() as f64).sqrt();
            for (ra, rb) in via_product.samples.iter().zip(&via_factored.samples) {
                for (va, vb) in ra.iter().zip(rb) {
                    assert!(
                        (va - vb).norm() <= 1e-12 * scale,
                        "paths diverge: {va} vs {vb}"
                    );
                }
            }
        }
    }

    #[test]
    fn noise_free_matched_echo_is_scaled_response() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let still = TargetState::new(far_target(&geom).range, PI / 2.0, 0.0, 0.0).unwrap();
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE; // effectively zero noise
        let symbols = constant_symbols(cpi.num_symbols);
        let echo = synthesize_echo(&geom, &still, &still, &cpi, &budget, &symbols, 5).unwrap();
        let sqrt_mk = (geom.num_elements() as f64).sqrt();
        for n in 1..=cpi.num_symbols {
            let a = array_response(&geom, &still, &cpi, n).unwrap();
            for (ye, ae) in echo.samples[n - 1].iter().zip(&a) {
                let expected = echo.beta * sqrt_mk * ae;
                assert!((ye - expected).norm() < 1e-9 * expected.norm());
            }
        }
    }

    #[test]
    fn objective_peaks_at_truth_and_ignores_global_phase() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let predicted = target.with_velocities(11.0, 7.0);
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE;
        let symbols = constant_symbols(cpi.num_symbols);
        let mut echo =
            synthesize_echo(&geom, &target, &predicted, &cpi, &budget, &symbols, 11).unwrap();
        let known = (target.range, target.angle);

        let problem = MleProblem::new(&echo, &geom, known, &cpi).unwrap();
        let at_truth = problem.objective(10.0, 8.0);
        for (vr, vt) in [(9.0, 8.0), (10.0, 9.5), (11.0, 7.0), (12.5, 4.0)] {
            assert!(at_truth >= problem.objective(vr, vt), "not peaked at truth");
        }

        // global phase rotation leaves the objective unchanged
        let rotation = Complex64::from_polar(1.0, 1.234);
        for row in &mut echo.samples {
            for v in row.iter_mut() {
                *v *= rotation;
            }
        }
        let rotated = MleProblem::new(&echo, &geom, known, &cpi).unwrap();
        let after = rotated.objective(10.0, 8.0);
        assert!((after - at_truth).abs() <= 1e-9 * at_truth);
    }

    #[test]
    fn concentrated_beta_recovers_truth_noise_free() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let predicted = target.with_velocities(11.0, 7.0);
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE;
        let symbols = constant_symbols(cpi.num_symbols);
        let echo = synthesize_echo(&geom, &target, &predicted, &cpi, &budget, &symbols, 17).unwrap();
        let problem = MleProblem::new(&echo, &geom, (target.range, target.angle), &cpi).unwrap();
        let (_, beta_hat) = problem.objective_and_beta(
            target.radial_velocity,
            target.transverse_velocity,
        );
        assert!(
            (beta_hat - echo.beta).norm() <= 1e-9 * echo.beta.norm(),
            "beta_hat = {beta_hat}, beta = {}",
            echo.beta
        );
    }

    #[test]
    fn noise_free_estimate_recovers_truth() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let predicted = target.with_velocities(11.0, 7.0);
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE;
        let symbols = constant_symbols(cpi.num_symbols);
        let echo = synthesize_echo(&geom, &target, &predicted, &cpi, &budget, &symbols, 23).unwrap();
        let result = mle_estimate(
            &echo,
            &geom,
            (target.range, target.angle),
            &cpi,
            (11.0, 7.0),
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert!((result.v_r_hat - 10.0).abs() < 1e-3, "v_r = {}", result.v_r_hat);
        assert!((result.v_t_hat - 8.0).abs() < 1e-3, "v_t = {}", result.v_t_hat);
    }

    #[test]
    fn excluded_truth_pins_estimate_to_box_boundary() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let predicted = target.with_velocities(11.0, 7.0);
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE;
        let symbols = constant_symbols(cpi.num_symbols);
        let echo = synthesize_echo(&geom, &target, &predicted, &cpi, &budget, &symbols, 29).unwrap();
        // box around (20, 8) with half width 3: truth v_r = 10 outside
        let search = SearchConfig {
            box_half_width: 3.0,
            ..SearchConfig::default()
        };
        let result = mle_estimate(
            &echo,
            &geom,
            (target.range, target.angle),
            &cpi,
            (20.0, 8.0),
            &search,
        )
        .unwrap();
        assert!((result.v_r_hat - 17.0).abs() < 0.3, "v_r = {}", result.v_r_hat);
    }

    #[test]
    fn kinematic_prediction_examples() {
        let cpi = CpiConfig::new(28e9, 1e-5, 200).unwrap(); // 2 ms CPI
        let still = TargetState::new(10.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(kinematic_predict(&still, &cpi).unwrap(), still);

        let inbound = TargetState::new(10.0, 1.0, 10.0, 0.0).unwrap();
        let predicted = kinematic_predict(&inbound, &cpi).unwrap();
        assert!((predicted.range - 10.02).abs() < 1e-12);
        assert_eq!(predicted.angle, 1.0);

        // angle update scales inversely with range
        let near = TargetState::new(5.0, 1.0, 0.0, 4.0).unwrap();
        let far = TargetState::new(10.0, 1.0, 0.0, 4.0).unwrap();
        let d_near = kinematic_predict(&near, &cpi).unwrap().angle - 1.0;
        let d_far = kinematic_predict(&far, &cpi).unwrap().angle - 1.0;
        assert!((d_near / d_far - 2.0).abs() < 1e-9);

        // crossing the array is a domain error
        let crossing = TargetState::new(0.01, 1.0, -10.0, 0.0).unwrap();
        assert!(kinematic_predict(&crossing, &cpi).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic_and_near_zero_noise_free() {
        let geom = small_geometry();
        let cpi = small_cpi();
        let target = far_target(&geom);
        let mut budget = quiet_budget();
        budget.noise_density = f64::MIN_POSITIVE;
        let scenario = McScenario {
            geom,
            cpi,
            budget,
            true_target: target,
            predicted_velocities: (11.0, 7.0),
            mle_init: (11.0, 7.0),
            search: SearchConfig::default(),
            symbols: None,
        };
        let a = run_monte_carlo(&scenario, 2, 42).unwrap();
        let b = run_monte_carlo(&scenario, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trial_seeds, vec![42, 43]);
        // noise-free MSE is bounded by the search tolerance, squared
        assert!(a.mse_vr < 1e-6, "mse_vr = {}", a.mse_vr);
        assert!(a.mse_vt < 1e-6, "mse_vt = {}", a.mse_vt);
    }
}
