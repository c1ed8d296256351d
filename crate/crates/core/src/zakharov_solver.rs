//! Pseudospectral integrator for the Zakharov system in first-order form
//!
//! ```text
//! i u_t + u_xx = ½ (n₊ + n₋) u
//! i n±_t ∓ A^{1/2} n± = ± A^{1/2} |u|²            A = −∂x²
//! ```
//!
//! with `n = ½(n₊ + n₋)` and `n± = n ± i A^{−1/2} n_t`, or its regularized
//! form with `Ã = −∂x² + 1`, where the wave equation `n_tt − n_xx + n =
//! (|u|²)_xx + n` gives
//!
//! ```text
//! i n±_t ∓ Ã^{1/2} n± = ± A Ã^{−1/2} |u|² ∓ ½ Ã^{−1/2} (n₊ + n₋).
//! ```
//!
//! Both describe the same solutions. The dispersive symbols are integrated
//! exactly (Lawson integrating-factor RK4); products are formed in physical
//! space and dealiased with the 2/3 rule.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_spaces::{dilate, GridError, GridFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("A^(-1/2) is singular at the zero frequency: n1 has mean mode {0:.3e}; use the regularized system")]
    ZeroModeSingularity(f64),
    #[error("field sizes disagree: expected {expected} points, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite field value at t = {t}")]
    BlowUp { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub box_length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub regularized: bool,
    /// Record a trace sample every this many steps.
    pub sample_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n: 256,
            box_length: 2.0 * PI,
            dt: 1e-3,
            t_end: 0.5,
            regularized: true,
            sample_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(SolverError::Config(format!("N = {} is not a power of two >= 4", self.n)));
        }
        if !(self.box_length > 0.0 && self.box_length.is_finite()) {
            return Err(SolverError::Config(format!("box length {}", self.box_length)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end >= 0.0) {
            return Err(SolverError::Config(format!("dt = {}, T = {}", self.dt, self.t_end)));
        }
        let steps = self.t_end / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(SolverError::Config(format!(
                "T = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.sample_every == 0 {
            return Err(SolverError::Config("sample_every must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Exponents of the Fourier-Lebesgue norms recorded in traces: `Ĥ^{k,p}` for
/// `u` and `Ĥ^{l,p}` for `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub k: f64,
    pub l: f64,
    pub p: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self {
            k: 0.0,
            l: -0.5,
            p: 2.0,
        }
    }
}

/// Spectral state; coefficients are raw DFT values in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZakharovState {
    pub t: f64,
    box_length: f64,
    u: Vec<Complex64>,
    n_plus: Vec<Complex64>,
    n_minus: Vec<Complex64>,
}

fn fft_freqs(n: usize, box_length: f64) -> Vec<f64> {
    let d = 2.0 * PI / box_length;
    (0..n)
        .map(|j| {
            let j = j as isize;
            let s = if j < (n / 2) as isize { j } else { j - n as isize };
            s as f64 * d
        })
        .collect()
}

struct Transforms {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    n: usize,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            n,
        }
    }

    fn to_physical(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut v = c.to_vec();
        self.inv.process(&mut v);
        let s = 1.0 / self.n as f64;
        v.iter_mut().for_each(|x| *x *= s);
        v
    }

    fn to_spectral(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut c = v.to_vec();
        self.fwd.process(&mut c);
        c
    }
}

/// Raw DFT coefficients of a grid function in FFT order.
fn raw_coefficients(g: &GridFunction, tr: &Transforms) -> Vec<Complex64> {
    tr.to_spectral(&g.samples())
}

fn grid_from_raw(c: &[Complex64], box_length: f64, tr: &Transforms) -> Result<GridFunction, GridError> {
    GridFunction::from_samples(&[c.len()], &[box_length], tr.to_physical(c))
}

impl ZakharovState {
    pub fn from_grids(
        u: &GridFunction,
        n_plus: &GridFunction,
        n_minus: &GridFunction,
    ) -> Result<Self, SolverError> {
        let n = u.n()[0];
        for g in [u, n_plus, n_minus] {
            if g.dims() != 1 || g.n()[0] != n {
                return Err(SolverError::SizeMismatch {
                    expected: n,
                    got: g.modes().len(),
                });
            }
        }
        let tr = Transforms::new(n);
        Ok(Self {
            t: 0.0,
            box_length: u.box_length()[0],
            u: raw_coefficients(u, &tr),
            n_plus: raw_coefficients(n_plus, &tr),
            n_minus: raw_coefficients(n_minus, &tr),
        })
    }

    /// State from second-order data `(u0, n0, n1)`.
    pub fn from_data(
        u0: &GridFunction,
        n0: &GridFunction,
        n1: &GridFunction,
        regularized: bool,
    ) -> Result<Self, SolverError> {
        let (np, nm) = to_first_order(n0, n1, regularized)?;
        Self::from_grids(u0, &np, &nm)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn u_samples(&self) -> Vec<Complex64> {
        Transforms::new(self.len()).to_physical(&self.u)
    }

    /// `n = ½(n₊ + n₋)` in physical space.
    pub fn n_samples(&self) -> Vec<Complex64> {
        let sum: Vec<Complex64> = self
            .n_plus
            .iter()
            .zip(&self.n_minus)
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        Transforms::new(self.len()).to_physical(&sum)
    }

    pub fn u_grid(&self) -> Result<GridFunction, GridError> {
        grid_from_raw(&self.u, self.box_length, &Transforms::new(self.len()))
    }

    pub fn n_plus_grid(&self) -> Result<GridFunction, GridError> {
        grid_from_raw(&self.n_plus, self.box_length, &Transforms::new(self.len()))
    }

    pub fn n_minus_grid(&self) -> Result<GridFunction, GridError> {
        grid_from_raw(&self.n_minus, self.box_length, &Transforms::new(self.len()))
    }

    /// `‖u‖_{L²}`.
    pub fn mass(&self) -> f64 {
        let dx = self.box_length / self.len() as f64;
        (self.u.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx / self.len() as f64).sqrt()
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u_samples().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_n(&self) -> f64 {
        self.n_samples().iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    fn fourier_lebesgue(&self, c: &[Complex64], s: f64, p: f64) -> f64 {
        fourier_lebesgue_raw(c, self.box_length, s, p)
    }

    /// `‖u‖_{Ĥ^{s,p}}`.
    pub fn u_norm(&self, s: f64, p: f64) -> f64 {
        self.fourier_lebesgue(&self.u, s, p)
    }

    /// `‖n‖_{Ĥ^{s,p}}`, `n = ½(n₊ + n₋)`.
    pub fn n_norm(&self, s: f64, p: f64) -> f64 {
        let sum: Vec<Complex64> = self
            .n_plus
            .iter()
            .zip(&self.n_minus)
            .map(|(a, b)| (a + b) * 0.5)
            .collect();
        self.fourier_lebesgue(&sum, s, p)
    }

    fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.n_plus)
            .chain(&self.n_minus)
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// `‖⟨ξ⟩^s û‖_{L^{p'}}` of raw DFT coefficients, continuum-normalised.
fn fourier_lebesgue_raw(c: &[Complex64], box_length: f64, s: f64, p: f64) -> f64 {
    let n = c.len();
    let dx = box_length / n as f64;
    let dxi = 2.0 * PI / box_length;
    let scale = dx / (2.0 * PI).sqrt();
    let q = p / (p - 1.0);
    let xi = fft_freqs(n, box_length);
    let sum: f64 = c
        .iter()
        .zip(&xi)
        .map(|(v, &x)| ((1.0 + x * x).powf(0.5 * s) * v.norm() * scale).powf(q))
        .sum();
    (sum * dxi).powf(1.0 / q)
}

/// Symbol of `A^{−1/2}` (zero at `ξ = 0`) or `Ã^{−1/2}`.
fn inv_sqrt_symbol(xi: f64, regularized: bool) -> f64 {
    if regularized {
        1.0 / (xi * xi + 1.0).sqrt()
    } else if xi == 0.0 {
        0.0
    } else {
        1.0 / xi.abs()
    }
}

/// `n±0 = n0 ± i Op^{−1/2} n1` with `Op = A` or `Ã`.
pub fn to_first_order(
    n0: &GridFunction,
    n1: &GridFunction,
    regularized: bool,
) -> Result<(GridFunction, GridFunction), SolverError> {
    if n0.dims() != 1 || n1.dims() != 1 || n0.n() != n1.n() {
        return Err(SolverError::SizeMismatch {
            expected: n0.modes().len(),
            got: n1.modes().len(),
        });
    }
    let xi = n1.frequencies(0);
    let mid = n1.n()[0] / 2;
    if !regularized {
        let scale = n1.modes().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mean = n1.modes()[mid].norm();
        if mean > 1e-12 * scale.max(1.0) {
            return Err(SolverError::ZeroModeSingularity(mean));
        }
    }
    let shifted: Vec<Complex64> = n1
        .modes()
        .iter()
        .zip(&xi)
        .map(|(c, &x)| c * Complex64::new(0.0, inv_sqrt_symbol(x, regularized)))
        .collect();
    let plus = n0.modes().iter().zip(&shifted).map(|(a, b)| a + b).collect();
    let minus = n0.modes().iter().zip(&shifted).map(|(a, b)| a - b).collect();
    let len = n0.box_length();
    Ok((
        GridFunction::from_modes(n0.n(), len, plus)?,
        GridFunction::from_modes(n0.n(), len, minus)?,
    ))
}

/// Inverse of [`to_first_order`]: `n0 = ½(n₊ + n₋)`,
/// `n1 = Op^{1/2} (n₊ − n₋) / (2i)`.
pub fn from_first_order(
    n_plus: &GridFunction,
    n_minus: &GridFunction,
    regularized: bool,
) -> Result<(GridFunction, GridFunction), SolverError> {
    if n_plus.n() != n_minus.n() || n_plus.dims() != 1 {
        return Err(SolverError::SizeMismatch {
            expected: n_plus.modes().len(),
            got: n_minus.modes().len(),
        });
    }
    let xi = n_plus.frequencies(0);
    let n0 = n_plus
        .modes()
        .iter()
        .zip(n_minus.modes())
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    let n1 = n_plus
        .modes()
        .iter()
        .zip(n_minus.modes())
        .zip(&xi)
        .map(|((a, b), &x)| {
            let s = inv_sqrt_symbol(x, regularized);
            let root = if s == 0.0 { 0.0 } else { 1.0 / s };
            (a - b) * Complex64::new(0.0, -0.5 * root)
        })
        .collect();
    let len = n_plus.box_length();
    Ok((
        GridFunction::from_modes(n_plus.n(), len, n0)?,
        GridFunction::from_modes(n_plus.n(), len, n1)?,
    ))
}

/// Lawson RK4 stepper for one configuration.
pub struct Solver {
    cfg: SolverConfig,
    tr: Transforms,
    /// `ξ²`
    schr: Vec<f64>,
    /// `|ξ|` or `(ξ² + 1)^{1/2}`
    omega: Vec<f64>,
    /// `ξ² / ω` (equals `|ξ|` unregularized)
    source: Vec<f64>,
    /// `1 / (2ω)` in the regularized system, else zero
    coupling: Vec<f64>,
    keep: Vec<bool>,
    half_u: Vec<Complex64>,
    half_w: Vec<Complex64>,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self, SolverError> {
        cfg.validate()?;
        let n = cfg.n;
        let xi = fft_freqs(n, cfg.box_length);
        let omega: Vec<f64> = xi
            .iter()
            .map(|&x| if cfg.regularized { (x * x + 1.0).sqrt() } else { x.abs() })
            .collect();
        let source = xi
            .iter()
            .zip(&omega)
            .map(|(&x, &w)| if w == 0.0 { 0.0 } else { x * x / w })
            .collect();
        let coupling = omega
            .iter()
            .map(|&w| if cfg.regularized { 0.5 / w } else { 0.0 })
            .collect();
        let cut = n / 3;
        let keep = (0..n)
            .map(|j| {
                let s = if j < n / 2 { j } else { n - j };
                s <= cut
            })
            .collect();
        let h = 0.5 * cfg.dt;
        let half_u = xi.iter().map(|&x| Complex64::from_polar(1.0, -x * x * h)).collect();
        let half_w = omega.iter().map(|&w| Complex64::from_polar(1.0, -w * h)).collect();
        Ok(Self {
            cfg,
            tr: Transforms::new(n),
            schr: xi.iter().map(|&x| x * x).collect(),
            omega,
            source,
            coupling,
            keep,
            half_u,
            half_w,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Zeroes the modes removed by the 2/3 rule.
    pub fn dealias(&self, state: &mut ZakharovState) {
        for v in [&mut state.u, &mut state.n_plus, &mut state.n_minus] {
            for (c, &k) in v.iter_mut().zip(&self.keep) {
                if !k {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Nonlinear and coupling terms, with the dispersive symbols removed.
    fn rhs(&self, u: &[Complex64], np: &[Complex64], nm: &[Complex64]) -> [Vec<Complex64>; 3] {
        let sum: Vec<Complex64> = np.iter().zip(nm).map(|(a, b)| a + b).collect();
        let uphys = self.tr.to_physical(u);
        let nphys = self.tr.to_physical(&sum);
        let nu: Vec<Complex64> = uphys.iter().zip(&nphys).map(|(a, b)| a * b).collect();
        let dens: Vec<Complex64> = uphys.iter().map(|a| Complex64::new(a.norm_sqr(), 0.0)).collect();
        let mut nu = self.tr.to_spectral(&nu);
        let mut dens = self.tr.to_spectral(&dens);
        for j in 0..self.cfg.n {
            if !self.keep[j] {
                nu[j] = Complex64::new(0.0, 0.0);
                dens[j] = Complex64::new(0.0, 0.0);
            }
        }
        let i = Complex64::new(0.0, 1.0);
        let du = nu.iter().map(|c| -0.5 * i * c).collect();
        let mut dp = Vec::with_capacity(self.cfg.n);
        let mut dm = Vec::with_capacity(self.cfg.n);
        for j in 0..self.cfg.n {
            let forcing = -i * self.source[j] * dens[j];
            let couple = i * self.coupling[j] * sum[j];
            dp.push(forcing + couple);
            dm.push(-forcing - couple);
        }
        [du, dp, dm]
    }

    fn propagate(&self, state: &mut [Vec<Complex64>; 3], times: usize) {
        for _ in 0..times {
            for (j, c) in state[0].iter_mut().enumerate() {
                *c *= self.half_u[j];
            }
            for (j, c) in state[1].iter_mut().enumerate() {
                *c *= self.half_w[j];
            }
            for (j, c) in state[2].iter_mut().enumerate() {
                *c *= self.half_w[j].conj();
            }
        }
    }

    /// One step of size `dt`.
    pub fn step(&self, state: &ZakharovState) -> Result<ZakharovState, SolverError> {
        let h = self.cfg.dt;
        let w0 = [state.u.clone(), state.n_plus.clone(), state.n_minus.clone()];
        let axpy = |a: &[Vec<Complex64>; 3], s: f64, b: &[Vec<Complex64>; 3]| -> [Vec<Complex64>; 3] {
            std::array::from_fn(|f| a[f].iter().zip(&b[f]).map(|(x, y)| x + y * s).collect())
        };
        let eval = |w: &[Vec<Complex64>; 3]| self.rhs(&w[0], &w[1], &w[2]);

        let k1 = eval(&w0);
        let mut w2 = axpy(&w0, 0.5 * h, &k1);
        self.propagate(&mut w2, 1);
        let k2 = eval(&w2);
        let mut ew0 = w0.clone();
        self.propagate(&mut ew0, 1);
        let w3 = axpy(&ew0, 0.5 * h, &k2);
        let k3 = eval(&w3);
        let mut ek3 = k3.clone();
        self.propagate(&mut ek3, 1);
        let mut e2w0 = ew0.clone();
        self.propagate(&mut e2w0, 1);
        let w4 = axpy(&e2w0, h, &ek3);
        let k4 = eval(&w4);
        // w1 = E²w0 + h/6 (E²k1 + 2E(k2 + k3) + k4)
        let mut e2k1 = k1;
        self.propagate(&mut e2k1, 2);
        let mut ek23: [Vec<Complex64>; 3] =
            std::array::from_fn(|f| k2[f].iter().zip(&k3[f]).map(|(a, b)| a + b).collect());
        self.propagate(&mut ek23, 1);
        let out: [Vec<Complex64>; 3] = std::array::from_fn(|f| {
            (0..self.cfg.n)
                .map(|j| e2w0[f][j] + (e2k1[f][j] + 2.0 * ek23[f][j] + k4[f][j]) * (h / 6.0))
                .collect()
        });
        let [u, n_plus, n_minus] = out;
        let next = ZakharovState {
            t: state.t + h,
            box_length: state.box_length,
            u,
            n_plus,
            n_minus,
        };
        if !next.is_finite() {
            return Err(SolverError::BlowUp { t: next.t });
        }
        Ok(next)
    }

    /// Advances `steps` steps without recording.
    pub fn advance(&self, state: &ZakharovState, steps: usize) -> Result<ZakharovState, SolverError> {
        let mut s = state.clone();
        for _ in 0..steps {
            s = self.step(&s)?;
        }
        Ok(s)
    }

    /// `ξ²` for each FFT-ordered mode.
    pub fn schroedinger_symbol(&self) -> &[f64] {
        &self.schr
    }

    /// Wave symbol `ω` for each FFT-ordered mode.
    pub fn wave_symbol(&self) -> &[f64] {
        &self.omega
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub mass: f64,
    pub u_norm: f64,
    pub n_norm: f64,
    pub max_abs_u: f64,
    pub max_imag_n: f64,
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub samples: Vec<TraceSample>,
    pub norms: NormSpec,
    /// Time at which a non-finite value appeared, if any.
    pub blow_up: Option<f64>,
    pub final_state: ZakharovState,
}

impl EvolutionTrace {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.samples.first().map_or(0.0, |s| s.mass);
        self.samples
            .iter()
            .map(|s| (s.mass - m0).abs())
            .fold(0.0, f64::max)
    }
}

fn sample(state: &ZakharovState, norms: &NormSpec) -> TraceSample {
    TraceSample {
        t: state.t,
        mass: state.mass(),
        u_norm: state.u_norm(norms.k, norms.p),
        n_norm: state.n_norm(norms.l, norms.p),
        max_abs_u: state.max_abs_u(),
        max_imag_n: state.max_imag_n(),
    }
}

/// Evolves second-order data `(u0, n0, n1)` to `cfg.t_end`, sampling every
/// `cfg.sample_every` steps. Data is dealiased first. A blow-up ends the
/// trace early and is flagged rather than returned as an error.
pub fn evolve(
    u0: &GridFunction,
    n0: &GridFunction,
    n1: &GridFunction,
    cfg: &SolverConfig,
    norms: &NormSpec,
) -> Result<EvolutionTrace, SolverError> {
    let state = ZakharovState::from_data(u0, n0, n1, cfg.regularized)?;
    evolve_state(state, cfg, norms)
}

pub fn evolve_state(
    mut state: ZakharovState,
    cfg: &SolverConfig,
    norms: &NormSpec,
) -> Result<EvolutionTrace, SolverError> {
    if state.len() != cfg.n {
        return Err(SolverError::SizeMismatch {
            expected: cfg.n,
            got: state.len(),
        });
    }
    let solver = Solver::new(*cfg)?;
    solver.dealias(&mut state);
    let mut samples = vec![sample(&state, norms)];
    let mut blow_up = None;
    let steps = cfg.steps();
    for i in 1..=steps {
        match solver.step(&state) {
            Ok(s) => state = s,
            Err(SolverError::BlowUp { t }) => {
                blow_up = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
        if i % cfg.sample_every == 0 || i == steps {
            let s = sample(&state, norms);
            if !(s.u_norm.is_finite() && s.max_abs_u.is_finite()) {
                blow_up = Some(state.t);
                break;
            }
            samples.push(s);
        }
    }
    Ok(EvolutionTrace {
        samples,
        norms: *norms,
        blow_up,
        final_state: state,
    })
}

/// Largest relative self-difference and the observed order from runs at
/// `dt`, `dt/2`, `dt/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub coarse_difference: f64,
    pub fine_difference: f64,
    pub order: f64,
}

pub fn self_convergence(
    state: &ZakharovState,
    cfg: &SolverConfig,
) -> Result<ConvergenceReport, SolverError> {
    let run = |dt: f64| -> Result<Vec<Complex64>, SolverError> {
        let c = SolverConfig { dt, ..*cfg };
        let solver = Solver::new(c)?;
        let mut s = state.clone();
        solver.dealias(&mut s);
        Ok(solver.advance(&s, c.steps())?.u)
    };
    let dt = cfg.dt;
    let (a, b, c) = (run(dt)?, run(0.5 * dt)?, run(0.25 * dt)?);
    let diff = |x: &[Complex64], y: &[Complex64]| {
        x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
    };
    let (e1, e2) = (diff(&a, &b), diff(&b, &c));
    Ok(ConvergenceReport {
        dt,
        coarse_difference: e1,
        fine_difference: e2,
        order: (e1 / e2).log2(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEntry {
    pub seed: u64,
    pub delta: f64,
    /// `sup_t ‖u − u'‖_{Ĥ^{k,p}} / ‖u0 − u0'‖_{Ĥ^{k,p}}`; `None` when the
    /// data coincide.
    pub ratio: Option<f64>,
    pub exact_match: bool,
    pub blow_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub k: f64,
    pub l: f64,
    pub p: f64,
    pub amplitude: f64,
    pub entries: Vec<LipschitzEntry>,
    /// `max / min` of the defined ratios.
    pub spread: f64,
}

fn sup_difference(
    a: &[ZakharovState],
    b: &[ZakharovState],
    k: f64,
    p: f64,
) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d: Vec<Complex64> = x.u.iter().zip(&y.u).map(|(p, q)| p - q).collect();
            fourier_lebesgue_raw(&d, x.box_length, k, p)
        })
        .fold(0.0, f64::max)
}

fn states_along(
    solver: &Solver,
    mut state: ZakharovState,
) -> (Vec<ZakharovState>, Option<f64>) {
    solver.dealias(&mut state);
    let cfg = solver.config();
    let mut out = vec![state.clone()];
    for i in 1..=cfg.steps() {
        match solver.step(&state) {
            Ok(s) => state = s,
            Err(SolverError::BlowUp { t }) => return (out, Some(t)),
            Err(_) => return (out, Some(state.t)),
        }
        if i % cfg.sample_every == 0 {
            out.push(state.clone());
        }
    }
    (out, None)
}

/// Rough data `(u0, n0, n1)` for the Lipschitz probe: `u0 ∈ Ĥ^{k,p}`,
/// `n0 ∈ Ĥ^{l,p}`, `n1 ∈ Ĥ^{l−1,p}`, each with the slowest admissible decay.
pub fn rough_triple(
    k: f64,
    l: f64,
    p: f64,
    amplitude: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<[GridFunction; 3], SolverError> {
    use crate::grid_spaces::{rough_data, Profile, RoughDataSpec};
    let base = RoughDataSpec {
        k,
        p,
        n: cfg.n,
        box_length: cfg.box_length,
        seed,
        profile: Profile::RandomizedPhase,
        amplitude,
        real: false,
    };
    let u0 = rough_data(&base)?;
    let n0 = rough_data(&RoughDataSpec {
        k: l,
        seed: seed.wrapping_add(1),
        real: true,
        ..base
    })?;
    let n1 = rough_data(&RoughDataSpec {
        k: l - 1.0,
        seed: seed.wrapping_add(2),
        real: true,
        ..base
    })?;
    Ok([u0, n0, n1])
}

fn scale_to_unit(g: &GridFunction, s: f64, p: f64) -> Result<Vec<Complex64>, GridError> {
    let norm = crate::grid_spaces::hat_norm(g, s, p)?;
    Ok(g.modes().iter().map(|c| c / norm).collect())
}

fn perturbed(g: &GridFunction, dir: &[Complex64], delta: f64) -> Result<GridFunction, GridError> {
    let modes = g.modes().iter().zip(dir).map(|(a, b)| a + b * delta).collect();
    GridFunction::from_modes(g.n(), g.box_length(), modes)
}

/// Sensitivity of the flow map at rough data: each seed fixes base data and a
/// perturbation direction (unit norm in the data space, drawn from the same
/// family); each `δ` runs the perturbed data and compares.
pub fn lipschitz_probe(
    norms: &NormSpec,
    amplitude: f64,
    deltas: &[f64],
    seeds: &[u64],
    cfg: &SolverConfig,
) -> Result<LipschitzReport, SolverError> {
    let solver = Solver::new(*cfg)?;
    let (k, l, p) = (norms.k, norms.l, norms.p);
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<LipschitzEntry>, SolverError> {
            let [u0, n0, n1] = rough_triple(k, l, p, amplitude, seed, cfg)?;
            let dir_seed = seed ^ 0x005e_ed0f_d1ec;
            let [w, wn0, wn1] = rough_triple(k, l, p, 1.0, dir_seed, cfg)?;
            let (w, wn0, wn1) = (
                scale_to_unit(&w, k, p)?,
                scale_to_unit(&wn0, l, p)?,
                scale_to_unit(&wn1, l - 1.0, p)?,
            );
            let base = ZakharovState::from_data(&u0, &n0, &n1, cfg.regularized)?;
            let (traj, base_blow) = states_along(&solver, base.clone());
            let mut out = Vec::new();
            for &delta in deltas {
                if delta == 0.0 {
                    out.push(LipschitzEntry {
                        seed,
                        delta,
                        ratio: None,
                        exact_match: true,
                        blow_up: base_blow,
                    });
                    continue;
                }
                let pert = ZakharovState::from_data(
                    &perturbed(&u0, &w, delta)?,
                    &perturbed(&n0, &wn0, delta)?,
                    &perturbed(&n1, &wn1, delta)?,
                    cfg.regularized,
                )?;
                let (traj2, blow) = states_along(&solver, pert);
                let initial = sup_difference(&traj[..1], &traj2[..1], k, p);
                let sup = sup_difference(&traj, &traj2, k, p);
                out.push(LipschitzEntry {
                    seed,
                    delta,
                    ratio: (initial > 0.0).then(|| sup / initial),
                    exact_match: initial == 0.0,
                    blow_up: blow.or(base_blow),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let entries: Vec<LipschitzEntry> = per_seed.into_iter().flatten().collect();
    let defined: Vec<f64> = entries.iter().filter_map(|e| e.ratio).collect();
    let spread = if defined.is_empty() {
        1.0
    } else {
        defined.iter().copied().fold(f64::MIN, f64::max) / defined.iter().copied().fold(f64::MAX, f64::min)
    };
    Ok(LipschitzReport {
        k,
        l,
        p,
        amplitude,
        entries,
        spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanConfig {
    /// Solver settings for `μ = 1`; `dt` and the time budget shrink by `μ²`
    /// and the box by `μ` for dilated runs.
    pub solver: SolverConfig,
    /// Departure when `max |u|` first reaches this multiple of its initial
    /// value.
    pub growth_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifespanRun {
    pub mu: f64,
    pub departure: Option<f64>,
    pub blow_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanReport {
    pub runs: Vec<LifespanRun>,
    /// Least-squares slope of `log T(μ)` against `log μ`.
    pub slope: Option<f64>,
    pub reference_slope: f64,
    pub inconclusive: bool,
}

fn departure_time(
    state: ZakharovState,
    cfg: &SolverConfig,
    growth: f64,
) -> Result<(Option<f64>, Option<f64>), SolverError> {
    let solver = Solver::new(*cfg)?;
    let mut state = state;
    solver.dealias(&mut state);
    let m0 = state.max_abs_u();
    let target = growth * m0;
    let (mut t_prev, mut m_prev) = (state.t, m0);
    for _ in 0..cfg.steps() {
        state = match solver.step(&state) {
            Ok(s) => s,
            Err(SolverError::BlowUp { t }) => return Ok((None, Some(t))),
            Err(e) => return Err(e),
        };
        let m = state.max_abs_u();
        if m >= target {
            // linear interpolation between the bracketing steps
            let f = (target - m_prev) / (m - m_prev);
            return Ok((Some(t_prev + f * (state.t - t_prev)), None));
        }
        t_prev = state.t;
        m_prev = m;
    }
    Ok((None, None))
}

/// Focusing data `u0 = a e^{−x²/2}`, `n0 = −|u0|²`, `n1 = 0` on `[−L/2, L/2)`.
pub fn focusing_gaussian(n: usize, box_length: f64, amplitude: f64) -> Result<[GridFunction; 3], SolverError> {
    let u0 = GridFunction::sample_1d(n, box_length, |x| {
        Complex64::new(amplitude * (-0.5 * x * x).exp(), 0.0)
    })?;
    let n0 = GridFunction::sample_1d(n, box_length, |x| {
        Complex64::new(-amplitude * amplitude * (-x * x).exp(), 0.0)
    })?;
    let n1 = GridFunction::sample_1d(n, box_length, |_| Complex64::new(0.0, 0.0))?;
    Ok([u0, n0, n1])
}

/// Departure times for data dilated by each `μ`: `u0 ↦ μ^{3/2} u0(μx)`,
/// `n0 ↦ μ² n0(μx)`, `n1 ↦ μ⁴ n1(μx)`, each on the box `L/μ`.
pub fn lifespan_probe(
    u0: &GridFunction,
    n0: &GridFunction,
    n1: &GridFunction,
    mus: &[f64],
    cfg: &LifespanConfig,
) -> Result<LifespanReport, SolverError> {
    let runs = mus
        .par_iter()
        .map(|&mu| -> Result<LifespanRun, SolverError> {
            let (du, dn0, dn1) = (dilate(u0, mu, 1.5)?, dilate(n0, mu, 2.0)?, dilate(n1, mu, 4.0)?);
            let state = ZakharovState::from_data(&du, &dn0, &dn1, cfg.solver.regularized)?;
            let scale = mu * mu;
            let scfg = SolverConfig {
                box_length: cfg.solver.box_length / mu,
                dt: cfg.solver.dt / scale,
                t_end: cfg.solver.t_end / scale,
                ..cfg.solver
            };
            let (departure, blow_up) = departure_time(state, &scfg, cfg.growth_factor)?;
            Ok(LifespanRun {
                mu,
                departure,
                blow_up,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<(f64, f64)> = runs
        .iter()
        .filter_map(|r| r.departure.map(|t| (r.mu.ln(), t.ln())))
        .collect();
    let inconclusive = pts.len() < runs.len() || pts.len() < 2;
    // needs two distinct dilations
    let slope = (pts.len() >= 2)
        .then(|| {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            (sxx > 0.0).then(|| sxy / sxx)
        })
        .flatten();
    Ok(LifespanReport {
        runs,
        slope,
        reference_slope: -2.0,
        inconclusive,
    })
}
