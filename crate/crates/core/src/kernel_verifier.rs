//! Numerical certification of the weighted convolution kernels behind the
//! bilinear estimates for `n± u` and `(|u|²)_x`.
//!
//! Both estimates reduce, through a Hölder argument, to the finiteness of a
//! supremum over one frequency-modulation pair of a double integral over
//! another pair. The integrals are evaluated here with the modulation variables
//! tied together by the resonance relation
//! `z = ξ1'² − ξ2'² ∓ |ξ| = σ1 − σ2 − σ`.
//!
//! "Finite" is operationalised by truncating to `|ξ2|, |σ2| ≤ R` (and the outer
//! frequency to `|ξ| ≤ R/2`) and watching the truncated supremum as `R`
//! doubles: a bounded supremum saturates, an unbounded one keeps growing.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_spaces::GridFunction;
use crate::param_region::ParamPoint;
use crate::quadrature::{graded_breaks, integrate, integrate_real_line, QuadError, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("kernel family mismatch: expected {expected}, got {got}")]
    FamilyMismatch { expected: Family, got: Family },
    #[error("truncation radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parameter regime violated: {0}")]
    Regime(String),
}

/// `S`: the product `n± u` measured in the Schrödinger space.
/// `W`: the source `(|u|²)_x` measured in the wave space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    S,
    W,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::S => write!(f, "S"),
            Family::W => write!(f, "W"),
        }
    }
}

/// The sign in the wave dispersion `φ(ξ) = ±|ξ|`, i.e. `σ = τ ± |ξ|`.
/// The resonance function carries the opposite sign:
/// `z = ξ1'² − ξ2'² ∓ |ξ1' − ξ2'|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Exponents of one kernel, as floats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    pub sign: Sign,
    pub k: f64,
    pub l: f64,
    pub p: f64,
    pub b: f64,
    pub b1: f64,
    /// `c1` for the S family, `c` for the W family.
    pub c: f64,
}

impl KernelSpec {
    /// Builds the spec from a parameter point with `c1 = 1 − b1 − slack`
    /// (family S) or `c = 1 − b − slack` (family W).
    pub fn from_point(family: Family, sign: Sign, pt: &ParamPoint, slack: f64) -> Self {
        let f = |q: crate::param_region::Rational| *q.numer() as f64 / *q.denom() as f64;
        let c = match family {
            Family::S => 1.0 - f(pt.b1) - slack,
            Family::W => 1.0 - f(pt.b) - slack,
        };
        Self {
            family,
            sign,
            k: f(pt.k),
            l: f(pt.l),
            p: f(pt.p),
            b: f(pt.b),
            b1: f(pt.b1),
            c,
        }
    }

    pub fn with_family(self, family: Family) -> Self {
        Self { family, ..self }
    }

    pub fn with_sign(self, sign: Sign) -> Self {
        Self { sign, ..self }
    }

    /// Pointwise kernel `K(ζ1, ζ2)` of the trilinear form, `ζ = ζ1 − ζ2`,
    /// with `ζi = (ξi', τi)`.
    pub fn kernel(&self, xi1: f64, tau1: f64, xi2: f64, tau2: f64) -> f64 {
        let xi = xi1 - xi2;
        let tau = tau1 - tau2;
        let s = self.sign.value();
        let sigma1 = tau1 + xi1 * xi1;
        let sigma2 = tau2 + xi2 * xi2;
        let sigma = tau + s * xi.abs();
        match self.family {
            Family::S => {
                japanese(xi1, self.k)
                    * japanese(sigma, -self.b)
                    * japanese(sigma1, -self.c)
                    * japanese(sigma2, -self.b1)
                    * japanese(xi2, -self.k)
                    * japanese(xi, -self.l)
            }
            Family::W => {
                japanese(xi, self.l)
                    * xi.abs()
                    * japanese(sigma, -self.c)
                    * japanese(sigma1, -self.b1)
                    * japanese(sigma2, -self.b1)
                    * japanese(xi1, -self.k)
                    * japanese(xi2, -self.k)
            }
        }
    }
}

/// `⟨x⟩^a = (1 + x²)^{a/2}`.
#[inline]
pub fn japanese(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        (1.0 + x * x).powf(0.5 * a)
    }
}

/// Completing the square: returns `(ξ1, ξ2)` with
/// `ξ1'² − ξ2'² ∓ |ξ1' − ξ2'| = ξ1² − ξ2²` (`sign` as in [`Sign`]).
pub fn shift_vars(xi1p: f64, xi2p: f64, sign: Sign) -> (f64, f64) {
    let d = shift_amount(xi1p >= xi2p, sign);
    (xi1p + d, xi2p + d)
}

fn shift_amount(ordered: bool, sign: Sign) -> f64 {
    // z = ξ1'² − ξ2'² − s (ξ1' − ξ2') on the branch ξ1' ≥ ξ2'
    let s = if ordered { sign.value() } else { -sign.value() };
    -0.5 * s
}

/// A point on the resonance surface in shifted frequency variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePoint {
    pub xi1: f64,
    pub xi2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl ResonancePoint {
    pub fn from_primed(xi1p: f64, xi2p: f64, sigma1: f64, sigma2: f64, sign: Sign) -> Self {
        let (xi1, xi2) = shift_vars(xi1p, xi2p, sign);
        Self {
            xi1,
            xi2,
            sigma1,
            sigma2,
        }
    }

    pub fn xi(&self) -> f64 {
        self.xi1 - self.xi2
    }

    pub fn z(&self) -> f64 {
        self.xi1 * self.xi1 - self.xi2 * self.xi2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma1 - self.sigma2 - self.z()
    }
}

/// Resonance function in primed variables.
pub fn resonance(xi1p: f64, xi2p: f64, sign: Sign) -> f64 {
    xi1p * xi1p - xi2p * xi2p - sign.value() * (xi1p - xi2p).abs()
}

/// `J(Δ) = ∫_{−R}^{R} ⟨Δ − s⟩^{−α} ⟨s⟩^{−β} ds`.
pub fn modulation_convolution(
    delta: f64,
    alpha: f64,
    beta: f64,
    radius: f64,
    opts: &QuadOptions,
) -> Result<f64, QuadError> {
    let breaks = graded_breaks(&[0.0, delta], 1.0, -radius, radius);
    Ok(integrate(
        |s| japanese(delta - s, -alpha) * japanese(s, -beta),
        -radius,
        radius,
        &breaks,
        opts,
    )?
    .value)
}

/// [`modulation_convolution`] tabulated on `Δ = A sinh(u)` with cubic Hermite
/// interpolation in `u`; values outside the table are computed directly.
#[derive(Debug, Clone)]
pub struct ConvolutionTable {
    alpha: f64,
    beta: f64,
    radius: f64,
    scale: f64,
    du: f64,
    u_max: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    opts: QuadOptions,
}

impl ConvolutionTable {
    pub fn new(
        alpha: f64,
        beta: f64,
        radius: f64,
        delta_max: f64,
        du: f64,
    ) -> Result<Self, QuadError> {
        let scale = 0.5;
        let opts = QuadOptions {
            rel_tol: 1e-11,
            abs_tol: 1e-15,
            max_intervals: 4000,
        };
        let u_max = (delta_max / scale).asinh();
        let n = (2.0 * u_max / du).ceil() as usize + 1;
        let du = 2.0 * u_max / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -u_max + du * i as f64).collect();
        let values = nodes
            .iter()
            .map(|&u| modulation_convolution(scale * u.sinh(), alpha, beta, radius, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        // dJ/du by centred differences of the tabulated values
        let slopes = (0..n)
            .map(|i| {
                if i == 0 {
                    (values[1] - values[0]) / du
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / du
                } else {
                    (values[i + 1] - values[i - 1]) / (2.0 * du)
                }
            })
            .collect();
        Ok(Self {
            alpha,
            beta,
            radius,
            scale,
            du,
            u_max,
            values,
            slopes,
            opts,
        })
    }

    pub fn eval(&self, delta: f64) -> Result<f64, QuadError> {
        let u = (delta / self.scale).asinh();
        if u.abs() >= self.u_max {
            return modulation_convolution(delta, self.alpha, self.beta, self.radius, &self.opts);
        }
        let x = (u + self.u_max) / self.du;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let t = x - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.du, self.slopes[i + 1] * self.du);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1)
    }
}

/// Accuracy knobs for the inner integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerResolution {
    /// Relative tolerance of the adaptive frequency integral.
    pub rel_tol: f64,
    /// Node spacing of the modulation table in `asinh` coordinates.
    pub table_du: f64,
}

impl Default for InnerResolution {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            table_du: 0.01,
        }
    }
}

/// Precomputed modulation table for one `(spec, R)` pair.
pub struct InnerKernel {
    spec: KernelSpec,
    radius: f64,
    table: ConvolutionTable,
    opts: QuadOptions,
}

impl InnerKernel {
    /// `delta_max` should cover the largest `|σ_outer| + |z|` the caller will
    /// visit; larger arguments fall back to direct quadrature.
    pub fn new(
        spec: KernelSpec,
        radius: f64,
        delta_max: f64,
        res: InnerResolution,
    ) -> Result<Self, KernelError> {
        if !(radius > 0.0) {
            return Err(KernelError::BadRadius(radius));
        }
        let p = spec.p;
        let (alpha, beta) = match spec.family {
            Family::S => (spec.b * p, spec.b1 * p),
            Family::W => (spec.b1 * p, spec.b1 * p),
        };
        let table = ConvolutionTable::new(alpha, beta, radius, delta_max, res.table_du)?;
        Ok(Self {
            spec,
            radius,
            table,
            opts: QuadOptions {
                rel_tol: res.rel_tol,
                abs_tol: 1e-14,
                max_intervals: 4000,
            },
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// `⟨σ1⟩^{−c1 p} ⟨ξ1⟩^{kp} ∫∫_{|ξ2|,|σ2|≤R} ⟨σ⟩^{−bp} ⟨σ2⟩^{−b1 p}
    /// ⟨ξ⟩^{−lp} ⟨ξ2⟩^{−kp} dξ2 dσ2` at the outer point `(ξ1, σ1)`.
    pub fn inner_s(&self, xi1: f64, sigma1: f64) -> Result<f64, KernelError> {
        let sp = &self.spec;
        if sp.family != Family::S {
            return Err(KernelError::FamilyMismatch {
                expected: Family::S,
                got: sp.family,
            });
        }
        let p = sp.p;
        let r = self.radius;
        let mut err = None;
        let integrand = |xi2: f64| {
            let z = resonance(xi1, xi2, sp.sign);
            // σ2 integral with σ = σ1 − σ2 − z
            let j = match self.table.eval(sigma1 - z) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return 0.0;
                }
            };
            japanese(xi1 - xi2, -sp.l * p) * japanese(xi2, -sp.k * p) * j
        };
        let mut breaks = vec![0.0, xi1];
        breaks.extend(self.resonant_frequencies_s(xi1, sigma1));
        let res = integrate(integrand, -r, r, &breaks, &self.opts)?;
        if let Some(e) = err {
            return Err(e.into());
        }
        Ok(japanese(sigma1, -sp.c * p) * japanese(xi1, sp.k * p) * res.value)
    }

    /// Frequencies `ξ2'` with `z(ξ1', ξ2') = σ1`, where the modulation
    /// convolution peaks.
    fn resonant_frequencies_s(&self, xi1p: f64, sigma1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for ordered in [true, false] {
            let d = shift_amount(ordered, self.spec.sign);
            let xi1 = xi1p + d;
            let disc = xi1 * xi1 - sigma1;
            if disc < 0.0 {
                continue;
            }
            for root in [disc.sqrt(), -disc.sqrt()] {
                let xi2p = root - d;
                if (xi1p >= xi2p) == ordered {
                    out.push(xi2p);
                }
            }
        }
        out
    }

    /// `⟨σ⟩^{−cp} ⟨ξ⟩^{lp} |ξ|^p ∫∫_{|ξ2|,|σ2|≤R} ⟨ξ1⟩^{−kp} ⟨ξ2⟩^{−kp}
    /// ⟨σ1⟩^{−b1 p} ⟨σ2⟩^{−b1 p} dξ2 dσ2` at the outer point `(ξ, σ)`,
    /// with `ξ1 = ξ + ξ2` and `σ1 = σ + σ2 + z`.
    pub fn inner_w(&self, xi: f64, sigma: f64) -> Result<f64, KernelError> {
        let sp = &self.spec;
        if sp.family != Family::W {
            return Err(KernelError::FamilyMismatch {
                expected: Family::W,
                got: sp.family,
            });
        }
        if xi == 0.0 {
            return Ok(0.0);
        }
        let p = sp.p;
        let r = self.radius;
        let mut err = None;
        let integrand = |xi2: f64| {
            let xi1 = xi + xi2;
            let z = resonance(xi1, xi2, sp.sign);
            // ⟨σ1⟩ = ⟨σ2 − (−σ − z)⟩
            let j = match self.table.eval(-sigma - z) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return 0.0;
                }
            };
            japanese(xi1, -sp.k * p) * japanese(xi2, -sp.k * p) * j
        };
        // z = ξ² + 2 ξ ξ2 ∓ |ξ| is affine in ξ2; peak where σ + z = 0
        let root = (-sigma - xi * xi + sp.sign.value() * xi.abs()) / (2.0 * xi);
        let breaks = [0.0, -xi, root];
        let res = integrate(integrand, -r, r, &breaks, &self.opts)?;
        if let Some(e) = err {
            return Err(e.into());
        }
        Ok(japanese(sigma, -sp.c * p) * japanese(xi, sp.l * p) * xi.abs().powf(p) * res.value)
    }

    pub fn inner(&self, outer_xi: f64, outer_sigma: f64) -> Result<f64, KernelError> {
        match self.spec.family {
            Family::S => self.inner_s(outer_xi, outer_sigma),
            Family::W => self.inner_w(outer_xi, outer_sigma),
        }
    }
}

/// Largest `|σ_outer − z|` visited for outer frequencies up to `xi_max`,
/// outer modulations up to `sigma_max` and inner frequencies up to `radius`.
fn delta_bound(xi_max: f64, sigma_max: f64, radius: f64) -> f64 {
    let f = xi_max.max(radius);
    sigma_max + 2.0 * f * f + 2.0 * f + 1.0
}

/// One-shot inner integral for the S family.
pub fn cp_inner_s(
    spec: &KernelSpec,
    xi1: f64,
    sigma1: f64,
    radius: f64,
    res: InnerResolution,
) -> Result<f64, KernelError> {
    if spec.family != Family::S {
        return Err(KernelError::FamilyMismatch {
            expected: Family::S,
            got: spec.family,
        });
    }
    let dmax = delta_bound(xi1.abs(), sigma1.abs(), radius);
    InnerKernel::new(*spec, radius, dmax, res)?.inner_s(xi1, sigma1)
}

/// One-shot inner integral for the W family.
pub fn cp_inner_w(
    spec: &KernelSpec,
    xi: f64,
    sigma: f64,
    radius: f64,
    res: InnerResolution,
) -> Result<f64, KernelError> {
    if spec.family != Family::W {
        return Err(KernelError::FamilyMismatch {
            expected: Family::W,
            got: spec.family,
        });
    }
    let dmax = delta_bound(xi.abs(), sigma.abs(), radius);
    InnerKernel::new(*spec, radius, dmax, res)?.inner_w(xi, sigma)
}

/// Logarithmic grid of outer points `(ξ, σ)`.
///
/// Frequencies are `0` and `2^{j/steps_per_octave}` up to `xi_fraction · R`.
/// Modulations are `0`, `±4^j` up to `R²`, and the points on and next to the
/// parabolas `σ = ±ξ²` and `σ = ±(ξ² ± |ξ|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterGrid {
    pub steps_per_octave: u32,
    pub xi_fraction: f64,
    pub include_negative_xi: bool,
}

impl Default for OuterGrid {
    fn default() -> Self {
        Self {
            steps_per_octave: 2,
            xi_fraction: 0.5,
            include_negative_xi: false,
        }
    }
}

impl OuterGrid {
    pub fn points(&self, radius: f64) -> Vec<(f64, f64)> {
        let xi_max = self.xi_fraction * radius;
        let sigma_max = radius * radius;
        let mut xis = vec![0.0];
        let mut j = 0;
        loop {
            let x = 2f64.powf(j as f64 / self.steps_per_octave as f64);
            if x > xi_max * (1.0 + 1e-12) {
                break;
            }
            xis.push(x);
            if self.include_negative_xi {
                xis.push(-x);
            }
            j += 1;
        }
        let mut sigmas_common = vec![0.0];
        let mut s = 1.0;
        while s <= sigma_max {
            sigmas_common.push(s);
            sigmas_common.push(-s);
            s *= 4.0;
        }
        let mut out = Vec::new();
        for &x in &xis {
            let mut sig = sigmas_common.clone();
            let x2 = x * x;
            for c in [x2, x2 + x.abs(), x2 - x.abs(), x2 + 1.0, x2 - 1.0] {
                sig.push(c);
                sig.push(-c);
            }
            sig.retain(|v| v.abs() <= sigma_max);
            sig.sort_by(f64::total_cmp);
            sig.dedup();
            out.extend(sig.into_iter().map(|s| (x, s)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Saturating,
    Diverging,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Saturating => "saturating",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationThresholds {
    /// Saturating when the last doubling ratio is at most this.
    pub saturating_max: f64,
    /// Diverging when every doubling ratio is at least this.
    pub diverging_min: f64,
}

impl Default for SaturationThresholds {
    fn default() -> Self {
        Self {
            saturating_max: 1.1,
            diverging_min: 1.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationDiagnostic {
    pub spec: KernelSpec,
    pub radii: Vec<f64>,
    /// Truncated supremum per radius.
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Outer point attaining the supremum, per radius.
    pub argmax: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

pub fn classify(ratios: &[f64], t: &SaturationThresholds) -> Verdict {
    match ratios.last() {
        None => Verdict::Inconclusive,
        Some(&last) if last <= t.saturating_max => Verdict::Saturating,
        _ if ratios.iter().all(|&q| q >= t.diverging_min) => Verdict::Diverging,
        _ => Verdict::Inconclusive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub radius: f64,
    /// Number of radii in the ladder `R / 2^{levels−1}, …, R/2, R`.
    pub levels: u32,
    pub grid: OuterGrid,
    pub resolution: InnerResolution,
    pub thresholds: SaturationThresholds,
}

impl ScanConfig {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.levels)
            .rev()
            .map(|i| self.radius / 2f64.powi(i as i32))
            .collect()
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            radius: 200.0,
            levels: 4,
            grid: OuterGrid::default(),
            resolution: InnerResolution::default(),
            thresholds: SaturationThresholds::default(),
        }
    }
}

/// Truncated suprema on the radius ladder and the saturation verdict.
///
/// Outer points are independent work items evaluated in parallel; the
/// supremum is an order-independent reduction, so results do not depend on
/// the thread count. Values are made nondecreasing in `R` (the exact truncated
/// suprema are) to absorb interpolation noise below the quadrature tolerance.
pub fn cp_sup(spec: &KernelSpec, cfg: &ScanConfig) -> Result<SaturationDiagnostic, KernelError> {
    let radii = cfg.radii();
    let mut values = Vec::with_capacity(radii.len());
    let mut argmax = Vec::with_capacity(radii.len());
    for &radius in &radii {
        let pts = cfg.grid.points(radius);
        let xi_max = cfg.grid.xi_fraction * radius;
        let kernel = InnerKernel::new(
            *spec,
            radius,
            delta_bound(xi_max, radius * radius, radius),
            cfg.resolution,
        )?;
        let vals = pts
            .par_iter()
            .map(|&(x, s)| kernel.inner(x, s))
            .collect::<Result<Vec<_>, _>>()?;
        let (best, at) = vals
            .iter()
            .zip(&pts)
            .fold((0.0f64, (0.0, 0.0)), |(bv, bp), (&v, &pt)| {
                if v > bv {
                    (v, pt)
                } else {
                    (bv, bp)
                }
            });
        let prev = values.last().copied().unwrap_or(0.0);
        values.push(best.max(prev));
        argmax.push(at);
    }
    let ratios: Vec<f64> = values
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    let verdict = classify(&ratios, &cfg.thresholds);
    Ok(SaturationDiagnostic {
        spec: *spec,
        radii,
        values,
        ratios,
        argmax,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrilinearOutcome {
    pub lhs: f64,
    pub rhs: f64,
}

/// Frequency-side kernel matrix `K(ζ1, ζ2)` on a 2D lattice, plus the Hölder
/// constant `sup_{ζ1} (∫ |K(ζ1, ζ2)|^p dζ2)^{1/p}`.
pub struct KernelMatrix {
    n_xi: usize,
    n_tau: usize,
    cell: f64,
    values: Vec<f64>,
    sup_row_norm: f64,
    p: f64,
}

impl KernelMatrix {
    /// Samples `spec.kernel` at the modes of `grid` (2D, space then time).
    pub fn new(spec: &KernelSpec, grid: &GridFunction) -> Result<Self, KernelError> {
        if grid.dims() != 2 {
            return Err(KernelError::GridMismatch("kernel grid must be 2D".into()));
        }
        let n_xi = grid.n()[0];
        let n_tau = grid.n()[1];
        let xis = grid.frequencies(0);
        let taus = grid.frequencies(1);
        let cell = grid.frequency_cell();
        let m = n_xi * n_tau;
        let mut values = vec![0.0; m * m];
        values
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(z1, row)| {
                let (x1, t1) = (xis[z1 / n_tau], taus[z1 % n_tau]);
                for (z2, v) in row.iter_mut().enumerate() {
                    *v = spec.kernel(x1, t1, xis[z2 / n_tau], taus[z2 % n_tau]);
                }
            });
        let p = spec.p;
        let sup_row_norm = values
            .chunks(m)
            .map(|row| (row.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p))
            .fold(0.0, f64::max);
        Ok(Self {
            n_xi,
            n_tau,
            cell,
            values,
            sup_row_norm,
            p,
        })
    }

    pub fn sup_row_norm(&self) -> f64 {
        self.sup_row_norm
    }

    fn check(&self, g: &GridFunction) -> Result<(), KernelError> {
        if g.dims() != 2 || g.n() != [self.n_xi, self.n_tau] {
            return Err(KernelError::GridMismatch(format!(
                "expected a {}x{} grid, got {:?}",
                self.n_xi,
                self.n_tau,
                g.n()
            )));
        }
        Ok(())
    }

    /// Index of `ζ1 − ζ2` on the lattice, if it lies inside the grid.
    fn difference(&self, z1: usize, z2: usize) -> Option<usize> {
        let (i1, j1) = ((z1 / self.n_tau) as isize, (z1 % self.n_tau) as isize);
        let (i2, j2) = ((z2 / self.n_tau) as isize, (z2 % self.n_tau) as isize);
        // frequencies are centred: index c ↔ 0
        let ci = (self.n_xi / 2) as isize;
        let cj = (self.n_tau / 2) as isize;
        let i = i1 - i2 + ci;
        let j = j1 - j2 + cj;
        (0..self.n_xi as isize)
            .contains(&i)
            .then_some(())
            .and((0..self.n_tau as isize).contains(&j).then_some(()))
            .map(|_| (i as usize) * self.n_tau + j as usize)
    }

    /// Discrete trilinear form and its Hölder bound. `v`, `v1`, `v2` hold the
    /// Fourier-side functions in centred order.
    pub fn probe(
        &self,
        v: &[Complex64],
        v1: &[Complex64],
        v2: &[Complex64],
    ) -> TrilinearOutcome {
        let m = self.n_xi * self.n_tau;
        let h = self.cell;
        let p = self.p;
        let pd = p / (p - 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for z1 in 0..m {
            if v1[z1] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &self.values[z1 * m..(z1 + 1) * m];
            let mut inner = Complex64::new(0.0, 0.0);
            for z2 in 0..m {
                if let Some(z) = self.difference(z1, z2) {
                    inner += v[z] * v2[z2] * row[z2];
                }
            }
            acc += v1[z1] * inner;
        }
        let lhs = (acc * h * h).norm();
        let norm = |f: &[Complex64], q: f64| {
            (f.iter().map(|c| c.norm().powf(q)).sum::<f64>() * h).powf(1.0 / q)
        };
        let rhs = self.sup_row_norm * norm(v1, p) * norm(v, pd) * norm(v2, pd);
        TrilinearOutcome { lhs, rhs }
    }

    /// Alternating maximisation of `lhs` over nonnegative triples with unit
    /// norms; each step is the Hölder-dual update of one factor.
    pub fn near_extremizer(&self, iterations: usize) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let m = self.n_xi * self.n_tau;
        let p = self.p;
        let pd = p / (p - 1.0);
        // start concentrated on the row with the largest entry
        let (zmax, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        let (z1, z2) = (zmax / m, zmax % m);
        let mut v = vec![0.0; m];
        let mut v1 = vec![0.0; m];
        let mut v2 = vec![0.0; m];
        v1[z1] = 1.0;
        v2[z2] = 1.0;
        if let Some(z) = self.difference(z1, z2) {
            v[z] = 1.0;
        }
        let normalize = |f: &mut Vec<f64>, q: f64| {
            let n = (f.iter().map(|x| x.powf(q)).sum::<f64>() * self.cell).powf(1.0 / q);
            if n > 0.0 {
                f.iter_mut().for_each(|x| *x /= n);
            }
        };
        for _ in 0..iterations {
            // v1 ← F^{p'−1}, F(ζ1) = Σ v(ζ1−ζ2) v2(ζ2) K
            let mut f = vec![0.0; m];
            for a in 0..m {
                let row = &self.values[a * m..(a + 1) * m];
                f[a] = (0..m)
                    .filter_map(|b| self.difference(a, b).map(|z| v[z] * v2[b] * row[b]))
                    .sum();
            }
            v1 = f.iter().map(|x| x.powf(pd - 1.0)).collect();
            normalize(&mut v1, p);
            // v2 ← G^{p−1}, G(ζ2) = Σ v(ζ1−ζ2) v1(ζ1) K
            let mut g = vec![0.0; m];
            for a in 0..m {
                if v1[a] == 0.0 {
                    continue;
                }
                let row = &self.values[a * m..(a + 1) * m];
                for b in 0..m {
                    if let Some(z) = self.difference(a, b) {
                        g[b] += v[z] * v1[a] * row[b];
                    }
                }
            }
            v2 = g.iter().map(|x| x.powf(p - 1.0)).collect();
            normalize(&mut v2, pd);
            // v ← H^{p−1}, H(ζ) = Σ v1(ζ1) v2(ζ1−ζ) K
            let mut hh = vec![0.0; m];
            for a in 0..m {
                if v1[a] == 0.0 {
                    continue;
                }
                let row = &self.values[a * m..(a + 1) * m];
                for b in 0..m {
                    if let Some(z) = self.difference(a, b) {
                        hh[z] += v1[a] * v2[b] * row[b];
                    }
                }
            }
            v = hh.iter().map(|x| x.powf(p - 1.0)).collect();
            normalize(&mut v, pd);
        }
        let c = |f: Vec<f64>| f.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        (c(v), c(v1), c(v2))
    }
}

/// Evaluates both sides of the trilinear Hölder bound for three functions on a
/// common 2D lattice; `lhs <= rhs` holds for every input.
pub fn trilinear_probe(
    v: &GridFunction,
    v1: &GridFunction,
    v2: &GridFunction,
    spec: &KernelSpec,
) -> Result<TrilinearOutcome, KernelError> {
    let km = KernelMatrix::new(spec, v)?;
    km.check(v1)?;
    km.check(v2)?;
    Ok(km.probe(v.modes(), v1.modes(), v2.modes()))
}

/// Outcome of a batch of randomized trilinear trials on one lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearSuite {
    pub spec: KernelSpec,
    pub n: [usize; 2],
    pub box_length: [f64; 2],
    pub trials: usize,
    /// Trials with `lhs > rhs · (1 + tolerance)`.
    pub violations: usize,
    pub tolerance: f64,
    pub max_ratio: f64,
    /// `lhs / rhs` at the alternating-maximisation output.
    pub extremizer_ratio: f64,
}

/// Random Fourier-side function: one of iid complex Gaussian entries, a sparse
/// random support, a smooth bump at a random centre, or a power-law profile.
fn random_lattice_function(m: usize, n_tau: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    fn gauss(rng: &mut impl Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }
    match rng.random_range(0..4) {
        0 => (0..m).map(|_| gauss(rng)).collect(),
        1 => {
            let mut v = vec![Complex64::new(0.0, 0.0); m];
            for _ in 0..rng.random_range(1..=16) {
                v[rng.random_range(0..m)] = gauss(rng);
            }
            v
        }
        2 => {
            let n_xi = m / n_tau;
            let (ci, cj) = (rng.random_range(0..n_xi) as f64, rng.random_range(0..n_tau) as f64);
            let w = rng.random_range(0.5..8.0);
            (0..m)
                .map(|z| {
                    let (i, j) = ((z / n_tau) as f64, (z % n_tau) as f64);
                    let r2 = ((i - ci).powi(2) + (j - cj).powi(2)) / (w * w);
                    Complex64::from_polar((-r2).exp(), rng.random_range(0.0..std::f64::consts::TAU))
                })
                .collect()
        }
        _ => {
            let n_xi = m / n_tau;
            let gamma = rng.random_range(0.0..1.5);
            (0..m)
                .map(|z| {
                    let (i, j) = ((z / n_tau) as f64 - (n_xi / 2) as f64, (z % n_tau) as f64 - (n_tau / 2) as f64);
                    Complex64::new((1.0 + i * i + j * j).powf(-0.5 * gamma), 0.0)
                })
                .collect()
        }
    }
}

/// Randomized trials of the trilinear Hölder bound on an `n[0] × n[1]` lattice
/// over the box `box_length`, plus one near-extremizer run.
pub fn trilinear_trials(
    spec: &KernelSpec,
    n: [usize; 2],
    box_length: [f64; 2],
    trials: usize,
    seed: u64,
    extremizer_iterations: usize,
) -> Result<TrilinearSuite, KernelError> {
    let m = n[0] * n[1];
    let grid = GridFunction::from_modes(&n, &box_length, vec![Complex64::new(0.0, 0.0); m])
        .map_err(|e| KernelError::GridMismatch(e.to_string()))?;
    let km = KernelMatrix::new(spec, &grid)?;
    let tolerance = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for _ in 0..trials {
        let v = random_lattice_function(m, n[1], &mut rng);
        let v1 = random_lattice_function(m, n[1], &mut rng);
        let v2 = random_lattice_function(m, n[1], &mut rng);
        let out = km.probe(&v, &v1, &v2);
        if out.lhs > out.rhs * (1.0 + tolerance) {
            violations += 1;
        }
        if out.rhs > 0.0 {
            max_ratio = max_ratio.max(out.lhs / out.rhs);
        }
    }
    let (v, v1, v2) = km.near_extremizer(extremizer_iterations);
    let ext = km.probe(&v, &v1, &v2);
    Ok(TrilinearSuite {
        spec: *spec,
        n,
        box_length,
        trials,
        violations,
        tolerance,
        max_ratio,
        extremizer_ratio: ext.lhs / ext.rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    pub alpha: f64,
    pub beta: f64,
    pub a: Vec<f64>,
    /// `∫ ⟨σ − a⟩^{−α} ⟨σ⟩^{−β} dσ`.
    pub integral: Vec<f64>,
    /// `integral / ⟨a⟩^{−β}`.
    pub constant: Vec<f64>,
    /// `max / min` of `constant` over `1 ≤ |a| ≤ 10³`.
    pub spread: f64,
    pub stable: bool,
    /// Location of the maximum of `a ↦ ∫ |y|^{−1/2} ⟨a + y⟩^{−β} dy` on the
    /// scan grid; `None` when `β ≤ 1/2` (the integral diverges).
    pub sup_location: Option<f64>,
}

/// `∫_ℝ ⟨σ − a⟩^{−α} ⟨σ⟩^{−β} dσ`.
pub fn two_bracket_integral(alpha: f64, beta: f64, a: f64) -> Result<f64, QuadError> {
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-15,
        max_intervals: 4000,
    };
    let f = |s: f64| japanese(s - a, -alpha) * japanese(s, -beta);
    // split at both peaks
    let (lo, hi) = if a < 0.0 { (a, 0.0) } else { (0.0, a) };
    let mid = integrate(f, lo, hi, &[], &opts)?.value;
    let right = crate::quadrature::integrate_to_infinity(f, hi, &opts)?.value;
    let left = crate::quadrature::integrate_to_infinity(|s| f(2.0 * lo - s), lo, &opts)?.value;
    Ok(left + mid + right)
}

/// `∫_ℝ |y|^{−1/2} ⟨a + y⟩^{−β} dy`, substituting `y = ±s²`.
pub fn half_singular_integral(beta: f64, a: f64) -> Result<f64, QuadError> {
    let opts = QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 1e-15,
        max_intervals: 4000,
    };
    let f = |s: f64| 2.0 * (japanese(a + s * s, -beta) + japanese(a - s * s, -beta));
    let knee = a.abs().sqrt();
    let near = integrate(f, 0.0, knee, &[], &opts)?.value;
    let far = crate::quadrature::integrate_to_infinity(f, knee, &opts)?.value;
    Ok(near + far)
}

/// Checks `∫ ⟨σ − a⟩^{−α} ⟨σ⟩^{−β} dσ ≤ C ⟨a⟩^{−β}` with a stable constant,
/// and locates the supremum of the half-singular `y`-integral.
pub fn convolution_decay_check(
    alpha: f64,
    beta: f64,
    a_grid: &[f64],
) -> Result<ConvolutionCheck, KernelError> {
    if !(alpha > 1.0) || !(beta < 1.0) || !(alpha + beta > 1.0) {
        return Err(KernelError::Regime(format!(
            "need alpha > 1, beta < 1, alpha + beta > 1; got alpha = {alpha}, beta = {beta}"
        )));
    }
    let integral = a_grid
        .iter()
        .map(|&a| two_bracket_integral(alpha, beta, a))
        .collect::<Result<Vec<_>, _>>()?;
    let constant: Vec<f64> = a_grid
        .iter()
        .zip(&integral)
        .map(|(&a, &i)| i / japanese(a, -beta))
        .collect();
    let window: Vec<f64> = a_grid
        .iter()
        .zip(&constant)
        .filter(|(a, _)| (1.0..=1e3).contains(&a.abs()))
        .map(|(_, &c)| c)
        .collect();
    let spread = if window.is_empty() {
        1.0
    } else {
        let max = window.iter().copied().fold(f64::MIN, f64::max);
        let min = window.iter().copied().fold(f64::MAX, f64::min);
        max / min
    };
    let sup_location = if beta > 0.5 {
        let mut best = (f64::MIN, 0.0);
        for &a in a_grid {
            let v = half_singular_integral(beta, a)?;
            if v > best.0 {
                best = (v, a);
            }
        }
        Some(best.1)
    } else {
        None
    };
    Ok(ConvolutionCheck {
        alpha,
        beta,
        a: a_grid.to_vec(),
        integral,
        constant,
        spread,
        stable: spread < 4.0,
        sup_location,
    })
}

/// `∫_ℝ ⟨σ⟩^{−γ} dσ` for `γ > 1`, by quadrature.
pub fn bracket_integral(gamma: f64) -> Result<f64, QuadError> {
    Ok(integrate_real_line(|s| japanese(s, -gamma), 0.0, &QuadOptions::default())?.value)
}
