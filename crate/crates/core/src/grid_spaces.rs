//! Periodic lattices standing in for the line, and the Fourier-Lebesgue norms
//! measured on them.
//!
//! A [`GridFunction`] stores samples of the unitary continuum Fourier transform
//! `û(ξ) = (2π)^{−1/2} ∫ e^{−ixξ} u(x) dx` at the frequencies
//! `ξ_j = (j − N/2) · 2π/L`, `j = 0..N`, in that (centred) order. Physical
//! samples live at `x_m = −L/2 + m L/N`. In 2D the first axis is space and the
//! second is time, stored row-major (`index = i_x · N_t + i_t`); the time axis
//! uses the same conventions with `τ` in place of `ξ`.
//!
//! # Binary format
//!
//! All integers and floats little-endian:
//!
//! | field        | type                      |
//! |--------------|---------------------------|
//! | magic        | `b"ZGF1"`                 |
//! | dims         | `u8` (1 or 2)             |
//! | n per axis   | `u32` × dims              |
//! | box length   | `f64` × dims              |
//! | seed         | `u64`                     |
//! | provenance   | `u32` byte length + UTF-8 |
//! | modes        | `(re, im)` `f64` pairs in storage order |

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"ZGF1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("mode count {0} per axis is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("box length must be positive and finite, got {0}")]
    BadBoxLength(f64),
    #[error("expected a {expected}D grid, got {got}D")]
    Dimension { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dilation by mu = {mu} aliases: fraction {fraction:.3e} of the energy lands beyond Nyquist")]
    Aliasing { mu: f64, fraction: f64 },
    #[error("dilation by mu = {mu} truncates: fraction {fraction:.3e} of the energy leaves the box")]
    Truncation { mu: f64, fraction: f64 },
    #[error("parameter range violated: need $b'+1 \\ge b \\ge 0 \\ge b'$ and b' > -1/r'; {0}")]
    EstimateRange(String),
    #[error("malformed grid record: {0}")]
    Decode(String),
}

#[derive(Clone, PartialEq)]
pub struct GridFunction {
    n: Vec<usize>,
    box_length: Vec<f64>,
    modes: Vec<Complex64>,
    seed: u64,
    provenance: String,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .field("seed", &self.seed)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

fn check_axis(n: usize, len: f64) -> Result<(), GridError> {
    if n < 2 || !n.is_power_of_two() {
        return Err(GridError::NotPowerOfTwo(n));
    }
    if !(len > 0.0 && len.is_finite()) {
        return Err(GridError::BadBoxLength(len));
    }
    Ok(())
}

/// `(−1)^k` for signed `k`.
fn parity(k: isize) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place transform of a contiguous 1D line between samples and centred
/// modes.
fn transform_line(
    planner: &mut FftPlanner<f64>,
    line: &mut [Complex64],
    len: f64,
    forward: bool,
) {
    let n = line.len();
    let half = (n / 2) as isize;
    let dx = len / n as f64;
    let dxi = 2.0 * PI / len;
    if forward {
        for (m, v) in line.iter_mut().enumerate() {
            *v *= parity(m as isize);
        }
        planner.plan_fft_forward(n).process(line);
        let c = dx / (2.0 * PI).sqrt();
        for (j, v) in line.iter_mut().enumerate() {
            *v *= c * parity(j as isize - half);
        }
    } else {
        for (j, v) in line.iter_mut().enumerate() {
            *v *= parity(j as isize - half);
        }
        planner.plan_fft_inverse(n).process(line);
        let c = dxi / (2.0 * PI).sqrt();
        for (m, v) in line.iter_mut().enumerate() {
            *v *= c * parity(m as isize);
        }
    }
}

fn transform(n: &[usize], len: &[f64], data: &mut [Complex64], forward: bool) {
    let mut planner = FftPlanner::new();
    match n.len() {
        1 => transform_line(&mut planner, data, len[0], forward),
        _ => {
            let (nx, nt) = (n[0], n[1]);
            for row in data.chunks_mut(nt) {
                transform_line(&mut planner, row, len[1], forward);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); nx];
            for it in 0..nt {
                for ix in 0..nx {
                    col[ix] = data[ix * nt + it];
                }
                transform_line(&mut planner, &mut col, len[0], forward);
                for ix in 0..nx {
                    data[ix * nt + it] = col[ix];
                }
            }
        }
    }
}

impl GridFunction {
    /// `n` and `box_length` have one entry per axis (1 or 2 axes).
    pub fn from_modes(
        n: &[usize],
        box_length: &[f64],
        modes: Vec<Complex64>,
    ) -> Result<Self, GridError> {
        if n.is_empty() || n.len() > 2 || n.len() != box_length.len() {
            return Err(GridError::Domain(format!(
                "need one or two axes with matching box lengths, got {n:?} and {box_length:?}"
            )));
        }
        for (&k, &l) in n.iter().zip(box_length) {
            check_axis(k, l)?;
        }
        let expected: usize = n.iter().product();
        if modes.len() != expected {
            return Err(GridError::LengthMismatch {
                expected,
                got: modes.len(),
            });
        }
        Ok(Self {
            n: n.to_vec(),
            box_length: box_length.to_vec(),
            modes,
            seed: 0,
            provenance: String::new(),
        })
    }

    pub fn from_samples(
        n: &[usize],
        box_length: &[f64],
        mut samples: Vec<Complex64>,
    ) -> Result<Self, GridError> {
        // validate before transforming
        let mut g = Self::from_modes(n, box_length, vec![Complex64::new(0.0, 0.0); samples.len()])?;
        transform(n, box_length, &mut samples, true);
        g.modes = samples;
        Ok(g)
    }

    /// 1D grid from a function sampled at `x_m = −L/2 + m L/N`.
    pub fn sample_1d(
        n: usize,
        box_length: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self, GridError> {
        check_axis(n, box_length)?;
        let dx = box_length / n as f64;
        let samples = (0..n).map(|m| f(-0.5 * box_length + m as f64 * dx)).collect();
        Self::from_samples(&[n], &[box_length], samples)
    }

    pub fn with_metadata(mut self, seed: u64, provenance: impl Into<String>) -> Self {
        self.seed = seed;
        self.provenance = provenance.into();
        self
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn box_length(&self) -> &[f64] {
        &self.box_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Modes in centred order.
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.box_length[axis] / self.n[axis] as f64
    }

    pub fn frequency_spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.box_length[axis]
    }

    /// Product of the frequency spacings: the measure of one lattice cell.
    pub fn frequency_cell(&self) -> f64 {
        (0..self.dims()).map(|a| self.frequency_spacing(a)).product()
    }

    /// Centred frequencies along `axis`.
    pub fn frequencies(&self, axis: usize) -> Vec<f64> {
        let n = self.n[axis];
        let d = self.frequency_spacing(axis);
        (0..n).map(|j| (j as f64 - (n / 2) as f64) * d).collect()
    }

    /// Physical sample points along `axis`.
    pub fn positions(&self, axis: usize) -> Vec<f64> {
        let n = self.n[axis];
        let h = self.spacing(axis);
        (0..n)
            .map(|m| -0.5 * self.box_length[axis] + m as f64 * h)
            .collect()
    }

    pub fn samples(&self) -> Vec<Complex64> {
        let mut data = self.modes.clone();
        transform(&self.n, &self.box_length, &mut data, false);
        data
    }

    fn require_dims(&self, d: usize) -> Result<(), GridError> {
        if self.dims() != d {
            return Err(GridError::Dimension {
                expected: d,
                got: self.dims(),
            });
        }
        Ok(())
    }

    /// `(Σ |ξ|^{2} |û|²)`-style energy split at `|ξ| > cut` (1D).
    fn energy_fraction_above(&self, cut: f64) -> f64 {
        let xi = self.frequencies(0);
        let total: f64 = self.modes.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = xi
            .iter()
            .zip(&self.modes)
            .filter(|(x, _)| x.abs() > cut)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        high / total
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 16 * self.modes.len());
        out.extend_from_slice(MAGIC);
        out.push(self.dims() as u8);
        for &k in &self.n {
            out.extend_from_slice(&(k as u32).to_le_bytes());
        }
        for &l in &self.box_length {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.provenance.len() as u32).to_le_bytes());
        out.extend_from_slice(self.provenance.as_bytes());
        for c in &self.modes {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GridError> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4)? != MAGIC {
            return Err(GridError::Decode("bad magic".into()));
        }
        let dims = rd.take(1)?[0] as usize;
        if dims != 1 && dims != 2 {
            return Err(GridError::Decode(format!("dims = {dims}")));
        }
        let n: Vec<usize> = (0..dims)
            .map(|_| rd.u32().map(|v| v as usize))
            .collect::<Result<_, _>>()?;
        let len: Vec<f64> = (0..dims).map(|_| rd.f64()).collect::<Result<_, _>>()?;
        let seed = rd.u64()?;
        let plen = rd.u32()? as usize;
        let provenance = std::str::from_utf8(rd.take(plen)?)
            .map_err(|e| GridError::Decode(e.to_string()))?
            .to_owned();
        for (&k, &l) in n.iter().zip(&len) {
            check_axis(k, l)?;
        }
        let count: usize = n.iter().product();
        let modes = (0..count)
            .map(|_| Ok(Complex64::new(rd.f64()?, rd.f64()?)))
            .collect::<Result<Vec<_>, GridError>>()?;
        if rd.pos != bytes.len() {
            return Err(GridError::Decode("trailing bytes".into()));
        }
        Ok(Self::from_modes(&n, &len, modes)?.with_metadata(seed, provenance))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8], GridError> {
        let end = self
            .pos
            .checked_add(k)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| GridError::Decode("truncated record".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, GridError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, GridError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, GridError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// `⟨x⟩ = (1 + x²)^{1/2}`.
fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn dual(r: f64) -> Result<f64, GridError> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(GridError::Domain(format!("exponent r must lie in (1, inf), got {r}")));
    }
    Ok(r / (r - 1.0))
}

fn weighted_lq(weights_and_modes: impl Iterator<Item = (f64, Complex64)>, q: f64, cell: f64) -> f64 {
    let sum: f64 = weights_and_modes
        .map(|(w, c)| (w * c.norm()).powf(q))
        .sum();
    (sum * cell).powf(1.0 / q)
}

/// `‖⟨ξ⟩^s û‖_{L^{r'}}` with the lattice measure `2π/L`.
pub fn hat_norm(u: &GridFunction, s: f64, r: f64) -> Result<f64, GridError> {
    u.require_dims(1)?;
    let q = dual(r)?;
    let xi = u.frequencies(0);
    Ok(weighted_lq(
        xi.iter().zip(&u.modes).map(|(&x, &c)| (bracket(x).powf(s), c)),
        q,
        u.frequency_cell(),
    ))
}

/// Homogeneous variant `‖|ξ|^s û‖_{L^{r'}}`, zero mode dropped.
pub fn hat_norm_dot(u: &GridFunction, s: f64, r: f64) -> Result<f64, GridError> {
    u.require_dims(1)?;
    let q = dual(r)?;
    let xi = u.frequencies(0);
    Ok(weighted_lq(
        xi.iter()
            .zip(&u.modes)
            .filter(|(&x, _)| x != 0.0)
            .map(|(&x, &c)| (x.abs().powf(s), c)),
        q,
        u.frequency_cell(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    Schroedinger,
    WavePlus,
    WaveMinus,
    None,
}

impl Dispersion {
    /// `φ(ξ)`; free solutions `e^{−itφ(ξ)} û0(ξ)` concentrate on `τ = −φ(ξ)`.
    pub fn phi(self, xi: f64) -> f64 {
        match self {
            Dispersion::Schroedinger => xi * xi,
            Dispersion::WavePlus => xi.abs(),
            Dispersion::WaveMinus => -xi.abs(),
            Dispersion::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub s: f64,
    pub b: f64,
    pub dispersion: Dispersion,
    /// Modulation exponent on the forcing side of the inhomogeneous estimate.
    pub b_prime: f64,
}

/// `‖⟨ξ⟩^s ⟨τ + φ(ξ)⟩^b f̂‖_{L^{r'}_{ξτ}}`.
pub fn xsb_norm(f: &GridFunction, w: &WeightSpec, r: f64) -> Result<f64, GridError> {
    xsb_norm_with_b(f, w.s, w.b, w.dispersion, r)
}

fn xsb_norm_with_b(
    f: &GridFunction,
    s: f64,
    b: f64,
    disp: Dispersion,
    r: f64,
) -> Result<f64, GridError> {
    f.require_dims(2)?;
    let q = dual(r)?;
    let xi = f.frequencies(0);
    let tau = f.frequencies(1);
    let nt = f.n[1];
    let it = f.modes.iter().enumerate().map(|(idx, &c)| {
        let x = xi[idx / nt];
        let t = tau[idx % nt];
        (bracket(x).powf(s) * bracket(t + disp.phi(x)).powf(b), c)
    });
    Ok(weighted_lq(it, q, f.frequency_cell()))
}

/// Smooth even bump: `1` on `[−1, 1]`, `0` outside `(−1.9, 1.9)`, with an
/// `e^{−1/x}` transition.
pub fn cutoff(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 1.9 {
        return 0.0;
    }
    let g = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let up = g(1.9 - a);
    up / (up + g(a - 1.0))
}

/// `ψ_δ(t) = ψ(t/δ)`.
pub fn cutoff_scaled(t: f64, delta: f64) -> f64 {
    cutoff(t / delta)
}

/// `ψ_δ(t) e^{−itφ(−i∂x)} u0` sampled on a space-time lattice with time box
/// `[−T/2, T/2)`.
pub fn free_evolution(
    u0: &GridFunction,
    disp: Dispersion,
    nt: usize,
    time_length: f64,
    delta: f64,
) -> Result<GridFunction, GridError> {
    u0.require_dims(1)?;
    check_axis(nt, time_length)?;
    let nx = u0.n[0];
    let xi = u0.frequencies(0);
    let dt = time_length / nt as f64;
    let ts: Vec<f64> = (0..nt).map(|m| -0.5 * time_length + m as f64 * dt).collect();
    // mixed (ξ, t) representation, then transform the time axis only
    let mut planner = FftPlanner::new();
    let mut modes = vec![Complex64::new(0.0, 0.0); nx * nt];
    for ix in 0..nx {
        let row = &mut modes[ix * nt..(ix + 1) * nt];
        let ph = disp.phi(xi[ix]);
        for (m, v) in row.iter_mut().enumerate() {
            *v = u0.modes[ix] * Complex64::from_polar(cutoff_scaled(ts[m], delta), -ts[m] * ph);
        }
        transform_line(&mut planner, row, time_length, true);
    }
    GridFunction::from_modes(&[nx, nt], &[u0.box_length[0], time_length], modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    DeterministicDecay,
    RandomizedPhase,
}

/// Data whose modes decay like `⟨ξ⟩^{−k−1/p'−1/100}`: just inside `Ĥ^{k,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughDataSpec {
    pub k: f64,
    pub p: f64,
    pub n: usize,
    pub box_length: f64,
    pub seed: u64,
    pub profile: Profile,
    pub amplitude: f64,
    /// Impose `û(−ξ) = conj û(ξ)` so the data is real.
    pub real: bool,
}

pub const ROUGH_DATA_GAP: f64 = 0.01;

impl RoughDataSpec {
    pub fn new(k: f64, p: f64, n: usize, seed: u64) -> Self {
        Self {
            k,
            p,
            n,
            box_length: 2.0 * PI,
            seed,
            profile: Profile::RandomizedPhase,
            amplitude: 1.0,
            real: false,
        }
    }

    pub fn decay_exponent(&self) -> f64 {
        self.k + 1.0 - 1.0 / self.p + ROUGH_DATA_GAP
    }
}

pub fn rough_data(spec: &RoughDataSpec) -> Result<GridFunction, GridError> {
    check_axis(spec.n, spec.box_length)?;
    if !(spec.p > 1.0) {
        return Err(GridError::Domain(format!("p must exceed 1, got {}", spec.p)));
    }
    let n = spec.n;
    let half = n / 2;
    let dxi = 2.0 * PI / spec.box_length;
    let e = spec.decay_exponent();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut modes = vec![Complex64::new(0.0, 0.0); n];
    // j = 0 is the unpaired Nyquist mode and stays zero
    for j in 1..n {
        let xi = (j as f64 - half as f64) * dxi;
        let mag = spec.amplitude * bracket(xi).powf(-e);
        let theta = match spec.profile {
            Profile::DeterministicDecay => 0.0,
            Profile::RandomizedPhase => rng.random_range(0.0..2.0 * PI),
        };
        modes[j] = Complex64::from_polar(mag, theta);
    }
    if spec.real {
        modes[half] = Complex64::new(modes[half].norm(), 0.0);
        for j in half + 1..n {
            modes[n - j] = modes[j].conj();
        }
    }
    let provenance = format!(
        "rough_data k={} p={} profile={:?} amplitude={}",
        spec.k, spec.p, spec.profile, spec.amplitude
    );
    Ok(GridFunction::from_modes(&[n], &[spec.box_length], modes)?.with_metadata(spec.seed, provenance))
}

fn check_mu(mu: f64) -> Result<(), GridError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(GridError::Domain(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

/// `μ^a u(μx)` on the box of length `L/μ`: the same samples on a rescaled
/// lattice, so each mode moves from `ξ` to `μξ` and picks up `μ^{a−1}`.
pub fn dilate(u: &GridFunction, mu: f64, amplitude_exp: f64) -> Result<GridFunction, GridError> {
    u.require_dims(1)?;
    check_mu(mu)?;
    let c = mu.powf(amplitude_exp - 1.0);
    let modes = u.modes.iter().map(|&m| m * c).collect();
    Ok(GridFunction::from_modes(&u.n, &[u.box_length[0] / mu], modes)?
        .with_metadata(u.seed, format!("{} | dilate mu={mu} a={amplitude_exp}", u.provenance)))
}

/// `μ^a u(μx)` resampled on the original box through the trigonometric
/// interpolant, treating `u` as zero outside its box. Fails when more than
/// `tol` of the energy would alias past Nyquist (`μ > 1`) or leave the box
/// (`μ < 1`).
pub fn dilate_in_box(
    u: &GridFunction,
    mu: f64,
    amplitude_exp: f64,
    tol: f64,
) -> Result<GridFunction, GridError> {
    u.require_dims(1)?;
    check_mu(mu)?;
    let n = u.n[0];
    let len = u.box_length[0];
    let nyquist = PI * n as f64 / len;
    if mu > 1.0 {
        let fraction = u.energy_fraction_above(nyquist / mu);
        if fraction > tol {
            return Err(GridError::Aliasing { mu, fraction });
        }
    }
    let samples = u.samples();
    if mu < 1.0 {
        let xs = u.positions(0);
        let total: f64 = samples.iter().map(|c| c.norm_sqr()).sum();
        let outside: f64 = xs
            .iter()
            .zip(&samples)
            .filter(|(x, _)| x.abs() > 0.5 * mu * len)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let fraction = if total > 0.0 { outside / total } else { 0.0 };
        if fraction > tol {
            return Err(GridError::Truncation { mu, fraction });
        }
    }
    let xi = u.frequencies(0);
    let dxi = u.frequency_spacing(0);
    let scale = mu.powf(amplitude_exp) * dxi / (2.0 * PI).sqrt();
    let xs = u.positions(0);
    let out: Vec<Complex64> = xs
        .iter()
        .map(|&x| {
            let y = mu * x;
            if y < -0.5 * len || y >= 0.5 * len {
                return Complex64::new(0.0, 0.0);
            }
            // Σ_j û_j e^{iξ_j y} with the exponential advanced by recurrence
            let step = Complex64::from_polar(1.0, dxi * y);
            let mut e = Complex64::from_polar(1.0, xi[0] * y);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &m) in u.modes.iter().enumerate() {
                if j % 64 == 0 {
                    e = Complex64::from_polar(1.0, xi[j] * y);
                }
                acc += m * e;
                e *= step;
            }
            acc * scale
        })
        .collect();
    Ok(GridFunction::from_samples(&u.n, &u.box_length, out)?.with_metadata(
        u.seed,
        format!("{} | dilate_in_box mu={mu} a={amplitude_exp}", u.provenance),
    ))
}

/// Both sides of the inhomogeneous estimate
/// `‖ψ_δ v‖_{X^{s,b}_r} ≤ C δ^{1+b'−b} ‖F‖_{X^{s,b'}_r}` for the solution of
/// `i v_t − φ(−i∂x) v = F`, `v(0) = 0`.
///
/// `F` is a trigonometric polynomial in time on its lattice, so the Duhamel
/// integral `v̂(ξ,t) = −i ∫_0^t e^{−i(t−s)φ(ξ)} F̂(ξ,s) ds` is evaluated exactly
/// mode by mode.
pub fn inhom_estimate_probe(
    f: &GridFunction,
    w: &WeightSpec,
    delta: f64,
    r: f64,
) -> Result<(f64, f64), GridError> {
    f.require_dims(2)?;
    let q = dual(r)?;
    let (b, bp) = (w.b, w.b_prime);
    if !(bp + 1.0 >= b && b >= 0.0 && 0.0 >= bp && bp > -1.0 / q) {
        return Err(GridError::EstimateRange(format!("b = {b}, b' = {bp}, r = {r}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(GridError::Domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    let v = duhamel(f, w.dispersion)?;
    let cut = apply_time_cutoff(&v, delta)?;
    let lhs = xsb_norm_with_b(&cut, w.s, b, w.dispersion, r)?;
    let rhs = delta.powf(1.0 + bp - b) * xsb_norm_with_b(f, w.s, bp, w.dispersion, r)?;
    Ok((lhs, rhs))
}

/// Duhamel solution from `t = 0` as a space-time grid function. The result is
/// not time-periodic; callers localise it with a cutoff before measuring.
fn duhamel(f: &GridFunction, disp: Dispersion) -> Result<GridFunction, GridError> {
    let (nx, nt) = (f.n[0], f.n[1]);
    let xi = f.frequencies(0);
    let tau = f.frequencies(1);
    let tlen = f.box_length[1];
    let ts: Vec<f64> = (0..nt).map(|m| -0.5 * tlen + m as f64 * tlen / nt as f64).collect();
    // F̂(ξ, t) = (Δτ/√2π) Σ_τ F̂(ξ,τ) e^{iτt}
    let c = f.frequency_spacing(1) / (2.0 * PI).sqrt();
    let mut mixed = vec![Complex64::new(0.0, 0.0); nx * nt];
    for ix in 0..nx {
        let ph = disp.phi(xi[ix]);
        let row = &f.modes[ix * nt..(ix + 1) * nt];
        for (m, &t) in ts.iter().enumerate() {
            // −i e^{−itφ} ∫_0^t e^{is(φ+τ)} ds
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &amp) in row.iter().enumerate() {
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = tau[j] + ph;
                let integral = if w == 0.0 {
                    Complex64::new(t, 0.0)
                } else {
                    (Complex64::from_polar(1.0, w * t) - 1.0) / Complex64::new(0.0, w)
                };
                acc += amp * integral;
            }
            mixed[ix * nt + m] = Complex64::new(0.0, -1.0) * Complex64::from_polar(c, -t * ph) * acc;
        }
    }
    // back to (x, t) samples: inverse along space only
    let mut planner = FftPlanner::new();
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    for it in 0..nt {
        for ix in 0..nx {
            col[ix] = mixed[ix * nt + it];
        }
        transform_line(&mut planner, &mut col, f.box_length[0], false);
        for ix in 0..nx {
            mixed[ix * nt + it] = col[ix];
        }
    }
    GridFunction::from_samples(&f.n, &f.box_length, mixed)
}

/// Multiplies by `ψ_δ(t)` in physical space.
pub fn apply_time_cutoff(v: &GridFunction, delta: f64) -> Result<GridFunction, GridError> {
    v.require_dims(2)?;
    let ts = v.positions(1);
    let nt = v.n[1];
    let mut s = v.samples();
    for (idx, c) in s.iter_mut().enumerate() {
        *c *= cutoff_scaled(ts[idx % nt], delta);
    }
    GridFunction::from_samples(&v.n, &v.box_length, s)
}

/// Single space-time mode `e^{i(ξ0 x + τ0 t)}` scaled to unit lattice mass.
pub fn single_mode_2d(
    n: [usize; 2],
    box_length: [f64; 2],
    j_xi: usize,
    j_tau: usize,
) -> Result<GridFunction, GridError> {
    let mut modes = vec![Complex64::new(0.0, 0.0); n[0] * n[1]];
    if j_xi >= n[0] || j_tau >= n[1] {
        return Err(GridError::Domain("mode index outside the lattice".into()));
    }
    modes[j_xi * n[1] + j_tau] = Complex64::new(1.0, 0.0);
    GridFunction::from_modes(&n, &box_length, modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn gaussian(n: usize, l: f64) -> GridFunction {
        GridFunction::sample_1d(n, l, |x| Complex64::new((-0.5 * x * x).exp(), 0.0)).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn single_zero_mode_has_unit_norm() {
        let mut modes = vec![Complex64::new(0.0, 0.0); 16];
        modes[8] = Complex64::new(1.0, 0.0);
        let u = GridFunction::from_modes(&[16], &[2.0 * PI], modes).unwrap();
        for s in [-1.0, 0.0, 2.5] {
            assert!(rel(hat_norm(&u, s, 2.0).unwrap(), 1.0) < 1e-14);
        }
    }

    #[test]
    fn gaussian_l2_norm() {
        let u = gaussian(1024, 32.0);
        let expected = PI.powf(0.25);
        assert!(rel(hat_norm(&u, 0.0, 2.0).unwrap(), expected) < 1e-6);
        // modes sample e^{−ξ²/2}
        let xi = u.frequencies(0);
        for j in [500, 512, 530] {
            let exact = (-0.5 * xi[j] * xi[j]).exp();
            assert!((u.modes()[j] - Complex64::new(exact, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        let u = gaussian(64, 16.0);
        assert!(matches!(hat_norm(&u, 0.0, 1.0), Err(GridError::Domain(_))));
        assert!(matches!(
            GridFunction::from_modes(&[12], &[1.0], vec![Complex64::new(0.0, 0.0); 12]),
            Err(GridError::NotPowerOfTwo(12))
        ));
        let w = WeightSpec {
            s: 0.0,
            b: 0.5,
            dispersion: Dispersion::None,
            b_prime: 0.0,
        };
        assert!(matches!(xsb_norm(&u, &w, 2.0), Err(GridError::Dimension { .. })));
    }

    #[test]
    fn round_trip_2d() {
        let n = [16, 32];
        let vals: Vec<Complex64> = (0..512)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let g = GridFunction::from_samples(&n, &[3.0, 7.0], vals.clone()).unwrap();
        let back = g.samples();
        let err: f64 = vals.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        let scale: f64 = vals.iter().map(|a| a.norm_sqr()).sum();
        assert!((err / scale).sqrt() < 1e-12);
        // Parseval
        let phys: f64 = scale * g.spacing(0) * g.spacing(1);
        let spec: f64 = g.modes().iter().map(|c| c.norm_sqr()).sum::<f64>() * g.frequency_cell();
        assert!(rel(spec, phys) < 1e-12);
    }

    #[test]
    fn xsb_single_mode_and_dispersion() {
        let g = single_mode_2d([8, 8], [2.0 * PI, 2.0 * PI], 4, 4).unwrap();
        for disp in [Dispersion::Schroedinger, Dispersion::WavePlus, Dispersion::None] {
            let w = WeightSpec {
                s: 1.5,
                b: 0.7,
                dispersion: disp,
                b_prime: 0.0,
            };
            assert!(rel(xsb_norm(&g, &w, 2.0).unwrap(), 1.0) < 1e-14);
        }
        let g = single_mode_2d([8, 8], [2.0 * PI, 2.0 * PI], 6, 3).unwrap();
        let w = |b, dispersion| WeightSpec {
            s: 0.0,
            b,
            dispersion,
            b_prime: 0.0,
        };
        let a = xsb_norm(&g, &w(0.6, Dispersion::Schroedinger), 2.0).unwrap();
        let c = xsb_norm(&g, &w(0.6, Dispersion::None), 2.0).unwrap();
        assert!(rel(a, c) > 0.1);
        let a = xsb_norm(&g, &w(0.0, Dispersion::Schroedinger), 2.0).unwrap();
        let c = xsb_norm(&g, &w(0.0, Dispersion::None), 2.0).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(-1.0), 1.0);
        assert_eq!(cutoff(1.9), 0.0);
        assert_eq!(cutoff(-2.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=90 {
            let t = 1.0 + i as f64 / 100.0;
            let v = cutoff(t);
            assert!(v <= prev && v >= 0.0 && v == cutoff(-t));
            prev = v;
        }
        assert!((cutoff(1.45) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn free_evolution_bound_is_uniform() {
        // random band-limited data; C = ‖ψ e^{it∂²}u0‖_X / ‖u0‖_Ĥ
        let (s, b, r) = (0.5, 0.6, 2.0);
        let w = WeightSpec {
            s,
            b,
            dispersion: Dispersion::Schroedinger,
            b_prime: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ratios = Vec::new();
        for _ in 0..50 {
            let mut modes = vec![Complex64::new(0.0, 0.0); 32];
            for m in modes.iter_mut().skip(8).take(17) {
                *m = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            let u0 = GridFunction::from_modes(&[32], &[4.0 * PI], modes).unwrap();
            let f = free_evolution(&u0, Dispersion::Schroedinger, 1024, 16.0, 1.0).unwrap();
            ratios.push(xsb_norm(&f, &w, r).unwrap() / hat_norm(&u0, s, r).unwrap());
        }
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = ratios.iter().copied().fold(f64::MAX, f64::min);
        assert!(max / min < 2.0, "{min} {max}");
    }

    #[test]
    fn rough_data_is_deterministic() {
        let spec = RoughDataSpec::new(0.0, 2.0, 256, 7);
        assert_eq!(rough_data(&spec).unwrap(), rough_data(&spec).unwrap());
        let other = RoughDataSpec { seed: 8, ..spec };
        assert_ne!(rough_data(&spec).unwrap(), rough_data(&other).unwrap());
    }

    #[test]
    fn deterministic_profile_is_real_and_even() {
        let spec = RoughDataSpec {
            profile: Profile::DeterministicDecay,
            ..RoughDataSpec::new(0.0, 2.0, 128, 0)
        };
        let s = rough_data(&spec).unwrap().samples();
        let peak = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for m in 1..128 {
            assert!(s[m].im.abs() < 1e-12 * peak);
            assert!((s[m] - s[128 - m]).norm() < 1e-12 * peak);
        }
    }

    #[test]
    fn rough_real_option_gives_real_samples() {
        let spec = RoughDataSpec {
            real: true,
            ..RoughDataSpec::new(-0.25, 1.8, 256, 3)
        };
        let s = rough_data(&spec).unwrap().samples();
        let peak = s.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(s.iter().all(|c| c.im.abs() < 1e-12 * peak));
    }

    #[test]
    fn rough_data_in_fourier_lebesgue_but_not_l2() {
        // narrow box: 2^20 → 2^21 modes reach |ξ| ~ 4·10^6
        let (k, p) = (-1.0 / 12.0, 12.0 / 7.0);
        let make = |n| {
            rough_data(&RoughDataSpec {
                box_length: PI / 4.0,
                ..RoughDataSpec::new(k, p, n, 1)
            })
            .unwrap()
        };
        let (a, b) = (make(1 << 20), make(1 << 21));
        let (na, nb) = (hat_norm(&a, k, p).unwrap(), hat_norm(&b, k, p).unwrap());
        assert!(rel(nb, na) < 0.02, "{na} {nb}");
        let (la, lb) = (hat_norm(&a, 0.0, 2.0).unwrap(), hat_norm(&b, 0.0, 2.0).unwrap());
        assert!(lb > 1.05 * la, "{la} {lb}");
    }

    #[test]
    fn dilate_identity_and_laws() {
        let u = gaussian(4096, 64.0);
        assert_eq!(dilate(&u, 1.0, 1.5).unwrap().modes(), u.modes());
        let d = dilate(&u, 2.0, 1.5).unwrap();
        let ratio = hat_norm_dot(&d, 0.0, 2.0).unwrap() / hat_norm_dot(&u, 0.0, 2.0).unwrap();
        assert!(rel(ratio, 2.0) < 1e-6);
        let (k, p) = (-1.0 / 12.0, 12.0 / 7.0);
        let ratio = hat_norm_dot(&d, k, p).unwrap() / hat_norm_dot(&u, k, p).unwrap();
        assert!(rel(ratio, 2f64.powf(k - 1.0 / p + 1.5)) < 1e-4);
    }

    #[test]
    fn dilate_in_box_matches_analytic_samples() {
        let u = gaussian(512, 32.0);
        let d = dilate_in_box(&u, 2.0, 1.5, 1e-12).unwrap();
        let exact = GridFunction::sample_1d(512, 32.0, |x| {
            Complex64::new(2f64.powf(1.5) * (-2.0 * x * x).exp(), 0.0)
        })
        .unwrap();
        let err = d
            .modes()
            .iter()
            .zip(exact.modes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn dilate_in_box_reports_aliasing_and_truncation() {
        let u = gaussian(64, 16.0);
        match dilate_in_box(&u, 8.0, 1.5, 1e-12) {
            Err(GridError::Aliasing { mu, .. }) => assert_eq!(mu, 8.0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            dilate_in_box(&u, 0.1, 1.5, 1e-12),
            Err(GridError::Truncation { .. })
        ));
        assert!(dilate(&u, -1.0, 1.5).is_err());
    }

    fn forcing_weight() -> WeightSpec {
        WeightSpec {
            s: 0.0,
            b: 0.6,
            dispersion: Dispersion::Schroedinger,
            b_prime: -0.1,
        }
    }

    #[test]
    fn inhom_zero_forcing() {
        let f = GridFunction::from_modes(&[8, 64], &[2.0 * PI, 16.0], vec![Complex64::new(0.0, 0.0); 512])
            .unwrap();
        let (lhs, rhs) = inhom_estimate_probe(&f, &forcing_weight(), 0.5, 2.0).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
    }

    #[test]
    fn inhom_parameter_range() {
        let f = single_mode_2d([8, 64], [2.0 * PI, 16.0], 5, 40).unwrap();
        let bad = WeightSpec {
            b_prime: 0.1,
            ..forcing_weight()
        };
        let e = inhom_estimate_probe(&f, &bad, 1.0, 2.0).unwrap_err();
        assert!(e.to_string().contains("$b'+1 \\ge b \\ge 0 \\ge b'$"));
        assert!(inhom_estimate_probe(&f, &forcing_weight(), 1.5, 2.0).is_err());
    }

    /// RK4 for `v' = −iφ v − i e^{iτ0 t}` from `v(0) = 0`.
    fn rk4_single_mode(phi: f64, tau0: f64, t_end: f64, steps: usize) -> Complex64 {
        let rhs = |t: f64, v: Complex64| {
            Complex64::new(0.0, -phi) * v - Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, tau0 * t)
        };
        let h = t_end / steps as f64;
        let mut v = Complex64::new(0.0, 0.0);
        for i in 0..steps {
            let t = i as f64 * h;
            let k1 = rhs(t, v);
            let k2 = rhs(t + 0.5 * h, v + k1 * (0.5 * h));
            let k3 = rhs(t + 0.5 * h, v + k2 * (0.5 * h));
            let k4 = rhs(t + h, v + k3 * h);
            v += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        }
        v
    }

    #[test]
    fn duhamel_matches_ode_oracle() {
        let (n, len) = ([8, 64], [2.0 * PI, 16.0]);
        let f = single_mode_2d(n, len, 5, 40).unwrap();
        let v = duhamel(&f, Dispersion::Schroedinger).unwrap();
        // F(x,t) = c e^{i(ξ0 x + τ0 t)} with c from the lattice normalisation
        let xi0 = f.frequencies(0)[5];
        let tau0 = f.frequencies(1)[40];
        let c = f.frequency_cell() / (2.0 * PI);
        let samples = v.samples();
        let xs = v.positions(0);
        let ts = v.positions(1);
        for it in [0, 20, 32, 50] {
            let t = ts[it];
            let expect = rk4_single_mode(xi0 * xi0, tau0, t, 4000) * c;
            for ix in [0, 3] {
                let got = samples[ix * n[1] + it] * Complex64::from_polar(1.0, -xi0 * xs[ix]);
                assert!((got - expect).norm() < 1e-9 * c, "{t}: {got} {expect}");
            }
        }
    }

    #[test]
    fn inhom_ratio_stable_across_delta() {
        // nonresonant forcing mode: τ0 + ξ0² ≈ 21
        let (n, len) = ([8, 256], [2.0 * PI, 32.0]);
        let tau = 2.0 * PI / len[1];
        let j_tau = (128.0 + 20.0 / tau).round() as usize;
        let f = single_mode_2d(n, len, 3, j_tau).unwrap();
        let mut ratios = Vec::new();
        for delta in [1.0, 0.5, 0.25, 0.125] {
            let (lhs, rhs) = inhom_estimate_probe(&f, &forcing_weight(), delta, 2.0).unwrap();
            ratios.push(lhs / rhs);
        }
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = ratios.iter().copied().fold(f64::MAX, f64::min);
        assert!(max / min < 3.0, "{ratios:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn serialization_round_trip(
            logn in 1u32..6,
            two in any::<bool>(),
            len in 0.1f64..100.0,
            seed in any::<u64>(),
            prov in "[a-z =.]{0,20}",
            vals in proptest::collection::vec(-1e3f64..1e3, 4096),
        ) {
            let n = 1usize << logn;
            let (shape, lens) = if two { (vec![n, 2 * n], vec![len, 2.0 * len]) } else { (vec![n], vec![len]) };
            let count: usize = shape.iter().product();
            let modes = (0..count).map(|i| Complex64::new(vals[2 * i], vals[2 * i + 1])).collect();
            let g = GridFunction::from_modes(&shape, &lens, modes).unwrap().with_metadata(seed, prov);
            let back = GridFunction::from_bytes(&g.to_bytes()).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn norm_monotone_in_s(
            vals in proptest::collection::vec(-10f64..10.0, 64),
            s1 in -3f64..3.0,
            ds in 0f64..2.0,
            r in 1.1f64..6.0,
        ) {
            let modes = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let u = GridFunction::from_modes(&[32], &[5.0], modes).unwrap();
            prop_assert!(hat_norm(&u, s1, r).unwrap() <= hat_norm(&u, s1 + ds, r).unwrap() * (1.0 + 1e-14));
        }

        #[test]
        fn physical_round_trip(vals in proptest::collection::vec(-1f64..1.0, 256), len in 0.5f64..50.0) {
            let s: Vec<Complex64> = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let g = GridFunction::from_samples(&[128], &[len], s.clone()).unwrap();
            let back = g.samples();
            let err: f64 = s.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum();
            let scale: f64 = s.iter().map(|a| a.norm_sqr()).sum::<f64>().max(1e-300);
            prop_assert!((err / scale).sqrt() < 1e-12);
        }

        #[test]
        fn dilation_law_random_smooth(
            seed in any::<u64>(),
            mu in prop::sample::select(vec![0.5f64, 2.0, 3.0, 4.0]),
        ) {
            // random combination of wave packets, homogeneous Ḣ^0 with a = 3/2
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0), rng.random_range(-4.0..4.0)))
                .collect();
            let u = GridFunction::sample_1d(1024, 64.0, |x| {
                c.iter().map(|&(a, x0, k)| Complex64::from_polar(a * (-0.5 * (x - x0).powi(2)).exp(), k * x)).sum()
            }).unwrap();
            let d = dilate(&u, mu, 1.5).unwrap();
            let ratio = hat_norm_dot(&d, 0.0, 2.0).unwrap() / hat_norm_dot(&u, 0.0, 2.0).unwrap();
            prop_assert!(rel(ratio, mu) < 1e-4);
        }
    }
}
