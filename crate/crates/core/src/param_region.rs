//! Exact rational algebra for the local well-posedness region of the 1D
//! Zakharov system with Fourier-Lebesgue data.
//!
//! A parameter tuple `(k, l, p, b, b1)` is admissible when it satisfies the
//! inequality system of the branch selected by the sign of `k`. Every
//! inequality is affine in `(k, l, 1/p, b, b1)`, so admissibility, the
//! feasibility window for the modulation exponents and the minimal Schrödinger
//! regularity are all decidable in exact rational arithmetic.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = Rational64;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("p = {0} lies outside (1, 2]")]
    ExponentOutOfRange(Rational),
    #[error("{name} = {value} lies outside (1/p, 1] = ({lower}, 1]")]
    ModulationOutOfRange {
        name: &'static str,
        value: Rational,
        lower: Rational,
    },
    #[error("l = {l} violates l >= -1/p = {bound}")]
    WaveRegularityTooLow { l: Rational, bound: Rational },
}

fn check_p(p: Rational) -> Result<(), RegionError> {
    if p <= Rational::one() || p > r(2, 1) {
        return Err(RegionError::ExponentOutOfRange(p));
    }
    Ok(())
}

/// A point `(k, l, p, b, b1)` of the parameter space.
///
/// `k` is the Schrödinger regularity, `l` the wave regularity, `p` the
/// Fourier-Lebesgue exponent and `b`, `b1` the modulation exponents of the wave
/// and Schrödinger solution spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub k: Rational,
    pub l: Rational,
    pub p: Rational,
    pub b: Rational,
    pub b1: Rational,
}

impl ParamPoint {
    /// Validates `1 < p <= 2` and `b, b1 in (1/p, 1]`.
    pub fn new(
        k: Rational,
        l: Rational,
        p: Rational,
        b: Rational,
        b1: Rational,
    ) -> Result<Self, RegionError> {
        check_p(p)?;
        let lower = p.recip();
        for (name, value) in [("b", b), ("b1", b1)] {
            if value <= lower || value > Rational::one() {
                return Err(RegionError::ModulationOutOfRange { name, value, lower });
            }
        }
        Ok(Self { k, l, p, b, b1 })
    }

    pub fn inv_p(&self) -> Rational {
        self.p.recip()
    }

    /// Dual exponent `p' = p / (p - 1)`.
    pub fn p_prime(&self) -> Rational {
        self.p / (self.p - Rational::one())
    }

    /// `c1 = 1 - b1 - slack`; the slack realises the open end `1 - b1-`.
    pub fn c1(&self, slack: Rational) -> Rational {
        Rational::one() - self.b1 - slack
    }

    /// `c = 1 - b - slack`.
    pub fn c(&self, slack: Rational) -> Rational {
        Rational::one() - self.b - slack
    }

    pub fn branch(&self) -> Branch {
        if self.k.is_negative() {
            Branch::KNeg
        } else {
            Branch::KNonneg
        }
    }

    fn coords(&self) -> [Rational; 5] {
        [self.k, self.l, self.inv_p(), self.b, self.b1]
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(k, l, p, b, b1) = ({}, {}, {}, {}, {})",
            self.k, self.l, self.p, self.b, self.b1
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    KNonneg,
    KNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `form > 0`
    Strict,
    /// `form >= 0`
    Nonstrict,
}

/// An affine inequality `a_k k + a_l l + a_q (1/p) + a_b b + a_b1 b1 + a_0 (> | >=) 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub label: &'static str,
    /// Coefficients of `(k, l, 1/p, b, b1)`.
    pub coeffs: [Rational; 5],
    pub constant: Rational,
    pub relation: Relation,
}

impl Constraint {
    fn new(label: &'static str, coeffs: [i64; 5], constant: i64, relation: Relation) -> Self {
        Self {
            label,
            coeffs: coeffs.map(|c| r(c, 1)),
            constant: r(constant, 1),
            relation,
        }
    }

    /// Value of the affine form at `pt`.
    pub fn form(&self, pt: &ParamPoint) -> Rational {
        self.coeffs
            .iter()
            .zip(pt.coords())
            .fold(self.constant, |acc, (c, x)| acc + c * x)
    }

    pub fn holds(&self, pt: &ParamPoint) -> bool {
        let v = self.form(pt);
        match self.relation {
            Relation::Strict => v.is_positive(),
            Relation::Nonstrict => !v.is_negative(),
        }
    }
}

use Relation::{Nonstrict, Strict};

/// Conditions for `k >= 0`.
pub fn constraints_k_nonneg() -> Vec<Constraint> {
    vec![
        // l + 1/p >= 0
        Constraint::new("l >= -1/p", [0, 1, 1, 0, 0], 0, Nonstrict),
        // 2 - 2 b1 - k + l > 0
        Constraint::new("k - l < 2(1 - b1)", [-1, 1, 0, 0, -2], 2, Strict),
        // 2k - 1 + 1/p - l >= 0
        Constraint::new("l <= 2k - 1/p'", [2, -1, 1, 0, 0], -1, Nonstrict),
        // 1/p + 2(1 - b) - (l + 1 - k) > 0
        Constraint::new("l + 1 - k < 1/p + 2(1 - b)", [1, -1, 1, -2, 0], 1, Strict),
        // 2 b1 - l - 1 + k >= 0
        Constraint::new("l + 1 - k <= 2 b1", [1, -1, 0, 0, 2], -1, Nonstrict),
    ]
}

/// Conditions for `k < 0`.
pub fn constraints_k_neg() -> Vec<Constraint> {
    vec![
        Constraint::new("k >= -1/p", [1, 0, 1, 0, 0], 0, Nonstrict),
        Constraint::new("l >= -1/p", [0, 1, 1, 0, 0], 0, Nonstrict),
        Constraint::new("l + k > 1/p - 2 b1", [1, 1, -1, 0, 2], 0, Strict),
        Constraint::new("l + k > 1/p - 2 b", [1, 1, -1, 2, 0], 0, Strict),
        Constraint::new("l + k > -1/p - 2(1 - b1)", [1, 1, 1, 0, -2], 2, Strict),
        Constraint::new("k - l < 2(1 - b1)", [-1, 1, 0, 0, -2], 2, Strict),
        Constraint::new("2k > 1/p - b1", [2, 0, -1, 0, 1], 0, Strict),
        Constraint::new("2k >= l + 1/p'", [2, -1, 1, 0, 0], -1, Nonstrict),
        Constraint::new("2k > -(1 - b)", [2, 0, 0, -1, 0], 1, Strict),
    ]
}

pub fn constraints(branch: Branch) -> Vec<Constraint> {
    match branch {
        Branch::KNonneg => constraints_k_nonneg(),
        Branch::KNeg => constraints_k_neg(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    pub branch: Branch,
    pub satisfied: Vec<String>,
    pub violated: Vec<String>,
}

/// Evaluates every condition of the branch selected by `sign(k)`; `k = 0`
/// belongs to the `k >= 0` branch.
pub fn admissible(pt: &ParamPoint) -> Result<AdmissibilityVerdict, RegionError> {
    // re-validate: the fields are public
    let pt = ParamPoint::new(pt.k, pt.l, pt.p, pt.b, pt.b1)?;
    let branch = pt.branch();
    let (satisfied, violated): (Vec<_>, Vec<_>) =
        constraints(branch).into_iter().partition(|c| c.holds(&pt));
    Ok(AdmissibilityVerdict {
        admissible: violated.is_empty(),
        branch,
        satisfied: satisfied.into_iter().map(|c| c.label.to_string()).collect(),
        violated: violated.into_iter().map(|c| c.label.to_string()).collect(),
    })
}

/// One end of an interval of rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: Rational,
    pub closed: bool,
}

/// Interval of feasible modulation exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityWindow {
    pub lower: Endpoint,
    pub upper: Endpoint,
    pub nonempty: bool,
}

impl FeasibilityWindow {
    fn from_ends(lower: Endpoint, upper: Endpoint, feasible: bool) -> Self {
        let nonempty = feasible
            && (lower.value < upper.value
                || (lower.value == upper.value && lower.closed && upper.closed));
        Self {
            lower,
            upper,
            nonempty,
        }
    }

    pub fn contains(&self, t: Rational) -> bool {
        let above = if self.lower.closed {
            t >= self.lower.value
        } else {
            t > self.lower.value
        };
        let below = if self.upper.closed {
            t <= self.upper.value
        } else {
            t < self.upper.value
        };
        self.nonempty && above && below
    }

    /// Midpoint of a nonempty window.
    pub fn midpoint(&self) -> Option<Rational> {
        self.nonempty
            .then(|| (self.lower.value + self.upper.value) / r(2, 1))
    }
}

/// Intersects the half-lines `alpha t + beta (>|>=) 0` with `(1/p, 1]`.
struct WindowBuilder {
    lower: Endpoint,
    upper: Endpoint,
    feasible: bool,
}

impl WindowBuilder {
    fn new(p: Rational) -> Self {
        Self {
            lower: Endpoint {
                value: p.recip(),
                closed: false,
            },
            upper: Endpoint {
                value: Rational::one(),
                closed: true,
            },
            feasible: true,
        }
    }

    fn add(&mut self, alpha: Rational, beta: Rational, relation: Relation) {
        let strict = relation == Strict;
        if alpha.is_zero() {
            let ok = if strict {
                beta.is_positive()
            } else {
                !beta.is_negative()
            };
            self.feasible &= ok;
            return;
        }
        let bound = -beta / alpha;
        if alpha.is_positive() {
            // t > bound or t >= bound
            let cand = Endpoint {
                value: bound,
                closed: !strict,
            };
            if cand.value > self.lower.value
                || (cand.value == self.lower.value && !cand.closed)
            {
                self.lower = cand;
            }
        } else {
            let cand = Endpoint {
                value: bound,
                closed: !strict,
            };
            if cand.value < self.upper.value
                || (cand.value == self.upper.value && !cand.closed)
            {
                self.upper = cand;
            }
        }
    }

    fn finish(self) -> FeasibilityWindow {
        FeasibilityWindow::from_ends(self.lower, self.upper, self.feasible)
    }
}

fn branch_for(k: Rational) -> Branch {
    if k.is_negative() {
        Branch::KNeg
    } else {
        Branch::KNonneg
    }
}

/// Window of `b = b1 = t` for which `(k, l, p, t, t)` is admissible.
pub fn b_window(k: Rational, l: Rational, p: Rational) -> Result<FeasibilityWindow, RegionError> {
    check_p(p)?;
    let mut w = WindowBuilder::new(p);
    for c in constraints(branch_for(k)) {
        let [ck, cl, cq, cb, cb1] = c.coeffs;
        let beta = c.constant + ck * k + cl * l + cq * p.recip();
        w.add(cb + cb1, beta, c.relation);
    }
    Ok(w.finish())
}

/// Independent windows for `b` and `b1`. Every condition involves at most one
/// of the two, so the feasible set is exactly the product of these intervals.
pub fn b_window_2d(
    k: Rational,
    l: Rational,
    p: Rational,
) -> Result<(FeasibilityWindow, FeasibilityWindow), RegionError> {
    check_p(p)?;
    let mut wb = WindowBuilder::new(p);
    let mut wb1 = WindowBuilder::new(p);
    for c in constraints(branch_for(k)) {
        let [ck, cl, cq, cb, cb1] = c.coeffs;
        debug_assert!(cb.is_zero() || cb1.is_zero());
        let beta = c.constant + ck * k + cl * l + cq * p.recip();
        if !cb.is_zero() {
            wb.add(cb, beta, c.relation);
        } else if !cb1.is_zero() {
            wb1.add(cb1, beta, c.relation);
        } else {
            wb.add(Rational::zero(), beta, c.relation);
            wb1.add(Rational::zero(), beta, c.relation);
        }
    }
    Ok((wb.finish(), wb1.finish()))
}

/// The two `k`-free ceilings on `b1`: eliminating `k` between
/// `2k > 1/p - b1` and `k < l + 2(1 - b1)` gives the first, between
/// `2k >= l + 1/p'` and `k < l + 2(1 - b1)` the second.
pub fn b1_ceilings(l: Rational, p: Rational) -> (Rational, Rational) {
    let q = p.recip();
    (
        r(2, 3) * (l + r(2, 1)) - q / r(3, 1),
        l / r(4, 1) + r(3, 4) + q / r(4, 1),
    )
}

/// `min` of [`b1_ceilings`]; `b1` must lie strictly below it.
pub fn b1_ceiling(l: Rational, p: Rational) -> Rational {
    let (a, b) = b1_ceilings(l, p);
    a.min(b)
}

/// The three lower bounds for `2k`, in order: from the first `b1` ceiling
/// (strict), the second `b1` ceiling (strict), and `2k >= l + 1/p'`.
pub fn two_k_lower_bounds(l: Rational, p: Rational) -> [(Rational, Relation); 3] {
    let q = p.recip();
    [
        (r(4, 3) * q - r(2, 3) * (l + r(2, 1)), Strict),
        (r(3, 4) * q - (l + r(3, 1)) / r(4, 1), Strict),
        (l + Rational::one() - q, Nonstrict),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalK {
    /// Infimum of admissible `k`.
    pub infimum: Rational,
    /// Whether `k = infimum` itself satisfies all three bounds.
    pub attained: bool,
    /// Index into [`two_k_lower_bounds`] of the dominant bound(s).
    pub dominant: Vec<usize>,
}

pub fn minimal_k(l: Rational, p: Rational) -> Result<MinimalK, RegionError> {
    check_p(p)?;
    if l < -p.recip() {
        return Err(RegionError::WaveRegularityTooLow {
            l,
            bound: -p.recip(),
        });
    }
    let bounds = two_k_lower_bounds(l, p);
    let max = bounds.iter().map(|(v, _)| *v).max().expect("three bounds");
    let dominant: Vec<usize> = (0..3).filter(|&i| bounds[i].0 == max).collect();
    let attained = dominant.iter().all(|&i| bounds[i].1 == Nonstrict);
    Ok(MinimalK {
        infimum: max / r(2, 1),
        attained,
        dominant,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalOptimum {
    pub p_star: Rational,
    pub l_star: Rational,
    /// `k` must lie strictly above this value.
    pub k_inf: Rational,
    /// The three lower bounds for `2k` at `(p_star, l_star)`.
    pub two_k_bounds: [Rational; 3],
    pub bounds_coincide: bool,
    pub b1_ceiling: Rational,
}

/// Solves `a0 + a1 x + a2 y = 0`, `b0 + b1 x + b2 y = 0` by Cramer's rule.
fn solve_2x2(a: [Rational; 3], b: [Rational; 3]) -> Option<(Rational, Rational)> {
    let det = a[1] * b[2] - a[2] * b[1];
    if det.is_zero() {
        return None;
    }
    let x = (-a[0] * b[2] + a[2] * b[0]) / det;
    let y = (-a[1] * b[0] + a[0] * b[1]) / det;
    Some((x, y))
}

/// Minimises the infimum of `k` over the whole region.
///
/// In the unknowns `(x, l)` with `x = 1/p` the first and third lower bounds for
/// `2k` are affine; equating them gives the balance line `x = 5/7 l + 1`, and
/// the smallest wave regularity `l = -x` closes the system.
pub fn optimize_global() -> GlobalOptimum {
    // first bound: 4/3 x - 2/3 l - 4/3; third bound: l + 1 - x
    // balance: (4/3 + 1) x - (2/3 + 1) l - 4/3 - 1 = 0
    let balance = [r(-7, 3), r(7, 3), r(-5, 3)];
    // l >= -x at equality: x + l = 0
    let lowest_l = [Rational::zero(), Rational::one(), Rational::one()];
    let (x, l_star) = solve_2x2(balance, lowest_l).expect("independent lines");
    let p_star = x.recip();
    let bounds = two_k_lower_bounds(l_star, p_star);
    let two_k_bounds = bounds.map(|(v, _)| v);
    let bounds_coincide = two_k_bounds.iter().all(|v| *v == two_k_bounds[0]);
    let k_inf = minimal_k(l_star, p_star)
        .expect("optimum lies in the parameter domain")
        .infimum;
    GlobalOptimum {
        p_star,
        l_star,
        k_inf,
        two_k_bounds,
        bounds_coincide,
        b1_ceiling: b1_ceiling(l_star, p_star),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub sigma: Rational,
    pub lambda: Rational,
}

/// L²-Sobolev exponents with the same dilation behaviour as the hat spaces:
/// `sigma = k - 1/p + 1/2`, `lambda = l - 1/p + 1/2`.
pub fn scaling_exponents(k: Rational, l: Rational, p: Rational) -> ScalingExponents {
    let shift = r(1, 2) - p.recip();
    ScalingExponents {
        sigma: k + shift,
        lambda: l + shift,
    }
}

/// Parses `"a/b"`, `"a"` or `"-a/b"`. Decimal literals are rejected.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| format!("`{s}` is not a rational literal of the form p/q"))?;
    let den: i64 = den
        .parse()
        .map_err(|_| format!("`{s}` is not a rational literal of the form p/q"))?;
    if den == 0 {
        return Err(format!("`{s}` has a zero denominator"));
    }
    Ok(Rational::new(num, den))
}
