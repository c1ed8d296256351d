use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use zakharov_core::grid_spaces::{GridError, GridFunction};
use zakharov_core::kernel_verifier::{
    cp_sup, trilinear_trials, Family, InnerResolution, KernelError, KernelSpec, OuterGrid,
    SaturationDiagnostic, ScanConfig, Sign, Verdict,
};
use zakharov_core::param_region::{
    admissible, b_window, b_window_2d, constraints, minimal_k, optimize_global,
    scaling_exponents, Endpoint, FeasibilityWindow, ParamPoint, Rational, RegionError, Relation,
};
use zakharov_core::zakharov_solver::{
    evolve, focusing_gaussian, lifespan_probe, lipschitz_probe, rough_triple, EvolutionTrace,
    LifespanConfig, NormSpec, SolverConfig, SolverError,
};

use crate::report::{append_line, num, opt_num, write_csv, Report};
use crate::{
    Cli, Command, FamilyArg, FlowArgs, KernelScanArgs, LifespanArgs, LipschitzArgs, OptimizeArgs,
    PointArgs, Preset, RegularityArgs, ScanPointArgs, SignArg, SimulateArgs, Status, Tier,
    TrilinearArgs, Violation,
};

#[derive(Debug, Error)]
pub enum CmdError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl CmdError {
    pub fn status(&self) -> Status {
        match self {
            CmdError::Usage(_) | CmdError::Region(_) => Status::Usage,
            _ => Status::Failure,
        }
    }
}

/// Payload, text summary, optional CSV and exit status of one command.
struct Outcome {
    result: Value,
    resolved: Value,
    text: String,
    csv: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    status: Status,
}

pub fn run(cli: &Cli) -> Result<Status, CmdError> {
    let start = Instant::now();
    let g = &cli.global;
    let (name, args, out) = match &cli.command {
        Command::Admissible(a) => ("admissible", to_value(a), cmd_admissible(a)?),
        Command::Window(a) => ("window", to_value(a), cmd_window(a)?),
        Command::Optimize(a) => ("optimize", to_value(a), cmd_optimize(a)?),
        Command::Scaling(a) => ("scaling", to_value(a), cmd_scaling(a)),
        Command::KernelScan(a) => ("kernel-scan", to_value(a), cmd_kernel_scan(a, g.tier)?),
        Command::TrilinearTest(a) => ("trilinear-test", to_value(a), cmd_trilinear(a, g.tier, g.seed)?),
        Command::Simulate(a) => ("simulate", to_value(a), cmd_simulate(a, g.tier, g.seed)?),
        Command::Lipschitz(a) => ("lipschitz", to_value(a), cmd_lipschitz(a, g.tier, g.seed)?),
        Command::Lifespan(a) => ("lifespan", to_value(a), cmd_lifespan(a, g.tier)?),
    };
    let report = Report {
        command: name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        config: json!({ "global": to_value(g), "args": args, "resolved": out.resolved }),
        result: out.result,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    let line = report.line();
    if g.json {
        println!("{line}");
    } else {
        print!("{}", out.text);
    }
    if let Some(path) = &g.output {
        append_line(path, &line)?;
    }
    if let (Some(path), Some((header, rows))) = (&g.csv, &out.csv) {
        write_csv(path, header, rows)?;
    }
    Ok(out.status)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("arguments serialize")
}

fn q(r: Rational) -> String {
    r.to_string()
}

fn endpoint(e: &Endpoint) -> Value {
    json!({ "value": q(e.value), "closed": e.closed })
}

fn window_value(w: &FeasibilityWindow) -> Value {
    json!({
        "lower": endpoint(&w.lower),
        "upper": endpoint(&w.upper),
        "nonempty": w.nonempty,
        "midpoint": w.midpoint().map(q),
    })
}

fn window_text(w: &FeasibilityWindow) -> String {
    if !w.nonempty {
        return "empty".into();
    }
    format!(
        "{}{}, {}{}",
        if w.lower.closed { "[" } else { "(" },
        w.lower.value,
        w.upper.value,
        if w.upper.closed { "]" } else { ")" }
    )
}

fn point_value(pt: &ParamPoint) -> Value {
    json!({ "k": q(pt.k), "l": q(pt.l), "p": q(pt.p), "b": q(pt.b), "b1": q(pt.b1) })
}

fn cmd_admissible(a: &PointArgs) -> Result<Outcome, CmdError> {
    let RegularityArgs { k, l, p } = a.reg;
    let pt = match ParamPoint::new(k.0, l.0, p.0, a.b.0, a.b1.0) {
        Ok(pt) => pt,
        Err(e) => {
            // outside the parameter domain: rejected, not a usage error
            return Ok(Outcome {
                result: json!({ "admissible": false, "domain_error": e.to_string() }),
                resolved: Value::Null,
                text: format!("rejected: {e}\n"),
                csv: None,
                status: Status::Negative,
            });
        }
    };
    let verdict = admissible(&pt)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    let details: Vec<Value> = constraints(verdict.branch)
        .iter()
        .map(|c| {
            let holds = c.holds(&pt);
            let rel = match c.relation {
                Relation::Strict => ">",
                Relation::Nonstrict => ">=",
            };
            text.push_str(&format!(
                "  [{}] {}  (form = {} {rel} 0)\n",
                if holds { "ok" } else { "FAIL" },
                c.label,
                c.form(&pt)
            ));
            rows.push(vec![c.label.to_string(), q(c.form(&pt)), rel.to_string(), holds.to_string()]);
            json!({ "label": c.label, "form": q(c.form(&pt)), "relation": rel, "holds": holds })
        })
        .collect();
    let head = format!(
        "{} at (k, l, p, b, b1) = ({}, {}, {}, {}, {})\n",
        if verdict.admissible { "admissible" } else { "rejected" },
        pt.k,
        pt.l,
        pt.p,
        pt.b,
        pt.b1
    );
    Ok(Outcome {
        result: json!({
            "point": point_value(&pt),
            "admissible": verdict.admissible,
            "branch": verdict.branch,
            "constraints": details,
            "violated": verdict.violated,
        }),
        resolved: Value::Null,
        text: head + &text,
        csv: Some((vec!["constraint", "form", "relation", "holds"], rows)),
        status: if verdict.admissible { Status::Ok } else { Status::Negative },
    })
}

fn cmd_window(a: &RegularityArgs) -> Result<Outcome, CmdError> {
    let w = b_window(a.k.0, a.l.0, a.p.0)?;
    let (wb, wb1) = b_window_2d(a.k.0, a.l.0, a.p.0)?;
    let text = format!(
        "b = b1 in {}\nb in {}\nb1 in {}\nmidpoint {}\n",
        window_text(&w),
        window_text(&wb),
        window_text(&wb1),
        w.midpoint().map_or("-".into(), q)
    );
    Ok(Outcome {
        result: json!({
            "diagonal": window_value(&w),
            "b": window_value(&wb),
            "b1": window_value(&wb1),
        }),
        resolved: Value::Null,
        text,
        csv: None,
        status: if w.nonempty { Status::Ok } else { Status::Negative },
    })
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<Outcome, CmdError> {
    if let (Some(l), Some(p)) = (a.l, a.fixed_p) {
        let m = minimal_k(l.0, p.0)?;
        let s = scaling_exponents(m.infimum, l.0, p.0);
        let text = format!(
            "minimal k on (l, p) = ({}, {}): {} ({})\nscaling (sigma, lambda) = ({}, {})\n",
            l,
            p,
            m.infimum,
            if m.attained { "attained" } else { "strict" },
            s.sigma,
            s.lambda
        );
        return Ok(Outcome {
            result: json!({
                "l": q(l.0),
                "p": q(p.0),
                "k_inf": q(m.infimum),
                "attained": m.attained,
                "dominant_bounds": m.dominant,
                "sigma": q(s.sigma),
                "lambda": q(s.lambda),
            }),
            resolved: Value::Null,
            text,
            csv: None,
            status: Status::Ok,
        });
    }
    let o = optimize_global();
    let s = scaling_exponents(o.k_inf, o.l_star, o.p_star);
    let text = format!(
        "pStar = {}\nlStar = {}\nk > {}\n2k lower bounds: {}, {}, {} ({})\nb1 < {}\nscaling at the infimum: sigma = {}, lambda = {}\n",
        o.p_star,
        o.l_star,
        o.k_inf,
        o.two_k_bounds[0],
        o.two_k_bounds[1],
        o.two_k_bounds[2],
        if o.bounds_coincide { "coincide" } else { "distinct" },
        o.b1_ceiling,
        s.sigma,
        s.lambda
    );
    Ok(Outcome {
        result: json!({
            "p_star": q(o.p_star),
            "l_star": q(o.l_star),
            "k_inf": q(o.k_inf),
            "two_k_bounds": o.two_k_bounds.iter().map(|r| q(*r)).collect::<Vec<_>>(),
            "bounds_coincide": o.bounds_coincide,
            "b1_ceiling": q(o.b1_ceiling),
            "sigma": q(s.sigma),
            "lambda": q(s.lambda),
        }),
        resolved: Value::Null,
        text,
        csv: None,
        status: Status::Ok,
    })
}

fn cmd_scaling(a: &RegularityArgs) -> Outcome {
    let s = scaling_exponents(a.k.0, a.l.0, a.p.0);
    Outcome {
        result: json!({ "sigma": q(s.sigma), "lambda": q(s.lambda) }),
        resolved: Value::Null,
        text: format!("sigma = {}\nlambda = {}\n", s.sigma, s.lambda),
        csv: None,
        status: Status::Ok,
    }
}

fn families(f: FamilyArg) -> Vec<Family> {
    match f {
        FamilyArg::S => vec![Family::S],
        FamilyArg::W => vec![Family::W],
        FamilyArg::Both => vec![Family::S, Family::W],
    }
}

fn signs(s: SignArg) -> Vec<Sign> {
    match s {
        SignArg::Plus => vec![Sign::Plus],
        SignArg::Minus => vec![Sign::Minus],
        SignArg::Both => vec![Sign::Plus, Sign::Minus],
    }
}

/// Fills missing `b`, `b1` from the midpoint of the `b = b1` window at
/// `(k, l, p)`.
fn resolve_point(a: &ScanPointArgs) -> Result<ParamPoint, CmdError> {
    let mid = || -> Result<Rational, CmdError> {
        b_window(a.k.0, a.l.0, a.p.0)?.midpoint().ok_or_else(|| {
            CmdError::Usage(format!(
                "the b = b1 window at (k, l, p) = ({}, {}, {}) is empty; pass --b and --b1",
                a.k, a.l, a.p
            ))
        })
    };
    let b = match a.b {
        Some(b) => b.0,
        None => mid()?,
    };
    let b1 = match a.b1 {
        Some(b) => b.0,
        None => mid()?,
    };
    Ok(ParamPoint::new(a.k.0, a.l.0, a.p.0, b, b1)?)
}

/// Wave regularity moved outside the condition probed by `family`.
pub fn violated_l(family: Family, pt: &ParamPoint) -> Rational {
    let quarter = Rational::new(1, 4);
    let half = Rational::new(1, 2);
    match family {
        Family::S => -pt.inv_p() - quarter,
        Family::W => Rational::from_integer(2) * pt.k - pt.p_prime().recip() + half,
    }
}

pub fn scan_config(tier: Tier, radius: Option<f64>, levels: Option<u32>) -> ScanConfig {
    let base = match tier {
        Tier::Quick => ScanConfig {
            radius: 50.0,
            levels: 3,
            grid: OuterGrid {
                steps_per_octave: 1,
                ..OuterGrid::default()
            },
            resolution: InnerResolution {
                rel_tol: 1e-6,
                table_du: 0.02,
            },
            ..ScanConfig::default()
        },
        Tier::Standard => ScanConfig::default(),
        Tier::Thorough => ScanConfig {
            radius: 800.0,
            levels: 5,
            grid: OuterGrid {
                steps_per_octave: 3,
                ..OuterGrid::default()
            },
            resolution: InnerResolution {
                rel_tol: 1e-8,
                table_du: 0.005,
            },
            ..ScanConfig::default()
        },
    };
    ScanConfig {
        radius: radius.unwrap_or(base.radius),
        levels: levels.unwrap_or(base.levels),
        ..base
    }
}

fn expected_verdict(pt: &ParamPoint) -> Result<Verdict, CmdError> {
    Ok(if admissible(pt)?.admissible {
        Verdict::Saturating
    } else {
        Verdict::Diverging
    })
}

fn cmd_kernel_scan(a: &KernelScanArgs, tier: Tier) -> Result<Outcome, CmdError> {
    let base = resolve_point(&a.point)?;
    let cfg = scan_config(tier, a.radius, a.levels);
    if cfg.levels < 2 || !(cfg.radius > 0.0) {
        return Err(CmdError::Usage("need --levels >= 2 and a positive --radius".into()));
    }
    let slack = a.point.slack.f64();
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut status = Status::Ok;
    for family in families(a.point.family) {
        let pt = match a.violate {
            Violation::None => base,
            Violation::L => ParamPoint {
                l: violated_l(family, &base),
                ..base
            },
        };
        let expected = expected_verdict(&pt)?;
        for sign in signs(a.point.sign) {
            let spec = KernelSpec::from_point(family, sign, &pt, slack);
            let d: SaturationDiagnostic = cp_sup(&spec, &cfg)?;
            let ok = d.verdict == expected;
            if d.verdict == Verdict::Inconclusive {
                if status == Status::Ok {
                    status = Status::Inconclusive;
                }
            } else if !ok {
                status = Status::Negative;
            }
            text.push_str(&format!(
                "{family}{sign} at l = {}: verdict {} (expected {expected}); ratios {}\n",
                pt.l,
                d.verdict,
                d.ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", ")
            ));
            for (i, (&r, &v)) in d.radii.iter().zip(&d.values).enumerate() {
                let ratio = if i == 0 { String::new() } else { num(d.ratios[i - 1]) };
                rows.push(vec![family.to_string(), sign.to_string(), num(r), num(v), ratio]);
            }
            results.push(json!({
                "point": point_value(&pt),
                "family": family,
                "sign": sign,
                "expected": expected,
                "diagnostic": d,
            }));
        }
    }
    if status == Status::Inconclusive {
        eprintln!("inconclusive verdict: rerun with --tier thorough or a larger --radius");
    }
    Ok(Outcome {
        result: json!({ "scans": results }),
        resolved: json!({ "point": point_value(&base), "scan": cfg }),
        text,
        csv: Some((vec!["family", "sign", "radius", "sup", "ratio"], rows)),
        status,
    })
}

fn cmd_trilinear(a: &TrilinearArgs, tier: Tier, seed: u64) -> Result<Outcome, CmdError> {
    let pt = resolve_point(&a.point)?;
    let (trials, grid) = match tier {
        Tier::Quick => (20, 16),
        Tier::Standard => (200, 64),
        Tier::Thorough => (1000, 64),
    };
    let trials = a.trials.unwrap_or(trials);
    let grid = a.grid.unwrap_or(grid);
    let mut results = Vec::new();
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut violations = 0;
    for family in families(a.point.family) {
        for sign in signs(a.point.sign) {
            let spec = KernelSpec::from_point(family, sign, &pt, a.point.slack.f64());
            let s = trilinear_trials(&spec, [grid, grid], [a.box_xi, a.box_tau], trials, seed, a.iterations)?;
            violations += s.violations;
            text.push_str(&format!(
                "{family}{sign}: {} trials, {} violations, max lhs/rhs {:.4}, extremizer lhs/rhs {:.4}\n",
                s.trials, s.violations, s.max_ratio, s.extremizer_ratio
            ));
            rows.push(vec![
                family.to_string(),
                sign.to_string(),
                s.trials.to_string(),
                s.violations.to_string(),
                num(s.max_ratio),
                num(s.extremizer_ratio),
            ]);
            results.push(s);
        }
    }
    Ok(Outcome {
        result: json!({ "suites": results, "violations": violations }),
        resolved: json!({ "point": point_value(&pt), "trials": trials, "grid": [grid, grid] }),
        text,
        csv: Some((
            vec!["family", "sign", "trials", "violations", "max_ratio", "extremizer_ratio"],
            rows,
        )),
        status: if violations == 0 { Status::Ok } else { Status::Negative },
    })
}

fn flow_config(f: &FlowArgs, tier: Tier, preset_box: f64, t_default: f64) -> SolverConfig {
    let (n, dt) = match tier {
        Tier::Quick => (128, 2e-3),
        Tier::Standard => (256, 1e-3),
        Tier::Thorough => (1024, 2.5e-4),
    };
    SolverConfig {
        n: f.n.unwrap_or(n),
        box_length: f.box_length.unwrap_or(preset_box),
        dt: f.dt.unwrap_or(dt),
        t_end: f.t_end.unwrap_or(t_default),
        regularized: !f.unregularized,
        sample_every: f.sample_every.unwrap_or(10),
    }
}

fn sample(n: usize, len: f64, f: impl Fn(f64) -> Complex64) -> Result<GridFunction, GridError> {
    GridFunction::sample_1d(n, len, f)
}

fn trace_rows(tr: &EvolutionTrace) -> Vec<Vec<String>> {
    tr.samples
        .iter()
        .map(|s| {
            vec![
                num(s.t),
                num(s.mass),
                num(s.u_norm),
                num(s.n_norm),
                num(s.max_abs_u),
                num(s.max_imag_n),
            ]
        })
        .collect()
}

/// Plane wave `a e^{iκx}` with constant density `ν`.
const PLANE_WAVE: (f64, f64, f64) = (0.7, 3.0, 0.4);

fn cmd_simulate(a: &SimulateArgs, tier: Tier, seed: u64) -> Result<Outcome, CmdError> {
    let (len, t_default) = match a.preset {
        Preset::PlaneWave => (2.0 * PI, 1.0),
        Preset::Gaussian => (20.0, 0.5),
        Preset::Rough => (2.0 * PI, 0.5),
    };
    let cfg = flow_config(&a.flow, tier, len, t_default);
    let norms = NormSpec {
        k: a.k.f64(),
        l: a.l.f64(),
        p: a.p.f64(),
    };
    let (n, l) = (cfg.n, cfg.box_length);
    let zero = |_| Complex64::new(0.0, 0.0);
    let [u0, n0, n1] = match a.preset {
        Preset::PlaneWave => {
            let (amp, kappa, nu) = PLANE_WAVE;
            [
                sample(n, l, |x| Complex64::from_polar(amp, kappa * x))?,
                sample(n, l, |_| Complex64::new(nu, 0.0))?,
                sample(n, l, zero)?,
            ]
        }
        Preset::Gaussian => [
            sample(n, l, |x| Complex64::from_polar(a.amplitude * (-x * x).exp(), 0.5 * x))?,
            sample(n, l, |x| Complex64::new(0.5 * (-(x - 1.0).powi(2)).exp(), 0.0))?,
            sample(n, l, |x| Complex64::new(-x * (-x * x).exp(), 0.0))?,
        ],
        Preset::Rough => rough_triple(norms.k, norms.l, norms.p, a.amplitude, seed, &cfg)?,
    };
    let tr = evolve(&u0, &n0, &n1, &cfg, &norms)?;
    let last = tr.samples.last().expect("initial sample recorded");
    let mut result = json!({
        "completed": tr.completed(),
        "blow_up": tr.blow_up,
        "t_final": tr.final_state.t,
        "mass_drift": tr.mass_drift(),
        "max_imag_n": tr.samples.iter().map(|s| s.max_imag_n).fold(0.0, f64::max),
        "final": last,
        "samples": tr.samples.len(),
    });
    let mut text = format!(
        "t = {}, mass drift {:.3e}, |u|_max {:.6}, u norm {:.6}, n norm {:.6}{}\n",
        tr.final_state.t,
        tr.mass_drift(),
        last.max_abs_u,
        last.u_norm,
        last.n_norm,
        tr.blow_up.map_or(String::new(), |t| format!(", blow-up at t = {t}"))
    );
    let mut status = Status::Ok;
    if a.preset == Preset::PlaneWave && tr.completed() {
        let (amp, kappa, nu) = PLANE_WAVE;
        let t = tr.final_state.t;
        let xs = u0.positions(0);
        let err = tr
            .final_state
            .u_samples()
            .iter()
            .zip(&xs)
            .map(|(u, &x)| (u - Complex64::from_polar(amp, kappa * x - (kappa * kappa + nu) * t)).norm())
            .fold(0.0, f64::max);
        let pass = err < 1e-8;
        result["closed_form_error"] = json!(err);
        result["closed_form_pass"] = json!(pass);
        text.push_str(&format!(
            "closed-form error {err:.3e}: {}\n",
            if pass { "pass" } else { "FAIL" }
        ));
        if !pass {
            status = Status::Negative;
        }
    }
    if let Some(path) = &a.snapshot {
        let tag = format!("zlab simulate {:?} seed {seed}", a.preset);
        let u = tr.final_state.u_grid()?.with_metadata(seed, &tag);
        let nf = GridFunction::from_samples(&[n], &[l], tr.final_state.n_samples())?.with_metadata(seed, &tag);
        std::fs::write(path.with_extension("u.zgf"), u.to_bytes())?;
        std::fs::write(path.with_extension("n.zgf"), nf.to_bytes())?;
    }
    Ok(Outcome {
        result,
        resolved: json!({ "solver": cfg, "norms": norms }),
        text,
        csv: Some((
            vec!["t", "mass", "u_norm", "n_norm", "max_abs_u", "max_imag_n"],
            trace_rows(&tr),
        )),
        status,
    })
}

fn cmd_lipschitz(a: &LipschitzArgs, tier: Tier, seed: u64) -> Result<Outcome, CmdError> {
    let cfg = flow_config(&a.flow, tier, 2.0 * PI, 0.5);
    let norms = NormSpec {
        k: a.k.f64(),
        l: a.l.f64(),
        p: a.p.f64(),
    };
    let seeds: Vec<u64> = (0..a.seeds).map(|i| seed + i).collect();
    let r = lipschitz_probe(&norms, a.amplitude, &a.deltas, &seeds, &cfg)?;
    let mut text = String::from("seed  delta      ratio\n");
    let rows: Vec<Vec<String>> = r
        .entries
        .iter()
        .map(|e| {
            text.push_str(&format!(
                "{:<5} {:<10.1e} {}\n",
                e.seed,
                e.delta,
                e.ratio.map_or("exact".into(), |x| format!("{x:.6}"))
            ));
            vec![e.seed.to_string(), num(e.delta), opt_num(e.ratio), opt_num(e.blow_up)]
        })
        .collect();
    text.push_str(&format!("spread (max/min) {:.4}\n", r.spread));
    Ok(Outcome {
        result: json!({ "report": r, "within_factor_two": r.spread <= 2.0 }),
        resolved: json!({ "solver": cfg, "norms": norms, "seeds": seeds }),
        text,
        csv: Some((vec!["seed", "delta", "ratio", "blow_up"], rows)),
        status: Status::Ok,
    })
}

fn cmd_lifespan(a: &LifespanArgs, tier: Tier) -> Result<Outcome, CmdError> {
    let (n, dt) = match tier {
        Tier::Quick => (512, 2e-3),
        Tier::Standard => (1024, 1e-3),
        Tier::Thorough => (2048, 5e-4),
    };
    let solver = SolverConfig {
        n: a.flow.n.unwrap_or(n),
        box_length: a.flow.box_length.unwrap_or(40.0),
        dt: a.flow.dt.unwrap_or(dt),
        t_end: a.flow.t_end.unwrap_or(4.0),
        // n1 = 0, so the plain reduction applies
        regularized: false,
        sample_every: 1,
    };
    let cfg = LifespanConfig {
        solver,
        growth_factor: a.growth,
    };
    let [u0, n0, n1] = focusing_gaussian(solver.n, solver.box_length, a.amplitude)?;
    let r = lifespan_probe(&u0, &n0, &n1, &a.mu, &cfg)?;
    let mut text = String::new();
    let rows = r
        .runs
        .iter()
        .map(|x| {
            text.push_str(&format!(
                "mu = {}: departure {}\n",
                x.mu,
                x.departure.map_or("none within budget".into(), |t| format!("{t:.6}"))
            ));
            vec![num(x.mu), opt_num(x.departure)]
        })
        .collect();
    text.push_str(&match r.slope {
        Some(s) => format!("slope {s:.4} (reference {}){}\n", r.reference_slope, if r.inconclusive { ", inconclusive" } else { "" }),
        None => "slope undetermined: inconclusive\n".into(),
    });
    Ok(Outcome {
        result: json!({ "report": r }),
        resolved: json!({ "lifespan": cfg, "amplitude": a.amplitude }),
        text,
        csv: Some((vec!["mu", "departure"], rows)),
        status: Status::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use zakharov_core::param_region::parse_rational;

    fn rq(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn violated_l_values() {
        let pt = ParamPoint::new(rq("0"), rq("-1/2"), rq("2"), rq("5/8"), rq("5/8")).unwrap();
        assert_eq!(violated_l(Family::S, &pt), rq("-3/4"));
        assert_eq!(violated_l(Family::W, &pt), rq("0"));
    }

    #[test]
    fn tiers_order_the_radius() {
        let [a, b, c] = [Tier::Quick, Tier::Standard, Tier::Thorough].map(|t| scan_config(t, None, None));
        assert!(a.radius < b.radius && b.radius < c.radius);
        assert_eq!(b.radius, 200.0);
        assert_eq!(scan_config(Tier::Quick, Some(7.0), Some(2)).radius, 7.0);
    }
}
