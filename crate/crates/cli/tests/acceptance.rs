//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Runs without the libtest harness so the lines always print.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde_json::Value;
use zakharov_core::grid_spaces::{dilate, hat_norm_dot, GridFunction};
use zakharov_core::kernel_verifier::{
    cp_sup, trilinear_trials, Family, KernelSpec, ScanConfig, Sign, Verdict,
};
use zakharov_core::param_region::{
    admissible, b_window, optimize_global, parse_rational, scaling_exponents, ParamPoint, Rational,
};
use zakharov_core::zakharov_solver::{
    evolve, focusing_gaussian, lifespan_probe, lipschitz_probe, self_convergence, LifespanConfig,
    NormSpec, SolverConfig, ZakharovState,
};

fn q(s: &str) -> Rational {
    parse_rational(s).expect("literal")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn zlab(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_zlab"))
        .args(args)
        .arg("--json")
        .output()
        .expect("zlab runs");
    let line = String::from_utf8(out.stdout).expect("utf-8");
    let v = serde_json::from_str(line.trim()).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), v)
}

fn c1_exact_optimum() -> Outcome {
    let o = optimize_global();
    let lib = o.p_star == q("12/7")
        && o.l_star == q("-7/12")
        && o.k_inf == q("-1/12")
        && o.b1_ceiling == q("3/4")
        && o.bounds_coincide;
    let (code, v) = zlab(&["optimize"]);
    let r = &v["result"];
    let cli = code == 0
        && r["p_star"] == "12/7"
        && r["l_star"] == "-7/12"
        && r["k_inf"] == "-1/12"
        && r["b1_ceiling"] == "3/4";
    check(
        lib && cli,
        format!(
            "(p, l, k_inf) = ({}, {}, {}), b1 ceiling {}; cli exit {code}",
            o.p_star, o.l_star, o.k_inf, o.b1_ceiling
        ),
    )
}

fn c2_scaling_exponents() -> Outcome {
    let cases = [
        (("0", "-1/2", "2"), ("0", "-1/2")),
        (("-1/12", "-7/12", "12/7"), ("-1/6", "-2/3")),
        (("0", "-2/3", "3/2"), ("-1/6", "-5/6")),
    ];
    let mut ok = true;
    let mut got = Vec::new();
    for ((k, l, p), (sig, lam)) in cases {
        let s = scaling_exponents(q(k), q(l), q(p));
        ok &= s.sigma == q(sig) && s.lambda == q(lam);
        got.push(format!("({}, {})", s.sigma, s.lambda));
    }
    check(ok, got.join(" "))
}

fn c3_fixed_line() -> Outcome {
    let at = |p: &str| {
        let p = q(p);
        let b = p.recip() + q("1/100");
        let pt = ParamPoint::new(q("0"), -p.recip(), p, b, b).expect("in domain");
        admissible(&pt).expect("valid").admissible
    };
    let good = ["31/20", "8/5", "7/4", "2"].map(at);
    let bad = at("3/2");
    check(
        good.iter().all(|&x| x) && !bad,
        format!("admissible at 31/20, 8/5, 7/4, 2: {good:?}; at 3/2: {bad}"),
    )
}

fn c4_dilation() -> Outcome {
    let u0 = GridFunction::sample_1d(4096, 64.0, |x| Complex64::new((-x * x / 2.0).exp(), 0.0))
        .expect("grid");
    let mut worst = 0.0f64;
    // (k, p, amplitude exponent, expected exponent of μ)
    let cases = [
        (0.0, 2.0, 1.5, 1.0),
        (-1.0 / 12.0, 2.0, 1.5, 11.0 / 12.0),
        (-1.0 / 12.0, 12.0 / 7.0, 1.5, -1.0 / 12.0 - 7.0 / 12.0 + 1.5),
        (0.0, 12.0 / 7.0, 1.5, -7.0 / 12.0 + 1.5),
    ];
    for (k, p, a, e) in cases {
        let base = hat_norm_dot(&u0, k, p).expect("norm");
        for mu in [2.0, 4.0] {
            let d = dilate(&u0, mu, a).expect("dilate");
            let ratio = hat_norm_dot(&d, k, p).expect("norm") / base;
            let want = f64::powf(mu, e);
            worst = worst.max((ratio / want - 1.0).abs());
        }
    }
    check(worst < 1e-4, format!("max relative deviation {worst:.2e}"))
}

fn c5_trilinear() -> Outcome {
    let pts: [(f64, [f64; 5]); 3] = [
        (1.5, [0.0, -2.0 / 3.0, 1.5, 0.75, 0.75]),
        (12.0 / 7.0, [-91.0 / 1200.0, -7.0 / 12.0, 12.0 / 7.0, 237.0 / 320.0, 237.0 / 320.0]),
        (2.0, [0.0, -0.5, 2.0, 0.625, 0.625]),
    ];
    let mut violations = 0;
    let mut trials = 0;
    let mut max_ratio = 0.0f64;
    let mut ext = Vec::new();
    for (i, (_, [k, l, p, b, b1])) in pts.into_iter().enumerate() {
        for (j, (family, sign)) in [
            (Family::S, Sign::Plus),
            (Family::S, Sign::Minus),
            (Family::W, Sign::Plus),
            (Family::W, Sign::Minus),
        ]
        .into_iter()
        .enumerate()
        {
            let c = match family {
                Family::S => 1.0 - b1 - 0.01,
                Family::W => 1.0 - b - 0.01,
            };
            let spec = KernelSpec { family, sign, k, l, p, b, b1, c };
            let seed = (10 * i + j) as u64;
            let s = trilinear_trials(&spec, [64, 64], [PI, 0.7], 50, seed, 10).expect("suite");
            violations += s.violations;
            trials += s.trials;
            max_ratio = max_ratio.max(s.max_ratio);
            ext.push(s.extremizer_ratio);
        }
    }
    let ext_max = ext.iter().copied().fold(0.0, f64::max);
    check(
        violations == 0,
        format!(
            "{trials} trials, {violations} violations; max lhs/rhs {max_ratio:.4}, near-extremizer lhs/rhs up to {ext_max:.4}"
        ),
    )
}

fn mid_point(k: &str, l: &str, p: &str) -> ParamPoint {
    let b = b_window(q(k), q(l), q(p))
        .expect("window")
        .midpoint()
        .expect("nonempty window");
    ParamPoint::new(q(k), q(l), q(p), b, b).expect("in domain")
}

const ALL: [(Family, Sign); 4] = [
    (Family::S, Sign::Plus),
    (Family::S, Sign::Minus),
    (Family::W, Sign::Plus),
    (Family::W, Sign::Minus),
];

fn c6_saturation() -> Outcome {
    let cfg = ScanConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, pt) in [
        ("corner", mid_point("0", "-1/2", "2")),
        ("rough", mid_point("-91/1200", "-7/12", "12/7")),
    ] {
        for (family, sign) in ALL {
            let spec = KernelSpec::from_point(family, sign, &pt, 0.01);
            let d = cp_sup(&spec, &cfg).expect("scan");
            let last = *d.ratios.last().expect("ladder");
            ok &= d.verdict == Verdict::Saturating;
            parts.push(format!("{name} {family}{sign} {} ({last:.3})", d.verdict));
        }
    }
    check(ok, format!("R = {}: {}", cfg.radius, parts.join("; ")))
}

fn c7_divergence() -> Outcome {
    let cfg = ScanConfig::default();
    let base = mid_point("0", "-1/2", "2");
    let mut ok = true;
    let mut parts = Vec::new();
    for (family, sign) in ALL {
        let l = match family {
            Family::S => -base.inv_p() - q("1/4"),
            Family::W => Rational::from_integer(2) * base.k - base.p_prime().recip() + q("1/2"),
        };
        let pt = ParamPoint { l, ..base };
        let spec = KernelSpec::from_point(family, sign, &pt, 0.01);
        let d = cp_sup(&spec, &cfg).expect("scan");
        let min = d.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= d.verdict == Verdict::Diverging;
        parts.push(format!("{family}{sign} l={l} {} (min ratio {min:.3})", d.verdict));
    }
    check(ok, parts.join("; "))
}

fn c8_solver() -> Outcome {
    let (a, kappa, nu) = (0.7, 3.0, 0.4);
    let n = 256;
    let l = 2.0 * PI;
    let grid = |g: &dyn Fn(f64) -> Complex64| GridFunction::sample_1d(n, l, g).expect("grid");
    let u0 = grid(&|x| Complex64::from_polar(a, kappa * x));
    let n0 = grid(&|_| Complex64::new(nu, 0.0));
    let n1 = grid(&|_| Complex64::new(0.0, 0.0));
    let cfg = SolverConfig {
        n,
        box_length: l,
        dt: 1e-3,
        t_end: 1.0,
        regularized: true,
        sample_every: 100,
    };
    let tr = evolve(&u0, &n0, &n1, &cfg, &NormSpec::default()).expect("evolve");
    let t = tr.final_state.t;
    let err = tr
        .final_state
        .u_samples()
        .iter()
        .zip(u0.positions(0))
        .map(|(u, x)| (u - Complex64::from_polar(a, kappa * x - (kappa * kappa + nu) * t)).norm())
        .fold(0.0, f64::max);

    let smooth = |n: usize, l: f64| {
        [
            GridFunction::sample_1d(n, l, |x| Complex64::from_polar((-x * x).exp(), 0.5 * x)),
            GridFunction::sample_1d(n, l, |x| Complex64::new(0.5 * (-(x - 1.0).powi(2)).exp(), 0.0)),
            GridFunction::sample_1d(n, l, |x| Complex64::new(-x * (-x * x).exp(), 0.0)),
        ]
        .map(|g| g.expect("grid"))
    };
    let [s0, m0, m1] = smooth(256, 20.0);
    let state = ZakharovState::from_data(&s0, &m0, &m1, true).expect("state");
    let conv = self_convergence(
        &state,
        &SolverConfig {
            n: 256,
            box_length: 20.0,
            dt: 0.02,
            t_end: 0.5,
            regularized: true,
            sample_every: 1,
        },
    )
    .expect("convergence");

    let [s0, m0, m1] = smooth(512, 20.0);
    let mcfg = SolverConfig {
        n: 512,
        box_length: 20.0,
        dt: 1e-3,
        t_end: 0.5,
        regularized: true,
        sample_every: 10,
    };
    let mtr = evolve(&s0, &m0, &m1, &mcfg, &NormSpec::default()).expect("evolve");
    let drift = mtr.mass_drift();
    check(
        err < 1e-8 && (conv.order - 4.0).abs() <= 0.3 && drift < 1e-8,
        format!(
            "closed-form error {err:.2e}; order {:.3}; mass drift {drift:.2e}",
            conv.order
        ),
    )
}

fn c9_lipschitz() -> Outcome {
    let cfg = SolverConfig {
        n: 256,
        box_length: 2.0 * PI,
        dt: 1e-3,
        t_end: 0.5,
        regularized: true,
        sample_every: 10,
    };
    let r = lipschitz_probe(&NormSpec::default(), 1.0, &[1e-2, 1e-3, 1e-4], &[0, 1, 2, 3, 4], &cfg)
        .expect("probe");
    let all = r.entries.iter().all(|e| e.ratio.is_some() && e.blow_up.is_none());
    check(
        all && r.spread <= 2.0,
        format!("{} ratios, max/min {:.4}", r.entries.len(), r.spread),
    )
}

fn c10_lifespan() -> Outcome {
    let solver = SolverConfig {
        n: 1024,
        box_length: 40.0,
        dt: 1e-3,
        t_end: 4.0,
        regularized: false,
        sample_every: 1,
    };
    let [u0, n0, n1] = focusing_gaussian(solver.n, solver.box_length, 3.0).expect("data");
    let r = lifespan_probe(
        &u0,
        &n0,
        &n1,
        &[1.0, 2.0, 4.0],
        &LifespanConfig {
            solver,
            growth_factor: 2.0,
        },
    )
    .expect("probe");
    let times: Vec<String> = r
        .runs
        .iter()
        .map(|x| x.departure.map_or("none".into(), |t| format!("{t:.4}")))
        .collect();
    match r.slope {
        Some(s) if !r.inconclusive => check(
            (s + 2.0).abs() <= 0.5,
            format!("departures {}; slope {s:.3}", times.join(", ")),
        ),
        _ => check(false, format!("inconclusive; departures {}", times.join(", "))),
    }
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "exact optimum", Duration::from_secs(1), c1_exact_optimum),
        (2, "scaling exponents", Duration::from_secs(1), c2_scaling_exponents),
        (3, "fixed-line admissibility", Duration::from_secs(1), c3_fixed_line),
        (4, "dilation law", Duration::from_secs(10), c4_dilation),
        (5, "trilinear Hölder bound", Duration::from_secs(300), c5_trilinear),
        (6, "kernel saturation inside the region", Duration::from_secs(1800), c6_saturation),
        (7, "kernel divergence outside the region", Duration::from_secs(1800), c7_divergence),
        (8, "solver correctness", Duration::from_secs(300), c8_solver),
        (9, "Lipschitz probe consistency", Duration::from_secs(900), c9_lipschitz),
        (10, "lifespan scaling", Duration::from_secs(900), c10_lifespan),
    ];
    let mut failed = 0;
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_budget = took <= budget;
        let pass = out.pass && in_budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.2} s / {} s budget{}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
