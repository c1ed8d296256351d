use std::f64::consts::PI;

use num_complex::Complex64;
use zakharov_core::grid_spaces::{hat_norm, rough_data, GridFunction, RoughDataSpec};
use zakharov_core::kernel_verifier::{cp_sup, Family, KernelSpec, OuterGrid, ScanConfig, Sign, Verdict};
use zakharov_core::param_region::{b_window, parse_rational, ParamPoint};
use zakharov_core::zakharov_solver::{
    evolve, focusing_gaussian, lifespan_probe, to_first_order, LifespanConfig, NormSpec,
    SolverConfig, ZakharovState,
};

fn q(s: &str) -> zakharov_core::param_region::Rational {
    parse_rational(s).unwrap()
}

#[test]
fn window_midpoint_feeds_a_kernel_scan() {
    let (k, l, p) = (q("0"), q("-1/2"), q("2"));
    let b = b_window(k, l, p).unwrap().midpoint().unwrap();
    assert_eq!(b, q("5/8"));
    let pt = ParamPoint::new(k, l, p, b, b).unwrap();
    let spec = KernelSpec::from_point(Family::S, Sign::Plus, &pt, 0.01);
    let cfg = ScanConfig {
        radius: 64.0,
        levels: 3,
        grid: OuterGrid {
            steps_per_octave: 1,
            ..OuterGrid::default()
        },
        ..ScanConfig::default()
    };
    let d = cp_sup(&spec, &cfg).unwrap();
    assert_eq!(d.values.len(), 3);
    assert!(d.values.windows(2).all(|w| w[1] >= w[0]));
    assert_ne!(d.verdict, Verdict::Diverging);
}

#[test]
fn rough_data_evolves_with_real_density() {
    let cfg = SolverConfig {
        n: 128,
        t_end: 0.1,
        ..SolverConfig::default()
    };
    let u0 = rough_data(&RoughDataSpec::new(0.0, 2.0, 128, 4)).unwrap();
    let n0 = rough_data(&RoughDataSpec {
        real: true,
        ..RoughDataSpec::new(-0.5, 2.0, 128, 5)
    })
    .unwrap();
    let n1 = rough_data(&RoughDataSpec {
        real: true,
        ..RoughDataSpec::new(-1.5, 2.0, 128, 6)
    })
    .unwrap();
    let tr = evolve(&u0, &n0, &n1, &cfg, &NormSpec::default()).unwrap();
    assert!(tr.completed());
    assert!(tr.samples.iter().all(|s| s.max_imag_n < 1e-10));
    // data are dealiased first, so the initial norm can only drop
    assert!(tr.samples[0].u_norm <= hat_norm(&u0, 0.0, 2.0).unwrap() * (1.0 + 1e-12));
}

#[test]
fn first_order_split_recovers_the_density() {
    let n0 = GridFunction::sample_1d(64, 2.0 * PI, |x| Complex64::new(x.cos(), 0.0)).unwrap();
    let n1 = GridFunction::sample_1d(64, 2.0 * PI, |x| Complex64::new((2.0 * x).sin(), 0.0)).unwrap();
    let u0 = GridFunction::sample_1d(64, 2.0 * PI, |_| Complex64::new(0.0, 0.0)).unwrap();
    let (np, nm) = to_first_order(&n0, &n1, false).unwrap();
    let state = ZakharovState::from_grids(&u0, &np, &nm).unwrap();
    for (a, b) in state.n_samples().iter().zip(n0.samples()) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn unit_dilation_reproduces_the_plain_departure() {
    let solver = SolverConfig {
        n: 512,
        box_length: 40.0,
        dt: 2e-3,
        t_end: 2.0,
        regularized: false,
        sample_every: 1,
    };
    let [u0, n0, n1] = focusing_gaussian(512, 40.0, 3.0).unwrap();
    let cfg = LifespanConfig {
        solver,
        growth_factor: 2.0,
    };
    let a = lifespan_probe(&u0, &n0, &n1, &[1.0], &cfg).unwrap();
    let b = lifespan_probe(&u0, &n0, &n1, &[1.0, 1.0], &cfg).unwrap();
    let t = a.runs[0].departure.unwrap();
    assert!(t > 0.5 && t < 2.0);
    assert_eq!(b.runs[1].departure, Some(t));
    assert!(b.slope.is_none());
}
