use std::f64::consts::PI;

use num_complex::Complex64;
use transverse_core::models::ModelSpec;
use transverse_core::simulate::{self, Dynamics, Grid2d, Perturbation, SimConfig, SimModel, Solver};
use transverse_core::specfind::{self, TraceOptions};
use transverse_core::spectral::Grid1d;
use transverse_core::evans::EvansParams;

const K0: f64 = 0.288_675_134_594_812_9;

fn evolve(dt: f64, t: f64) -> Vec<Complex64> {
    let grid = Grid2d::new(128, 8, 20.0, 2.0 * PI / K0).unwrap();
    let sim = SimModel::Gkp1 { p: 2 };
    let mut solver = Solver::new(sim, grid, Dynamics::Nonlinear, true);
    let mut u = solver.background_field();
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let x = grid.x(ix) - 2.0;
            u[iy * grid.nx + ix].re += 0.05 * (K0 * grid.y(iy)).cos() / x.cosh().powi(2);
        }
    }
    solver.set_physical(&u);
    let n = (t / dt).round() as usize;
    for _ in 0..n {
        solver.step(dt).unwrap();
    }
    solver.physical()
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn time_stepper_is_fourth_order() {
    let u: Vec<_> = [0.02, 0.01, 0.005, 0.0025].iter().map(|&dt| evolve(dt, 2.0)).collect();
    let e: Vec<f64> = u.windows(2).map(|w| dist(&w[0], &w[1])).collect();
    for w in e.windows(2) {
        let r = w[0] / w[1];
        assert!((10.0..24.0).contains(&r), "ratios {e:?}");
    }
}

fn mode_config(dynamics: Dynamics, delta: f64) -> SimConfig {
    let model = ModelSpec::gkp1(2).unwrap();
    let grid = Grid2d::new(256, 32, 40.0, 2.0 * PI / K0).unwrap();
    let sigma = specfind::refine_root(&model, K0, Complex64::new(0.19, 0.0), &EvansParams::default())
        .unwrap()
        .sigma;
    let (pert, _) = simulate::eigenmode_perturbation(&model, K0, sigma, &grid).unwrap();
    let mut cfg = SimConfig::new(model, grid, 0.01, 60.0);
    cfg.perturbation = pert;
    cfg.delta = delta;
    cfg.dynamics = dynamics;
    cfg.snapshot_every = 1000;
    cfg
}

#[test]
fn small_perturbations_follow_the_linear_flow() {
    let lin = simulate::run_instability_experiment(&mode_config(Dynamics::Linearized, 1e-6)).unwrap();
    let non = simulate::run_instability_experiment(&mode_config(Dynamics::Nonlinear, 1e-6)).unwrap();
    let (gl, gn) = (lin.growth.unwrap().rate, non.growth.unwrap().rate);
    assert!((gl - gn).abs() / gl < 1e-3, "{gl} vs {gn}");
    assert!((gl - 0.192_450).abs() < 1e-3, "{gl}");
    for (a, b) in lin.series.iter().zip(&non.series) {
        if a.norm_perp <= 1e-2 {
            assert!((a.norm_perp - b.norm_perp).abs() <= 0.01 * a.norm_perp, "t = {}", a.t);
        }
    }
    assert!(non.x_mean_drift < 1e-10, "{}", non.x_mean_drift);
    assert!(!non.snapshots.is_empty());
    for s in &non.snapshots {
        let back = simulate::decode_snapshot(&simulate::encode_snapshot(s)).unwrap();
        assert_eq!(back.fields, s.fields);
        assert_eq!(back.t, s.t);
    }
}

#[test]
fn incommensurate_mode_is_rejected() {
    let mut cfg = mode_config(Dynamics::Nonlinear, 1e-4);
    cfg.grid = Grid2d::new(256, 32, 40.0, 2.0 * PI / K0 * 1.1).unwrap();
    assert!(simulate::run_instability_experiment(&cfg).is_err());
    cfg.perturbation = Perturbation::None;
    cfg.delta = 0.0;
    cfg.dt = 1.0;
    assert!(simulate::run_instability_experiment(&cfg).is_err());
}

#[test]
fn packet_exponent_is_insensitive_to_interval_width() {
    let model = ModelSpec::gkp1(2).unwrap();
    let params = EvansParams::default();
    let curve = specfind::trace_dispersion(&model, 0.02, 0.6, 30, &params, &TraceOptions::default()).unwrap();
    let s0 = curve.sigma0.re;
    let power = 1.0 / (2.0 * curve.m as f64);
    let times: Vec<f64> = (0..=20).map(|i| (10.0 + i as f64) / s0).collect();
    let mut rates = Vec::new();
    for half in [0.1, 0.05] {
        let modes = simulate::packet_modes(
            &model,
            &curve,
            (curve.k0 - half, curve.k0 + half),
            41,
            Grid1d::new(512, 80.0),
            &params,
        )
        .unwrap();
        let p0 = simulate::wave_packet(&modes, 0.0);
        assert!((p0.norm - p0.quadrature_norm).abs() < 1e-10 * p0.norm);
        rates.push(simulate::fit_packet_exponent(&modes, power, &times).unwrap());
    }
    assert!((rates[0] - rates[1]).abs() / rates[1] < 0.01, "{rates:?}");
}

#[test]
fn growth_rate_is_resolution_robust() {
    let coarse = simulate::run_instability_experiment(&mode_config(Dynamics::Nonlinear, 1e-4)).unwrap();
    let model = ModelSpec::gkp1(2).unwrap();
    let mut fine = mode_config(Dynamics::Nonlinear, 1e-4);
    fine.grid = Grid2d::new(512, 64, 40.0, 2.0 * PI / K0).unwrap();
    let sigma = match &fine.perturbation {
        Perturbation::Eigenmode { sigma, .. } => *sigma,
        _ => unreachable!(),
    };
    fine.perturbation = simulate::eigenmode_perturbation(&model, K0, sigma, &fine.grid).unwrap().0;
    fine.snapshot_every = 0;
    let fine = simulate::run_instability_experiment(&fine).unwrap();
    let (a, b) = (coarse.growth.unwrap().rate, fine.growth.unwrap().rate);
    assert!((a - b).abs() <= 0.02 * a, "{a} vs {b}");
}
