//! Acceptance criteria, one pass/fail line each. Runs as a plain binary so the lines are always
//! printed; exits non-zero if any criterion fails.

use std::f64::consts::{LN_10, PI};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transverse_core::colloc::{self, CriterionOptions, OracleOptions, TrigBasis};
use transverse_core::evans::{self, EvansParams};
use transverse_core::models::ModelSpec;
use transverse_core::odecore;
use transverse_core::simulate::{self, CorrectorOptions, Grid2d, SimConfig};
use transverse_core::specfind::{self, DispersionCurve, Rect, TraceOptions};
use transverse_core::spectral::Grid1d;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn nls_anchor() -> Outcome {
    let start = Instant::now();
    // First block −∂² + 1 − 3Q² assembled directly from the trigonometric basis.
    let grid = Grid1d::new(512, 40.0);
    let basis = TrigBasis::new(grid, true);
    let q2: Vec<f64> = grid.points().map(|x| -3.0 * 2.0 / x.cosh().powi(2)).collect();
    let l1 = basis.multiplier(|xi| c(xi * xi + 1.0, 0.0)) + basis.potential(&q2);
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(l1).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let full = colloc::spectrum_l(&ModelSpec::nls(), 512, 40.0).expect("spectrum");
    let near = |v: &[f64], t: f64| v.iter().map(|e| (e - t).abs()).fold(f64::INFINITY, f64::min);
    let err = near(&eig, -3.0).max(near(&eig, 0.0)).max(near(&full.eigenvalues, -3.0)).max(near(&full.eigenvalues, 0.0));
    let elapsed = start.elapsed();
    outcome(
        err <= 1e-3 && elapsed < Duration::from_secs(10),
        format!("lowest {:.6} {:.6}, max error {err:.2e}, {:.1}s", eig[0], eig[1], elapsed.as_secs_f64()),
    )
}

fn nls_band_edge() -> Outcome {
    let start = Instant::now();
    let crit = colloc::find_k0_criterion(&ModelSpec::nls(), &CriterionOptions::default())
        .expect("criterion")
        .expect("crossing");
    let rect = Rect::default_search();
    let opts = OracleOptions::default();
    let at_18 = colloc::oracle_eigs(&ModelSpec::nls(), 1.8, &rect, &opts).expect("oracle");
    let at_10 = colloc::oracle_eigs(&ModelSpec::nls(), 1.0, &rect, &opts).expect("oracle");
    let elapsed = start.elapsed();
    let ok = (crit.k0 - 3.0_f64.sqrt()).abs() <= 1e-2
        && crit.criterion_valid
        && at_18.localized.is_empty()
        && at_10.localized.len() == 1
        && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "k0 = {:.6}, unstable modes at k=1.8: {}, at k=1.0: {}, {:.1}s",
            crit.k0,
            at_18.localized.len(),
            at_10.localized.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn evans_oracle(params: &EvansParams) -> Outcome {
    let start = Instant::now();
    let rect = Rect::default_search();
    let mut worst: f64 = 0.0;
    let mut counts = true;
    let mut lines = Vec::new();
    for (model, ks) in [(ModelSpec::nls(), [0.5, 1.0, 1.5]), (ModelSpec::gkp1(2).unwrap(), [0.2, 0.3, 0.4])] {
        for k in ks {
            let oracle = colloc::oracle_eigs(&model, k, &rect, &OracleOptions::default()).expect("oracle");
            let winding = specfind::trace_with_retry(&model, k, &rect, params).expect("trace").winding();
            counts &= winding == oracle.localized.len() as i64;
            let root = specfind::find_unstable_sigma(&model, k, &rect, params).expect("root");
            match (root, oracle.localized.first()) {
                (Some(r), Some(o)) => {
                    let e = (r.sigma - o).norm() / (1.0 + o.norm());
                    worst = worst.max(e);
                    lines.push(format!("{}@{k}: {:.6}", model.name, r.sigma.re));
                }
                _ => counts = false,
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-3 && counts && elapsed < Duration::from_secs(300),
        format!("max rel diff {worst:.2e}, counts match {counts}, [{}], {:.1}s", lines.join(", "), elapsed.as_secs_f64()),
    )
}

fn uniqueness(params: &EvansParams) -> Outcome {
    let rect = Rect::default_search();
    let mut max_w = 0;
    let mut beyond = 0;
    for model in ModelSpec::registry() {
        let kk = model.coercivity_k();
        for j in 1..=8 {
            let k = 1.2 * kk * j as f64 / 8.0;
            let w = specfind::trace_with_retry(&model, k, &rect, params).expect("trace").winding();
            max_w = max_w.max(w.abs());
            if k >= kk {
                beyond = beyond.max(w.abs());
            }
        }
    }
    let gk = ModelSpec::gkp1(2).unwrap();
    let w35 = specfind::trace_with_retry(&gk, 3.5, &Rect::new(0.05, 3.0, -5.0, 5.0), params)
        .expect("trace")
        .winding();
    outcome(
        max_w <= 1 && beyond == 0 && w35 == 0,
        format!("max winding {max_w}, beyond K_model {beyond}, gkp1 k=3.5: {w35}"),
    )
}

fn conservation(params: &EvansParams) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let points = [
        (ModelSpec::gkp1(2).unwrap(), [0.2, 0.35]),
        (ModelSpec::nls(), [0.7, 1.3]),
        (ModelSpec::zk(), [0.4, 0.8]),
        (ModelSpec::kpbbm(2.0, 2).unwrap(), [0.1, 0.25]),
        (ModelSpec::boussinesq(0.75).unwrap(), [0.08, 0.14]),
    ];
    for (model, ks) in points {
        for k in ks {
            let root = specfind::find_unstable_sigma(&model, k, &Rect::default_search(), params)
                .expect("root")
                .expect("unstable mode");
            let mode = specfind::mode_reconstruct(&model, k, root.sigma, None).expect("mode");
            worst = worst.max(mode.conservation / mode.h1_norm_sq);
            n += 1;
        }
    }
    outcome(worst <= 1e-6, format!("{n} modes, max |(U,LU)+(U,SU)|/|U|_H1^2 = {worst:.2e}"))
}

fn slow_root() -> Outcome {
    let model = ModelSpec::gkp1(2).unwrap();
    let sigma = 1.0;
    let mut worst: f64 = 0.0;
    for k in [0.01, 0.03, 0.1] {
        let sp = odecore::spatial_eigenvalues(&model, c(sigma, 0.0), k).expect("roots");
        let r = sp.smallest_root();
        worst = worst.max((r - c(-k * k / sigma, 0.0)).norm() / (k * k / sigma));
    }
    outcome(worst <= 0.05, format!("max relative deviation {worst:.3e}"))
}

fn conjugate_symmetry(params: &EvansParams) -> Outcome {
    let mut worst: f64 = 0.0;
    for model in ModelSpec::registry() {
        for re in [0.2, 0.5, 0.9, 1.4, 2.0] {
            for k in [0.1, 0.3, 0.6, 0.9, 1.2] {
                let s = c(re, 0.7 * re - 0.3);
                let a = evans::evans_eval(&model, s, k, params).expect("D");
                let b = evans::evans_eval(&model, s.conj(), k, params).expect("D");
                let q = b.mantissa / a.mantissa.conj() * (b.log_scale - a.log_scale).exp();
                worst = worst.max((q - 1.0).norm());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |D(conj s) - conj D(s)|/|D| = {worst:.2e}"))
}

fn analyticity(params: &EvansParams) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut zero_free = true;
    for model in ModelSpec::registry() {
        for (center, radius, k) in [(c(1.0, 0.5), 0.25, 0.5), (c(2.0, -1.5), 0.5, 0.25), (c(0.7, 3.0), 0.4, 1.5)] {
            let r = evans::analyticity_check(&model, k, center, radius, 64, params).expect("circle");
            zero_free &= r.winding == 0 && !r.inconclusive;
            worst = worst.max(r.residual);
        }
    }
    outcome(worst <= 1e-6 && zero_free, format!("max Cauchy residual {worst:.2e}, zero-free {zero_free}"))
}

fn boussinesq_splitting() -> Outcome {
    let model = ModelSpec::boussinesq(0.75).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_re = f64::INFINITY;
    for _ in 0..20 {
        let s = c(rng.random_range(0.1..2.0), rng.random_range(-2.0..2.0));
        for k in [0.0, 0.5, 1.0] {
            let sp = odecore::spatial_eigenvalues(&model, s, k).expect("roots");
            min_re = sp.roots.iter().map(|r| r.re.abs()).fold(min_re, f64::min);
        }
    }
    outcome(min_re > 1e-6, format!("min |Re lambda| = {min_re:.3e}"))
}

fn gap_ratio(params: &EvansParams) -> Outcome {
    let t = evans::continuation_ratio(
        &ModelSpec::gkp1(2).unwrap(),
        &[c(0.5, 0.0), c(1.0, 0.0)],
        &[0.02, 0.04, 0.06, 0.08],
        params,
    )
    .expect("ratio");
    let r: Vec<String> = t.limits.iter().map(|(s, r)| format!("r({}) = {:.6}", s.re, r)).collect();
    outcome(t.spread <= 0.05, format!("{}, spread {:.2e}", r.join(", "), t.spread))
}

struct Unstable {
    curve: DispersionCurve,
    k0: f64,
    sigma0: Complex64,
}

fn most_unstable(params: &EvansParams) -> Unstable {
    let model = ModelSpec::gkp1(2).unwrap();
    let curve = specfind::trace_dispersion(&model, 0.02, 0.6, 30, params, &TraceOptions::default()).expect("curve");
    let root = specfind::refine_root(&model, curve.k0, curve.sigma0, params).expect("root");
    Unstable {
        k0: curve.k0,
        sigma0: root.sigma,
        curve,
    }
}

fn sim_config(u: &Unstable, delta: f64) -> SimConfig {
    let model = ModelSpec::gkp1(2).unwrap();
    let grid = Grid2d::new(256, 32, 40.0, 2.0 * PI / u.k0).unwrap();
    let (pert, _) = simulate::eigenmode_perturbation(&model, u.k0, u.sigma0, &grid).expect("mode");
    let mut cfg = SimConfig::new(model, grid, 0.01, 200.0);
    cfg.perturbation = pert;
    cfg.delta = delta;
    cfg
}

fn nonlinear_growth(u: &Unstable) -> Outcome {
    let start = Instant::now();
    let report = simulate::run_instability_experiment(&sim_config(u, 1e-4)).expect("run");
    let g = report.growth.map_or(f64::NAN, |g| g.rate);
    let err = (g - u.sigma0.re).abs() / u.sigma0.re;
    let mut control = sim_config(u, 1e-4);
    control.perturbation = simulate::Perturbation::None;
    control.delta = 0.0;
    control.t_max = 10.0;
    let drift = simulate::run_instability_experiment(&control).expect("control").max_background_deviation;
    let elapsed = start.elapsed();
    outcome(
        err <= 0.10 && drift <= 1e-6 && elapsed < Duration::from_secs(300),
        format!(
            "g = {g:.5} vs Re sigma0 = {:.5} (rel {err:.2e}), control drift {drift:.2e}, {:.1}s",
            u.sigma0.re,
            elapsed.as_secs_f64()
        ),
    )
}

fn t_delta_scaling(u: &Unstable) -> Outcome {
    let mut t = Vec::new();
    let mut d = Vec::new();
    for delta in [1e-3, 1e-4, 1e-5] {
        let r = simulate::run_instability_experiment(&sim_config(u, delta)).expect("run");
        t.push(r.t_delta.unwrap_or(f64::NAN));
        d.push(r.distance_at_t_delta.unwrap_or(f64::NAN));
    }
    let expected = LN_10 / u.sigma0.re;
    let diff_err = [(t[1] - t[0]), (t[2] - t[1])]
        .iter()
        .map(|x| (x - expected).abs() / expected)
        .fold(0.0, f64::max);
    let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (dmax - dmin) / dmin;
    outcome(
        diff_err <= 0.15 && spread < 0.5,
        format!("T = {:.3?}, expected step {expected:.3} (rel {diff_err:.2e}), d spread {spread:.2e}", t),
    )
}

fn packet_bounds(u: &Unstable, params: &EvansParams) -> Outcome {
    let model = ModelSpec::gkp1(2).unwrap();
    let interval = (u.k0 - 0.1, u.k0 + 0.1);
    let modes = simulate::packet_modes(&model, &u.curve, interval, 41, Grid1d::new(512, 80.0), params).expect("modes");
    let s0 = u.curve.sigma0.re;
    let times: Vec<f64> = (0..=12).map(|i| i as f64 * 0.25 / s0).collect();
    let ratios = simulate::packet_bound_ratios(&modes, u.curve.m, s0, &times);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        lo >= 1.0 / 3.0 && hi <= 3.0,
        format!("m = {}, normalized ratio in [{lo:.3}, {hi:.3}]", u.curve.m),
    )
}

fn first_corrector(u: &Unstable) -> Outcome {
    let model = ModelSpec::gkp1(2).unwrap();
    let mode = specfind::mode_reconstruct(&model, u.k0, u.sigma0, Some(Grid1d::new(256, 40.0))).expect("mode");
    let s = u.sigma0.re;
    let times: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1 / s).collect();
    let corr = simulate::first_corrector(&model, &mode, &times, &CorrectorOptions::default()).expect("corrector");
    let ratio = corr.exponent.map_or(f64::NAN, |e| e.rate / s);
    outcome((1.8..=2.1).contains(&ratio), format!("exponent / Re sigma0 = {ratio:.4}, u1(0) = {:.1e}", corr.norms[0]))
}

fn main() {
    let params = EvansParams::default();
    let mut failures = 0;
    let mut report = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        if !o.passed {
            failures += 1;
        }
        println!(
            "criterion {n:>2} {:<28} {}  {} [{:.1}s]",
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "nls spectral anchor", &mut nls_anchor);
    report(2, "nls band edge", &mut nls_band_edge);
    report(3, "evans-oracle equivalence", &mut || evans_oracle(&params));
    report(4, "uniqueness and exclusion", &mut || uniqueness(&params));
    report(5, "conservation law", &mut || conservation(&params));
    report(6, "small-k root asymptote", &mut slow_root);
    report(7, "conjugate symmetry", &mut || conjugate_symmetry(&params));
    report(8, "analyticity", &mut || analyticity(&params));
    report(9, "boussinesq splitting", &mut boussinesq_splitting);
    report(10, "gap-lemma ratio", &mut || gap_ratio(&params));
    let unstable = most_unstable(&params);
    report(11, "nonlinear growth", &mut || nonlinear_growth(&unstable));
    report(12, "T-delta scaling", &mut || t_delta_scaling(&unstable));
    report(13, "wave-packet bounds", &mut || packet_bounds(&unstable, &params));
    report(14, "first corrector", &mut || first_corrector(&unstable));
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        std::process::exit(1);
    }
}
