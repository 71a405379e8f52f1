//! Worked examples for the Evans, search and collocation layers.

use num_complex::Complex64;
use transverse_core::colloc::{self, OracleOptions};
use transverse_core::evans::{self, EvansParams};
use transverse_core::specfind::{self, Rect, TraceOptions};
use transverse_core::ModelSpec;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn evans_error_is_proportional_to_tolerance() {
    let m = ModelSpec::nls();
    let s = c(1.0, 0.0);
    let reference = evans::evans_eval(&m, s, 1.0, &EvansParams { x_inf: None, tol: 1e-14 }).unwrap();
    let errs: Vec<f64> = [1e-8, 5e-9, 2.5e-9]
        .iter()
        .map(|&tol| {
            let v = evans::evans_eval(&m, s, 1.0, &EvansParams { x_inf: None, tol }).unwrap();
            let e = (v.ratio(&reference) - 1.0).norm();
            assert!(e <= 5.0 * tol, "tol {tol:e}: error {e:e}");
            e
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 1.5, "{errs:?}");
    }
}

#[test]
fn nls_sign_change_brackets_collocation_eigenvalue() {
    let m = ModelSpec::nls();
    let p = EvansParams::default();
    let re_d = |s: f64| {
        let v = evans::evans_eval(&m, c(s, 0.0), 1.0, &p).unwrap();
        assert!(v.mantissa.im.abs() < 1e-8 * v.mantissa.norm());
        v.mantissa.re
    };
    let grid: Vec<f64> = (1..=40).map(|i| 0.05 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| re_d(s)).collect();
    let i = vals.windows(2).position(|w| w[0].signum() != w[1].signum()).expect("sign change in (0, 2]");
    assert_eq!(vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count(), 1);
    let (mut a, mut b, fa) = (grid[i], grid[i + 1], vals[i]);
    while b - a > 1e-6 {
        let mid = 0.5 * (a + b);
        if re_d(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let oracle = colloc::oracle_eigs(&m, 1.0, &Rect::default_search(), &OracleOptions::default()).unwrap();
    assert_eq!(oracle.localized.len(), 1);
    assert!((0.5 * (a + b) - oracle.localized[0].re).abs() < 1e-3);
}

#[test]
fn nls_analyticity_on_small_circle() {
    let r = evans::analyticity_check(&ModelSpec::nls(), 1.0, c(0.5, 0.0), 0.2, 128, &EvansParams::default()).unwrap();
    assert_eq!(r.winding, 0);
    assert!(r.residual <= 1e-6, "{}", r.residual);
}

#[test]
fn continuation_ratio_is_finite_and_tolerance_independent() {
    let m = ModelSpec::gkp1(2).unwrap();
    let ks = [0.02, 0.04, 0.06, 0.08];
    let sig = [c(0.5, 0.0), c(1.0, 0.0)];
    let a = evans::continuation_ratio(&m, &sig, &ks, &EvansParams::default()).unwrap();
    let b = evans::continuation_ratio(&m, &sig, &ks, &EvansParams { x_inf: None, tol: 1e-12 }).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!(x.ratio.norm().is_finite() && x.ratio.norm() > 1e-3);
        assert!((x.ratio - y.ratio).norm() <= 1e-6 * y.ratio.norm());
    }
    let kp = ModelSpec::kpbbm(2.0, 2).unwrap();
    let t = evans::continuation_ratio(&kp, &sig, &[0.02, 0.03, 0.04, 0.05], &EvansParams::default()).unwrap();
    assert!(t.spread <= 0.05, "{}", t.spread);
}

#[test]
fn gkp1_growth_vanishes_towards_band_edge() {
    let m = ModelSpec::gkp1(2).unwrap();
    let p = EvansParams::default();
    let rect = Rect::default_search();
    let re: Vec<f64> = [0.40, 0.41, 0.42]
        .iter()
        .map(|&k| specfind::find_unstable_sigma(&m, k, &rect, &p).unwrap().unwrap().sigma.re)
        .collect();
    assert!(re.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0), "{re:?}");
    assert!(specfind::find_unstable_sigma(&m, 0.45, &rect, &p).unwrap().is_none());
}

#[test]
fn dispersion_samples_do_not_depend_on_the_scan() {
    let m = ModelSpec::nls();
    let p = EvansParams::default();
    let curve = specfind::trace_dispersion(&m, 0.1, 1.9, 10, &p, &TraceOptions::default()).unwrap();
    let band = curve.band[0];
    assert!(band.0 <= 0.1 + 1e-12 && (band.1 - 3.0_f64.sqrt()).abs() < 1e-3, "{band:?}");
    assert_eq!(curve.m, 2);
    for s in curve.samples.iter().rev().take(4) {
        let alone = specfind::find_unstable_sigma(&m, s.k, &Rect::default_search(), &p).unwrap();
        match (s.sigma, alone) {
            (Some(a), Some(b)) => assert!((a - b.sigma).norm() <= 1e-8),
            (None, None) => {}
            other => panic!("mismatch at k={}: {other:?}", s.k),
        }
    }
}

#[test]
fn reconstructed_mode_decays_at_the_ends() {
    let m = ModelSpec::nls();
    let root = specfind::find_unstable_sigma(&m, 1.0, &Rect::default_search(), &EvansParams::default())
        .unwrap()
        .unwrap();
    let mode = specfind::mode_reconstruct(&m, 1.0, root.sigma, None).unwrap();
    assert!(mode.residual <= 1e-5, "{}", mode.residual);
    for comp in &mode.u {
        assert!(comp[0].norm() <= 1e-6 && comp[comp.len() - 1].norm() <= 1e-6);
    }
}

#[test]
fn top_eigenvalue_of_mk_is_converged() {
    let nls = ModelSpec::nls();
    assert!((colloc::max_eig_mk(&nls, 0.0, 512, 40.0).unwrap() - 3.0).abs() < 1e-3);
    let m = ModelSpec::gkp1(2).unwrap();
    let base = colloc::max_eig_mk(&m, 0.2, 256, 40.0).unwrap();
    let fine = colloc::max_eig_mk(&m, 0.2, 512, 40.0).unwrap();
    let wide = colloc::max_eig_mk(&m, 0.2, 512, 80.0).unwrap();
    assert!((base - fine).abs() <= 1e-6 && (fine - wide).abs() <= 1e-6, "{base} {fine} {wide}");
}

#[test]
fn oracle_count_is_resolution_stable() {
    let m = ModelSpec::nls();
    let rect = Rect::default_search();
    let coarse = colloc::oracle_eigs(&m, 1.0, &rect, &OracleOptions { n: 256, half_length: 40.0 }).unwrap();
    let fine = colloc::oracle_eigs(&m, 1.0, &rect, &OracleOptions { n: 512, half_length: 40.0 }).unwrap();
    assert_eq!(coarse.localized.len(), 1);
    assert_eq!(fine.localized.len(), 1);
    assert!((coarse.localized[0] - fine.localized[0]).norm() < 1e-6);
    let beyond = colloc::oracle_eigs(&ModelSpec::gkp1(2).unwrap(), 3.5, &rect, &OracleOptions::default()).unwrap();
    assert!(beyond.localized.is_empty());
}
