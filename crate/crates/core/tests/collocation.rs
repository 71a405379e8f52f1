use transverse_core::colloc::{self, CriterionOptions};
use transverse_core::models::ModelSpec;

#[test]
fn boussinesq_top_eigenvalue_decreases_in_k() {
    let model = ModelSpec::boussinesq(0.75).unwrap();
    let ks: Vec<f64> = (0..30).map(|i| 3.0 * i as f64 / 29.0).collect();
    let mu = colloc::scan_mk(&model, &ks, 256, 20.0).unwrap();
    for w in mu.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "not monotone: {mu:?}");
    }
    assert!(mu[0] > 0.0 && *mu.last().unwrap() < 0.0);
}

#[test]
fn gkp1_crossing_matches_shift_law() {
    let crit = colloc::find_k0_criterion(&ModelSpec::gkp1(2).unwrap(), &CriterionOptions::default())
        .unwrap()
        .unwrap();
    let k0 = 3.0_f64.sqrt() / 4.0;
    assert!((crit.k0 - k0).abs() < 1e-6, "{}", crit.k0);
    assert!((crit.derivative_pairing + 2.0 * k0).abs() < 1e-4, "{}", crit.derivative_pairing);
    assert!(crit.criterion_valid);
}

#[test]
fn zk_crossing_is_flagged() {
    let crit = colloc::find_k0_criterion(&ModelSpec::zk(), &CriterionOptions::default()).unwrap().unwrap();
    assert!(!crit.fredholm);
    assert!(!crit.criterion_valid);
}

#[test]
fn nls_spectrum_is_resolution_stable() {
    let a = colloc::spectrum_l(&ModelSpec::nls(), 256, 40.0).unwrap();
    let b = colloc::spectrum_l(&ModelSpec::nls(), 512, 40.0).unwrap();
    assert!(a.single_negative && b.single_negative);
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues).take(3) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn nls_has_no_unstable_mode_past_the_edge() {
    let region = transverse_core::specfind::Rect::default_search();
    let o = colloc::oracle_eigs(&ModelSpec::nls(), 2.0, &region, &Default::default()).unwrap();
    assert!(o.localized.is_empty(), "{:?}", o.localized);
}
