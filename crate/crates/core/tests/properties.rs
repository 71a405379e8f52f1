use num_complex::Complex64;
use proptest::prelude::*;
use transverse_core::evans::{self, EvansParams};
use transverse_core::models::ModelSpec;
use transverse_core::odecore;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evans_conjugate_symmetric(re in 0.1f64..2.0, im in -3.0f64..3.0, k in 0.0f64..1.5, idx in 0usize..5) {
        let model = ModelSpec::registry()[idx].clone();
        let p = EvansParams::default();
        let s = Complex64::new(re, im);
        let a = evans::evans_eval(&model, s, k, &p).unwrap();
        let b = evans::evans_eval(&model, s.conj(), k, &p).unwrap();
        let q = b.mantissa / a.mantissa.conj() * (b.log_scale - a.log_scale).exp();
        prop_assert!((q - 1.0).norm() < 1e-10);
    }

    #[test]
    fn spatial_roots_split_off_the_axis(re in 0.05f64..2.0, im in -3.0f64..3.0, k in 0.0f64..2.0, idx in 0usize..5) {
        let model = ModelSpec::registry()[idx].clone();
        let sp = odecore::spatial_eigenvalues(&model, Complex64::new(re, im), k).unwrap();
        prop_assert!(sp.roots.iter().all(|r| r.re.abs() > 1e-8));
    }
}
