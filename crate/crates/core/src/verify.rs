//! Property suite run by `transverse verify`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::colloc::{self, CriterionOptions, OracleOptions};
use crate::error::Result;
use crate::evans::{self, EvansParams};
use crate::models::{ModelName, ModelSpec};
use crate::odecore;
use crate::simulate::{self, Dynamics, Grid2d, SimConfig};
use crate::specfind::{self, Rect};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: f64::NAN,
            detail: format!("error: {err}"),
        }
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, e))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    /// Skip the time-evolution checks.
    pub quick: bool,
}

/// A point inside the unstable band of each registry model.
pub fn sample_mode_points() -> Vec<(ModelSpec, f64)> {
    ModelSpec::registry()
        .into_iter()
        .map(|m| {
            let k = match m.name {
                ModelName::Gkp1 => 0.3,
                ModelName::Nls => 1.0,
                ModelName::Zk => 0.6,
                ModelName::Kpbbm => 0.2,
                ModelName::Boussinesq => 0.12,
            };
            (m, k)
        })
        .collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn collocation_structure() -> Check {
    run("collocation operator symmetry", || {
        let mut worst: f64 = 0.0;
        for m in ModelSpec::registry() {
            let op = colloc::CollocationOperator::new(&m, 0.7, 256, 20.0)?;
            worst = colloc::structure_defects(&op).into_iter().fold(worst, f64::max);
        }
        Ok(Check::at_most("collocation operator symmetry", worst, 1e-10, "L, S, M_k symmetric; J skew"))
    })
}

pub fn nls_l_spectrum() -> Check {
    run("nls spectrum of L", || {
        let s = colloc::spectrum_l(&ModelSpec::nls(), 512, 40.0)?;
        let dist = |target: f64| s.eigenvalues.iter().map(|e| (e - target).abs()).fold(f64::INFINITY, f64::min);
        let err = dist(-3.0).max(dist(0.0));
        Ok(Check::at_most("nls spectrum of L", err, 1e-3, format!("lowest {:?}", s.eigenvalues)))
    })
}

pub fn gkdv_kernel() -> Check {
    run("gkdv translation kernel", || {
        let s = colloc::spectrum_l(&ModelSpec::gkp1(2)?, 512, 40.0)?;
        let mut chk = Check::at_most("gkdv translation kernel", s.kernel_residual, 1e-6, format!("{} negative eigenvalues", s.n_negative));
        chk.passed &= s.single_negative;
        Ok(chk)
    })
}

pub fn shift_law() -> Check {
    run("scalar shift law of M_k", || {
        let mut worst: f64 = 0.0;
        for m in [ModelSpec::gkp1(2)?, ModelSpec::nls()] {
            let mu = colloc::scan_mk(&m, &[0.0, 0.5, 1.0], 256, 20.0)?;
            for (i, k) in [0.0, 0.5, 1.0_f64].iter().enumerate() {
                worst = worst.max((mu[i] - (mu[0] - k * k)).abs());
            }
        }
        Ok(Check::at_most("scalar shift law of M_k", worst, 1e-8, "gkp1 and nls"))
    })
}

pub fn nls_criterion() -> Check {
    run("nls kernel criterion", || {
        let crit = colloc::find_k0_criterion(&ModelSpec::nls(), &CriterionOptions::default())?;
        Ok(match crit {
            Some(c) => {
                let mut chk = Check::at_most("nls kernel criterion", (c.k0 - 3.0_f64.sqrt()).abs(), 1e-2, format!("k0 = {:.6}", c.k0));
                chk.passed &= c.criterion_valid;
                chk
            }
            None => Check::failed("nls kernel criterion", "no crossing"),
        })
    })
}

pub fn zk_fredholm_flag() -> Check {
    run("zk criterion flagged", || {
        let crit = colloc::find_k0_criterion(&ModelSpec::zk(), &CriterionOptions::default())?;
        let flagged = crit.as_ref().is_some_and(|c| !c.fredholm && !c.criterion_valid);
        Ok(Check {
            name: "zk criterion flagged".into(),
            passed: flagged,
            value: crit.map_or(f64::NAN, |c| c.k0),
            tolerance: f64::NAN,
            detail: "crossing exists but the Fredholm hypothesis fails".into(),
        })
    })
}

pub fn conjugate_symmetry(params: &EvansParams) -> Check {
    run("conjugate symmetry of D", || {
        let mut worst: f64 = 0.0;
        for m in ModelSpec::registry() {
            let pts: Vec<(Complex64, f64)> = [0.3, 0.6, 0.9, 1.2, 1.5]
                .iter()
                .flat_map(|&re| [0.1, 0.35, 0.6, 0.85, 1.1].map(move |k| (c(re, 0.4 * re), k)))
                .collect();
            let conj: Vec<(Complex64, f64)> = pts.iter().map(|(s, k)| (s.conj(), *k)).collect();
            let a = evans::evans_many(&m, &pts, params);
            let b = evans::evans_many(&m, &conj, params);
            for (x, y) in a.into_iter().zip(b) {
                let (x, y) = (x?, y?);
                // |D(σ̄) − conj D(σ)| / |D(σ)| = |D(σ̄) / conj D(σ) − 1|.
                let q = y.mantissa / x.mantissa.conj() * (y.log_scale - x.log_scale).exp();
                worst = worst.max((q - 1.0).norm());
            }
        }
        Ok(Check::at_most("conjugate symmetry of D", worst, 1e-10, "5x5 (sigma, k) grid per model"))
    })
}

pub fn analyticity(params: &EvansParams) -> Check {
    run("analyticity of D", || {
        let mut worst: f64 = 0.0;
        for m in ModelSpec::registry() {
            for (center, radius, k) in [(c(1.0, 0.3), 0.2, 0.5), (c(2.0, -1.0), 0.5, 0.2), (c(0.8, 2.0), 0.3, 1.0)] {
                let r = evans::analyticity_check(&m, k, center, radius, 64, params)?;
                worst = worst.max(r.residual);
            }
        }
        Ok(Check::at_most("analyticity of D", worst, 1e-6, "Cauchy residual on 3 circles per model"))
    })
}

pub fn boussinesq_splitting() -> Check {
    run("boussinesq consistent splitting", || {
        let m = ModelSpec::boussinesq(0.75)?;
        let mut min_re = f64::INFINITY;
        for j in 0..20 {
            // Low-discrepancy points in [0.1, 2] × [−2, 2].
            let a = (j as f64 * 0.618_033_988_749_895).fract();
            let b = (j as f64 * 0.754_877_666_246_693).fract();
            let s = c(0.1 + 1.9 * a, -2.0 + 4.0 * b);
            for k in [0.0, 0.5, 1.0] {
                let sp = odecore::spatial_eigenvalues(&m, s, k)?;
                min_re = sp.roots.iter().map(|r| r.re.abs()).fold(min_re, f64::min);
            }
        }
        Ok(Check {
            name: "boussinesq consistent splitting".into(),
            passed: min_re > 1e-6,
            value: min_re,
            tolerance: 1e-6,
            detail: "min |Re lambda| over 20 sigma and k in {0, 0.5, 1}".into(),
        })
    })
}

pub fn slow_root() -> Check {
    run("small-k slow spatial root", || {
        let m = ModelSpec::gkp1(2)?;
        let mut worst: f64 = 0.0;
        for k in [0.01, 0.03, 0.1] {
            let r = odecore::spatial_eigenvalues(&m, c(1.0, 0.0), k)?.smallest_root();
            worst = worst.max((r - c(-k * k, 0.0)).norm() / (k * k));
        }
        Ok(Check::at_most("small-k slow spatial root", worst, 0.05, "relative to -k^2/sigma at sigma = 1"))
    })
}

pub fn gap_ratio(params: &EvansParams) -> Check {
    run("gap-lemma ratio", || {
        let t = evans::continuation_ratio(&ModelSpec::gkp1(2)?, &[c(0.5, 0.0), c(1.0, 0.0)], &[0.02, 0.04, 0.06, 0.08], params)?;
        Ok(Check::at_most("gap-lemma ratio", t.spread, 0.05, format!("limits {:?}", t.limits.iter().map(|l| l.1).collect::<Vec<_>>())))
    })
}

pub fn large_k_exclusion(params: &EvansParams) -> Check {
    run("large-k exclusion", || {
        let mut worst = 0i64;
        let mut probes = vec![(ModelSpec::gkp1(2)?, 3.5, Rect::new(0.05, 3.0, -5.0, 5.0))];
        for m in ModelSpec::registry() {
            let k = 1.2 * m.coercivity_k();
            probes.push((m, k, Rect::default_search()));
        }
        for (m, k, rect) in probes {
            worst = worst.max(specfind::trace_with_retry(&m, k, &rect, params)?.winding().abs());
        }
        Ok(Check::at_most("large-k exclusion", worst as f64, 0.0, "winding beyond the coercivity threshold"))
    })
}

pub fn oracle_agreement(params: &EvansParams) -> Check {
    run("oracle-evans agreement", || {
        let mut worst: f64 = 0.0;
        let mut counts_ok = true;
        for (m, k) in [(ModelSpec::nls(), 1.0), (ModelSpec::gkp1(2)?, 0.3)] {
            let rect = Rect::default_search();
            let oracle = colloc::oracle_eigs(&m, k, &rect, &OracleOptions::default())?;
            let w = specfind::trace_with_retry(&m, k, &rect, params)?.winding();
            counts_ok &= w == oracle.localized.len() as i64;
            if let (Some(root), Some(o)) = (specfind::find_unstable_sigma(&m, k, &rect, params)?, oracle.localized.first()) {
                worst = worst.max((root.sigma - o).norm() / (1.0 + o.norm()));
            }
        }
        let mut chk = Check::at_most("oracle-evans agreement", worst, 1e-3, "nls k = 1, gkp1 k = 0.3");
        chk.passed &= counts_ok;
        Ok(chk)
    })
}

pub fn mode_conservation(params: &EvansParams) -> Check {
    run("mode conservation law", || {
        let results: Vec<Result<f64>> = sample_mode_points()
            .par_iter()
            .map(|(m, k)| {
                let root = specfind::find_unstable_sigma(m, *k, &Rect::default_search(), params)?
                    .ok_or_else(|| crate::Error::Numerical(format!("no unstable mode for {} at k = {k}", m.name)))?;
                let mode = specfind::mode_reconstruct(m, *k, root.sigma, None)?;
                Ok(mode.conservation / mode.h1_norm_sq)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for r in results {
            worst = worst.max(r?);
        }
        Ok(Check::at_most("mode conservation law", worst, 1e-6, "|(U,LU)+(U,SU)| / |U|_H1^2, all models"))
    })
}

pub fn stationarity() -> Check {
    run("soliton stationarity", || {
        let mut worst: f64 = 0.0;
        for (m, nx) in [(ModelSpec::gkp1(2)?, 256), (ModelSpec::zk(), 256), (ModelSpec::nls(), 512)] {
            let grid = Grid2d::new(nx, 8, 40.0, 20.0)?;
            let r = simulate::run_instability_experiment(&SimConfig::new(m, grid, 0.01, 10.0))?;
            worst = worst.max(r.max_background_deviation);
        }
        Ok(Check::at_most("soliton stationarity", worst, 1e-6, "relative L2 deviation over 10 time units"))
    })
}

pub fn linear_growth(params: &EvansParams) -> Check {
    run("linearized eigenmode growth", || {
        let m = ModelSpec::gkp1(2)?;
        let k = 0.3;
        let root = specfind::find_unstable_sigma(&m, k, &Rect::default_search(), params)?
            .ok_or_else(|| crate::Error::Numerical("no unstable mode".into()))?;
        let grid = Grid2d::new(256, 16, 40.0, 2.0 * std::f64::consts::PI / k)?;
        let (pert, _) = simulate::eigenmode_perturbation(&m, k, root.sigma, &grid)?;
        let mut cfg = SimConfig::new(m, grid, 0.01, 10.0);
        cfg.perturbation = pert;
        cfg.delta = 1e-4;
        cfg.dynamics = Dynamics::Linearized;
        cfg.kappa = f64::MAX;
        let r = simulate::run_instability_experiment(&cfg)?;
        let (a, b) = (r.series[0], *r.series.last().expect("non-empty"));
        let expected = (root.sigma.re * (b.t - a.t)).exp();
        let err = (b.norm_total / a.norm_total / expected - 1.0).abs();
        let mut chk = Check::at_most("linearized eigenmode growth", err, 0.01, "gkp1 k = 0.3 over 10 time units");
        chk.passed &= r.x_mean_drift < 1e-12;
        Ok(chk)
    })
}

/// Runs the suite; checks are independent and evaluated in parallel.
pub fn run_suite(opts: &SuiteOptions) -> Vec<Check> {
    let params = EvansParams::default();
    let mut jobs: Vec<Box<dyn Fn() -> Check + Send + Sync>> = vec![
        Box::new(collocation_structure),
        Box::new(nls_l_spectrum),
        Box::new(gkdv_kernel),
        Box::new(shift_law),
        Box::new(nls_criterion),
        Box::new(zk_fredholm_flag),
        Box::new(move || conjugate_symmetry(&params)),
        Box::new(move || analyticity(&params)),
        Box::new(boussinesq_splitting),
        Box::new(slow_root),
        Box::new(move || gap_ratio(&params)),
        Box::new(move || large_k_exclusion(&params)),
        Box::new(move || oracle_agreement(&params)),
        Box::new(move || mode_conservation(&params)),
    ];
    if !opts.quick {
        jobs.push(Box::new(stationarity));
        jobs.push(Box::new(move || linear_growth(&params)));
    }
    jobs.par_iter().map(|j| j()).collect()
}
