//! Evans function D(σ,k): pairing of the decaying wedges at x = 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::odecore::{self, Branch, OdeSystem, Side};
use crate::wedge::{self, ExteriorBasis};

/// Below this modulus the slow root is treated as having reached zero.
pub const SLOW_ROOT_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvansParams {
    /// Truncation of the line; `None` uses the model default.
    pub x_inf: Option<f64>,
    /// Relative local error tolerance of the compound integration.
    pub tol: f64,
}

impl Default for EvansParams {
    fn default() -> Self {
        Self {
            x_inf: None,
            tol: 1e-10,
        }
    }
}

impl EvansParams {
    pub fn x_inf_for(&self, model: &ModelSpec) -> f64 {
        self.x_inf.unwrap_or_else(|| model.x_inf_default())
    }
}

/// `D = mantissa · e^{log_scale}` with `1 ≤ |mantissa| < e` (or an exact zero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvansValue {
    pub mantissa: Complex64,
    pub log_scale: f64,
    pub sigma: Complex64,
    pub k: f64,
    pub x_inf: f64,
    pub tol: f64,
    pub branch: Branch,
}

impl EvansValue {
    fn new(z: Complex64, log_scale: f64, sigma: Complex64, k: f64, x_inf: f64, tol: f64, branch: Branch) -> Self {
        let (mantissa, log_scale) = normalize(z, log_scale);
        Self {
            mantissa,
            log_scale,
            sigma,
            k,
            x_inf,
            tol,
            branch,
        }
    }

    /// ln |D|.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// D as an ordinary complex number (may overflow for extreme scales).
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// D / other, computed on the log scale.
    pub fn ratio(&self, other: &EvansValue) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }

    /// Multiplies by a complex factor.
    pub fn scaled(&self, f: Complex64) -> EvansValue {
        let (mantissa, log_scale) = normalize(self.mantissa * f, self.log_scale);
        EvansValue {
            mantissa,
            log_scale,
            ..*self
        }
    }
}

fn normalize(z: Complex64, log_scale: f64) -> (Complex64, f64) {
    let r = z.norm();
    if r == 0.0 || !r.is_finite() {
        return (z, if r == 0.0 { 0.0 } else { log_scale });
    }
    let e = r.ln().floor();
    (z * (-e).exp(), log_scale + e)
}

/// Evaluates D on a given branch.
pub fn evans_on(sys: &OdeSystem, params: &EvansParams) -> Result<EvansValue> {
    let x_inf = params.x_inf_for(sys.model);
    if x_inf * sys.model.decay_rate() < 10.0 {
        return Err(Error::InvalidParam(format!(
            "x_inf = {x_inf} is shorter than 10 decay lengths"
        )));
    }
    let plus = odecore::integrate_compound(sys, Side::Plus, x_inf, params.tol)?;
    let minus = odecore::integrate_compound(sys, Side::Minus, x_inf, params.tol)?;
    let n = sys.dim();
    let bm = ExteriorBasis::new(n, minus.m);
    let bp = ExteriorBasis::new(n, plus.m);
    let d = wedge::pair(&bm, &minus.wedge, &bp, &plus.wedge);
    Ok(EvansValue::new(
        d,
        minus.log_scale + plus.log_scale,
        sys.sigma,
        sys.k,
        x_inf,
        params.tol,
        sys.branch,
    ))
}

/// D(σ,k). For gkp1/kpbbm at k = 0 this is the reduced one-dimensional Evans function;
/// at tiny k ≠ 0 (slow root below [`SLOW_ROOT_SWITCH`]) the continued system is used and the
/// result carries the Tilde branch tag.
pub fn evans_eval(model: &ModelSpec, sigma: Complex64, k: f64, params: &EvansParams) -> Result<EvansValue> {
    let mut sys = OdeSystem::new(model, sigma, k);
    if model.has_slow_root() && k != 0.0 {
        let split = OdeSystem::tilde(model, sigma, k).splitting()?;
        if split.slow_root.is_some_and(|mu| mu.norm() < SLOW_ROOT_SWITCH) {
            sys = OdeSystem::tilde(model, sigma, k);
        }
    }
    evans_on(&sys, params)
}

/// D̃(σ,k): the four-dimensional continued Evans function of gkp1/kpbbm, defined down to k = 0.
pub fn evans_tilde(model: &ModelSpec, sigma: Complex64, k: f64, params: &EvansParams) -> Result<EvansValue> {
    evans_on(&OdeSystem::tilde(model, sigma, k), params)
}

/// Evaluates D at many points concurrently.
pub fn evans_many(
    model: &ModelSpec,
    points: &[(Complex64, f64)],
    params: &EvansParams,
) -> Vec<Result<EvansValue>> {
    points
        .par_iter()
        .map(|&(s, k)| evans_eval(model, s, k, params))
        .collect()
}

/// Normalised Cauchy integral `|∮ f dσ| / (radius · max |f|)` by the trapezoidal rule, from
/// values `f(center + radius·e^{iθ_j})`, `θ_j = 2π j / N`.
pub fn cauchy_residual(values: &[Complex64], radius: f64) -> f64 {
    let n = values.len();
    let integral: Complex64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .sum::<Complex64>()
        * Complex64::new(0.0, 2.0 * std::f64::consts::PI * radius / n as f64);
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    integral.norm() / (radius * max)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticityReport {
    pub residual: f64,
    /// Change of arg D around the circle divided by 2π.
    pub winding: i64,
    /// The contour passes too close to a zero for the residual to mean anything.
    pub inconclusive: bool,
}

/// Discrete Cauchy test of analyticity of D(·,k) on a circle in Re σ > 0.
pub fn analyticity_check(
    model: &ModelSpec,
    k: f64,
    center: Complex64,
    radius: f64,
    nodes: usize,
    params: &EvansParams,
) -> Result<AnalyticityReport> {
    if center.re - radius <= 0.0 {
        return Err(Error::InvalidParam("circle must lie in Re sigma > 0".into()));
    }
    let pts: Vec<(Complex64, f64)> = (0..nodes)
        .map(|j| {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64);
            (center + e * radius, k)
        })
        .collect();
    let vals = evans_many(model, &pts, params)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let top = vals.iter().map(|v| v.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<Complex64> = vals
        .iter()
        .map(|v| v.mantissa * (v.log_scale - top).exp())
        .collect();
    let residual = cauchy_residual(&scaled, radius);
    let mut total = 0.0;
    for j in 0..nodes {
        let a = scaled[j];
        let b = scaled[(j + 1) % nodes];
        total += (b / a).arg();
    }
    let winding = (total / (2.0 * std::f64::consts::PI)).round() as i64;
    let min = scaled.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    Ok(AnalyticityReport {
        residual,
        winding,
        inconclusive: min < 1e-8,
    })
}

/// One row of the gap-lemma ratio study.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    pub sigma: Complex64,
    pub k: f64,
    pub ratio: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    /// Per σ, the ratio extrapolated to k = 0 (polynomial in k² through all samples).
    pub limits: Vec<(Complex64, Complex64)>,
    /// `max |r_i − r_j| / mean |r|` over the extrapolated limits.
    pub spread: f64,
}

/// `r(σ,k) = D(σ,k) / (σ · D(σ,0))`, where the numerator uses the continued system with each
/// decaying solution at +∞ normalised individually and the denominator is the reduced
/// one-dimensional Evans function. The limit k → 0 should be a σ-independent constant.
pub fn continuation_ratio(
    model: &ModelSpec,
    sigmas: &[Complex64],
    ks: &[f64],
    params: &EvansParams,
) -> Result<RatioTable> {
    if !model.has_slow_root() {
        return Err(Error::InvalidParam(format!(
            "continuation ratio applies to gkp1 and kpbbm, not {}",
            model.name
        )));
    }
    if ks.len() < 2 || ks.iter().any(|&k| k <= 0.0) {
        return Err(Error::InvalidParam("need at least two positive k samples".into()));
    }
    let jobs: Vec<(Complex64, f64)> = sigmas
        .iter()
        .flat_map(|&s| ks.iter().map(move |&k| (s, k)))
        .collect();
    let numer: Vec<Result<Complex64>> = jobs
        .par_iter()
        .map(|&(s, k)| -> Result<Complex64> {
            let sys = OdeSystem::tilde(model, s, k);
            let split = sys.splitting()?;
            let d = evans_on(&sys, params)?;
            let reduced = evans_on(&OdeSystem::new(model, s, 0.0), params)?;
            // Canonical → individual normalisation: multiply by the Vandermonde determinant of
            // the decaying roots, slow root first.
            let slow = split.slow_root.expect("continued branch");
            let mut roots = vec![slow];
            roots.extend(split.stable.iter().map(|&i| split.roots[i]).filter(|r| *r != slow));
            let mut vdm = Complex64::new(1.0, 0.0);
            for i in 0..roots.len() {
                for j in i + 1..roots.len() {
                    vdm *= roots[j] - roots[i];
                }
            }
            Ok(d.scaled(vdm).ratio(&reduced) / s)
        })
        .collect();
    let mut rows = Vec::with_capacity(jobs.len());
    for (&(sigma, k), r) in jobs.iter().zip(numer) {
        rows.push(RatioRow { sigma, k, ratio: r? });
    }
    let mut limits = Vec::new();
    for &s in sigmas {
        let pts: Vec<(f64, Complex64)> = rows
            .iter()
            .filter(|r| r.sigma == s)
            .map(|r| (r.k * r.k, r.ratio))
            .collect();
        limits.push((s, neville_at_zero(&pts)));
    }
    let mean = limits.iter().map(|l| l.1.norm()).sum::<f64>() / limits.len() as f64;
    let mut spread: f64 = 0.0;
    for a in &limits {
        for b in &limits {
            spread = spread.max((a.1 - b.1).norm() / mean);
        }
    }
    Ok(RatioTable { rows, limits, spread })
}

/// Value at t = 0 of the interpolating polynomial through `(t_i, y_i)`.
pub fn neville_at_zero(pts: &[(f64, Complex64)]) -> Complex64 {
    let n = pts.len();
    let mut p: Vec<Complex64> = pts.iter().map(|q| q.1).collect();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (pts[i].0, pts[i + level].0);
            p[i] = (p[i + 1] * ti - p[i] * tj) / (ti - tj);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mantissa_is_normalised() {
        let v = EvansValue::new(cx(-300.0, 4.0), 2.0, cx(1.0, 0.0), 0.0, 20.0, 1e-10, Branch::Regular);
        assert!(v.mantissa.norm() >= 1.0 && v.mantissa.norm() < std::f64::consts::E);
        assert!((v.value() - cx(-300.0, 4.0) * 2.0_f64.exp()).norm() < 1e-9);
    }

    #[test]
    fn cauchy_residual_of_constant_vanishes() {
        let vals = vec![cx(2.5, -1.0); 128];
        assert!(cauchy_residual(&vals, 0.2) <= 1e-14);
    }

    #[test]
    fn cauchy_residual_detects_conjugation() {
        let n = 128;
        let vals: Vec<Complex64> = (0..n)
            .map(|j| {
                let z = cx(0.5, 0.0) + Complex64::from_polar(0.2, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
                let f = z * z + cx(0.3, 0.1);
                if j < n / 2 {
                    f
                } else {
                    f.conj()
                }
            })
            .collect();
        assert!(cauchy_residual(&vals, 0.2) >= 1e-2);
    }

    #[test]
    fn neville_recovers_polynomial() {
        let f = |t: f64| cx(1.5 + 2.0 * t - 0.5 * t * t, -t);
        let pts: Vec<(f64, Complex64)> = [0.1, 0.2, 0.4].iter().map(|&t| (t, f(t))).collect();
        assert!((neville_at_zero(&pts) - cx(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gkdv_evans_nonzero_on_vertical_line() {
        let m = ModelSpec::gkp1(2).unwrap();
        let p = EvansParams::default();
        for j in 0..20 {
            let s = cx(0.5, -5.0 + 10.0 * j as f64 / 19.0);
            let d = evans_eval(&m, s, 0.0, &p).unwrap();
            assert_eq!(d.branch, Branch::Reduced);
            assert!(d.ln_abs() > -20.0, "sigma={s} ln|D|={}", d.ln_abs());
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let m = ModelSpec::nls();
        let p = EvansParams::default();
        let s = cx(0.4, 0.7);
        let a = evans_eval(&m, s, 0.9, &p).unwrap();
        let b = evans_eval(&m, s.conj(), 0.9, &p).unwrap();
        assert!((b.ratio(&a) - (a.value().conj() / a.value())).norm() < 1e-10);
    }

    #[test]
    fn domain_doubling_leaves_d_unchanged() {
        let m = ModelSpec::gkp1(2).unwrap();
        let s = cx(0.3, 0.2);
        let a = evans_eval(&m, s, 0.5, &EvansParams { x_inf: Some(20.0), tol: 1e-11 }).unwrap();
        let b = evans_eval(&m, s, 0.5, &EvansParams { x_inf: Some(40.0), tol: 1e-11 }).unwrap();
        assert!((a.ratio(&b) - cx(1.0, 0.0)).norm() < 1e-7);
    }
}
