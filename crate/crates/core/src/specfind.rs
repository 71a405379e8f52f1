//! Locating unstable eigenvalues: argument-principle counts, root refinement, dispersion
//! curves and eigenmode reconstruction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evans::{self, EvansParams, EvansValue};
use crate::models::{ModelName, ModelSpec};
use crate::odecore::{self, OdeSystem, Side};
use crate::spectral::{self, Grid1d};

/// Secant iterations stop once the normalised residual falls below this.
pub const TOL_ROOT: f64 = 1e-10;
/// Band edges are bisected down to this width in k.
pub const EDGE_WIDTH: f64 = 1e-4;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Axis-aligned rectangle in the σ-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// Re σ ∈ [0.02, 3], Im σ ∈ [−6, 6].
    pub fn default_search() -> Self {
        Self::new(0.02, 3.0, -6.0, 6.0)
    }

    pub fn around(center: Complex64, half: f64) -> Self {
        Self::new(center.re - half, center.re + half, center.im - half, center.im + half)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn expanded(&self, frac: f64) -> Self {
        let dr = frac * (self.re_max - self.re_min);
        let di = frac * (self.im_max - self.im_min);
        Self::new(
            self.re_min * (1.0 - frac),
            self.re_max + dr,
            self.im_min - di,
            self.im_max + di,
        )
    }
}

/// D sampled around the boundary of a rectangle, counterclockwise and closed.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub points: Vec<Complex64>,
    pub values: Vec<EvansValue>,
}

impl BoundaryTrace {
    pub fn winding(&self) -> i64 {
        let n = self.points.len();
        let total: f64 = (0..n).map(|j| self.values[(j + 1) % n].ratio(&self.values[j]).arg()).sum();
        (total / TWO_PI).round() as i64
    }

    /// `(1/2πi) ∮ σ d log D`, the sum of the zeros inside (midpoint rule on the trace).
    pub fn first_moment(&self) -> Complex64 {
        let n = self.points.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let a = self.points[j];
            let b = self.points[(j + 1) % n];
            let r = self.values[(j + 1) % n].ratio(&self.values[j]);
            let dlog = Complex64::new(r.norm().ln(), r.arg());
            acc += (a + b) * 0.5 * dlog;
        }
        acc / Complex64::new(0.0, TWO_PI)
    }
}

/// Samples D along the rectangle, refining until every step changes arg D by less than π/2.
pub fn boundary_trace(model: &ModelSpec, k: f64, rect: &Rect, params: &EvansParams) -> Result<BoundaryTrace> {
    if !(rect.re_min > 0.0) || rect.re_max <= rect.re_min || rect.im_max <= rect.im_min {
        return Err(Error::InvalidParam(format!("invalid search rectangle {rect:?}")));
    }
    let corners = rect.corners();
    let per_edge = 24;
    let mut points = Vec::with_capacity(4 * per_edge);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        for j in 0..per_edge {
            points.push(a + (b - a) * (j as f64 / per_edge as f64));
        }
    }
    let eval = |pts: &[Complex64]| -> Result<Vec<EvansValue>> {
        pts.par_iter()
            .map(|&s| evans::evans_eval(model, s, k, params))
            .collect()
    };
    let mut values = eval(&points)?;
    let scale = (rect.re_max - rect.re_min).max(rect.im_max - rect.im_min);
    for _ in 0..40 {
        let n = points.len();
        let bad: Vec<usize> = (0..n)
            .filter(|&j| values[(j + 1) % n].ratio(&values[j]).arg().abs() >= std::f64::consts::FRAC_PI_2)
            .collect();
        if bad.is_empty() {
            return Ok(BoundaryTrace { points, values });
        }
        let mids: Vec<Complex64> = bad
            .iter()
            .map(|&j| (points[j] + points[(j + 1) % n]) * 0.5)
            .collect();
        if bad
            .iter()
            .any(|&j| (points[(j + 1) % n] - points[j]).norm() < 1e-9 * scale)
        {
            return Err(Error::Refinement(format!(
                "suspected zero of D on the boundary near sigma = {}",
                mids[0]
            )));
        }
        let new_vals = eval(&mids)?;
        let mut p2 = Vec::with_capacity(n + bad.len());
        let mut v2 = Vec::with_capacity(n + bad.len());
        let mut bi = 0;
        for j in 0..n {
            p2.push(points[j]);
            v2.push(values[j]);
            if bi < bad.len() && bad[bi] == j {
                p2.push(mids[bi]);
                v2.push(new_vals[bi]);
                bi += 1;
            }
        }
        points = p2;
        values = v2;
    }
    Err(Error::Refinement("argument refinement exceeded 40 levels".into()))
}

pub fn trace_with_retry(model: &ModelSpec, k: f64, rect: &Rect, params: &EvansParams) -> Result<BoundaryTrace> {
    match boundary_trace(model, k, rect, params) {
        Err(Error::Refinement(_)) => boundary_trace(model, k, &rect.expanded(0.01), params),
        other => other,
    }
}

/// Number of zeros of D(·,k) inside the rectangle, by the argument principle.
pub fn winding_number(model: &ModelSpec, k: f64, rect: &Rect, params: &EvansParams) -> Result<i64> {
    Ok(trace_with_retry(model, k, rect, params)?.winding())
}

/// A refined zero of D(·,k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Root {
    pub sigma: Complex64,
    /// Size of the last secant correction.
    pub error: f64,
    /// `|D(σ)| / (|D'(σ)| (1 + |σ|))`.
    pub residual: f64,
}

/// Complex secant iteration on D(·,k) from `guess`.
pub fn refine_root(model: &ModelSpec, k: f64, guess: Complex64, params: &EvansParams) -> Result<Root> {
    let d0 = evans::evans_eval(model, guess, k, params)?;
    let f = |s: Complex64| -> Result<Complex64> { Ok(evans::evans_eval(model, s, k, params)?.ratio(&d0)) };
    let mut s0 = guess;
    let mut f0 = Complex64::new(1.0, 0.0);
    let mut s1 = guess + 1e-4 * (1.0 + guess.norm());
    let mut f1 = f(s1)?;
    let mut step = (s1 - s0).norm();
    for _ in 0..60 {
        if f1.norm() == 0.0 {
            step = 0.0;
            break;
        }
        let denom = f1 - f0;
        if denom.norm() == 0.0 {
            break;
        }
        let mut s2 = s1 - f1 * (s1 - s0) / denom;
        if !s2.is_finite() {
            return Err(Error::RootRefinement(format!("secant diverged from {guess}")));
        }
        if s2.re <= 0.5 * s1.re {
            // Damp steps that would leave the right half-plane.
            let d = s2 - s1;
            s2 = s1 + d * (0.5 * s1.re / d.re.abs());
        }
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = f(s1)?;
        step = (s1 - s0).norm();
        if step < 1e-13 * (1.0 + s1.norm()) {
            break;
        }
    }
    // The last secant pair is too close to resolve D'; use a central difference instead.
    let h = 1e-5 * (1.0 + s1.norm());
    let deriv = ((f(s1 + h)? - f(s1 - h)?) / (2.0 * h)).norm();
    let residual = f1.norm() / (deriv * (1.0 + s1.norm()));
    if !(residual <= TOL_ROOT) {
        return Err(Error::RootRefinement(format!(
            "residual {residual:e} above {TOL_ROOT:e} at sigma = {s1}"
        )));
    }
    Ok(Root {
        sigma: s1,
        error: step,
        residual,
    })
}

/// The unique unstable eigenvalue in `rect`, if any.
pub fn find_unstable_sigma(
    model: &ModelSpec,
    k: f64,
    rect: &Rect,
    params: &EvansParams,
) -> Result<Option<Root>> {
    let trace = trace_with_retry(model, k, rect, params)?;
    let w = trace.winding();
    match w {
        0 => Ok(None),
        1 => {
            let guess = trace.first_moment();
            let guess = if rect.contains(guess) {
                guess
            } else {
                Complex64::new(0.5 * (rect.re_min + rect.re_max), 0.0)
            };
            let root = refine_root(model, k, guess, params)?;
            verify_root(model, k, &root, params)?;
            Ok(Some(root))
        }
        n if n >= 2 => Err(Error::UniquenessViolated { k, count: n }),
        n => Err(Error::Numerical(format!("negative winding number {n} at k={k}"))),
    }
}

fn verify_root(model: &ModelSpec, k: f64, root: &Root, params: &EvansParams) -> Result<()> {
    let half = (100.0 * root.error).clamp(1e-4, 0.05).min(0.5 * root.sigma.re);
    let w = winding_number(model, k, &Rect::around(root.sigma, half), params)?;
    if w != 1 {
        return Err(Error::RootRefinement(format!(
            "refined root {} not confirmed (winding {w} on verification box)",
            root.sigma
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSample {
    pub k: f64,
    /// `None` outside the unstable band.
    pub sigma: Option<Complex64>,
    pub residual: f64,
}

/// Sampled dispersion curve k ↦ σ(k).
#[derive(Debug, Clone, Serialize)]
pub struct DispersionCurve {
    pub samples: Vec<DispersionSample>,
    /// Maximal intervals where an unstable eigenvalue exists.
    pub band: Vec<(f64, f64)>,
    pub k0: f64,
    pub sigma0: Complex64,
    /// Even order of the first non-vanishing derivative of Re σ at k0.
    pub m: u32,
}

impl DispersionCurve {
    /// Re σ at `k` by linear interpolation of the samples (0 outside the band).
    pub fn re_sigma_at(&self, k: f64) -> f64 {
        let s = &self.samples;
        for w in s.windows(2) {
            if k >= w[0].k && k <= w[1].k {
                let a = w[0].sigma.map_or(0.0, |z| z.re);
                let b = w[1].sigma.map_or(0.0, |z| z.re);
                let t = (k - w[0].k) / (w[1].k - w[0].k);
                return a + t * (b - a);
            }
        }
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    pub rect: Rect,
    /// Largest allowed |σ(k_i) − σ(k_{i+1})| before refining.
    pub jump_tol: f64,
    /// Half-width of the window for the flatness fit.
    pub fit_half_width: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rect: Rect::default_search(),
            jump_tol: 0.25,
            fit_half_width: 0.2,
        }
    }
}

/// Traces σ(k) on `n_k` uniformly spaced transverse frequencies in `[k_min, k_max]`.
///
/// Every k is searched independently (winding count, then secant refinement from the
/// argument-principle estimate), so the result does not depend on scan order.
pub fn trace_dispersion(
    model: &ModelSpec,
    k_min: f64,
    k_max: f64,
    n_k: usize,
    params: &EvansParams,
    opts: &TraceOptions,
) -> Result<DispersionCurve> {
    if !(k_min > 0.0 && k_max > k_min) || n_k < 8 {
        return Err(Error::InvalidParam(
            "dispersion needs 0 < k_min < k_max and at least 8 samples".into(),
        ));
    }
    let ks: Vec<f64> = (0..n_k)
        .map(|i| k_min + (k_max - k_min) * i as f64 / (n_k - 1) as f64)
        .collect();
    let found: Vec<Result<Option<Root>>> = ks
        .par_iter()
        .map(|&k| find_unstable_sigma(model, k, &opts.rect, params))
        .collect();
    let mut samples = Vec::with_capacity(n_k);
    for (&k, r) in ks.iter().zip(found) {
        let r = r?;
        samples.push(DispersionSample {
            k,
            sigma: r.map(|r| r.sigma),
            residual: r.map_or(0.0, |r| r.residual),
        });
    }
    for w in samples.windows(2) {
        if let (Some(a), Some(b)) = (w[0].sigma, w[1].sigma) {
            confirm_continuity(model, (w[0].k, a), (w[1].k, b), JUMP_DEPTH, params, opts)?;
        }
    }

    let in_band: Vec<bool> = samples.iter().map(|s| s.sigma.is_some()).collect();
    let mut band = Vec::new();
    let mut i = 0;
    while i < n_k {
        if !in_band[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n_k && in_band[i + 1] {
            i += 1;
        }
        let lo = if start == 0 {
            ks[0]
        } else {
            bisect_edge(model, ks[start - 1], ks[start], opts, params)?
        };
        let hi = if i == n_k - 1 {
            ks[n_k - 1]
        } else {
            bisect_edge(model, ks[i + 1], ks[i], opts, params)?
        };
        band.push((lo, hi));
        i += 1;
    }

    let Some((imax, _)) = samples
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.sigma.map(|z| (i, z.re)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
    else {
        return Err(Error::Numerical("no unstable eigenvalue on the scanned range".into()));
    };
    let (band_lo, band_hi) = *band
        .iter()
        .find(|b| samples[imax].k >= b.0 && samples[imax].k <= b.1)
        .expect("maximum lies in a band");
    let a = if imax > 0 && in_band[imax - 1] { ks[imax - 1] } else { ks[imax] };
    let b = if imax + 1 < n_k && in_band[imax + 1] { ks[imax + 1] } else { ks[imax] };
    let guess = samples[imax].sigma.unwrap();
    let sigma_of = |k: f64| -> Result<Complex64> { Ok(refine_root(model, k, guess, params)?.sigma) };
    let (k0, sigma0) = golden_max(&sigma_of, a, b, 1e-7)?;

    let half = opts
        .fit_half_width
        .min(0.9 * (k0 - band_lo))
        .min(0.9 * (band_hi - k0));
    let m = flatness_order(&sigma_of, k0, half, sigma0)?;

    Ok(DispersionCurve {
        samples,
        band,
        k0,
        sigma0,
        m,
    })
}

/// Subdivisions allowed when checking that σ(k) is continuous between two samples.
const JUMP_DEPTH: u32 = 6;

/// Subdivides `[ka, kb]` until neighbouring σ differ by at most `jump_tol`; a jump that
/// survives `depth` halvings is a genuine discontinuity.
fn confirm_continuity(
    model: &ModelSpec,
    (ka, a): (f64, Complex64),
    (kb, b): (f64, Complex64),
    depth: u32,
    params: &EvansParams,
    opts: &TraceOptions,
) -> Result<()> {
    if (a - b).norm() <= opts.jump_tol {
        return Ok(());
    }
    let km = 0.5 * (ka + kb);
    match (depth, find_unstable_sigma(model, km, &opts.rect, params)?) {
        (0, _) | (_, None) => Err(Error::CurveJump {
            k0: ka,
            k1: kb,
            jump: (a - b).norm(),
        }),
        (_, Some(m)) => {
            confirm_continuity(model, (ka, a), (km, m.sigma), depth - 1, params, opts)?;
            confirm_continuity(model, (km, m.sigma), (kb, b), depth - 1, params, opts)
        }
    }
}

/// Bisection on the winding number between a stable `k_out` and an unstable `k_in`.
fn bisect_edge(model: &ModelSpec, mut k_out: f64, mut k_in: f64, opts: &TraceOptions, params: &EvansParams) -> Result<f64> {
    while (k_out - k_in).abs() > EDGE_WIDTH {
        let km = 0.5 * (k_out + k_in);
        if winding_number(model, km, &opts.rect, params)? >= 1 {
            k_in = km;
        } else {
            k_out = km;
        }
    }
    Ok(0.5 * (k_out + k_in))
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, Complex64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if b - a <= tol {
        let k = 0.5 * (a + b);
        return Ok((k, f(k)?));
    }
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc.re > fd.re {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let k = 0.5 * (a + b);
    Ok((k, f(k)?))
}

/// Fits Re σ(k0 + t) by an even polynomial of degree 6 on |t| ≤ half and returns the
/// order of the first coefficient above 1e−4 in magnitude.
fn flatness_order<F>(f: &F, k0: f64, half: f64, sigma0: Complex64) -> Result<u32>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    if !(half > 0.0) {
        return Err(Error::Numerical("no room around k0 for the flatness fit".into()));
    }
    let n = 21;
    let ts: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = ts
        .par_iter()
        .map(|&t| f(k0 + t).map(|s| s.re))
        .collect::<Result<Vec<_>>>()?;
    let design = DMatrix::from_fn(n, 4, |i, j| ts[i].powi(2 * j as i32));
    let rhs = nalgebra::DVector::from_iterator(n, ys.iter().map(|y| y - sigma0.re));
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    for j in 1..4 {
        if sol[j].abs() > 1e-4 {
            return Ok(2 * j as u32);
        }
    }
    Ok(8)
}

/// A reconstructed unstable eigenmode `e^{σt} e^{iky} U(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeResult {
    pub k: f64,
    pub sigma: Complex64,
    pub grid: GridSpec,
    /// `d` components sampled on the grid, ‖U‖_{L²} = 1.
    pub u: Vec<Vec<Complex64>>,
    /// ‖J(ik)(L+S(ik))U − σU‖ / ‖U‖.
    pub residual: f64,
    /// |(U,LU) + (U,S(ik)U)|.
    pub conservation: f64,
    pub h1_norm_sq: f64,
    /// Smallest over second-smallest singular value of the matching matrix.
    pub singular_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_length: f64,
}

impl From<Grid1d> for GridSpec {
    fn from(g: Grid1d) -> Self {
        Self {
            n: g.n,
            half_length: g.half_length,
        }
    }
}

impl GridSpec {
    pub fn grid(&self) -> Grid1d {
        Grid1d::new(self.n, self.half_length)
    }
}

/// A periodic grid wide enough for the slowest spatial decay of the mode.
pub fn default_mode_grid(model: &ModelSpec, k: f64, sigma: Complex64) -> Result<Grid1d> {
    let split = OdeSystem::new(model, sigma, k).splitting()?;
    let slowest = split
        .roots
        .iter()
        .map(|r| r.re.abs())
        .fold(f64::INFINITY, f64::min)
        .min(model.decay_rate());
    let half = (24.0 / slowest).max(40.0);
    let n = ((2.0 * half / 0.04).ceil() as usize).next_power_of_two();
    Ok(Grid1d::new(n, half))
}

/// Reconstructs the eigenfunction at a certified zero (σ,k) on `grid`.
pub fn mode_reconstruct(model: &ModelSpec, k: f64, sigma: Complex64, grid: Option<Grid1d>) -> Result<ModeResult> {
    let grid = match grid {
        Some(g) => g,
        None => default_mode_grid(model, k, sigma)?,
    };
    let sys = OdeSystem::new(model, sigma, k);
    let dx = grid.dx();
    let sub = (dx / 0.005).ceil() as usize;
    let h = dx / (2 * sub) as f64;
    let half_steps = grid.n / 2;
    let fine = 2 * sub * half_steps;
    let plus = odecore::frame_path(&sys, Side::Plus, h, fine)?;
    let minus = odecore::frame_path(&sys, Side::Minus, h, fine)?;

    let n = sys.dim();
    let mp = plus[0].ncols();
    let mm = minus[0].ncols();
    let mut matching = DMatrix::<Complex64>::zeros(n, n);
    matching.columns_mut(0, mm).copy_from(&minus[0]);
    matching.columns_mut(mm, mp).copy_from(&plus[0]);
    let svd = matching.svd(false, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let s_min = svd.singular_values[order[0]];
    let s_next = svd.singular_values[order[1]];
    let s_max = svd.singular_values[order[n - 1]];
    let singular_ratio = s_min / s_next;
    if s_next < 1e-6 * s_max {
        return Err(Error::Multiplicity { ratio: singular_ratio });
    }
    if s_min > 1e-4 * s_max {
        return Err(Error::Numerical(format!(
            "sigma = {sigma} is not an eigenvalue at k = {k} (matching matrix well conditioned)"
        )));
    }
    let v_t = svd.v_t.as_ref().expect("requested");
    let null: Vec<Complex64> = (0..n).map(|i| v_t[(order[0], i)].conj()).collect();
    let c_minus = nalgebra::DVector::from_iterator(mm, null[..mm].iter().copied());
    let c_plus = nalgebra::DVector::from_iterator(mp, null[mm..].iter().map(|z| -z));

    let states_plus = propagate(&sys, &plus, c_plus, h, 1.0, 2 * sub);
    let states_minus = propagate(&sys, &minus, c_minus, h, -1.0, 2 * sub);

    // Grid index j sits at x = (j − n/2)·dx.
    let mid = grid.n / 2;
    let state_at = |j: usize| -> &nalgebra::DVector<Complex64> {
        if j >= mid {
            &states_plus[j - mid]
        } else {
            &states_minus[mid - j]
        }
    };
    let d = model.d();
    let mut u: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); grid.n]; d];
    for j in 0..grid.n {
        let s = state_at(j);
        u[0][j] = s[0];
        if model.name == ModelName::Nls {
            u[1][j] = s[1];
        }
    }
    if model.name == ModelName::Boussinesq {
        u[1] = boussinesq_second(model, k, sigma, &u[0], &grid);
    }

    let norm = u.iter().map(|c| spectral::l2_norm(c, dx).powi(2)).sum::<f64>().sqrt();
    let (mut big, mut phase) = (0.0, Complex64::new(1.0, 0.0));
    for comp in &u {
        for z in comp {
            if z.norm() > big {
                big = z.norm();
                phase = z.conj() / z.norm();
            }
        }
    }
    let scale = phase / norm;
    for comp in u.iter_mut() {
        comp.iter_mut().for_each(|z| *z *= scale);
    }

    let (residual, conservation, h1) = mode_residuals(model, k, sigma, &u, &grid);
    Ok(ModeResult {
        k,
        sigma,
        grid: grid.into(),
        u,
        residual,
        conservation,
        h1_norm_sq: h1,
        singular_ratio,
    })
}

/// Propagates `c' = YᴴA(x)Y c` outward along stored frames (spacing `h`, RK4 with step 2h)
/// and returns `V = Yc` every `every` frames.
fn propagate(
    sys: &OdeSystem,
    frames: &[DMatrix<Complex64>],
    c0: nalgebra::DVector<Complex64>,
    h: f64,
    sign: f64,
    every: usize,
) -> Vec<nalgebra::DVector<Complex64>> {
    let b = |j: usize| -> DMatrix<Complex64> {
        let y = &frames[j];
        y.adjoint() * sys.matrix(sign * j as f64 * h) * y
    };
    let mut out = Vec::with_capacity(frames.len() / every + 1);
    let mut c = c0;
    out.push(&frames[0] * &c);
    let mut b_left = b(0);
    let mut j = 0;
    while j + 2 < frames.len() {
        let b_mid = b(j + 1);
        let b_right = b(j + 2);
        // The frames are integrated toward x = 0, so the outward parameter runs along sign·x.
        let f = |bm: &DMatrix<Complex64>, v: &nalgebra::DVector<Complex64>| bm * v * Complex64::new(sign, 0.0);
        let hs = Complex64::new(2.0 * h, 0.0);
        let k1 = f(&b_left, &c);
        let k2 = f(&b_mid, &(&c + &k1 * (hs * 0.5)));
        let k3 = f(&b_mid, &(&c + &k2 * (hs * 0.5)));
        let k4 = f(&b_right, &(&c + &k3 * hs));
        c += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (hs / 6.0);
        j += 2;
        b_left = b_right;
        if j % every == 0 {
            out.push(&frames[j] * &c);
        }
    }
    out
}

/// Second boussinesq component `v = (σ − c∂x)^{−1} ∂x B(ik)^{−1/2} (B(ik) − 2q) u`.
pub fn boussinesq_second(model: &ModelSpec, k: f64, sigma: Complex64, u: &[Complex64], grid: &Grid1d) -> Vec<Complex64> {
    let c = model.c;
    let qu: Vec<Complex64> = grid
        .points()
        .zip(u)
        .map(|(x, z)| z * (2.0 * model.bous_q(x)))
        .collect();
    let e = |xi: f64| sigma - Complex64::new(0.0, c * xi);
    let m1 = |xi: f64| {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi * crate::models::b_ik(xi, k).sqrt()) / e(xi)
        }
    };
    let m2 = |xi: f64| {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi / crate::models::b_ik(xi, k).sqrt()) / e(xi)
        }
    };
    let a = spectral::apply_multiplier_complex(u, grid, m1);
    let b = spectral::apply_multiplier_complex(&qu, grid, m2);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

/// Applies a d×d matrix symbol to a d-component field.
fn apply_symbol<F>(u: &[Vec<Complex64>], grid: &Grid1d, symbol: F) -> Vec<Vec<Complex64>>
where
    F: Fn(f64) -> DMatrix<Complex64>,
{
    let d = u.len();
    let hats: Vec<Vec<Complex64>> = u
        .iter()
        .map(|c| {
            let mut v = c.clone();
            spectral::fft(&mut v);
            v
        })
        .collect();
    let xis = grid.wavenumbers();
    let nyq = grid.nyquist();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.n]; d];
    for (j, &xi) in xis.iter().enumerate() {
        if j == nyq {
            continue;
        }
        let m = symbol(xi);
        for r in 0..d {
            out[r][j] = (0..d).map(|c| m[(r, c)] * hats[c][j]).sum();
        }
    }
    for o in out.iter_mut() {
        spectral::ifft(o);
    }
    out
}

/// Eigen-residual, conservation residual and squared H¹ norm of a sampled mode.
pub fn mode_residuals(
    model: &ModelSpec,
    k: f64,
    sigma: Complex64,
    u: &[Vec<Complex64>],
    grid: &Grid1d,
) -> (f64, f64, f64) {
    let t = model.symbols();
    let dx = grid.dx();
    let d = model.d();
    let l0u = apply_symbol(u, grid, |xi| t.l0_symbol(xi));
    let su = apply_symbol(u, grid, |xi| t.s_symbol(xi, k));
    let mut lu = l0u;
    for (j, x) in grid.points().enumerate() {
        let r = t.potential(x);
        for row in 0..d {
            for col in 0..d {
                lu[row][j] += u[col][j] * r[(row, col)];
            }
        }
    }
    let total: Vec<Vec<Complex64>> = lu
        .iter()
        .zip(&su)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    let ju = apply_symbol(&total, grid, |xi| t.j_symbol(xi, k));
    let norm_u = u.iter().map(|c| spectral::l2_norm(c, dx).powi(2)).sum::<f64>().sqrt();
    let res = ju
        .iter()
        .zip(u)
        .map(|(a, b)| {
            let diff: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - sigma * y).collect();
            spectral::l2_norm(&diff, dx).powi(2)
        })
        .sum::<f64>()
        .sqrt()
        / norm_u;
    let conservation = (0..d)
        .map(|c| spectral::inner(&u[c], &lu[c], dx) + spectral::inner(&u[c], &su[c], dx))
        .sum::<Complex64>()
        .norm();
    let du = apply_symbol(u, grid, |xi| DMatrix::from_diagonal_element(d, d, Complex64::new(0.0, xi)));
    let h1 = (0..d)
        .map(|c| spectral::l2_norm(&u[c], dx).powi(2) + spectral::l2_norm(&du[c], dx).powi(2))
        .sum();
    (res, conservation, h1)
}
