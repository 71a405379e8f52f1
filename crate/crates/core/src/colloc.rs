//! Fourier collocation of the one-dimensional operators on a periodic interval.
//!
//! Operators are assembled as real dense matrices in the orthonormal trigonometric basis of
//! the grid (mean, cos/sin pairs, Nyquist). Fourier multipliers are block diagonal there and
//! multiplication by a potential is `Tᵀ diag(V) T`. For every model except nls the mean and
//! Nyquist modes are dropped, which is where `∂x^{-1}` is undefined.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{ModelName, ModelSpec};
use crate::spectral::{self, Grid1d};
use crate::specfind::Rect;

/// Localized eigenvectors keep at least this fraction of their mass in `|x| ≤ L/2`.
pub const LOCALIZATION_MASS: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Mean,
    Cos(usize),
    Sin(usize),
    Nyquist,
}

/// Orthonormal real trigonometric basis sampled on a grid.
#[derive(Debug, Clone)]
pub struct TrigBasis {
    pub grid: Grid1d,
    modes: Vec<Mode>,
    /// `n × modes.len()`, orthonormal columns.
    t: DMatrix<f64>,
}

impl TrigBasis {
    pub fn new(grid: Grid1d, keep_mean: bool) -> Self {
        let n = grid.n;
        let mut modes = Vec::with_capacity(n);
        if keep_mean {
            modes.push(Mode::Mean);
        }
        for m in 1..n / 2 {
            modes.push(Mode::Cos(m));
            modes.push(Mode::Sin(m));
        }
        if keep_mean {
            modes.push(Mode::Nyquist);
        }
        let base = std::f64::consts::PI / grid.half_length;
        let a = (2.0 / n as f64).sqrt();
        let b = (1.0 / n as f64).sqrt();
        let t = DMatrix::from_fn(n, modes.len(), |j, c| {
            let x = grid.x(j);
            match modes[c] {
                Mode::Mean => b,
                Mode::Cos(m) => a * (base * m as f64 * x).cos(),
                Mode::Sin(m) => a * (base * m as f64 * x).sin(),
                Mode::Nyquist => b * (base * (n / 2) as f64 * x).cos(),
            }
        });
        Self { grid, modes, t }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    fn wavenumber(&self, c: usize) -> f64 {
        let base = std::f64::consts::PI / self.grid.half_length;
        match self.modes[c] {
            Mode::Mean => 0.0,
            Mode::Cos(m) | Mode::Sin(m) => base * m as f64,
            Mode::Nyquist => base * (self.grid.n / 2) as f64,
        }
    }

    /// Matrix of the multiplier with symbol `s(ξ) = h(ξ) + i g(ξ)`, `h` even and `g` odd.
    pub fn multiplier<F: Fn(f64) -> Complex64>(&self, symbol: F) -> DMatrix<f64> {
        let nb = self.len();
        let mut out = DMatrix::zeros(nb, nb);
        let mut c = 0;
        while c < nb {
            let xi = self.wavenumber(c);
            match self.modes[c] {
                Mode::Cos(_) => {
                    let s = symbol(xi);
                    out[(c, c)] = s.re;
                    out[(c + 1, c + 1)] = s.re;
                    out[(c, c + 1)] = s.im;
                    out[(c + 1, c)] = -s.im;
                    c += 2;
                }
                _ => {
                    out[(c, c)] = symbol(xi).re;
                    c += 1;
                }
            }
        }
        out
    }

    /// Matrix of pointwise multiplication by `v` sampled on the grid.
    pub fn potential(&self, v: &[f64]) -> DMatrix<f64> {
        let mut scaled = self.t.clone();
        for (j, mut row) in scaled.row_iter_mut().enumerate() {
            row *= v[j];
        }
        let mut m = self.t.transpose() * scaled;
        let sym = (&m + m.transpose()) * 0.5;
        m.copy_from(&sym);
        m
    }

    pub fn project(&self, f: &[f64]) -> DVector<f64> {
        self.t.transpose() * DVector::from_column_slice(f)
    }

    pub fn to_grid(&self, c: &DVector<f64>) -> Vec<f64> {
        (&self.t * c).iter().copied().collect()
    }

    pub fn to_grid_complex(&self, c: &DVector<Complex64>) -> Vec<Complex64> {
        let re = &self.t * c.map(|z| z.re);
        let im = &self.t * c.map(|z| z.im);
        re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }
}

/// Discrete L, J(ik) and S(ik) for one model at one transverse wavenumber.
#[derive(Debug, Clone)]
pub struct CollocationOperator {
    pub model: ModelSpec,
    pub k: f64,
    pub basis: TrigBasis,
    pub l: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

fn validate_grid(n: usize, half_length: f64) -> Result<()> {
    if n < 256 || !n.is_power_of_two() {
        return Err(Error::InvalidParam(format!("collocation size must be a power of two >= 256, got {n}")));
    }
    if !(half_length >= 20.0) {
        return Err(Error::InvalidParam(format!("collocation half-length must be >= 20, got {half_length}")));
    }
    Ok(())
}

fn blocks<F>(basis: &TrigBasis, d: usize, entry: F) -> DMatrix<f64>
where
    F: Fn(usize, usize) -> DMatrix<f64>,
{
    let nb = basis.len();
    let mut out = DMatrix::zeros(d * nb, d * nb);
    for a in 0..d {
        for b in 0..d {
            out.view_mut((a * nb, b * nb), (nb, nb)).copy_from(&entry(a, b));
        }
    }
    out
}

impl CollocationOperator {
    pub fn new(model: &ModelSpec, k: f64, n: usize, half_length: f64) -> Result<Self> {
        validate_grid(n, half_length)?;
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParam(format!("k must be >= 0, got {k}")));
        }
        let grid = Grid1d::new(n, half_length);
        let basis = TrigBasis::new(grid, model.name == ModelName::Nls);
        let d = model.d();
        let sym = model.symbols();
        let xs: Vec<f64> = grid.points().collect();
        let pot: Vec<_> = xs.iter().map(|&x| sym.potential(x)).collect();

        let l = blocks(&basis, d, |a, b| {
            let mut m = basis.multiplier(|xi| sym.l0_symbol(xi)[(a, b)]);
            let v: Vec<f64> = pot.iter().map(|r| r[(a, b)]).collect();
            if v.iter().any(|x| *x != 0.0) {
                m += basis.potential(&v);
            }
            m
        });
        let j = blocks(&basis, d, |a, b| basis.multiplier(|xi| sym.j_symbol(xi, k)[(a, b)]));
        let s = blocks(&basis, d, |a, b| basis.multiplier(|xi| sym.s_symbol(xi, k)[(a, b)]));
        Ok(Self {
            model: model.clone(),
            k,
            basis,
            l,
            j,
            s,
        })
    }

    pub fn d(&self) -> usize {
        self.model.d()
    }

    /// M_k = J L J + J S J.
    pub fn m_k(&self) -> DMatrix<f64> {
        let m = &self.j * (&self.l + &self.s) * &self.j;
        (&m + m.transpose()) * 0.5
    }

    /// The generator J(ik)(L + S(ik)) of the linearized evolution.
    pub fn generator(&self) -> DMatrix<f64> {
        &self.j * (&self.l + &self.s)
    }

    /// Per-component grid values of a coefficient vector.
    pub fn components(&self, c: &DVector<f64>) -> Vec<Vec<f64>> {
        let nb = self.basis.len();
        (0..self.d())
            .map(|a| self.basis.to_grid(&c.rows(a * nb, nb).into_owned()))
            .collect()
    }

    pub fn components_complex(&self, c: &DVector<Complex64>) -> Vec<Vec<Complex64>> {
        let nb = self.basis.len();
        (0..self.d())
            .map(|a| self.basis.to_grid_complex(&c.rows(a * nb, nb).into_owned()))
            .collect()
    }

    pub fn coefficients(&self, u: &[Vec<f64>]) -> DVector<f64> {
        let nb = self.basis.len();
        let mut c = DVector::zeros(self.d() * nb);
        for (a, comp) in u.iter().enumerate() {
            c.rows_mut(a * nb, nb).copy_from(&self.basis.project(comp));
        }
        c
    }
}

fn asymmetry(m: &DMatrix<f64>, sign: f64) -> f64 {
    (m - m.transpose() * sign).amax()
}

/// Symmetry defects of the discrete operators: (L, J skew, S, M_k).
pub fn structure_defects(op: &CollocationOperator) -> [f64; 4] {
    [
        asymmetry(&op.l, 1.0),
        asymmetry(&op.j, -1.0),
        asymmetry(&op.s, 1.0),
        asymmetry(&(&op.j * (&op.l + &op.s) * &op.j), 1.0),
    ]
}

/// Lowest eigenpairs of L.
#[derive(Debug, Clone, Serialize)]
pub struct LSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Per eigenvalue, per component grid values (unit discrete L² norm).
    pub eigenvectors: Vec<Vec<Vec<f64>>>,
    /// Number of eigenvalues below −1e−3.
    pub n_negative: usize,
    /// Largest ‖L v‖/‖v‖ over the symmetry-generated kernel vectors.
    pub kernel_residual: f64,
    pub single_negative: bool,
}

pub fn spectrum_l(model: &ModelSpec, n: usize, half_length: f64) -> Result<LSpectrum> {
    let op = CollocationOperator::new(model, 0.0, n, half_length)?;
    let eig = SymmetricEigen::try_new(op.l.clone(), 1e-14, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolve of L did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n_negative = order.iter().filter(|&&i| eig.eigenvalues[i] < -1e-3).count();
    let lowest: Vec<usize> = order.iter().take(4).copied().collect();

    let grid = op.basis.grid;
    let xs: Vec<f64> = grid.points().collect();
    let d = model.d();
    let profile: Vec<Vec<f64>> = (0..d)
        .map(|a| xs.iter().map(|&x| model.soliton_profile(x)[a]).collect())
        .collect();
    let mut kernel = vec![profile.iter().map(|q| spectral::derivative(q, &grid, 1)).collect::<Vec<_>>()];
    if model.name == ModelName::Nls {
        kernel.push(vec![vec![0.0; grid.n], profile[0].clone()]);
    }
    let kernel_residual = kernel
        .iter()
        .map(|v| {
            let c = op.coefficients(v);
            (&op.l * &c).norm() / c.norm()
        })
        .fold(0.0, f64::max);

    Ok(LSpectrum {
        eigenvalues: lowest.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: lowest
            .iter()
            .map(|&i| {
                let scale = grid.dx().sqrt();
                op.components(&eig.eigenvectors.column(i).into_owned())
                    .into_iter()
                    .map(|c| c.into_iter().map(|v| v / scale).collect())
                    .collect()
            })
            .collect(),
        n_negative,
        kernel_residual,
        single_negative: n_negative == 1,
    })
}

/// Largest eigenvalue of M_k with its unit eigenvector (basis coefficients).
fn top_eigen(op: &CollocationOperator) -> Result<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::try_new(op.m_k(), 1e-14, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolve of M_k did not converge".into()))?;
    let i = eig.eigenvalues.imax();
    Ok((eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
}

/// Largest eigenvalue μ_max(k) of the discrete M_k.
pub fn max_eig_mk(model: &ModelSpec, k: f64, n: usize, half_length: f64) -> Result<f64> {
    Ok(top_eigen(&CollocationOperator::new(model, k, n, half_length)?)?.0)
}

/// μ_max on a list of k values, computed in parallel.
pub fn scan_mk(model: &ModelSpec, ks: &[f64], n: usize, half_length: f64) -> Result<Vec<f64>> {
    ks.par_iter().map(|&k| max_eig_mk(model, k, n, half_length)).collect()
}

/// Whether J S(ik) J = −k² Id, so that μ_max(k) = μ_max(0) − k².
pub fn has_shift_law(model: &ModelSpec) -> bool {
    matches!(model.name, ModelName::Gkp1 | ModelName::Nls)
}

/// Outcome of the kernel criterion for transverse instability.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub mu_max0: f64,
    pub k0: f64,
    /// (∂k M_k φ, φ) at k0 for the unit kernel vector φ of M_k0.
    pub derivative_pairing: f64,
    /// −2 k0 for models obeying the scalar shift law.
    pub predicted_pairing: Option<f64>,
    pub fredholm: bool,
    pub criterion_valid: bool,
    pub note: String,
}

#[derive(Debug, Clone, Copy)]
pub struct CriterionOptions {
    pub n: usize,
    pub half_length: f64,
    pub k_tol: f64,
    pub fd_step: f64,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        Self {
            n: 512,
            half_length: 40.0,
            k_tol: 1e-7,
            fd_step: 1e-4,
        }
    }
}

/// Locates the crossing μ_max(k0) = 0 and checks the transversality pairing there.
///
/// Returns `None` when μ_max(0) ≤ 0 or there is no sign change on `[0, K_model]`.
pub fn find_k0_criterion(model: &ModelSpec, opts: &CriterionOptions) -> Result<Option<Criterion>> {
    let mu = |k: f64| max_eig_mk(model, k, opts.n, opts.half_length);
    let mu0 = mu(0.0)?;
    if !(mu0 > 0.0) {
        return Ok(None);
    }
    let k0 = if has_shift_law(model) {
        mu0.sqrt()
    } else {
        let (mut lo, mut hi) = (0.0, model.coercivity_k());
        let (mut f_lo, mut f_hi) = (mu0, mu(hi)?);
        if f_hi >= 0.0 {
            return Ok(None);
        }
        // Illinois regula falsi: μ_max is smooth and monotone near the crossing.
        let mut side = 0i8;
        let mut k = 0.5 * (lo + hi);
        for _ in 0..100 {
            k = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            let f = mu(k)?;
            if f > 0.0 {
                lo = k;
                f_lo = f;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = k;
                f_hi = f;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            }
            if hi - lo < opts.k_tol || f.abs() < 1e-13 {
                break;
            }
        }
        k
    };

    let op0 = CollocationOperator::new(model, k0, opts.n, opts.half_length)?;
    let (_, phi) = top_eigen(&op0)?;
    let h = opts.fd_step.min(0.5 * k0);
    let plus = CollocationOperator::new(model, k0 + h, opts.n, opts.half_length)?.m_k();
    let minus = CollocationOperator::new(model, k0 - h, opts.n, opts.half_length)?.m_k();
    let dm = (plus - minus) / (2.0 * h);
    let derivative_pairing = phi.dot(&(dm * &phi));

    let fredholm = model.mk_fredholm();
    let nonzero = derivative_pairing.abs() > 1e-6;
    let predicted_pairing = has_shift_law(model).then_some(-2.0 * k0);
    let note = if !fredholm {
        "criterion Fredholm hypothesis fails: M_k is not Fredholm of index zero".to_string()
    } else if !nonzero {
        "derivative pairing vanishes at k0".to_string()
    } else {
        String::new()
    };
    Ok(Some(Criterion {
        mu_max0: mu0,
        k0,
        derivative_pairing,
        predicted_pairing,
        fredholm,
        criterion_valid: fredholm && nonzero,
        note,
    }))
}

/// Eigenvalues of the discrete linearized generator in a region.
#[derive(Debug, Clone, Serialize)]
pub struct OracleEigs {
    pub k: f64,
    /// Localized eigenvalues sorted by decreasing real part.
    pub localized: Vec<Complex64>,
    /// Candidates in the region whose eigenvectors fail the localization filter, with their
    /// inner mass fraction.
    pub spurious: Vec<(Complex64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub n: usize,
    pub half_length: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            n: 512,
            half_length: 40.0,
        }
    }
}

/// Eigenvector of `a` for the (numerically exact) eigenvalue `lambda` by inverse iteration.
fn inverse_iteration(a: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = a.nrows();
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + lambda.norm());
    let m = a.map(|v| Complex64::new(v, 0.0)) - DMatrix::from_diagonal_element(n, n, shift);
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.0));
    for _ in 0..3 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Eigen(format!("inverse iteration singular at {lambda}")))?;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Eigen(format!("inverse iteration diverged at {lambda}")));
        }
        v /= Complex64::new(norm, 0.0);
    }
    Ok(v)
}

/// All eigenvalues of J(ik)(L + S(ik)) in `region`, split by the localization filter.
pub fn oracle_eigs(model: &ModelSpec, k: f64, region: &Rect, opts: &OracleOptions) -> Result<OracleEigs> {
    if !(region.re_min > 0.0) || region.re_max <= region.re_min || region.im_max <= region.im_min {
        return Err(Error::InvalidParam("oracle region must lie in Re sigma > 0".into()));
    }
    let op = CollocationOperator::new(model, k, opts.n, opts.half_length)?;
    let a = op.generator();
    let schur = a.clone().try_schur(1e-14, 0).ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let candidates: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .copied()
        .filter(|z| region.contains(*z))
        .collect();

    let grid = op.basis.grid;
    let inner = |x: f64| x.abs() <= 0.5 * grid.half_length;
    let mut localized = Vec::new();
    let mut spurious = Vec::new();
    for z in candidates {
        let v = inverse_iteration(&a, z)?;
        let comps = op.components_complex(&v);
        let (mut inside, mut total) = (0.0, 0.0);
        for comp in &comps {
            for (j, u) in comp.iter().enumerate() {
                let w = u.norm_sqr();
                total += w;
                if inner(grid.x(j)) {
                    inside += w;
                }
            }
        }
        let frac = inside / total;
        if frac >= LOCALIZATION_MASS {
            localized.push(z);
        } else {
            spurious.push((z, frac));
        }
    }
    localized.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(OracleEigs { k, localized, spurious })
}
