//! The five dispersive models and every closed-form object derived from them.
//!
//! Each model is written in a frame where its solitary wave `Q` is stationary,
//! `∂t U = J (L0 U + ∇F(U) + S(∂y) U)`, and linearisation about `Q` gives
//! `L = L0 + R` with `R = ∇²F(Q)`. The transverse eigenvalue problem
//! `σU = J(ik)(L + S(ik))U` is reduced to a first-order ODE `V' = A(x,σ,k)V`
//! in companion-like form.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{self, Grid1d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Gkp1,
    Nls,
    Boussinesq,
    Zk,
    Kpbbm,
}

impl ModelName {
    pub const ALL: [ModelName; 5] = [
        ModelName::Gkp1,
        ModelName::Nls,
        ModelName::Boussinesq,
        ModelName::Zk,
        ModelName::Kpbbm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Gkp1 => "gkp1",
            ModelName::Nls => "nls",
            ModelName::Boussinesq => "boussinesq",
            ModelName::Zk => "zk",
            ModelName::Kpbbm => "kpbbm",
        }
    }
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gkp1" | "gkp" | "kp" => Ok(ModelName::Gkp1),
            "nls" => Ok(ModelName::Nls),
            "boussinesq" => Ok(ModelName::Boussinesq),
            "zk" => Ok(ModelName::Zk),
            "kpbbm" | "kp-bbm" => Ok(ModelName::Kpbbm),
            other => Err(Error::InvalidParam(format!("unknown model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `amp · sech²(rate · x)` with its first two derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Sech2 {
    pub amp: f64,
    pub rate: f64,
}

impl Sech2 {
    pub fn value(&self, x: f64) -> f64 {
        let s = sech(self.rate * x);
        self.amp * s * s
    }

    pub fn d1(&self, x: f64) -> f64 {
        let y = self.rate * x;
        let s = sech(y);
        -2.0 * self.amp * self.rate * s * s * y.tanh()
    }

    pub fn d2(&self, x: f64) -> f64 {
        let s = sech(self.rate * x);
        let s2 = s * s;
        self.amp * self.rate * self.rate * (4.0 * s2 - 6.0 * s2 * s2)
    }
}

pub fn sech(x: f64) -> f64 {
    // 2 / (e^x + e^-x) without overflow for large |x|.
    let ax = x.abs();
    let e = (-ax).exp();
    2.0 * e / (1.0 + e * e)
}

/// Profile of the gKdV solitary wave of unit speed,
/// `((p+1)/2)^{1/(p−1)} sech^{2/(p−1)}((p−1)x/2)`.
pub fn kdv_profile(p: u32, x: f64) -> f64 {
    let pf = p as f64;
    ((pf + 1.0) / 2.0).powf(1.0 / (pf - 1.0)) * sech((pf - 1.0) * x / 2.0).powf(2.0 / (pf - 1.0))
}

/// How the resolvent problem is reduced to an ODE (metadata consumed by mode reconstruction).
#[derive(Debug, Clone, Serialize)]
pub struct SourceMap {
    /// The Fourier multiplier R(σ,k) applied before reading off the ODE, for k ≠ 0.
    pub reduction: &'static str,
    /// R(σ,0) where it differs from the k ≠ 0 choice.
    pub reduction_k0: Option<&'static str>,
    /// Order of the scalar (or system) ODE for k ≠ 0 and k = 0.
    pub order: (usize, usize),
    /// Second block (E, P2) recovering the remaining components, when present.
    pub second_block: Option<SecondBlock>,
    /// Meaning of the ODE state vector.
    pub state: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondBlock {
    pub e: &'static str,
    pub p2: &'static str,
    pub recover: &'static str,
}

/// A self-describing dispersive model with validated parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    pub name: ModelName,
    /// Power of the nonlinearity (gkp1, kpbbm); 2 for zk, 3 for nls, 2 for boussinesq.
    pub p: u32,
    /// Wave speed (boussinesq, kpbbm); 1 otherwise.
    pub c: f64,
    #[serde(skip)]
    bous_cache: OnceLock<BoussinesqSecond>,
}

#[derive(Debug, Clone)]
struct BoussinesqSecond {
    half_length: f64,
    spectrum: Vec<Complex64>,
    wavenumbers: Vec<f64>,
}

impl PartialEq for ModelSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.p == other.p && self.c == other.c
    }
}

impl ModelSpec {
    pub fn gkp1(p: u32) -> Result<Self> {
        if !(2..=4).contains(&p) {
            return Err(Error::InvalidParam(format!("gkp1 needs p in {{2,3,4}}, got {p}")));
        }
        Ok(Self::raw(ModelName::Gkp1, p, 1.0))
    }

    pub fn nls() -> Self {
        Self::raw(ModelName::Nls, 3, 1.0)
    }

    pub fn zk() -> Self {
        Self::raw(ModelName::Zk, 2, 1.0)
    }

    pub fn boussinesq(c: f64) -> Result<Self> {
        if !(c > 0.5 && c < 1.0) {
            return Err(Error::InvalidParam(format!("boussinesq needs c in (1/2, 1), got {c}")));
        }
        Ok(Self::raw(ModelName::Boussinesq, 2, c))
    }

    pub fn kpbbm(c: f64, p: u32) -> Result<Self> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::InvalidParam(format!("kpbbm needs c > 1, got {c}")));
        }
        if !(2..=4).contains(&p) {
            return Err(Error::InvalidParam(format!("kpbbm needs p in {{2,3,4}}, got {p}")));
        }
        Ok(Self::raw(ModelName::Kpbbm, p, c))
    }

    /// Builds a model from optional parameters, filling the registry defaults.
    pub fn from_parts(name: ModelName, p: Option<u32>, c: Option<f64>) -> Result<Self> {
        match name {
            ModelName::Gkp1 => Self::gkp1(p.unwrap_or(2)),
            ModelName::Nls => Ok(Self::nls()),
            ModelName::Zk => Ok(Self::zk()),
            ModelName::Boussinesq => Self::boussinesq(c.unwrap_or(0.75)),
            ModelName::Kpbbm => Self::kpbbm(c.unwrap_or(2.0), p.unwrap_or(2)),
        }
    }

    /// The registry with default parameters.
    pub fn registry() -> Vec<ModelSpec> {
        ModelName::ALL
            .iter()
            .map(|&n| Self::from_parts(n, None, None).expect("defaults are valid"))
            .collect()
    }

    fn raw(name: ModelName, p: u32, c: f64) -> Self {
        Self {
            name,
            p,
            c,
            bous_cache: OnceLock::new(),
        }
    }

    /// Number of components of the unknown.
    pub fn d(&self) -> usize {
        match self.name {
            ModelName::Nls | ModelName::Boussinesq => 2,
            _ => 1,
        }
    }

    /// Dimension of the first-order spatial ODE.
    pub fn ode_dim(&self, k: f64) -> usize {
        match self.name {
            ModelName::Gkp1 | ModelName::Kpbbm => {
                if k == 0.0 {
                    3
                } else {
                    4
                }
            }
            ModelName::Nls | ModelName::Boussinesq => 4,
            ModelName::Zk => 3,
        }
    }

    /// True when k → 0 sends a spatial root to zero and the Evans function is continued
    /// through the gap lemma.
    pub fn has_slow_root(&self) -> bool {
        matches!(self.name, ModelName::Gkp1 | ModelName::Kpbbm)
    }

    fn bbm_rate(&self) -> f64 {
        (1.0 - 1.0 / self.c).sqrt()
    }

    /// The scalar potential `f` entering the ODE matrix:
    /// gkp1/kpbbm `pQ^{p−1}`, zk `2Q`, boussinesq `2q`, nls `3Q²` (the `Q²` term is `f/3`).
    pub fn potential_sech2(&self) -> Sech2 {
        let pf = self.p as f64;
        match self.name {
            ModelName::Gkp1 => Sech2 {
                amp: pf * (pf + 1.0) / 2.0,
                rate: (pf - 1.0) / 2.0,
            },
            ModelName::Kpbbm => Sech2 {
                amp: pf * (self.c - 1.0) * (pf + 1.0) / 2.0,
                rate: (pf - 1.0) * self.bbm_rate() / 2.0,
            },
            ModelName::Zk => Sech2 { amp: 3.0, rate: 0.5 },
            ModelName::Boussinesq => {
                let a = 1.0 - self.c * self.c;
                Sech2 {
                    amp: 3.0 * a,
                    rate: a.sqrt() / 2.0,
                }
            }
            ModelName::Nls => Sech2 { amp: 6.0, rate: 1.0 },
        }
    }

    /// Exponential decay rate α of the potential terms.
    pub fn decay_rate(&self) -> f64 {
        2.0 * self.potential_sech2().rate
    }

    /// Default truncation of the spatial line, `max(20, 12/α)`.
    pub fn x_inf_default(&self) -> f64 {
        (12.0 / self.decay_rate()).max(20.0)
    }

    /// A transverse frequency beyond which `L + S(ik)` is coercive, so no unstable mode exists.
    pub fn coercivity_k(&self) -> f64 {
        let pf = self.p as f64;
        match self.name {
            ModelName::Gkp1 => pf * (pf + 1.0) / 2.0,
            ModelName::Kpbbm => pf * (self.c - 1.0) * (pf + 1.0) / 2.0 / self.c.sqrt(),
            ModelName::Nls => 5.0_f64.sqrt(),
            ModelName::Zk => 2.0_f64.sqrt(),
            ModelName::Boussinesq => {
                let c = self.c;
                let two_sup_q = 3.0 * (1.0 - c * c);
                let s = (c + (c * c + 4.0 * two_sup_q).sqrt()) / 2.0;
                (s * s - 1.0) / 2.0
            }
        }
    }

    /// Whether the kernel criterion's Fredholm hypothesis holds for this model.
    /// For zk the essential spectrum of M_k reaches zero at the crossing.
    pub fn mk_fredholm(&self) -> bool {
        self.name != ModelName::Zk
    }

    /// Solitary-wave profile Q(x); `d` components.
    ///
    /// The second boussinesq component `−c B^{−1/2} q` is a Fourier multiplier applied on a
    /// fine periodic grid and evaluated by trigonometric interpolation.
    pub fn soliton_profile(&self, x: f64) -> Vec<f64> {
        match self.name {
            ModelName::Gkp1 => vec![kdv_profile(self.p, x)],
            ModelName::Nls => vec![2.0_f64.sqrt() * sech(x), 0.0],
            ModelName::Zk => vec![kdv_profile(2, x)],
            ModelName::Kpbbm => {
                let pf = self.p as f64;
                vec![(self.c - 1.0).powf(1.0 / (pf - 1.0)) * kdv_profile(self.p, self.bbm_rate() * x)]
            }
            ModelName::Boussinesq => {
                let q = self.bous_q(x);
                let cache = self.bous_cache.get_or_init(|| self.build_bous_cache());
                let v = if x.abs() >= cache.half_length {
                    0.0
                } else {
                    let n = cache.spectrum.len() as f64;
                    let shift = x + cache.half_length;
                    cache
                        .spectrum
                        .iter()
                        .zip(&cache.wavenumbers)
                        .map(|(s, &xi)| (s * Complex64::from_polar(1.0, xi * shift)).re)
                        .sum::<f64>()
                        / n
                };
                vec![q, v]
            }
        }
    }

    /// First boussinesq component in closed form.
    pub fn bous_q(&self, x: f64) -> f64 {
        let a = 1.0 - self.c * self.c;
        a * kdv_profile(2, a.sqrt() * x)
    }

    fn build_bous_cache(&self) -> BoussinesqSecond {
        let half_length = 60.0 / self.decay_rate();
        let grid = Grid1d::new(4096, half_length);
        let q: Vec<f64> = grid.points().map(|x| self.bous_q(x)).collect();
        let c = self.c;
        let v = spectral::apply_multiplier(&q, &grid, |xi| {
            Complex64::new(-c / (1.0 + xi * xi).sqrt(), 0.0)
        });
        let spectrum = spectral::fft_real(&v);
        BoussinesqSecond {
            half_length,
            spectrum,
            wavenumbers: grid.wavenumbers(),
        }
    }

    /// Characteristic polynomial of A_∞(σ,k), highest degree first, in the normalisation
    /// of the model's scalar ODE (leading coefficient c for kpbbm).
    pub fn char_poly(&self, sigma: Complex64, k: f64) -> Vec<Complex64> {
        let r = |x: f64| Complex64::new(x, 0.0);
        let k2 = r(k * k);
        match self.name {
            ModelName::Gkp1 => {
                if k == 0.0 {
                    vec![r(1.0), r(0.0), r(-1.0), sigma]
                } else {
                    vec![r(1.0), r(0.0), r(-1.0), sigma, k2]
                }
            }
            ModelName::Nls => {
                let a = 1.0 + k * k;
                vec![r(1.0), r(0.0), r(-2.0 * a), r(0.0), r(a * a) + sigma * sigma]
            }
            ModelName::Zk => vec![r(1.0), r(0.0), r(-(1.0 + k * k)), sigma],
            ModelName::Boussinesq => {
                let c = self.c;
                vec![
                    r(1.0),
                    r(0.0),
                    r(-(1.0 - c * c)),
                    sigma * (-2.0 * c),
                    k2 + sigma * sigma,
                ]
            }
            ModelName::Kpbbm => {
                let c = self.c;
                if k == 0.0 {
                    vec![r(c), -sigma, r(-(c - 1.0)), sigma]
                } else {
                    vec![r(c), -sigma, r(-(c - 1.0)), sigma, k2]
                }
            }
        }
    }

    /// A(x,σ,k).
    pub fn ode_matrix(&self, x: f64, sigma: Complex64, k: f64) -> DMatrix<Complex64> {
        let pot = self.potential_sech2();
        self.assemble(pot.value(x), pot.d1(x), pot.d2(x), sigma, k)
    }

    /// A_∞(σ,k), the potential forced to zero.
    pub fn ode_matrix_inf(&self, sigma: Complex64, k: f64) -> DMatrix<Complex64> {
        self.assemble(0.0, 0.0, 0.0, sigma, k)
    }

    fn assemble(&self, f: f64, fx: f64, fxx: f64, sigma: Complex64, k: f64) -> DMatrix<Complex64> {
        let n = self.ode_dim(k);
        let r = |x: f64| Complex64::new(x, 0.0);
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        let k2 = k * k;
        match self.name {
            ModelName::Nls => {
                a[(0, 2)] = r(1.0);
                a[(1, 3)] = r(1.0);
                // f = 3Q², so Q² = f/3.
                a[(2, 0)] = r(k2 + 1.0 - f);
                a[(2, 1)] = sigma;
                a[(3, 0)] = -sigma;
                a[(3, 1)] = r(k2 + 1.0 - f / 3.0);
            }
            _ => {
                for i in 0..n - 1 {
                    a[(i, i + 1)] = r(1.0);
                }
                let last = n - 1;
                match (self.name, n) {
                    (ModelName::Gkp1, 4) => {
                        a[(last, 0)] = r(-k2 - fxx);
                        a[(last, 1)] = -sigma - 2.0 * fx;
                        a[(last, 2)] = r(1.0 - f);
                    }
                    (ModelName::Gkp1, _) => {
                        a[(last, 0)] = -sigma - fx;
                        a[(last, 1)] = r(1.0 - f);
                    }
                    (ModelName::Zk, _) => {
                        a[(last, 0)] = -sigma - fx;
                        a[(last, 1)] = r(1.0 + k2 - f);
                    }
                    (ModelName::Boussinesq, _) => {
                        let c = self.c;
                        a[(last, 0)] = r(-k2 - fxx) - sigma * sigma;
                        a[(last, 1)] = sigma * (2.0 * c) - 2.0 * fx;
                        a[(last, 2)] = r(1.0 - c * c - f);
                    }
                    (ModelName::Kpbbm, 4) => {
                        let c = self.c;
                        a[(last, 0)] = r((-k2 - fxx) / c);
                        a[(last, 1)] = (-sigma - 2.0 * fx) / c;
                        a[(last, 2)] = r((c - 1.0 - f) / c);
                        a[(last, 3)] = sigma / c;
                    }
                    (ModelName::Kpbbm, _) => {
                        let c = self.c;
                        a[(last, 0)] = (-sigma - fx) / c;
                        a[(last, 1)] = r((c - 1.0 - f) / c);
                        a[(last, 2)] = sigma / c;
                    }
                    (ModelName::Nls, _) => unreachable!(),
                }
            }
        }
        a
    }

    /// A(x,σ,k) for the four-dimensional continuation system of gkp1/kpbbm, valid at k = 0.
    pub fn ode_matrix_continued(&self, x: f64, sigma: Complex64, k: f64) -> DMatrix<Complex64> {
        if self.has_slow_root() && k == 0.0 {
            let pot = self.potential_sech2();
            self.assemble(pot.value(x), pot.d1(x), pot.d2(x), sigma, f64::MIN_POSITIVE)
        } else {
            self.ode_matrix(x, sigma, k)
        }
    }

    /// A_∞ of the continuation system.
    pub fn ode_matrix_inf_continued(&self, sigma: Complex64, k: f64) -> DMatrix<Complex64> {
        if self.has_slow_root() && k == 0.0 {
            self.assemble(0.0, 0.0, 0.0, sigma, f64::MIN_POSITIVE)
        } else {
            self.ode_matrix_inf(sigma, k)
        }
    }

    pub fn ode_source_map(&self) -> SourceMap {
        match self.name {
            ModelName::Gkp1 => SourceMap {
                reduction: "∂x",
                reduction_k0: Some("Id"),
                order: (4, 3),
                second_block: None,
                state: "(u, u', u'', u''') for k ≠ 0; (u, u', u'') for k = 0",
            },
            ModelName::Kpbbm => SourceMap {
                reduction: "(Id − ∂x²)∂x",
                reduction_k0: Some("Id − ∂x²"),
                order: (4, 3),
                second_block: None,
                state: "(u, u', u'', u''') for k ≠ 0; (u, u', u'') for k = 0",
            },
            ModelName::Nls => SourceMap {
                reduction: "Id",
                reduction_k0: None,
                order: (2, 2),
                second_block: None,
                state: "(u1, u2, u1', u2')",
            },
            ModelName::Zk => SourceMap {
                reduction: "Id",
                reduction_k0: None,
                order: (3, 3),
                second_block: None,
                state: "(u, u', u'')",
            },
            ModelName::Boussinesq => SourceMap {
                reduction: "[[σ − c∂x, ∂x B(ik)^{1/2}], [0, 1]]",
                reduction_k0: None,
                order: (4, 4),
                second_block: Some(SecondBlock {
                    e: "σ − c∂x",
                    p2: "−∂x B(ik)^{−1/2} (B(ik) − 2q)",
                    recover: "v = −E(σ,k)^{−1} P2(σ,k) u",
                }),
                state: "(u, u', u'', u''') of the first component",
            },
        }
    }

    pub fn symbols(&self) -> SymbolTable<'_> {
        SymbolTable { model: self }
    }
}

/// Fourier symbols of J(ik), S(ik), L0 and the potential R = ∇²F(Q).
///
/// Symbols carrying `1/ξ` are only defined for ξ ≠ 0; at ξ = 0 they return zero (the mean
/// mode is excluded wherever `∂x^{-1}` appears).
pub struct SymbolTable<'a> {
    model: &'a ModelSpec,
}

impl SymbolTable<'_> {
    fn scalar(z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, z)
    }

    pub fn j_symbol(&self, xi: f64, k: f64) -> DMatrix<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        match self.model.name {
            ModelName::Gkp1 | ModelName::Zk => Self::scalar(i * xi),
            ModelName::Kpbbm => Self::scalar(i * xi / (1.0 + xi * xi)),
            ModelName::Nls => DMatrix::from_row_slice(
                2,
                2,
                &[0.0.into(), 1.0.into(), (-1.0).into(), 0.0.into()],
            ),
            ModelName::Boussinesq => {
                let off = if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    i * xi / b_ik(xi, k).sqrt()
                };
                DMatrix::from_row_slice(2, 2, &[0.0.into(), off, off, 0.0.into()])
            }
        }
    }

    pub fn s_symbol(&self, xi: f64, k: f64) -> DMatrix<Complex64> {
        let r = |x: f64| Complex64::new(x, 0.0);
        let inv_xi2 = if xi == 0.0 { 0.0 } else { k * k / (xi * xi) };
        match self.model.name {
            ModelName::Gkp1 | ModelName::Kpbbm => Self::scalar(r(inv_xi2)),
            ModelName::Zk => Self::scalar(r(k * k)),
            ModelName::Nls => DMatrix::from_diagonal_element(2, 2, r(k * k)),
            ModelName::Boussinesq => {
                let c = self.model.c;
                let off = if xi == 0.0 {
                    0.0
                } else {
                    c * (b_ik(xi, k).sqrt() - (1.0 + xi * xi).sqrt())
                };
                DMatrix::from_row_slice(2, 2, &[r(inv_xi2), r(off), r(off), r(inv_xi2)])
            }
        }
    }

    pub fn l0_symbol(&self, xi: f64) -> DMatrix<Complex64> {
        let r = |x: f64| Complex64::new(x, 0.0);
        match self.model.name {
            ModelName::Gkp1 | ModelName::Zk => Self::scalar(r(xi * xi + 1.0)),
            ModelName::Kpbbm => {
                let c = self.model.c;
                Self::scalar(r(c * xi * xi + c - 1.0))
            }
            ModelName::Nls => DMatrix::from_diagonal_element(2, 2, r(xi * xi + 1.0)),
            ModelName::Boussinesq => {
                let c = self.model.c;
                let b = 1.0 + xi * xi;
                DMatrix::from_row_slice(2, 2, &[r(b), r(c * b.sqrt()), r(c * b.sqrt()), r(b)])
            }
        }
    }

    /// R(x) = ∇²F(Q(x)), a real d × d matrix.
    pub fn potential(&self, x: f64) -> DMatrix<f64> {
        let f = self.model.potential_sech2().value(x);
        match self.model.name {
            ModelName::Nls => DMatrix::from_row_slice(2, 2, &[-f, 0.0, 0.0, -f / 3.0]),
            ModelName::Boussinesq => DMatrix::from_row_slice(2, 2, &[-f, 0.0, 0.0, 0.0]),
            _ => DMatrix::from_element(1, 1, -f),
        }
    }
}

/// Symbol of B(ik) = −∂x² + 1 − k²∂x^{−2}.
pub fn b_ik(xi: f64, k: f64) -> f64 {
    1.0 + xi * xi + k * k / (xi * xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn all_models() -> Vec<ModelSpec> {
        vec![
            ModelSpec::gkp1(2).unwrap(),
            ModelSpec::gkp1(3).unwrap(),
            ModelSpec::gkp1(4).unwrap(),
            ModelSpec::nls(),
            ModelSpec::zk(),
            ModelSpec::boussinesq(0.75).unwrap(),
            ModelSpec::kpbbm(2.0, 2).unwrap(),
            ModelSpec::kpbbm(1.5, 3).unwrap(),
        ]
    }

    #[test]
    fn profile_anchor_values() {
        assert!((ModelSpec::gkp1(2).unwrap().soliton_profile(0.0)[0] - 1.5).abs() < 1e-15);
        assert!((ModelSpec::nls().soliton_profile(0.0)[0] - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((ModelSpec::gkp1(3).unwrap().soliton_profile(0.0)[0] - 2.0_f64.sqrt()).abs() < 1e-15);
        assert!(ModelSpec::gkp1(2).unwrap().soliton_profile(20.0)[0] < 1.3e-8);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(ModelSpec::gkp1(5).is_err());
        assert!(ModelSpec::gkp1(1).is_err());
        assert!(ModelSpec::boussinesq(0.4).is_err());
        assert!(ModelSpec::boussinesq(1.5).is_err());
        assert!(ModelSpec::kpbbm(0.9, 2).is_err());
        assert!(ModelSpec::kpbbm(2.0, 5).is_err());
        assert!("foo".parse::<ModelName>().is_err());
    }

    #[test]
    fn char_poly_anchor_values() {
        let g = ModelSpec::gkp1(2).unwrap();
        assert_eq!(g.char_poly(c(1.0), 1.0), vec![c(1.0), c(0.0), c(-1.0), c(1.0), c(1.0)]);
        let nls = ModelSpec::nls();
        assert_eq!(nls.char_poly(c(1.0), 0.0), vec![c(1.0), c(0.0), c(-2.0), c(0.0), c(2.0)]);
        let b = ModelSpec::kpbbm(2.0, 2).unwrap();
        assert_eq!(b.char_poly(c(1.0), 1.0), vec![c(2.0), c(-1.0), c(-1.0), c(1.0), c(1.0)]);
    }

    #[test]
    fn char_poly_matches_ode_matrix_at_infinity() {
        let sigmas = [Complex64::new(0.7, 0.3), Complex64::new(1.5, -2.0)];
        for m in all_models() {
            for &s in &sigmas {
                for k in [0.0, 0.4, 1.3] {
                    let a = m.ode_matrix_inf(s, k);
                    let from_matrix = poly::char_poly_of(&a);
                    let declared = m.char_poly(s, k);
                    let lead = declared[0];
                    assert_eq!(from_matrix.len(), declared.len(), "{:?} k={k}", m.name);
                    for (x, y) in from_matrix.iter().zip(declared.iter()) {
                        assert!((x - y / lead).norm() < 1e-12, "{:?} k={k}", m.name);
                    }
                }
            }
        }
    }

    #[test]
    fn ode_matrix_approaches_limit_at_declared_rate() {
        let s = Complex64::new(0.8, 0.2);
        for m in all_models() {
            let k = 0.7;
            let ainf = m.ode_matrix_inf(s, k);
            let dist = |x: f64| {
                (m.ode_matrix(x, s, k) - &ainf)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            };
            let (x1, x2) = (10.0, 14.0);
            let measured = (dist(x1) / dist(x2)).ln() / (x2 - x1);
            let alpha = m.decay_rate();
            assert!(
                (measured - alpha).abs() <= 0.1 * alpha,
                "{:?}: measured {measured} declared {alpha}",
                m.name
            );
            assert!(dist(-x1) > 0.0 && (dist(-x1) - dist(x1)).abs() < 1e-12);
        }
    }

    #[test]
    fn zk_last_row_at_origin() {
        let a = ModelSpec::zk().ode_matrix(0.0, c(1.0), 0.0);
        assert!((a[(2, 0)] - c(-1.0)).norm() < 1e-15);
        assert!((a[(2, 1)] - c(1.0 - 3.0)).norm() < 1e-15);
        assert_eq!(a[(2, 2)], c(0.0));
    }

    #[test]
    fn nls_matrix_far_field_equals_limit() {
        let m = ModelSpec::nls();
        let s = Complex64::new(0.3, 1.1);
        let diff = (m.ode_matrix(40.0, s, 0.9) - m.ode_matrix_inf(s, 0.9)).norm();
        assert!(diff < 1e-30);
    }

    #[test]
    fn profile_is_even_positive() {
        for m in all_models() {
            for x in [0.3, 2.0, 7.5] {
                let a = m.soliton_profile(x);
                let b = m.soliton_profile(-x);
                assert!(a[0] > 0.0);
                for (u, v) in a.iter().zip(b.iter()) {
                    assert!((u - v).abs() < 1e-12, "{:?} not even at {x}", m.name);
                }
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for m in all_models() {
            let pot = m.potential_sech2();
            let h = 1e-4;
            for x in [-1.3, 0.2, 2.7] {
                let fd1 = (pot.value(x + h) - pot.value(x - h)) / (2.0 * h);
                let fd2 = (pot.value(x + h) - 2.0 * pot.value(x) + pot.value(x - h)) / (h * h);
                assert!((fd1 - pot.d1(x)).abs() < 1e-6);
                assert!((fd2 - pot.d2(x)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn potential_is_hessian_of_nonlinearity() {
        // gkp1/kpbbm: R = −pQ^{p−1}; zk: −2Q; nls: diag(−3Q², −Q²).
        let g = ModelSpec::gkp1(3).unwrap();
        let x = 0.4;
        let q = g.soliton_profile(x)[0];
        assert!((g.symbols().potential(x)[(0, 0)] + 3.0 * q * q).abs() < 1e-13);
        let b = ModelSpec::kpbbm(2.5, 4).unwrap();
        let q = b.soliton_profile(x)[0];
        assert!((b.symbols().potential(x)[(0, 0)] + 4.0 * q.powi(3)).abs() < 1e-12);
        let z = ModelSpec::zk();
        assert!((z.symbols().potential(x)[(0, 0)] + 2.0 * z.soliton_profile(x)[0]).abs() < 1e-13);
        let n = ModelSpec::nls();
        let q = n.soliton_profile(x)[0];
        let r = n.symbols().potential(x);
        assert!((r[(0, 0)] + 3.0 * q * q).abs() < 1e-13);
        assert!((r[(1, 1)] + q * q).abs() < 1e-13);
        let bq = ModelSpec::boussinesq(0.8).unwrap();
        assert!((bq.symbols().potential(x)[(0, 0)] + 2.0 * bq.bous_q(x)).abs() < 1e-13);
    }

    #[test]
    fn symbol_structure() {
        let xis = [-3.0, -0.7, 0.25, 1.0, 4.0];
        for m in all_models() {
            let t = m.symbols();
            for &xi in &xis {
                for k in [0.0, 0.5, 2.0] {
                    let j = t.j_symbol(xi, k);
                    assert!((&j + j.adjoint()).norm() < 1e-14, "{:?} J not skew", m.name);
                    let s = t.s_symbol(xi, k);
                    assert!((&s - s.adjoint()).norm() < 1e-14);
                    let eig = nalgebra::SymmetricEigen::new(s.map(|z| z.re)).eigenvalues;
                    assert!(eig.iter().all(|&e| e >= -1e-14), "{:?} S not psd", m.name);
                    if k == 0.0 {
                        assert!(s.norm() == 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn profiles_solve_the_stationary_equation() {
        let grid = Grid1d::new(1024, 40.0);
        for m in all_models() {
            let comps: Vec<Vec<f64>> = (0..m.d())
                .map(|i| grid.points().map(|x| m.soliton_profile(x)[i]).collect())
                .collect();
            let t = m.symbols();
            for row in 0..m.d() {
                let mut res = vec![0.0; grid.n];
                for col in 0..m.d() {
                    let applied =
                        spectral::apply_multiplier(&comps[col], &grid, |xi| t.l0_symbol(xi)[(row, col)]);
                    res.iter_mut().zip(applied).for_each(|(r, a)| *r += a);
                }
                if row == 0 {
                    // ∇F(Q): −Q^p, −Q² (zk, boussinesq), −Q³ (nls).
                    let p = match m.name {
                        ModelName::Zk | ModelName::Boussinesq => 2,
                        ModelName::Nls => 3,
                        _ => m.p as i32,
                    };
                    res.iter_mut().zip(&comps[0]).for_each(|(r, q)| *r -= q.powi(p));
                }
                let sup = res.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
                assert!(sup < 1e-8, "{:?} row {row}: residual {sup}", m.name);
            }
        }
    }

    #[test]
    fn boussinesq_second_component_matches_fourier_multiplier() {
        let m = ModelSpec::boussinesq(0.75).unwrap();
        let p0 = m.soliton_profile(0.0);
        assert!(p0[1] < 0.0 && p0[1].abs() < 0.75 * p0[0]);
        // Away from the origin, (1 − ∂²)^{1/2} acting on the tail of v returns −c q.
        let grid = Grid1d::new(1024, 40.0);
        let v: Vec<f64> = grid.points().map(|x| m.soliton_profile(x)[1]).collect();
        let back = spectral::apply_multiplier(&v, &grid, |xi| Complex64::new((1.0 + xi * xi).sqrt(), 0.0));
        for (x, b) in grid.points().zip(back.iter()).step_by(37) {
            assert!((b + 0.75 * m.bous_q(x)).abs() < 1e-8, "x={x}");
        }
    }
}
