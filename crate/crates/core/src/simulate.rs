//! Pseudo-spectral time evolution on a periodic box for gkp1, zk and nls.
//!
//! The unknown is a single complex field in Fourier space (real for gkp1/zk, the rotating-frame
//! wave function for nls). The stiff linear part is advanced exactly by its symbol and the
//! remainder by classical RK4 (integrating-factor RK4). Boxes are `[−lx, lx) × [0, ly)`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evans::EvansParams;
use crate::models::{kdv_profile, sech, ModelName, ModelSpec};
use crate::spectral::{self, Grid1d};
use crate::specfind::{self, DispersionCurve, ModeResult};

type C = Complex64;
const I: C = C { re: 0.0, im: 1.0 };

/// Periodic grid `[−lx, lx) × [0, ly)` with row-major storage `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2d {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2d {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 2 || !nx.is_multiple_of(2) || !ny.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!("grid sizes must be even, got {nx} x {ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParam("box lengths must be positive".into()));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_grid(&self) -> Grid1d {
        Grid1d::new(self.nx, self.lx)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        -self.lx + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy()
    }

    pub fn kx(&self) -> Vec<f64> {
        spectral::wavenumbers(self.nx, self.lx)
    }

    pub fn ky(&self) -> Vec<f64> {
        spectral::wavenumbers(self.ny, 0.5 * self.ly)
    }

    fn cell(&self) -> f64 {
        self.dx() * self.dy()
    }
}

/// Integer mode index of FFT slot `j` on a grid of `n` points.
fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Two-dimensional complex FFT; the inverse is normalized.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: planner.plan_fft_forward(nx),
            fy: planner.plan_fft_forward(ny),
            ix: planner.plan_fft_inverse(nx),
            iy: planner.plan_fft_inverse(ny),
        }
    }

    fn columns(&self, data: &mut [C], f: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        let mut t = vec![C::new(0.0, 0.0); nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                t[ix * ny + iy] = data[iy * nx + ix];
            }
        }
        f.process(&mut t);
        for iy in 0..ny {
            for ix in 0..nx {
                data[iy * nx + ix] = t[ix * ny + iy];
            }
        }
    }

    pub fn forward(&self, data: &mut [C]) {
        self.fx.process(data);
        self.columns(data, &self.fy);
    }

    pub fn inverse(&self, data: &mut [C]) {
        self.ix.process(data);
        self.columns(data, &self.iy);
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

/// The models with a time-evolution implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimModel {
    Gkp1 { p: u32 },
    Zk,
    Nls,
}

impl SimModel {
    pub fn from_spec(model: &ModelSpec) -> Result<Self> {
        match model.name {
            ModelName::Gkp1 => Ok(Self::Gkp1 { p: model.p }),
            ModelName::Zk => Ok(Self::Zk),
            ModelName::Nls => Ok(Self::Nls),
            other => Err(Error::InvalidParam(format!("time evolution is not available for {other}"))),
        }
    }

    /// Stationary profile in the simulation convention (zk uses `u_t − u_x + Δu_x + u u_x = 0`,
    /// whose soliton is twice the registry profile).
    pub fn background(&self, x: f64) -> f64 {
        match *self {
            Self::Gkp1 { p } => kdv_profile(p, x),
            Self::Zk => 2.0 * kdv_profile(2, x),
            Self::Nls => 2.0_f64.sqrt() * sech(x),
        }
    }

    /// Symbol of the linear part.
    pub fn symbol(&self, xi: f64, eta: f64) -> C {
        match *self {
            Self::Gkp1 { .. } => {
                if xi == 0.0 {
                    C::new(0.0, 0.0)
                } else {
                    I * (xi * xi * xi + xi + eta * eta / xi)
                }
            }
            Self::Zk => I * (xi + xi * xi * xi + xi * eta * eta),
            Self::Nls => -I * (1.0 + xi * xi + eta * eta),
        }
    }

    fn is_real(&self) -> bool {
        !matches!(self, Self::Nls)
    }

    /// Weight of `|û|²/2` in the quadratic part of the Hamiltonian.
    fn energy_weight(&self, xi: f64, eta: f64) -> f64 {
        match *self {
            Self::Gkp1 { .. } => {
                if xi == 0.0 {
                    xi * xi + 1.0
                } else {
                    xi * xi + 1.0 + eta * eta / (xi * xi)
                }
            }
            Self::Zk | Self::Nls => xi * xi + eta * eta + 1.0,
        }
    }
}

/// What is evolved: the full field, or a perturbation under the flow linearized at the soliton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Dynamics {
    #[default]
    Nonlinear,
    Linearized,
}

/// Initial perturbation of the soliton.
#[derive(Debug, Clone, Serialize)]
pub enum Perturbation {
    None,
    /// `2Re(e^{iky}U(x))` with `U` given per component on the simulation x-grid.
    Eigenmode {
        k: f64,
        sigma: C,
        #[serde(skip)]
        mode: Vec<Vec<C>>,
    },
    /// An explicit perturbation field per component, row-major on the simulation grid.
    Field {
        #[serde(skip)]
        field: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub grid: Grid2d,
    pub dt: f64,
    pub t_max: f64,
    /// Perturbation amplitude in L² of the box.
    pub delta: f64,
    pub perturbation: Perturbation,
    pub dealias: bool,
    pub dynamics: Dynamics,
    /// Stopping threshold for `‖Πu‖`.
    pub kappa: f64,
    /// Growth-fit window `[fit_lo_factor·δ, fit_hi]` in `‖Πu‖`.
    pub fit_lo_factor: f64,
    pub fit_hi: f64,
    pub record_every: usize,
    /// Store a field snapshot every this many steps (0: never).
    pub snapshot_every: usize,
}

impl SimConfig {
    pub fn new(model: ModelSpec, grid: Grid2d, dt: f64, t_max: f64) -> Self {
        Self {
            model,
            grid,
            dt,
            t_max,
            delta: 0.0,
            perturbation: Perturbation::None,
            dealias: true,
            dynamics: Dynamics::Nonlinear,
            kappa: 0.1,
            fit_lo_factor: 10.0,
            fit_hi: 1e-2,
            record_every: 10,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<SimModel> {
        let sim = SimModel::from_spec(&self.model)?;
        let bad = |m: String| Err(Error::InvalidParam(m));
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.dt.is_finite() && self.t_max.is_finite()) {
            return bad("dt and t_max must be positive".into());
        }
        if !(0.0..=0.1).contains(&self.delta) {
            return bad(format!("delta must lie in [0, 0.1], got {}", self.delta));
        }
        if !matches!(self.perturbation, Perturbation::None) && !(self.delta > 0.0) {
            return bad("a perturbation needs delta > 0".into());
        }
        if self.grid.lx < self.model.x_inf_default() {
            return bad(format!(
                "box half-length {} is below the soliton truncation length {}",
                self.grid.lx,
                self.model.x_inf_default()
            ));
        }
        if !(self.kappa > 0.0) || !(self.fit_hi > 0.0) || !(self.fit_lo_factor > 0.0) {
            return bad("kappa and fit window must be positive".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        match &self.perturbation {
            Perturbation::Eigenmode { mode, k, .. } => {
                if mode.len() != self.model.d() || mode.iter().any(|c| c.len() != self.grid.nx) {
                    return bad("eigenmode does not match the simulation x-grid".into());
                }
                let commensurate = (k * self.grid.ly / (2.0 * std::f64::consts::PI)).round();
                let err = (k * self.grid.ly - 2.0 * std::f64::consts::PI * commensurate).abs();
                if commensurate < 1.0 || err > 1e-9 * (1.0 + k * self.grid.ly) {
                    return bad(format!("k = {k} is not a transverse mode of the box"));
                }
            }
            Perturbation::Field { field } => {
                if field.len() != self.model.d() || field.iter().any(|c| c.len() != self.grid.len()) {
                    return bad("perturbation field does not match the grid".into());
                }
            }
            Perturbation::None => {}
        }
        let bound = stability_bound(sim, &self.grid, self.dealias);
        if self.dt > bound {
            return bad(format!("dt = {} exceeds the explicit stability bound {bound:.4}", self.dt));
        }
        Ok(sim)
    }
}

/// Largest stable RK4 step for the explicit part, from the spectral radius of its linearization
/// at 1.5 times the soliton amplitude.
pub fn stability_bound(sim: SimModel, grid: &Grid2d, dealias: bool) -> f64 {
    let cut = if dealias { grid.nx / 3 } else { grid.nx / 2 } as f64;
    let xi = cut * std::f64::consts::PI / grid.lx;
    let amp = 1.5 * sim.background(0.0);
    let rho = match sim {
        SimModel::Gkp1 { p } => xi * p as f64 * amp.powi(p as i32 - 1),
        SimModel::Zk => xi * amp,
        SimModel::Nls => 3.0 * amp * amp,
    };
    2.8 / rho
}

/// Sample of the recorded time series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesSample {
    pub t: f64,
    pub norm_total: f64,
    pub norm_perp: f64,
    pub hamiltonian_diag: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid2d,
    /// Per component, row-major `iy * nx + ix` (nls: real and imaginary parts).
    pub fields: Vec<Vec<f64>>,
}

/// Flat little-endian snapshot encoding: magic `TVSN`, u32 version, u32 nx, u32 ny,
/// u32 components, f64 lx, f64 ly, f64 t, then the components one after another, each
/// row-major over (y, x).
pub fn encode_snapshot(s: &Snapshot) -> Vec<u8> {
    let mut out = Vec::with_capacity(44 + 8 * s.fields.iter().map(Vec::len).sum::<usize>());
    out.extend_from_slice(b"TVSN");
    for v in [1u32, s.grid.nx as u32, s.grid.ny as u32, s.fields.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [s.grid.lx, s.grid.ly, s.t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in &s.fields {
        for v in f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let bad = || Error::InvalidParam("malformed snapshot".into());
    if bytes.len() < 44 || &bytes[..4] != b"TVSN" {
        return Err(bad());
    }
    let u = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let (nx, ny, nc) = (u(8), u(12), u(16));
    let grid = Grid2d::new(nx, ny, f(20), f(28))?;
    let t = f(36);
    if bytes.len() != 44 + 8 * nx * ny * nc {
        return Err(bad());
    }
    let fields = (0..nc)
        .map(|c| (0..nx * ny).map(|j| f(44 + 8 * (c * nx * ny + j))).collect())
        .collect();
    Ok(Snapshot { t, grid, fields })
}

/// Least-squares fit of `ln ‖Πu‖` against time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthFit {
    pub rate: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_exponential(t: &[f64], values: &[f64]) -> Option<GrowthFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let sty = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>();
    let syy = pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
    if stt == 0.0 {
        return None;
    }
    let rate = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(GrowthFit {
        rate,
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
        r_squared,
        points: pts.len(),
    })
}

/// A forcing term `F(t)` in Fourier space added to the right-hand side.
pub type Forcing<'a> = dyn Fn(f64) -> Vec<C> + Sync + 'a;

/// Time stepper holding the spectral state.
pub struct Solver<'a> {
    pub sim: SimModel,
    pub grid: Grid2d,
    pub dynamics: Dynamics,
    fft: Fft2,
    kx: Vec<f64>,
    ky: Vec<f64>,
    lin: Vec<C>,
    mask: Vec<bool>,
    background: Vec<f64>,
    forcing: Option<Box<Forcing<'a>>>,
    nonlinear_on: bool,
    /// Spectral state.
    pub state: Vec<C>,
    pub t: f64,
}

impl<'a> Solver<'a> {
    pub fn new(sim: SimModel, grid: Grid2d, dynamics: Dynamics, dealias: bool) -> Self {
        let kx = grid.kx();
        let ky = grid.ky();
        let mut lin = vec![C::new(0.0, 0.0); grid.len()];
        let mut mask = vec![true; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let j = iy * grid.nx + ix;
                lin[j] = sim.symbol(kx[ix], ky[iy]);
                let (mx, my) = (mode_index(ix, grid.nx).abs(), mode_index(iy, grid.ny).abs());
                let keep = if dealias {
                    3 * mx < grid.nx as i64 && 3 * my < grid.ny as i64
                } else {
                    2 * mx < grid.nx as i64 && 2 * my < grid.ny as i64
                };
                mask[j] = keep;
            }
        }
        let background = (0..grid.nx).map(|ix| sim.background(grid.x(ix))).collect();
        Self {
            sim,
            grid,
            dynamics,
            fft: Fft2::new(grid.nx, grid.ny),
            kx,
            ky,
            lin,
            mask,
            background,
            forcing: None,
            nonlinear_on: true,
            state: vec![C::new(0.0, 0.0); grid.len()],
            t: 0.0,
        }
    }

    pub fn with_forcing(mut self, f: Box<Forcing<'a>>) -> Self {
        self.forcing = Some(f);
        self
    }

    /// Drop the state-dependent explicit terms, leaving the exactly integrated linear part.
    pub fn without_explicit_terms(mut self) -> Self {
        self.nonlinear_on = false;
        self
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    /// Background broadcast over y as a physical field.
    pub fn background_field(&self) -> Vec<C> {
        let nx = self.grid.nx;
        (0..self.grid.len()).map(|j| C::new(self.background[j % nx], 0.0)).collect()
    }

    pub fn set_physical(&mut self, u: &[C]) {
        let mut s = u.to_vec();
        self.fft.forward(&mut s);
        self.state = s;
        self.project();
    }

    pub fn physical(&self) -> Vec<C> {
        let mut u = self.state.clone();
        self.fft.inverse(&mut u);
        if self.sim.is_real() {
            u.iter_mut().for_each(|z| z.im = 0.0);
        }
        u
    }

    /// Zero the unresolved modes and, for gkp1, the `k_x = 0, k_y ≠ 0` modes.
    fn project(&mut self) {
        let nx = self.grid.nx;
        for (j, z) in self.state.iter_mut().enumerate() {
            let (ix, iy) = (j % nx, j / nx);
            let nyq = ix == nx / 2 || iy == self.grid.ny / 2;
            let kp = matches!(self.sim, SimModel::Gkp1 { .. }) && ix == 0 && iy != 0;
            if nyq || kp {
                *z = C::new(0.0, 0.0);
            }
        }
    }

    fn explicit(&self, t: f64, v: &[C]) -> Vec<C> {
        let mut out = if self.nonlinear_on {
            let mut u = v.to_vec();
            self.fft.inverse(&mut u);
            let nx = self.grid.nx;
            let q = &self.background;
            let mut r: Vec<C> = match (self.sim, self.dynamics) {
                (SimModel::Gkp1 { p }, Dynamics::Nonlinear) => u.iter().map(|z| C::new(z.re.powi(p as i32), 0.0)).collect(),
                (SimModel::Gkp1 { p }, Dynamics::Linearized) => u
                    .iter()
                    .enumerate()
                    .map(|(j, z)| C::new(p as f64 * q[j % nx].powi(p as i32 - 1) * z.re, 0.0))
                    .collect(),
                (SimModel::Zk, Dynamics::Nonlinear) => u.iter().map(|z| C::new(0.5 * z.re * z.re, 0.0)).collect(),
                (SimModel::Zk, Dynamics::Linearized) => {
                    u.iter().enumerate().map(|(j, z)| C::new(q[j % nx] * z.re, 0.0)).collect()
                }
                (SimModel::Nls, Dynamics::Nonlinear) => u.iter().map(|z| z * z.norm_sqr()).collect(),
                (SimModel::Nls, Dynamics::Linearized) => u
                    .iter()
                    .enumerate()
                    .map(|(j, z)| {
                        let q2 = q[j % nx] * q[j % nx];
                        z * (2.0 * q2) + z.conj() * q2
                    })
                    .collect(),
            };
            self.fft.forward(&mut r);
            for (j, z) in r.iter_mut().enumerate() {
                if !self.mask[j] {
                    *z = C::new(0.0, 0.0);
                    continue;
                }
                let xi = self.kx[j % nx];
                *z *= match self.sim {
                    SimModel::Gkp1 { .. } | SimModel::Zk => -I * xi,
                    SimModel::Nls => I,
                };
            }
            r
        } else {
            vec![C::new(0.0, 0.0); v.len()]
        };
        if let Some(f) = &self.forcing {
            for (o, g) in out.iter_mut().zip(f(t)) {
                *o += g;
            }
        }
        out
    }

    /// One integrating-factor RK4 step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let e_half: Vec<C> = self.lin.iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        let u = &self.state;
        let t = self.t;
        let a: Vec<C> = self.explicit(t, u).into_iter().map(|z| z * dt).collect();
        let s1: Vec<C> = (0..u.len()).map(|j| e_half[j] * (u[j] + 0.5 * a[j])).collect();
        let b: Vec<C> = self.explicit(t + 0.5 * dt, &s1).into_iter().map(|z| z * dt).collect();
        let s2: Vec<C> = (0..u.len()).map(|j| e_half[j] * u[j] + 0.5 * b[j]).collect();
        let c: Vec<C> = self.explicit(t + 0.5 * dt, &s2).into_iter().map(|z| z * dt).collect();
        let s3: Vec<C> = (0..u.len())
            .map(|j| e_half[j] * e_half[j] * u[j] + e_half[j] * c[j])
            .collect();
        let d: Vec<C> = self.explicit(t + dt, &s3).into_iter().map(|z| z * dt).collect();
        let next: Vec<C> = (0..u.len())
            .map(|j| {
                let e = e_half[j];
                e * e * u[j] + (e * e * a[j] + 2.0 * e * (b[j] + c[j]) + d[j]) / 6.0
            })
            .collect();
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::BlowUp { t: self.t });
        }
        self.state = next;
        self.t += dt;
        self.project();
        Ok(())
    }

    fn spectral_sq(&self, j: usize) -> f64 {
        self.state[j].norm_sqr() * self.grid.cell() / self.grid.len() as f64
    }

    /// L² norm over the box.
    pub fn norm(&self) -> f64 {
        (0..self.grid.len()).map(|j| self.spectral_sq(j)).sum::<f64>().sqrt()
    }

    /// `‖Πu‖`: the L² norm of the nonzero transverse modes.
    pub fn norm_perp(&self) -> f64 {
        (self.grid.nx..self.grid.len()).map(|j| self.spectral_sq(j)).sum::<f64>().sqrt()
    }

    /// Hamiltonian of the full field, or the conserved second variation for a linearized run.
    pub fn hamiltonian(&self) -> f64 {
        let (quad, pot) = self.hamiltonian_parts();
        quad - pot
    }

    /// Quadratic Fourier part and potential part of [`Self::hamiltonian`].
    pub fn hamiltonian_parts(&self) -> (f64, f64) {
        let nx = self.grid.nx;
        let quad: f64 = (0..self.grid.len())
            .map(|j| 0.5 * self.sim.energy_weight(self.kx[j % nx], self.ky[j / nx]) * self.spectral_sq(j))
            .sum();
        let u = self.physical();
        let q = &self.background;
        let cell = self.grid.cell();
        let pot: f64 = u
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let qj = q[j % nx];
                match (self.sim, self.dynamics) {
                    (SimModel::Gkp1 { p }, Dynamics::Nonlinear) => z.re.powi(p as i32 + 1) / (p as f64 + 1.0),
                    (SimModel::Gkp1 { p }, Dynamics::Linearized) => {
                        0.5 * p as f64 * qj.powi(p as i32 - 1) * z.re * z.re
                    }
                    (SimModel::Zk, Dynamics::Nonlinear) => z.re.powi(3) / 6.0,
                    (SimModel::Zk, Dynamics::Linearized) => 0.5 * qj * z.re * z.re,
                    (SimModel::Nls, Dynamics::Nonlinear) => 0.25 * z.norm_sqr().powi(2),
                    (SimModel::Nls, Dynamics::Linearized) => 0.5 * qj * qj * (3.0 * z.re * z.re + z.im * z.im),
                }
            })
            .sum::<f64>()
            * cell;
        (quad, pot)
    }

    /// x-mean of each y-line.
    pub fn x_means(&self) -> Vec<f64> {
        let u = self.physical();
        u.chunks(self.grid.nx)
            .map(|row| row.iter().map(|z| z.re).sum::<f64>() / self.grid.nx as f64)
            .collect()
    }

    pub fn snapshot(&self) -> Snapshot {
        let u = self.physical();
        let mut fields = vec![u.iter().map(|z| z.re).collect::<Vec<_>>()];
        if !self.sim.is_real() {
            fields.push(u.iter().map(|z| z.im).collect());
        }
        Snapshot {
            t: self.t,
            grid: self.grid,
            fields,
        }
    }
}

/// Physical perturbation `2Re(e^{iky}U(x))`, combined into one complex field for nls.
pub fn eigenmode_field(sim: SimModel, grid: &Grid2d, k: f64, mode: &[Vec<C>]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); grid.len()];
    for iy in 0..grid.ny {
        let phase = C::from_polar(1.0, k * grid.y(iy));
        for ix in 0..grid.nx {
            let a = 2.0 * (phase * mode[0][ix]).re;
            let b = if sim.is_real() { 0.0 } else { 2.0 * (phase * mode[1][ix]).re };
            out[iy * grid.nx + ix] = C::new(a, b);
        }
    }
    out
}

fn field_from_components(sim: SimModel, field: &[Vec<f64>]) -> Vec<C> {
    (0..field[0].len())
        .map(|j| C::new(field[0][j], if sim.is_real() { 0.0 } else { field[1][j] }))
        .collect()
}

fn l2(grid: &Grid2d, f: &[C]) -> f64 {
    (f.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell()).sqrt()
}

/// Outcome of a nonlinear instability experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub growth: Option<GrowthFit>,
    /// First time `‖Πu‖ ≥ κ`.
    pub t_delta: Option<f64>,
    /// `d(u(T^δ), F) = ‖Πu(T^δ)‖`.
    pub distance_at_t_delta: Option<f64>,
    pub inconclusive: bool,
    pub blow_up_time: Option<f64>,
    pub final_time: f64,
    pub mass_drift: f64,
    /// Relative to the larger of `|H(0)|` and the quadratic energy at t = 0.
    pub hamiltonian_drift: f64,
    /// Largest `‖u − Q‖/‖Q‖` over the run (for linearized runs, `‖w‖/‖Q‖`).
    pub max_background_deviation: f64,
    /// Largest change of a per-line x-mean (gkp1/zk).
    pub x_mean_drift: f64,
    pub stability_dt: f64,
    pub steps: usize,
    pub series: Vec<SeriesSample>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
}

/// Evolves `Q + δ u⁰` until `‖Πu‖` reaches κ or `t_max`.
pub fn run_instability_experiment(config: &SimConfig) -> Result<SimReport> {
    let sim = config.validate()?;
    let grid = config.grid;
    let mut solver = Solver::new(sim, grid, config.dynamics, config.dealias);

    let perturbation = match &config.perturbation {
        Perturbation::None => None,
        Perturbation::Eigenmode { k, mode, .. } => Some(eigenmode_field(sim, &grid, *k, mode)),
        Perturbation::Field { field } => Some(field_from_components(sim, field)),
    };
    let mut init = match config.dynamics {
        Dynamics::Nonlinear => solver.background_field(),
        Dynamics::Linearized => vec![C::new(0.0, 0.0); grid.len()],
    };
    if let Some(p) = perturbation {
        let scale = config.delta / l2(&grid, &p);
        for (u, v) in init.iter_mut().zip(&p) {
            *u += v * scale;
        }
    }
    solver.set_physical(&init);

    let q_field = solver.background_field();
    let q_norm = l2(&grid, &q_field);
    let deviation = |s: &Solver| -> f64 {
        let u = s.physical();
        match config.dynamics {
            Dynamics::Nonlinear => {
                let d: Vec<C> = u.iter().zip(&q_field).map(|(a, b)| a - b).collect();
                l2(&grid, &d) / q_norm
            }
            Dynamics::Linearized => l2(&grid, &u) / q_norm,
        }
    };

    let sample = |s: &Solver| SeriesSample {
        t: s.t,
        norm_total: s.norm(),
        norm_perp: s.norm_perp(),
        hamiltonian_diag: s.hamiltonian(),
    };
    let first = sample(&solver);
    let energy_scale = solver.hamiltonian_parts().0.max(first.hamiltonian_diag.abs());
    let means0 = solver.x_means();
    let mut series = vec![first];
    let mut snapshots = Vec::new();
    if config.snapshot_every > 0 {
        snapshots.push(solver.snapshot());
    }
    let mut max_dev = deviation(&solver);
    let mut x_mean_drift: f64 = 0.0;
    let mut t_delta = None;
    let mut distance = None;
    let mut blow_up_time = None;
    let steps_max = (config.t_max / config.dt).round() as usize;
    let mut steps = 0;

    while steps < steps_max {
        if let Err(e) = solver.step(config.dt) {
            match e {
                Error::BlowUp { t } => {
                    blow_up_time = Some(t);
                    break;
                }
                other => return Err(other),
            }
        }
        steps += 1;
        let perp = solver.norm_perp();
        if !perp.is_finite() || perp > 1e6 {
            blow_up_time = Some(solver.t);
            break;
        }
        let reached = config.delta > 0.0 && perp >= config.kappa;
        if steps % config.record_every == 0 || reached || steps == steps_max {
            series.push(sample(&solver));
            max_dev = max_dev.max(deviation(&solver));
            if sim.is_real() {
                let m = solver.x_means();
                let d = m.iter().zip(&means0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x_mean_drift = x_mean_drift.max(d);
            }
        }
        if config.snapshot_every > 0 && steps % config.snapshot_every == 0 {
            snapshots.push(solver.snapshot());
        }
        if reached {
            t_delta = Some(solver.t);
            distance = Some(perp);
            break;
        }
    }

    let lo = config.fit_lo_factor * config.delta;
    let (ts, vs): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|s| s.norm_perp >= lo && s.norm_perp <= config.fit_hi)
        .map(|s| (s.t, s.norm_perp))
        .unzip();
    let growth = if config.delta > 0.0 { fit_exponential(&ts, &vs) } else { None };
    let last = *series.last().expect("non-empty");
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    Ok(SimReport {
        config: config.clone(),
        growth,
        t_delta,
        distance_at_t_delta: distance,
        inconclusive: t_delta.is_none(),
        blow_up_time,
        final_time: solver.t,
        mass_drift: rel(last.norm_total * last.norm_total, first.norm_total * first.norm_total),
        hamiltonian_drift: (last.hamiltonian_diag - first.hamiltonian_diag).abs() / energy_scale.max(f64::MIN_POSITIVE),
        max_background_deviation: max_dev,
        x_mean_drift,
        stability_dt: stability_bound(sim, &grid, config.dealias),
        steps,
        series,
        snapshots,
    })
}

/// An eigenmode reconstructed on the x-grid of a simulation box with `L_y = 2π/k`.
pub fn eigenmode_perturbation(model: &ModelSpec, k: f64, sigma: C, grid: &Grid2d) -> Result<(Perturbation, ModeResult)> {
    let mode = specfind::mode_reconstruct(model, k, sigma, Some(grid.x_grid()))?;
    Ok((
        Perturbation::Eigenmode {
            k,
            sigma: mode.sigma,
            mode: mode.u.clone(),
        },
        mode,
    ))
}

/// Modes on a quadrature grid of transverse frequencies commensurate with a y-period.
#[derive(Debug, Clone, Serialize)]
pub struct PacketModes {
    pub model: ModelSpec,
    pub x_grid: crate::specfind::GridSpec,
    pub ly: f64,
    /// Transverse mode indices `j` with `k = 2πj/ly`.
    pub indices: Vec<usize>,
    pub ks: Vec<f64>,
    pub weights: Vec<f64>,
    pub sigmas: Vec<C>,
    #[serde(skip)]
    pub modes: Vec<Vec<Vec<C>>>,
}

impl PacketModes {
    pub fn grid(&self) -> Grid2d {
        let jmax = self.indices.iter().copied().max().unwrap_or(1);
        let ny = (3 * jmax + 2).next_power_of_two().max(8);
        Grid2d {
            nx: self.x_grid.n,
            ny,
            lx: self.x_grid.half_length,
            ly: self.ly,
        }
    }
}

fn inner(a: &[Vec<C>], b: &[Vec<C>]) -> C {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.iter().zip(v).map(|(x, y)| x.conj() * y).sum::<C>())
        .sum()
}

fn interp_sigma(curve: &DispersionCurve, k: f64) -> Option<C> {
    let pts: Vec<(f64, C)> = curve.samples.iter().filter_map(|s| s.sigma.map(|z| (s.k, z))).collect();
    let i = pts.windows(2).position(|w| w[0].0 <= k && k <= w[1].0)?;
    let (k0, s0) = pts[i];
    let (k1, s1) = pts[i + 1];
    let w = (k - k0) / (k1 - k0);
    Some(s0 * (1.0 - w) + s1 * w)
}

/// Solves for σ(k) and U(k) at quadrature nodes in `interval`, aligning the phase of each
/// mode with its neighbour.
pub fn packet_modes(
    model: &ModelSpec,
    curve: &DispersionCurve,
    interval: (f64, f64),
    nodes: usize,
    x_grid: Grid1d,
    params: &EvansParams,
) -> Result<PacketModes> {
    let (a, b) = interval;
    if !(a > 0.0 && b > a && nodes >= 3) {
        return Err(Error::InvalidParam("packet interval must be (a, b) with 0 < a < b and >= 3 nodes".into()));
    }
    if !curve.band.iter().any(|&(lo, hi)| lo <= a && b <= hi) {
        return Err(Error::InvalidParam(format!("packet interval ({a}, {b}) is not inside the unstable band")));
    }
    let dk = (b - a) / (nodes - 1) as f64;
    let ly = 2.0 * std::f64::consts::PI / dk;
    let j0 = (a / dk).ceil() as usize;
    let j1 = (b / dk).floor() as usize;
    let indices: Vec<usize> = (j0..=j1).collect();
    let ks: Vec<f64> = indices.iter().map(|&j| j as f64 * dk).collect();
    let mut weights = vec![dk; ks.len()];
    weights[0] *= 0.5;
    *weights.last_mut().unwrap() *= 0.5;

    let solved: Vec<(C, Vec<Vec<C>>)> = ks
        .par_iter()
        .map(|&k| -> Result<(C, Vec<Vec<C>>)> {
            let guess = interp_sigma(curve, k)
                .ok_or_else(|| Error::InvalidParam(format!("k = {k} is outside the sampled curve")))?;
            let root = specfind::refine_root(model, k, guess, params)?;
            let mode = specfind::mode_reconstruct(model, k, root.sigma, Some(x_grid))?;
            Ok((root.sigma, mode.u))
        })
        .collect::<Result<_>>()?;
    let (sigmas, mut modes): (Vec<C>, Vec<Vec<Vec<C>>>) = solved.into_iter().unzip();

    for i in 1..modes.len() {
        let c = inner(&modes[i - 1], &modes[i]);
        let na = inner(&modes[i - 1], &modes[i - 1]).re.sqrt();
        let nb = inner(&modes[i], &modes[i]).re.sqrt();
        let cos = c.norm() / (na * nb);
        let angle = cos.min(1.0).acos();
        if angle > std::f64::consts::FRAC_PI_4 {
            return Err(Error::PhaseAlignment { k: ks[i], angle });
        }
        let rot = c.conj() / c.norm();
        modes[i].iter_mut().flatten().for_each(|z| *z *= rot);
    }
    Ok(PacketModes {
        model: model.clone(),
        x_grid: x_grid.into(),
        ly,
        indices,
        ks,
        weights,
        sigmas,
        modes,
    })
}

/// The linear packet `u⁰(t) = ∫_I 2Re(e^{σ(k)t} e^{iky} U(k)) dk` on a grid.
#[derive(Debug, Clone)]
pub struct PacketField {
    pub t: f64,
    pub grid: Grid2d,
    /// Per component, row-major.
    pub field: Vec<Vec<f64>>,
    pub norm: f64,
    /// `(Σ w_j² · 2 ly · ‖e^{σ_j t}U_j‖²)^{1/2}`.
    pub quadrature_norm: f64,
}

pub fn wave_packet(modes: &PacketModes, t: f64) -> PacketField {
    let grid = modes.grid();
    let d = modes.model.d();
    let dk = 2.0 * std::f64::consts::PI / modes.ly;
    let coeffs: Vec<Vec<Vec<C>>> = modes
        .modes
        .iter()
        .zip(&modes.sigmas)
        .zip(&modes.weights)
        .map(|((u, s), w)| {
            let g = (s * t).exp() * *w;
            u.iter().map(|c| c.iter().map(|z| z * g).collect()).collect()
        })
        .collect();
    let field: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let mut f = vec![0.0; grid.len()];
            f.par_chunks_mut(grid.nx).enumerate().for_each(|(iy, row)| {
                let y = grid.y(iy);
                for (c, &j) in coeffs.iter().zip(&modes.indices) {
                    let e = C::from_polar(2.0, j as f64 * dk * y);
                    for (ix, v) in row.iter_mut().enumerate() {
                        *v += (e * c[a][ix]).re;
                    }
                }
            });
            f
        })
        .collect();
    let norm = (field.iter().flatten().map(|v| v * v).sum::<f64>() * grid.cell()).sqrt();
    let dx = grid.dx();
    let quadrature_norm = coeffs
        .iter()
        .map(|c| 2.0 * modes.ly * dx * c.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    PacketField {
        t,
        grid,
        field,
        norm,
        quadrature_norm,
    }
}

/// `‖u⁰(t)‖ (1+t)^{1/(2m)} e^{−σ0 t}` normalized by its geometric mean over `times`.
pub fn packet_bound_ratios(modes: &PacketModes, m: u32, sigma0: f64, times: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = times
        .iter()
        .map(|&t| wave_packet(modes, t).norm * (1.0 + t).powf(1.0 / (2.0 * m as f64)) * (-sigma0 * t).exp())
        .collect();
    let gm = (raw.iter().map(|r| r.ln()).sum::<f64>() / raw.len() as f64).exp();
    raw.iter().map(|r| r / gm).collect()
}

/// Growth exponent of the packet from `ln ‖u⁰(t)‖ + power · ln(1+t)` against t.
pub fn fit_packet_exponent(modes: &PacketModes, power: f64, times: &[f64]) -> Option<f64> {
    let vals: Vec<f64> = times
        .iter()
        .map(|&t| wave_packet_norm(modes, t) * (1.0 + t).powf(power))
        .collect();
    fit_exponential(times, &vals).map(|f| f.rate)
}

/// `‖u⁰(t)‖` from the mode norms (Parseval in y), without assembling the field.
pub fn wave_packet_norm(modes: &PacketModes, t: f64) -> f64 {
    let dx = 2.0 * modes.x_grid.half_length / modes.x_grid.n as f64;
    modes
        .modes
        .iter()
        .zip(&modes.sigmas)
        .zip(&modes.weights)
        .map(|((u, s), w)| {
            let g = (s * t).exp().norm() * w;
            2.0 * modes.ly * dx * g * g * u.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// The first corrector: the forced linearized evolution with zero data.
#[derive(Debug, Clone, Serialize)]
pub struct Corrector {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Growth exponent fitted on `[1/Re σ, 3/Re σ]`.
    pub exponent: Option<GrowthFit>,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrectorOptions {
    pub ny: usize,
    pub dt: f64,
    /// Scale of the quadratic forcing (0 switches it off).
    pub forcing_scale: f64,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        Self {
            ny: 16,
            dt: 0.02,
            forcing_scale: 1.0,
        }
    }
}

/// Quadratic part of the nonlinearity at the soliton applied to `w`, in Fourier space.
fn quadratic_forcing(sim: SimModel, grid: &Grid2d, fft: &Fft2, q: &[f64], w: &[C]) -> Vec<C> {
    let nx = grid.nx;
    let kx = grid.kx();
    let mut r: Vec<C> = w
        .iter()
        .enumerate()
        .map(|(j, z)| match sim {
            SimModel::Gkp1 { p } => {
                let pf = p as f64;
                C::new(0.5 * pf * (pf - 1.0) * q[j % nx].powi(p as i32 - 2) * z.re * z.re, 0.0)
            }
            SimModel::Zk => C::new(0.5 * z.re * z.re, 0.0),
            SimModel::Nls => (z * z + 2.0 * z.norm_sqr()) * q[j % nx],
        })
        .collect();
    fft.forward(&mut r);
    for (j, z) in r.iter_mut().enumerate() {
        *z *= match sim {
            SimModel::Gkp1 { .. } | SimModel::Zk => -I * kx[j % nx],
            SimModel::Nls => I,
        };
    }
    r
}

pub fn first_corrector(model: &ModelSpec, mode: &ModeResult, t_grid: &[f64], opts: &CorrectorOptions) -> Result<Corrector> {
    let sim = SimModel::from_spec(model)?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] < 0.0 {
        return Err(Error::InvalidParam("t_grid must be non-empty, increasing and non-negative".into()));
    }
    if !(mode.sigma.re > 0.0) || !(mode.k > 0.0) {
        return Err(Error::InvalidParam("the corrector needs an unstable mode with k > 0".into()));
    }
    let ly = 2.0 * std::f64::consts::PI / mode.k;
    let grid = Grid2d::new(mode.grid.n, opts.ny, mode.grid.half_length, ly)?;
    let u0 = eigenmode_field(sim, &grid, mode.k, &mode.u);
    let fft = Fft2::new(grid.nx, grid.ny);
    let q: Vec<f64> = (0..grid.nx).map(|ix| sim.background(grid.x(ix))).collect();
    let sigma = mode.sigma;
    let nx = grid.nx;
    let scale = opts.forcing_scale;
    let forcing = move |t: f64| -> Vec<C> {
        if scale == 0.0 {
            return vec![C::new(0.0, 0.0); grid.len()];
        }
        // u⁰(t) = 2Re(e^{σt} e^{iky} U): rotate the t = 0 field mode by mode.
        let g = (sigma * t).exp();
        let w: Vec<C> = u0
            .iter()
            .enumerate()
            .map(|(j, _)| {
                let (ix, iy) = (j % nx, j / nx);
                let e = C::from_polar(1.0, mode.k * grid.y(iy)) * g;
                let a = 2.0 * (e * mode.u[0][ix]).re;
                let b = if sim.is_real() { 0.0 } else { 2.0 * (e * mode.u[1][ix]).re };
                C::new(a, b)
            })
            .collect();
        quadratic_forcing(sim, &grid, &fft, &q, &w)
            .into_iter()
            .map(|z| z * scale)
            .collect()
    };
    let mut solver = Solver::new(sim, grid, Dynamics::Linearized, true).with_forcing(Box::new(forcing));
    let dt_max = opts.dt.min(0.9 * stability_bound(sim, &grid, true));

    let mut norms = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - solver.t;
        if span > 0.0 {
            let n = (span / dt_max).ceil() as usize;
            let h = span / n as f64;
            for _ in 0..n {
                solver.step(h)?;
            }
        }
        norms.push(solver.norm());
    }
    let s = sigma.re;
    let (ts, vs): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .zip(&norms)
        .filter(|(t, _)| **t >= 1.0 / s - 1e-12 && **t <= 3.0 / s + 1e-12)
        .map(|(t, v)| (*t, *v))
        .unzip();
    Ok(Corrector {
        times: t_grid.to_vec(),
        norms,
        exponent: fit_exponential(&ts, &vs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft2_round_trip() {
        let fft = Fft2::new(16, 8);
        let orig: Vec<C> = (0..128).map(|j| C::new((j as f64).sin(), (j as f64 * 0.3).cos())).collect();
        let mut d = orig.clone();
        fft.forward(&mut d);
        fft.inverse(&mut d);
        let err = d.iter().zip(&orig).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn snapshot_round_trip() {
        let grid = Grid2d::new(4, 2, 1.0, 2.0).unwrap();
        let s = Snapshot {
            t: 1.5,
            grid,
            fields: vec![(0..8).map(|v| v as f64).collect()],
        };
        let back = decode_snapshot(&encode_snapshot(&s)).unwrap();
        assert_eq!(back.fields, s.fields);
        assert_eq!(back.t, 1.5);
        assert_eq!(back.grid, grid);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (0.7 * t).exp()).collect();
        let f = fit_exponential(&t, &v).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perp_norm_matches_physical_projection() {
        let grid = Grid2d::new(32, 8, 20.0, 10.0).unwrap();
        let mut s = Solver::new(SimModel::Zk, grid, Dynamics::Nonlinear, true);
        let u: Vec<C> = (0..grid.len())
            .map(|j| {
                let (x, y) = (grid.x(j % 32), grid.y(j / 32));
                C::new((-x * x / 8.0).exp() * (1.0 + 0.3 * (2.0 * std::f64::consts::PI * y / 10.0).cos()), 0.0)
            })
            .collect();
        s.set_physical(&u);
        let phys = s.physical();
        let mut mean = vec![0.0; 32];
        for (j, z) in phys.iter().enumerate() {
            mean[j % 32] += z.re / 8.0;
        }
        let dev: Vec<C> = phys.iter().enumerate().map(|(j, z)| z - mean[j % 32]).collect();
        assert!((l2(&grid, &dev) - s.norm_perp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsupported_and_bad_configs() {
        let grid = Grid2d::new(64, 8, 40.0, 10.0).unwrap();
        assert!(SimConfig::new(ModelSpec::boussinesq(0.75).unwrap(), grid, 0.01, 1.0).validate().is_err());
        let mut cfg = SimConfig::new(ModelSpec::gkp1(2).unwrap(), grid, 0.01, 1.0);
        cfg.delta = 0.5;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.0;
        cfg.dt = 10.0;
        assert!(cfg.validate().is_err());
        assert!(Grid2d::new(63, 8, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_forcing_gives_zero_corrector() {
        let model = ModelSpec::gkp1(2).unwrap();
        let grid = Grid1d::new(128, 20.0);
        let mode = ModeResult {
            k: 0.3,
            sigma: C::new(0.19, 0.0),
            grid: grid.into(),
            u: vec![grid.points().map(|x| C::new((-x * x).exp() * x, 0.0)).collect()],
            residual: 0.0,
            conservation: 0.0,
            h1_norm_sq: 1.0,
            singular_ratio: 0.0,
        };
        let opts = CorrectorOptions {
            forcing_scale: 0.0,
            ..Default::default()
        };
        let c = first_corrector(&model, &mode, &[0.0, 1.0, 2.0], &opts).unwrap();
        assert!(c.norms.iter().all(|&n| n == 0.0));
    }
}
