//! Periodic grids and Fourier multipliers.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Uniform grid of `n` points on `[−half_length, half_length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub n: usize,
    pub half_length: f64,
}

impl Grid1d {
    pub fn new(n: usize, half_length: f64) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "grid size must be even");
        assert!(half_length > 0.0);
        Self { n, half_length }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Angular wavenumbers in FFT order; index `n/2` is the Nyquist mode (negative sign).
    pub fn wavenumbers(&self) -> Vec<f64> {
        wavenumbers(self.n, self.half_length)
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }
}

pub fn wavenumbers(n: usize, half_length: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / half_length;
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            base * m as f64
        })
        .collect()
}

pub fn fft(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(data);
}

/// Unnormalised inverse transform followed by division by `n`.
pub fn ifft(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(data.len()).process(data);
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|z| *z *= scale);
}

pub fn fft_real(f: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Applies the multiplier with symbol `m(ξ)` to complex samples.
///
/// The Nyquist mode is multiplied by `Re m(ξ_N)`, which zeroes it for odd symbols and keeps
/// real data real for symbols with `m(−ξ) = conj m(ξ)`.
pub fn apply_multiplier_complex<F>(f: &[Complex64], grid: &Grid1d, symbol: F) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    assert_eq!(f.len(), grid.n);
    let mut buf = f.to_vec();
    fft(&mut buf);
    let nyq = grid.nyquist();
    for (j, (z, xi)) in buf.iter_mut().zip(grid.wavenumbers()).enumerate() {
        let m = symbol(xi);
        *z *= if j == nyq { Complex64::new(m.re, 0.0) } else { m };
    }
    ifft(&mut buf);
    buf
}

/// Real part of [`apply_multiplier_complex`] for real samples.
pub fn apply_multiplier<F>(f: &[f64], grid: &Grid1d, symbol: F) -> Vec<f64>
where
    F: Fn(f64) -> Complex64,
{
    let c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    apply_multiplier_complex(&c, grid, symbol)
        .into_iter()
        .map(|z| z.re)
        .collect()
}

/// Spectral derivative of order `order`.
pub fn derivative(f: &[f64], grid: &Grid1d, order: u32) -> Vec<f64> {
    apply_multiplier(f, grid, |xi| Complex64::new(0.0, xi).powu(order))
}

/// Discrete L² norm `(dx Σ|f|²)^{1/2}`.
pub fn l2_norm(f: &[Complex64], dx: f64) -> f64 {
    (f.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
}

/// Discrete L² inner product `dx Σ conj(f) g`.
pub fn inner(f: &[Complex64], g: &[Complex64], dx: f64) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx
}
