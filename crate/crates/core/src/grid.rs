//! Periodic spectral calculus on the flat 4-torus `(R / 2 pi Z)^4`.
//!
//! Complex coordinates are `z1 = x1 + i x2`, `z2 = x3 + i x4`; the period is
//! `2 pi` on each axis so Fourier wavenumbers are integers and derivatives of
//! band-limited fields are exact to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::error::FieldError;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Uniform grid with `n` points per axis, spacing `2 pi / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self, FieldError> {
        if n < 8 || n % 2 != 0 {
            return Err(FieldError::BadGridSize(n));
        }
        Ok(PeriodicGrid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.n.pow(4)
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Total volume `(2 pi)^4` of the torus.
    pub fn volume(&self) -> f64 {
        TAU.powi(4)
    }
}

static FFT_CACHE: Lazy<Mutex<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut cache = FFT_CACHE.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Complex scalar samples on a [`PeriodicGrid`], row-major in `(x1,x2,x3,x4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    data: Vec<Complex64>,
}

impl ScalarField {
    pub fn zero(grid: PeriodicGrid) -> Self {
        ScalarField {
            grid,
            data: vec![Complex64::ZERO; grid.points()],
        }
    }

    pub fn constant(grid: PeriodicGrid, value: Complex64) -> Self {
        ScalarField {
            grid,
            data: vec![value; grid.points()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, mut f: impl FnMut(f64, f64, f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let mut data = Vec::with_capacity(grid.points());
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        data.push(f(i0 as f64 * h, i1 as f64 * h, i2 as f64 * h, i3 as f64 * h));
                    }
                }
            }
        }
        ScalarField { grid, data }
    }

    /// Trigonometric polynomial `sum_k c_k exp(i k . x)` from explicit modes.
    pub fn from_modes(grid: PeriodicGrid, modes: &[([i64; 4], Complex64)]) -> Self {
        ScalarField::from_fn(grid, |x1, x2, x3, x4| {
            modes
                .iter()
                .map(|(k, c)| {
                    let phase = k[0] as f64 * x1 + k[1] as f64 * x2 + k[2] as f64 * x3 + k[3] as f64 * x4;
                    c * Complex64::new(0.0, phase).exp()
                })
                .sum()
        })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn from_data(grid: PeriodicGrid, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.points());
        ScalarField { grid, data }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        ScalarField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| c * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Pointwise `exp`; for real input this is the positive conformal factor.
    pub fn exp(&self) -> Self {
        self.map(|v| v.exp())
    }

    pub fn add_scalar(&self, c: Complex64) -> Self {
        self.map(|v| v + c)
    }

    pub fn mean(&self) -> Complex64 {
        self.data.iter().sum::<Complex64>() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Max deviation from `other` in absolute value.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// A field is considered real when its imaginary parts vanish to 1e-12
    /// of the max magnitude.
    pub fn is_real(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        self.max_imag() <= 1e-12 * scale
    }

    pub fn ensure_real(&self) -> Result<(), FieldError> {
        if self.is_real() {
            Ok(())
        } else {
            Err(FieldError::NotReal(self.max_imag()))
        }
    }

    /// Drop imaginary round-off; caller asserts the field is real.
    pub fn real_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    /// Spectral partial derivative along real axis `axis` (0..4).
    ///
    /// The Nyquist mode `k = n/2` has no consistent odd derivative and is
    /// zeroed; inputs are expected to be band-limited below it.
    pub fn deriv_axis(&self, axis: usize) -> Self {
        assert!(axis < 4);
        let n = self.grid.n();
        let (fwd, inv) = fft_pair(n);
        let mut out = self.data.clone();
        let stride = n.pow(3 - axis as u32);
        let lines = self.data.len() / n;
        let mut buf = vec![Complex64::ZERO; n];
        let norm = 1.0 / n as f64;
        for line in 0..lines {
            // Decompose the line index into the non-axis coordinates.
            let block = line / stride;
            let offset = line % stride;
            let base = block * stride * n + offset;
            for j in 0..n {
                buf[j] = out[base + j * stride];
            }
            fwd.process(&mut buf);
            for (j, v) in buf.iter_mut().enumerate() {
                let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                if j == n / 2 {
                    *v = Complex64::ZERO;
                } else {
                    *v *= Complex64::new(0.0, k as f64);
                }
            }
            inv.process(&mut buf);
            for j in 0..n {
                out[base + j * stride] = buf[j] * norm;
            }
        }
        ScalarField { grid: self.grid, data: out }
    }

    /// Holomorphic derivative `d/dz_i = (d/dx - i d/dy)/2`, `i` in `{1, 2}`.
    pub fn dz(&self, i: usize) -> Self {
        assert!(i == 1 || i == 2);
        let (ax, ay) = if i == 1 { (0, 1) } else { (2, 3) };
        let dx = self.deriv_axis(ax);
        let dy = self.deriv_axis(ay);
        dx.zip(&dy, |a, b| 0.5 * (a - Complex64::i() * b))
    }

    /// Anti-holomorphic derivative `d/dzbar_i = (d/dx + i d/dy)/2`.
    pub fn dzbar(&self, i: usize) -> Self {
        assert!(i == 1 || i == 2);
        let (ax, ay) = if i == 1 { (0, 1) } else { (2, 3) };
        let dx = self.deriv_axis(ax);
        let dy = self.deriv_axis(ay);
        dx.zip(&dy, |a, b| 0.5 * (a + Complex64::i() * b))
    }

    /// Solve `lap_c v = rhs` for the complex Laplacian density
    /// `lap_c = sum_j d/dz_j d/dzbar_j` (one quarter of the real Laplacian),
    /// zeroing the mean mode. Exact for band-limited right-hand sides.
    pub fn solve_complex_laplacian(&self) -> Self {
        let n = self.grid.n();
        let mut hat = self.fft4(false);
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        let idx = ((i0 * n + i1) * n + i2) * n + i3;
                        let k = [signed(i0, n), signed(i1, n), signed(i2, n), signed(i3, n)];
                        let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
                        if k2 == 0.0 {
                            hat[idx] = Complex64::ZERO;
                        } else {
                            hat[idx] /= Complex64::new(-k2 / 4.0, 0.0);
                        }
                    }
                }
            }
        }
        let data = fft4_raw(self.grid, hat, true);
        ScalarField { grid: self.grid, data }
    }

    /// Zero every Fourier mode with a Nyquist index (|k| = n/2) on any axis.
    ///
    /// Spectral derivatives annihilate those modes, so they are invisible to
    /// every differential operator here; iterative solvers must not be
    /// allowed to park junk in them.
    pub fn dealias(&self) -> Self {
        let n = self.grid.n();
        let ny = n / 2;
        let mut hat = self.fft4(false);
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        if i0 == ny || i1 == ny || i2 == ny || i3 == ny {
                            hat[((i0 * n + i1) * n + i2) * n + i3] = Complex64::ZERO;
                        }
                    }
                }
            }
        }
        let data = fft4_raw(self.grid, hat, true);
        ScalarField { grid: self.grid, data }
    }

    fn fft4(&self, inverse: bool) -> Vec<Complex64> {
        fft4_raw(self.grid, self.data.clone(), inverse)
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn fft4_raw(grid: PeriodicGrid, mut data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let n = grid.n();
    let (fwd, inv) = fft_pair(n);
    let plan = if inverse { inv } else { fwd };
    let mut buf = vec![Complex64::ZERO; n];
    for axis in 0..4 {
        let stride = n.pow(3 - axis as u32);
        let lines = data.len() / n;
        for line in 0..lines {
            let block = line / stride;
            let offset = line % stride;
            let base = block * stride * n + offset;
            for j in 0..n {
                buf[j] = data[base + j * stride];
            }
            plan.process(&mut buf);
            for j in 0..n {
                data[base + j * stride] = buf[j];
            }
        }
    }
    if inverse {
        let norm = 1.0 / grid.points() as f64;
        for v in &mut data {
            *v *= norm;
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(8).is_ok());
        assert!(PeriodicGrid::new(7).is_err());
        assert!(PeriodicGrid::new(4).is_err());
    }

    #[test]
    fn spectral_derivative_exact() {
        let g = PeriodicGrid::new(16).unwrap();
        // f = exp(i x1): d/dz1 f = (i/2) exp(i x1), d/dzbar1 f = (i/2) exp(i x1)
        let f = ScalarField::from_modes(g, &[([1, 0, 0, 0], c(1.0, 0.0))]);
        let expect = f.scale(c(0.0, 0.5));
        assert!(f.dz(1).max_diff(&expect) < 1e-12);
        assert!(f.dzbar(1).max_diff(&expect) < 1e-12);
        // exp(i(x1 + 2 x4)): d/dx4 multiplies by 2i
        let f = ScalarField::from_modes(g, &[([1, 0, 0, 2], c(0.3, -0.1))]);
        assert!(f.deriv_axis(3).max_diff(&f.scale(c(0.0, 2.0))) < 1e-12);
    }

    #[test]
    fn holomorphic_mode_killed_by_dzbar() {
        let g = PeriodicGrid::new(16).unwrap();
        // exp(i z1) = exp(i x1 - x2) is not periodic; use exp(i(x1)) exp(i(x2))
        // structure instead: a mode k = (1, -1, 0, 0) represents exp(i zbar1)
        // up to scale, so dz kills it.
        let f = ScalarField::from_modes(g, &[([1, 1, 0, 0], c(1.0, 0.0))]);
        // dz1 of exp(i(x1+x2)) = (i/2)(1 - i*1)... both derivatives act:
        let dz = f.dz(1);
        let expect = f.scale(0.5 * (c(0.0, 1.0) - Complex64::i() * c(0.0, 1.0)));
        assert!(dz.max_diff(&expect) < 1e-12);
    }

    #[test]
    fn laplacian_solve_roundtrip() {
        let g = PeriodicGrid::new(8).unwrap();
        let f = ScalarField::from_modes(
            g,
            &[([1, 0, 0, 0], c(0.7, 0.0)), ([0, 2, 1, 0], c(0.0, 0.4))],
        );
        // forward complex Laplacian
        let lap = f.dz(1).dzbar(1).add(&f.dz(2).dzbar(2));
        let back = lap.solve_complex_laplacian();
        assert!(back.max_diff(&f) < 1e-11);
    }

#[test]
    fn dealias_projects_nyquist_band() {
        let g = PeriodicGrid::new(16).unwrap();
        let f = ScalarField::from_modes(g, &[([1, 0, 0, 0], c(0.5, 0.2)), ([0, 0, 2, 0], c(0.1, 0.0))]);
        assert!(f.dealias().max_diff(&f) < 1e-14, "resolved modes untouched");
        let g8 = PeriodicGrid::new(8).unwrap();
        let ny = ScalarField::from_modes(g8, &[([4, 0, 0, 0], c(1.0, 0.0))]);
        assert!(ny.dealias().max_abs() < 1e-14, "Nyquist mode removed");
    }

    #[test]
    fn mean_and_reality() {
        let g = PeriodicGrid::new(8).unwrap();
        let f = ScalarField::from_fn(g, |x1, _, _, _| c(x1.cos() + 2.0, 0.0));
        assert!((f.mean() - c(2.0, 0.0)).norm() < 1e-13);
        assert!(f.is_real());
        let h = f.map(|v| v + c(0.0, 1e-3));
        assert!(!h.is_real());
    }
}
