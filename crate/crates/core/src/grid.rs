//! Uniform periodic grids on the flat torus `[0, 2π)^d` and Fourier-spectral
//! differentiation along grid axes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Signed integer frequency of each FFT bin; the Nyquist bin carries 0.
    wavenumbers: Vec<f64>,
}

/// The discretized Cauchy surface: `N^d` points with spacing `h = 2π/N`.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    spacing: f64,
    cell_weight: f64,
    plan: Arc<SpectralPlan>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(LabError::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if n < 8 || n % 2 != 0 {
            return Err(LabError::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let half = (n / 2) as i64;
        let wavenumbers = (0..n as i64)
            .map(|j| {
                let k = if j < half { j } else { j - n as i64 };
                if k == -half {
                    0.0
                } else {
                    k as f64
                }
            })
            .collect();
        let spacing = 2.0 * PI / n as f64;
        Ok(Self {
            dim,
            n,
            spacing,
            cell_weight: spacing.powi(dim as i32),
            plan: Arc::new(SpectralPlan {
                forward,
                inverse,
                wavenumbers,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight `h^d` of one cell.
    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of independent components of a symmetric 2-tensor.
    pub fn sym_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Integer frequencies used by the spectral derivative (Nyquist mapped to 0).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.plan.wavenumbers
    }

    /// Flat index of a multi-index; axis 0 varies slowest.
    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = flat % self.n;
            flat /= self.n;
        }
        out
    }

    /// Coordinates of the point with the given flat index.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = m[axis] as f64 * self.spacing;
        }
        x
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|p| f(&self.coords(p))).collect()
    }

    /// Total quadrature weight, `(2π)^d`.
    pub fn volume(&self) -> f64 {
        self.cell_weight * self.len() as f64
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Fourier-spectral derivative of point values along `axis`.
    ///
    /// Exact for trigonometric polynomials of degree below `N/2`. Two real
    /// lines are packed into one complex transform since the multiplier `ik`
    /// maps real data to real data.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Result<Vec<f64>> {
        if axis >= self.dim {
            return Err(LabError::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        if values.len() != self.len() {
            return Err(LabError::GridMismatch);
        }
        let n = self.n;
        let stride = self.stride(axis);
        let starts = self.line_starts(axis);
        let pairs = starts.len() / 2;
        let mut buffer = vec![Complex64::new(0.0, 0.0); pairs * n];
        for (pair, chunk) in buffer.chunks_exact_mut(n).enumerate() {
            let (a, b) = (starts[2 * pair], starts[2 * pair + 1]);
            for (j, z) in chunk.iter_mut().enumerate() {
                *z = Complex64::new(values[a + j * stride], values[b + j * stride]);
            }
        }
        self.plan.forward.process(&mut buffer);
        let scale = 1.0 / n as f64;
        for chunk in buffer.chunks_exact_mut(n) {
            for (z, &k) in chunk.iter_mut().zip(&self.plan.wavenumbers) {
                *z = Complex64::new(-z.im * k * scale, z.re * k * scale);
            }
        }
        self.plan.inverse.process(&mut buffer);
        let mut out = vec![0.0; values.len()];
        for (pair, chunk) in buffer.chunks_exact(n).enumerate() {
            let (a, b) = (starts[2 * pair], starts[2 * pair + 1]);
            for (j, z) in chunk.iter().enumerate() {
                out[a + j * stride] = z.re;
                out[b + j * stride] = z.im;
            }
        }
        Ok(out)
    }

    /// Spectral derivative of complex point values, applied to the real and
    /// imaginary parts separately so that neither leaks into the other.
    pub fn derivative_complex(&self, values: &[Complex64], axis: usize) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        let im: Vec<f64> = values.iter().map(|z| z.im).collect();
        let dre = self.derivative(&re, axis)?;
        let dim = self.derivative(&im, axis)?;
        Ok(dre.into_iter().zip(dim).map(|(a, b)| Complex64::new(a, b)).collect())
    }

    /// Starting flat index of every grid line parallel to `axis`.
    fn line_starts(&self, axis: usize) -> Vec<usize> {
        let stride = self.stride(axis);
        let block = stride * self.n;
        let mut starts = Vec::with_capacity(self.len() / self.n);
        for outer in (0..self.len()).step_by(block) {
            for inner in 0..stride {
                starts.push(outer + inner);
            }
        }
        starts
    }

    /// Uniform-weight quadrature `Σ w f_k` with a fixed pairwise summation tree.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_weight * pairwise_sum(values)
    }
}

/// Pairwise summation with a tree fixed by the input length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    crate::kernel::pairwise_sum(values)
}
