//! Periodic box discretization.
//!
//! A [`Grid`] is a uniform tensor grid on the torus `[0, L)^dim` with `n`
//! points per axis. Points are stored row-major, axis 0 slowest. Every
//! integral in the crate is the rectangle rule on this grid, which is
//! spectrally accurate for smooth periodic integrands, and every
//! differential operator is a Fourier multiplier.

mod field;
mod io;
mod spectral;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use field::{integrate, lp_norm, Field};
pub(crate) use field::dot as dot_values;
pub use io::{read_field, read_field_file, write_field, write_field_file};
pub use spectral::{apply_frac_laplacian, hs_quadratic_form};

pub const MAX_DIM: usize = 3;

pub struct Grid {
    dim: usize,
    n: usize,
    box_length: f64,
    cell_volume: f64,
    wavenumbers: Vec<f64>,
    xi_sq: Vec<f64>,
    mirror: Vec<usize>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Builds a grid and wraps it for sharing between fields.
pub fn make_grid(dim: usize, n_per_axis: usize, box_length: f64) -> Result<Arc<Grid>> {
    Grid::new(dim, n_per_axis, box_length).map(Arc::new)
}

impl Grid {
    pub fn new(dim: usize, n_per_axis: usize, box_length: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1, 2 or 3 (got {dim})"
            )));
        }
        if n_per_axis < 8 || !n_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8 (got {n_per_axis})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length must be positive and finite (got {box_length})"
            )));
        }
        let n = n_per_axis;
        let h = box_length / n as f64;
        let cell_volume = h.powi(dim as i32);

        // FFT ordering with the Nyquist mode carried at +n/2.
        let base = 2.0 * PI / box_length;
        let wavenumbers: Vec<f64> = (0..n)
            .map(|j| {
                let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                base * k as f64
            })
            .collect();

        let total = n.pow(dim as u32);
        let mut xi_sq = vec![0.0; total];
        for (idx, slot) in xi_sq.iter_mut().enumerate() {
            let mut rem = idx;
            let mut acc = 0.0;
            for _ in 0..dim {
                let k = wavenumbers[rem % n];
                acc += k * k;
                rem /= n;
            }
            *slot = acc;
        }

        // flat index of -k for every k
        let mirror: Vec<usize> = (0..total)
            .map(|idx| {
                let mut rem = idx;
                let mut out = 0;
                let mut stride = 1;
                for _ in 0..dim {
                    let j = rem % n;
                    out += ((n - j) % n) * stride;
                    stride *= n;
                    rem /= n;
                }
                out
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        Ok(Grid {
            dim,
            n,
            box_length,
            cell_volume,
            wavenumbers,
            xi_sq,
            mirror,
            fwd,
            inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_sq.is_empty()
    }

    /// Per-axis angular frequencies `2πk/L` in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `|ξ|²` at every point of the (flattened) frequency grid.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    /// Physical coordinates of the point with flat index `idx`.
    /// Unused trailing axes are zero.
    pub fn coords(&self, idx: usize) -> [f64; MAX_DIM] {
        let h = self.spacing();
        let mut out = [0.0; MAX_DIM];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = (rem % self.n) as f64 * h;
            rem /= self.n;
        }
        out
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for x in c.iter_mut().take(self.dim) {
            *x = 0.5 * self.box_length;
        }
        c
    }

    /// Shift by `shift` whole cells along `axis`, wrapping around the torus.
    pub(crate) fn translate_index(&self, idx: usize, axis: usize, shift: usize) -> usize {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        let i = (idx / stride) % self.n;
        let j = (i + shift) % self.n;
        idx - i * stride + j * stride
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.box_length == other.box_length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .finish()
    }
}
