//! DFT plumbing and Fourier multipliers.
//!
//! Transforms are unnormalized forward / `1/N`-normalized inverse. Two real
//! fields are transformed together as the real and imaginary parts of one
//! complex field whenever both are needed.

use rustfft::num_complex::Complex64;

use super::{Field, Grid};
use crate::error::{Error, Result};

impl Grid {
    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = n * stride;
            for start in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        buf[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Spectra of two real fields from a single complex transform.
    pub(crate) fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.transform(&mut z, false);
        let mut ah = vec![Complex64::default(); z.len()];
        let mut bh = vec![Complex64::default(); z.len()];
        for k in 0..z.len() {
            let zk = z[k];
            let zm = z[self.mirror[k]].conj();
            ah[k] = 0.5 * (zk + zm);
            let d = 0.5 * (zk - zm);
            // divide by i
            bh[k] = Complex64::new(d.im, -d.re);
        }
        (ah, bh)
    }

    /// Real part of the normalized inverse transform.
    pub(crate) fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spec, true);
        let scale = 1.0 / spec.len() as f64;
        spec.iter().map(|c| c.re * scale).collect()
    }

    /// Inverse of two Hermitian spectra in one complex transform.
    pub(crate) fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.transform(&mut z, true);
        let scale = 1.0 / z.len() as f64;
        z.iter().map(|c| (c.re * scale, c.im * scale)).unzip()
    }

    /// `|ξ|^{2s}` on the frequency grid.
    pub(crate) fn frac_symbol(&self, s: f64) -> Vec<f64> {
        self.xi_sq
            .iter()
            .map(|&k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) })
            .collect()
    }

    pub(crate) fn apply_symbol(&self, values: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, m) in spec.iter_mut().zip(symbol) {
            *c *= *m;
        }
        self.inverse_real(spec)
    }

    /// `∫ a·(M b) dx` for a real even multiplier `M`, via Parseval.
    pub(crate) fn spectral_form(&self, a_hat: &[Complex64], b_hat: &[Complex64], symbol: &[f64]) -> f64 {
        let sum: f64 = a_hat
            .iter()
            .zip(b_hat)
            .zip(symbol)
            .map(|((a, b), m)| m * (a.re * b.re + a.im * b.im))
            .sum();
        sum * self.cell_volume / self.len() as f64
    }
}

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("s", format!("fractional order must lie in (0, 1] (got {s})")))
    }
}

/// `(-Δ)^s u` as the Fourier multiplier `|ξ|^{2s}`; `s = 1` is the spectral
/// Laplacian.
pub fn apply_frac_laplacian(u: &Field, s: f64) -> Result<Field> {
    check_order(s)?;
    let grid = u.grid();
    let out = grid.apply_symbol(u.values(), &grid.frac_symbol(s));
    Ok(Field::from_raw(grid.clone(), out))
}

/// `∫ |(-Δ)^{s/2} u|² dx + ∫ V u² dx`.
pub fn hs_quadratic_form(u: &Field, s: f64, potential: &Field) -> Result<f64> {
    check_order(s)?;
    u.check_grid(potential)?;
    let grid = u.grid();
    let u_hat = grid.forward(u.values());
    let kinetic = grid.spectral_form(&u_hat, &u_hat, &grid.frac_symbol(s));
    let pot: f64 = potential
        .values()
        .iter()
        .zip(u.values())
        .map(|(v, x)| v * x * x)
        .sum::<f64>()
        * grid.cell_volume();
    Ok(kinetic + pot)
}
