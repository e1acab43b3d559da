use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KkError, Result};

/// Periodic grid on `[-L/2, L/2)` with `N` points.
#[derive(Clone)]
pub struct Grid {
    length: f64,
    n: usize,
    dx: f64,
    /// Wavenumbers in FFT order; the Nyquist entry is zero.
    wavenumbers: Vec<f64>,
    /// `true` where a mode survives the 2/3 rule.
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("length", &self.length).field("n", &self.n).finish()
    }
}

impl Grid {
    pub const MIN_POINTS: usize = 64;

    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(KkError::InvalidGrid(format!("domain length must be positive, got {length}")));
        }
        if n < Self::MIN_POINTS || !n.is_power_of_two() {
            return Err(KkError::InvalidGrid(format!(
                "point count must be a power of two >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        let half = n / 2;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j < half {
                    j as f64
                } else if j == half {
                    0.0
                } else {
                    j as f64 - n as f64
                };
                2.0 * PI * m / length
            })
            .collect();
        let cutoff = n / 3;
        let keep = (0..n)
            .map(|j| {
                let m = if j <= half { j } else { n - j };
                m <= cutoff && j != half
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            length,
            n,
            dx: length / n as f64,
            wavenumbers,
            keep,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.keep
    }

    /// Largest wavenumber magnitude that the time stepper sees.
    pub fn max_wavenumber(&self, dealias: bool) -> f64 {
        self.wavenumbers
            .iter()
            .zip(&self.keep)
            .filter(|(_, &k)| k || !dealias)
            .fold(0.0, |m, (w, _)| m.max(w.abs()))
    }

    /// Discrete integral `Σ f dx`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.dx
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    pub fn forward_complex(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Inverse transform, returning the real part and the max-norm of the
    /// discarded imaginary part.
    pub fn inverse(&self, spec: &[Complex64]) -> (Vec<f64>, f64) {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        let mut residue = 0.0f64;
        let out = buf
            .iter()
            .map(|c| {
                residue = residue.max((c.im * scale).abs());
                c.re * scale
            })
            .collect();
        (out, residue)
    }

    /// `∂ᵖu` of a field given its spectrum.
    pub fn derivative_from_spectrum(&self, spec: &[Complex64], order: u32) -> Vec<f64> {
        let d: Vec<Complex64> = spec
            .iter()
            .zip(&self.wavenumbers)
            .map(|(c, &k)| c * Complex64::new(0.0, k).powu(order))
            .collect();
        self.inverse(&d).0
    }

    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        self.derivative_from_spectrum(&self.forward(u), order)
    }

    pub fn apply_dealias(&self, spec: &mut [Complex64]) {
        for (c, &k) in spec.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(10.0, 63).is_err());
        assert!(Grid::new(10.0, 96).is_err());
        assert!(Grid::new(10.0, 32).is_err());
        assert!(Grid::new(0.0, 64).is_err());
        assert!(Grid::new(f64::NAN, 64).is_err());
        assert!(Grid::new(10.0, 64).is_ok());
    }

    #[test]
    fn differentiates_single_modes() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let x = g.points();
        let u: Vec<f64> = x.iter().map(|x| (3.0 * x).sin()).collect();
        let d1 = g.derivative(&u, 1);
        let d5 = g.derivative(&u, 5);
        for (j, &xj) in x.iter().enumerate() {
            assert!((d1[j] - 3.0 * (3.0 * xj).cos()).abs() < 1e-12);
            assert!((d5[j] - 243.0 * (3.0 * xj).cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn dealias_keeps_lower_two_thirds() {
        let g = Grid::new(1.0, 64).unwrap();
        let kept = g.dealias_mask().iter().filter(|&&k| k).count();
        // modes 0, ±1..±21
        assert_eq!(kept, 43);
        assert!(!g.dealias_mask()[32]);
        assert!(g.max_wavenumber(true) < g.max_wavenumber(false));
    }
}
