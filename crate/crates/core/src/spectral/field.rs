use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// A real periodic function stored through its Fourier coefficients.
///
/// Coefficients are normalized so that `u(x) = sum_k c_k e^{i k.x}`; a unit
/// cosine has coefficient `1/2` at `+-k`. The field is *mean-zero* exactly
/// when the zero-mode coefficient is `0.0`; operations that must annihilate
/// the mean write an exact zero there.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.coeffs == other.coeffs
    }
}

const HERMITIAN_TOL: f64 = 1e-13;

impl SpectralField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Build from samples on the grid points (row-major, axis 0 slowest).
    pub fn from_physical(grid: &TorusGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward(&mut buf);
        Ok(Self::from_coeffs_unchecked(grid.clone(), buf))
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::from_physical(grid, &values).expect("sample count matches grid")
    }

    /// Build from coefficients, rejecting data that is not the spectrum of a
    /// real function.
    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let field = Self::from_coeffs_unchecked(grid.clone(), coeffs);
        let defect = field.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotRealValued { defect });
        }
        Ok(field)
    }

    /// Sum of real modes `a cos(k.x + phase)`.
    pub fn from_modes(grid: &TorusGrid, modes: &[(Vec<i64>, f64, f64)]) -> Result<Self> {
        let mut out = Self::zeros(grid);
        for (k, amp, phase) in modes {
            let idx = grid
                .index_of(k)
                .ok_or_else(|| Error::InvalidInput(format!("wavevector {k:?} not on grid")))?;
            let neg = grid.negated_index(idx);
            if idx == 0 {
                out.coeffs[0] += Complex64::new(amp * phase.cos(), 0.0);
            } else if idx == neg {
                // Nyquist: only the real part survives sampling
                out.coeffs[idx] += Complex64::new(amp * phase.cos(), 0.0);
            } else {
                let c = Complex64::from_polar(0.5 * amp, *phase);
                out.coeffs[idx] += c;
                out.coeffs[neg] += c.conj();
            }
        }
        Ok(out)
    }

    pub(crate) fn from_coeffs_unchecked(grid: TorusGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at an integer wavevector.
    pub fn coeff(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_mean_zero(&self) -> bool {
        self.coeffs[0] == Complex64::new(0.0, 0.0)
    }

    pub fn mean_free(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.to_physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum_k |k| |c_k|`, the Wiener-algebra norm of `|D|u`.
    pub fn wiener_norm_1(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.abs_xi())
            .map(|(c, k)| k * c.norm())
            .sum()
    }

    /// Volume-averaged inner product `L^{-d} int u v dx`.
    pub fn l2_inner(&self, other: &Self) -> f64 {
        self.check_grid(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest coefficient difference in modulus.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        self.check_grid(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max_k |c_k - conj(c_{-k})|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let j = self.grid.negated_index(i);
            worst = worst.max((c - self.coeffs[j].conj()).norm());
        }
        worst / scale
    }

    /// `u(x - a)`.
    pub fn translate(&self, shift: &[f64]) -> Self {
        assert_eq!(shift.len(), self.grid.dim(), "shift dimension");
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let modes = self.grid.axis_modes(i);
            if modes.iter().any(|m| m.nyquist) {
                // a half-period shift of the Nyquist mode is the only one
                // that keeps it real; fall back to averaging the aliases
                let phase: f64 = modes
                    .iter()
                    .zip(shift)
                    .map(|(m, a)| if m.nyquist { 0.0 } else { m.index as f64 * self.grid.k_min() * a })
                    .sum();
                let nyq: f64 = modes
                    .iter()
                    .zip(shift)
                    .filter(|(m, _)| m.nyquist)
                    .map(|(m, a)| (m.index as f64 * self.grid.k_min() * a).cos())
                    .product();
                *c *= Complex64::from_polar(nyq, -phase);
            } else {
                let phase: f64 = modes
                    .iter()
                    .zip(shift)
                    .map(|(m, a)| m.index as f64 * self.grid.k_min() * a)
                    .sum();
                *c *= Complex64::from_polar(1.0, -phase);
            }
        }
        out
    }

    /// Modes with `|k| > cutoff` (in integer wavenumber units) removed.
    pub fn low_pass(&self, cutoff: f64) -> Self {
        let mut out = self.clone();
        let k0 = self.grid.k_min();
        for (c, k) in out.coeffs.iter_mut().zip(self.grid.abs_xi()) {
            if *k > cutoff * k0 * (1.0 + 1e-12) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Resample onto a grid with the same dimension and period but a different
    /// resolution, padding with zeros or truncating.
    pub fn resample(&self, grid: &TorusGrid) -> Result<Self> {
        if grid.dim() != self.grid.dim() || grid.period() != self.grid.period() {
            return Err(Error::GridMismatch);
        }
        let mut out = Self::zeros(grid);
        let half_new = (grid.n() / 2) as i64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavenumbers(i);
            let nyq_src = self.grid.axis_modes(i).iter().any(|m| m.nyquist);
            if nyq_src || k.iter().any(|&ki| ki.abs() >= half_new) {
                continue;
            }
            if let Some(j) = grid.index_of(&k) {
                out.coeffs[j] = *c;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= a;
        }
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.check_grid(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Self::from_coeffs_unchecked(self.grid.clone(), coeffs)
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn check_grid(&self, other: &Self) {
        assert!(self.grid == other.grid, "fields live on different grids");
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        self.lin_comb(1.0, rhs, 1.0)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        self.lin_comb(1.0, rhs, -1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}
