use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Per-axis signed wavenumber of an FFT index. The Nyquist index is flagged
/// because it aliases both `+n/2` and `-n/2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisMode {
    pub index: i64,
    pub nyquist: bool,
}

struct GridInner {
    dim: usize,
    n: usize,
    period: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed integer wavenumbers per flat index, `dim` entries each.
    modes: Vec<AxisMode>,
    /// |xi| per flat index.
    abs_xi: Vec<f64>,
    /// Keep mask for the 2/3 rule.
    keep: Vec<bool>,
}

/// Periodic box `[0, L)^d` sampled with `n` points per axis.
///
/// Cloning is cheap; the FFT plans are shared behind an `Arc` and are safe to
/// use from several threads at once.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("period", &self.inner.period)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.period == other.inner.period)
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "modes per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        let len = n.pow(dim as u32);
        let k0 = 2.0 * PI / period;
        let cutoff = (n / 3) as i64;
        let mut modes = Vec::with_capacity(len * dim);
        let mut abs_xi = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        for flat in 0..len {
            let mut sq = 0.0;
            let mut kept = true;
            for axis in 0..dim {
                let i = axis_index(flat, axis, dim, n);
                let m = axis_mode(i, n);
                sq += (m.index as f64 * k0).powi(2);
                kept &= m.index.abs() <= cutoff && !m.nyquist;
                modes.push(m);
            }
            abs_xi.push(sq.sqrt());
            keep.push(kept);
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                period,
                fwd,
                inv,
                modes,
                abs_xi,
                keep,
            }),
        })
    }

    /// One-dimensional grid with period `2*pi`.
    pub fn periodic_1d(n: usize) -> Result<Self> {
        Self::new(1, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> f64 {
        self.inner.period
    }

    /// Total number of grid points (`n^d`).
    pub fn len(&self) -> usize {
        self.inner.abs_xi.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.inner.period / self.inner.n as f64
    }

    /// Lowest nonzero frequency `2*pi/L`.
    pub fn k_min(&self) -> f64 {
        2.0 * PI / self.inner.period
    }

    /// Largest |xi| present on the grid.
    pub fn k_max(&self) -> f64 {
        self.k_min() * (self.inner.n / 2) as f64 * (self.inner.dim as f64).sqrt()
    }

    pub fn abs_xi(&self) -> &[f64] {
        &self.inner.abs_xi
    }

    pub(crate) fn keep_mask(&self) -> &[bool] {
        &self.inner.keep
    }

    pub(crate) fn axis_modes(&self, flat: usize) -> &[AxisMode] {
        let d = self.inner.dim;
        &self.inner.modes[flat * d..(flat + 1) * d]
    }

    /// Wavevector of a flat index. Nyquist components are reported as `+n/2`.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let k0 = self.k_min();
        self.axis_modes(flat)
            .iter()
            .map(|m| m.index as f64 * k0)
            .collect()
    }

    /// Integer wavenumbers of a flat index.
    pub fn wavenumbers(&self, flat: usize) -> Vec<i64> {
        self.axis_modes(flat).iter().map(|m| m.index).collect()
    }

    /// Flat index of an integer wavevector, if representable.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let n = self.inner.n as i64;
        if k.len() != self.inner.dim {
            return None;
        }
        let mut flat = 0usize;
        for &ki in k {
            if ki < -(n / 2) || ki > n / 2 {
                return None;
            }
            flat = flat * self.inner.n + ki.rem_euclid(n) as usize;
        }
        Some(flat)
    }

    /// Flat index of `-k`.
    pub fn negated_index(&self, flat: usize) -> usize {
        let n = self.inner.n;
        let d = self.inner.dim;
        let mut out = 0usize;
        for axis in 0..d {
            let i = axis_index(flat, axis, d, n);
            out = out * n + (n - i) % n;
        }
        out
    }

    /// Physical coordinates of a flat grid index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        (0..self.inner.dim)
            .map(|axis| axis_index(flat, axis, self.inner.dim, self.inner.n) as f64 * h)
            .collect()
    }

    /// Same grid with the period rescaled; used by the scaling-invariance checks.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(self.inner.dim, self.inner.n, period)
    }

    /// Same grid with a different resolution.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.inner.dim, n, self.inner.period)
    }

    /// Unnormalized forward transform in place.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inner.fwd);
        let scale = 1.0 / self.len() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inner.inv);
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(buf.len(), self.len());
        let n = self.inner.n;
        match self.inner.dim {
            1 => plan.process(buf),
            2 => {
                plan.process(buf);
                transpose_square(buf, n);
                plan.process(buf);
                transpose_square(buf, n);
            }
            _ => unreachable!("dimension validated at construction"),
        }
    }
}

pub(crate) fn axis_index(flat: usize, axis: usize, dim: usize, n: usize) -> usize {
    let stride = n.pow((dim - 1 - axis) as u32);
    (flat / stride) % n
}

fn axis_mode(i: usize, n: usize) -> AxisMode {
    let half = n / 2;
    if i < half {
        AxisMode {
            index: i as i64,
            nyquist: false,
        }
    } else if i == half {
        AxisMode {
            index: half as i64,
            nyquist: true,
        }
    } else {
        AxisMode {
            index: i as i64 - n as i64,
            nyquist: false,
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 4, 1.0).is_err());
        assert!(TorusGrid::new(1, 12, 1.0).is_err());
        assert!(TorusGrid::new(3, 8, 1.0).is_err());
        assert!(TorusGrid::new(1, 8, 0.0).is_err());
        assert!(TorusGrid::new(2, 16, 3.0).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = TorusGrid::periodic_1d(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumbers(i)[0]).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.index_of(&[-3]), Some(5));
        assert_eq!(g.negated_index(1), 7);
        assert_eq!(g.negated_index(0), 0);
        assert_eq!(g.negated_index(4), 4);
        assert!((g.k_min() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_d_indexing_round_trips() {
        let g = TorusGrid::new(2, 8, 2.0 * PI).unwrap();
        for flat in 0..g.len() {
            let k = g.wavenumbers(flat);
            assert_eq!(g.index_of(&k), Some(flat));
            let neg = g.negated_index(flat);
            let kn = g.wavenumbers(neg);
            for (a, b) in k.iter().zip(&kn) {
                assert!(a + b == 0 || (a.abs() == 4 && b.abs() == 4));
            }
        }
    }
}
