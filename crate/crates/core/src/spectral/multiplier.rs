//! Fourier multipliers `m(D)` acting on [`SpectralField`]s.
//!
//! A multiplier is described by its symbol `xi -> m(xi)` on nonzero
//! wavevectors together with its behaviour at `xi = 0`. Symbols that are
//! singular at the origin (for instance `|xi|^{-1}`) may only be applied to
//! mean-zero fields.

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Value of a symbol at the zero wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroMode {
    Value(Complex64),
    Singular,
}

pub trait Multiplier {
    /// Symbol at a nonzero wavevector.
    fn symbol(&self, xi: &[f64]) -> Complex64;

    fn zero_mode(&self) -> ZeroMode;
}

/// `|D|`, the half Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct AbsD;

impl Multiplier for AbsD {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(norm(xi), 0.0)
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Value(Complex64::new(0.0, 0.0))
    }
}

/// `|D|^{-1}`.
#[derive(Debug, Clone, Copy)]
pub struct InvAbsD;

impl Multiplier for InvAbsD {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(1.0 / norm(xi), 0.0)
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Singular
    }
}

/// Partial derivative along one axis, symbol `i xi_axis`.
#[derive(Debug, Clone, Copy)]
pub struct Partial(pub usize);

impl Multiplier for Partial {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(0.0, xi[self.0])
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Value(Complex64::new(0.0, 0.0))
    }
}

/// Component of the Riesz transform `|D|^{-1} div`, symbol `i xi_axis / |xi|`.
///
/// The zero mode is mapped to zero: the divergence annihilates the mean of
/// the vector field it acts on.
#[derive(Debug, Clone, Copy)]
pub struct Riesz(pub usize);

impl Multiplier for Riesz {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        Complex64::new(0.0, xi[self.0] / norm(xi))
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Value(Complex64::new(0.0, 0.0))
    }
}

/// Poisson semigroup `e^{-s|D|}`.
#[derive(Debug, Clone, Copy)]
pub struct Poisson(pub f64);

impl Multiplier for Poisson {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        Complex64::new((-self.0 * norm(xi)).exp(), 0.0)
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Value(Complex64::new(1.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl Multiplier for Identity {
    fn symbol(&self, _xi: &[f64]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
    fn zero_mode(&self) -> ZeroMode {
        ZeroMode::Value(Complex64::new(1.0, 0.0))
    }
}

/// Arbitrary symbol given by a closure.
pub struct Symbol<F> {
    f: F,
    zero: ZeroMode,
}

impl<F: Fn(&[f64]) -> Complex64> Symbol<F> {
    pub fn new(f: F, zero: ZeroMode) -> Self {
        Self { f, zero }
    }
}

impl<F: Fn(&[f64]) -> Complex64> Multiplier for Symbol<F> {
    fn symbol(&self, xi: &[f64]) -> Complex64 {
        (self.f)(xi)
    }
    fn zero_mode(&self) -> ZeroMode {
        self.zero
    }
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Symbol evaluated at a flat index of the grid. On Nyquist indices the
/// symbol is averaged over the aliased wavevectors `+-n/2`, which keeps
/// Hermitian-symmetric symbols Hermitian on the discrete grid.
pub(crate) fn symbol_at<M: Multiplier + ?Sized>(m: &M, grid: &TorusGrid, flat: usize) -> Option<Complex64> {
    if flat == 0 {
        return match m.zero_mode() {
            ZeroMode::Value(v) => Some(v),
            ZeroMode::Singular => None,
        };
    }
    let k0 = grid.k_min();
    let modes = grid.axis_modes(flat);
    let n_nyq = modes.iter().filter(|m| m.nyquist).count();
    let mut xi = [0.0f64; 2];
    if n_nyq == 0 {
        for (x, md) in xi.iter_mut().zip(modes) {
            *x = md.index as f64 * k0;
        }
        return Some(m.symbol(&xi[..modes.len()]));
    }
    let combos = 1usize << n_nyq;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in 0..combos {
        let mut bit = 0;
        for (x, md) in xi.iter_mut().zip(modes) {
            let mut idx = md.index as f64;
            if md.nyquist {
                if c >> bit & 1 == 1 {
                    idx = -idx;
                }
                bit += 1;
            }
            *x = idx * k0;
        }
        acc += m.symbol(&xi[..modes.len()]);
    }
    Some(acc / combos as f64)
}

/// Symbols of `|D|`, the partial derivatives and the Riesz components
/// tabulated on a grid, for the inner loops of the strip solver.
#[derive(Debug, Clone)]
pub(crate) struct SymbolTable {
    pub abs: Vec<f64>,
    pub deriv: Vec<Vec<Complex64>>,
    pub riesz: Vec<Vec<Complex64>>,
}

impl SymbolTable {
    pub fn new(grid: &TorusGrid) -> Self {
        let tab = |m: &dyn Multiplier| -> Vec<Complex64> {
            (0..grid.len())
                .map(|i| symbol_at(m, grid, i).unwrap_or(Complex64::new(0.0, 0.0)))
                .collect()
        };
        Self {
            abs: tab(&AbsD).iter().map(|c| c.re).collect(),
            deriv: (0..grid.dim()).map(|a| tab(&Partial(a))).collect(),
            riesz: (0..grid.dim()).map(|a| tab(&Riesz(a))).collect(),
        }
    }
}

/// Modewise multiplication `m(D) u`.
pub fn apply_multiplier<M: Multiplier + ?Sized>(u: &SpectralField, m: &M) -> Result<SpectralField> {
    if matches!(m.zero_mode(), ZeroMode::Singular) && !u.is_mean_zero() {
        return Err(Error::SingularZeroMode);
    }
    let grid = u.grid();
    // None only at the zero mode of a singular symbol, where u vanishes
    let symbols: Vec<Complex64> = (0..grid.len())
        .map(|flat| symbol_at(m, grid, flat).unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    let scale = symbols.iter().fold(0.0f64, |a, s| a.max(s.norm()));
    let defect = (0..grid.len())
        .map(|i| (symbols[i] - symbols[grid.negated_index(i)].conj()).norm())
        .fold(0.0f64, f64::max);
    if scale > 0.0 && defect / scale > 1e-12 {
        return Err(Error::NotRealValued { defect: defect / scale });
    }
    let coeffs = u.coeffs().iter().zip(&symbols).map(|(c, s)| c * s).collect();
    let out = SpectralField::from_coeffs_unchecked(grid.clone(), coeffs);
    Ok(out)
}
