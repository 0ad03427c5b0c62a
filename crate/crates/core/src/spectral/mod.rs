//! Periodic spectral fields, Fourier multipliers, dealiased products and the
//! exponential quadrature shared by the strip and time integrators.

mod field;
mod grid;
mod multiplier;
mod quadrature;

pub use field::SpectralField;
pub use grid::TorusGrid;
pub use multiplier::{
    apply_multiplier, AbsD, Identity, InvAbsD, Multiplier, Partial, Poisson, Riesz, Symbol, ZeroMode,
};
pub use quadrature::{exp_quadrature_step, ExpStepWeights};
pub(crate) use multiplier::SymbolTable;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `e^{-nu t |D|} u`.
pub fn poisson_semigroup(u: &SpectralField, t: f64, nu: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidRate(nu));
    }
    apply_multiplier(u, &Poisson(nu * t))
}

/// Zero every mode outside the 2/3-rule band.
pub fn dealias(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    for (c, keep) in out.coeffs_mut().iter_mut().zip(u.grid().keep_mask()) {
        if !keep {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Pointwise product evaluated in physical space, truncated by the 2/3 rule.
pub fn dealiased_product(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.same_grid(v)?;
    let a = u.to_physical();
    let b = v.to_physical();
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(dealias(&SpectralField::from_physical(u.grid(), &prod)?))
}

/// Pointwise nonlinearity `f(u_1(x), ..., u_n(x))`, truncated by the 2/3 rule.
pub fn dealiased_eval(inputs: &[&SpectralField], f: impl Fn(&[f64]) -> f64) -> Result<SpectralField> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::InvalidInput("no input fields".into()))?;
    for u in &inputs[1..] {
        first.same_grid(u)?;
    }
    let phys: Vec<Vec<f64>> = inputs.iter().map(|u| u.to_physical()).collect();
    let mut args = vec![0.0; inputs.len()];
    let values: Vec<f64> = (0..first.grid().len())
        .map(|i| {
            for (a, p) in args.iter_mut().zip(&phys) {
                *a = p[i];
            }
            f(&args)
        })
        .collect();
    Ok(dealias(&SpectralField::from_physical(first.grid(), &values)?))
}
