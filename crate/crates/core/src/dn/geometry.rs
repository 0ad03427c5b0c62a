use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::strip::{dz_raw, StripField, StripGrid};
use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, Poisson, SpectralField, SymbolTable};

/// Smallest admissible `1 + |D|H` in the rational coefficient of `Q_a`.
pub const DENOMINATOR_GUARD: f64 = 0.4;

/// `H(., z) = e^{z|D|} eta` on every z-node.
pub fn lift_eta(eta: &SpectralField, strip: &StripGrid) -> Result<StripField> {
    if eta.grid() != strip.torus() {
        return Err(Error::GridMismatch);
    }
    let slices = strip
        .nodes()
        .into_iter()
        .map(|z| if z == 0.0 { Ok(eta.clone()) } else { apply_multiplier(eta, &Poisson(-z)) })
        .collect::<Result<Vec<_>>>()?;
    StripField::new(strip, slices)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffeoReport {
    pub ok: bool,
    pub min_dz_rho: f64,
}

/// Minimum over the strip of `d_z rho = 1 + e^{z|D|}|D| eta`; the change of
/// variables is admissible when it stays above `1/2`.
pub fn diffeo_check(eta: &SpectralField, strip: &StripGrid) -> Result<DiffeoReport> {
    let h = lift_eta(eta, strip)?;
    let symbols = SymbolTable::new(strip.torus());
    let min = h
        .slices()
        .iter()
        .map(|s| {
            let dh = physical(s.coeffs(), |k| symbols.abs[k], strip);
            dh.iter().fold(f64::INFINITY, |m, v| m.min(1.0 + v))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(DiffeoReport {
        ok: min >= 0.5,
        min_dz_rho: min,
    })
}

fn physical(c: &[Complex64], sym: impl Fn(usize) -> f64, strip: &StripGrid) -> Vec<f64> {
    let mut buf: Vec<Complex64> = c.iter().enumerate().map(|(k, c)| c * sym(k)).collect();
    strip.torus().inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

fn physical_c(c: &[Complex64], sym: &[Complex64], strip: &StripGrid) -> Vec<f64> {
    let mut buf: Vec<Complex64> = c.iter().zip(sym).map(|(c, s)| c * s).collect();
    strip.torus().inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// The flattened coefficient matrix
///
/// ```text
/// A = [ d_z rho I      -grad rho                  ]
///     [ -grad rho^T    (1 + |grad rho|^2)/d_z rho ]
/// ```
///
/// stored per strip point, row-major `(d+1) x (d+1)`.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    dim: usize,
    entries: Vec<Vec<Vec<f64>>>,
}

impl CoefficientMatrix {
    pub fn from_geometry(geom: &Geometry) -> Self {
        let d = geom.strip.torus().dim();
        let entries = (0..geom.strip.len())
            .map(|m| {
                (0..geom.strip.torus().len())
                    .map(|p| {
                        let rz = 1.0 + geom.dh[m][p];
                        let g: Vec<f64> = (0..d).map(|a| geom.grad_h[m][a][p]).collect();
                        let g2: f64 = g.iter().map(|x| x * x).sum();
                        let n = d + 1;
                        let mut a = vec![0.0; n * n];
                        for i in 0..d {
                            a[i * n + i] = rz;
                            a[i * n + d] = -g[i];
                            a[d * n + i] = -g[i];
                        }
                        a[d * n + d] = (1.0 + g2) / rz;
                        a
                    })
                    .collect()
            })
            .collect();
        Self { dim: d, entries }
    }

    pub fn size(&self) -> usize {
        self.dim + 1
    }

    /// Row-major entries at z-node `m` and grid point `p`.
    pub fn at(&self, m: usize, p: usize) -> &[f64] {
        &self.entries[m][p]
    }

    pub fn determinant(&self, m: usize, p: usize) -> f64 {
        let a = self.at(m, p);
        match self.dim {
            1 => a[0] * a[3] - a[1] * a[2],
            _ => {
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                    + a[2] * (a[3] * a[7] - a[4] * a[6])
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.size();
        let mut worst = 0.0f64;
        for slice in &self.entries {
            for a in slice {
                for i in 0..n {
                    for j in 0..i {
                        worst = worst.max((a[i * n + j] - a[j * n + i]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Everything about the lifted interface that the strip solver reuses
/// between Picard sweeps: `H`, `grad H`, `|D|H` and the rational coefficient
/// `c = (|grad H|^2 - |D|H)/(1 + |D|H)` in physical space on every slice.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub(crate) strip: StripGrid,
    pub(crate) h: StripField,
    pub(crate) grad_h: Vec<Vec<Vec<f64>>>,
    pub(crate) dh: Vec<Vec<f64>>,
    pub(crate) c: Vec<Vec<f64>>,
    min_denominator: f64,
}

impl Geometry {
    pub fn new(eta: &SpectralField, strip: &StripGrid) -> Result<Self> {
        Self::from_lift(lift_eta(eta, strip)?)
    }

    pub fn from_lift(h: StripField) -> Result<Self> {
        let strip = h.strip().clone();
        let symbols = SymbolTable::new(strip.torus());
        let d = strip.torus().dim();
        let per_slice: Vec<(Vec<Vec<f64>>, Vec<f64>)> = h
            .slices()
            .par_iter()
            .map(|s| {
                let grad = (0..d).map(|a| physical_c(s.coeffs(), &symbols.deriv[a], &strip)).collect();
                let dh = physical(s.coeffs(), |k| symbols.abs[k], &strip);
                (grad, dh)
            })
            .collect();
        let mut grad_h = Vec::with_capacity(strip.len());
        let mut dh = Vec::with_capacity(strip.len());
        for (g, d) in per_slice {
            grad_h.push(g);
            dh.push(d);
        }
        let mut min_denominator = f64::INFINITY;
        let c = grad_h
            .iter()
            .zip(&dh)
            .map(|(g, dhs): (&Vec<Vec<f64>>, &Vec<f64>)| {
                (0..dhs.len())
                    .map(|p| {
                        let g2: f64 = g.iter().map(|ga| ga[p] * ga[p]).sum();
                        let den = 1.0 + dhs[p];
                        min_denominator = min_denominator.min(den);
                        (g2 - dhs[p]) / den
                    })
                    .collect()
            })
            .collect();
        if min_denominator < DENOMINATOR_GUARD {
            return Err(Error::DenominatorTooSmall { min: min_denominator });
        }
        Ok(Self {
            strip,
            h,
            grad_h,
            dh,
            c,
            min_denominator,
        })
    }

    pub fn strip(&self) -> &StripGrid {
        &self.strip
    }

    pub fn lift(&self) -> &StripField {
        &self.h
    }

    /// `min (1 + |D|H)` over the strip, i.e. `min d_z rho`.
    pub fn min_dz_rho(&self) -> f64 {
        self.min_denominator
    }

    pub fn coefficient_matrix(&self) -> CoefficientMatrix {
        CoefficientMatrix::from_geometry(self)
    }

    /// `(Q_a, Q_b)` of slice `m` from the spectral coefficients of `v` and
    /// `d_z v` there, both truncated by the 2/3 rule.
    pub(crate) fn q_slice(
        &self,
        symbols: &SymbolTable,
        m: usize,
        v: &[Complex64],
        dzv: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let torus = self.strip.torus();
        let d = torus.dim();
        let n = torus.len();
        let grad_v: Vec<Vec<f64>> = (0..d).map(|a| physical_c(v, &symbols.deriv[a], &self.strip)).collect();
        let dz = physical(dzv, |_| 1.0, &self.strip);
        let gh = &self.grad_h[m];
        let dh = &self.dh[m];
        let c = &self.c[m];

        let mut qa: Vec<Complex64> = (0..n)
            .map(|p| {
                let dot: f64 = (0..d).map(|a| gh[a][p] * grad_v[a][p]).sum();
                Complex64::new(dot - c[p] * dz[p], 0.0)
            })
            .collect();
        torus.forward(&mut qa);

        let mut qb = vec![Complex64::new(0.0, 0.0); n];
        for a in 0..d {
            let mut comp: Vec<Complex64> = (0..n)
                .map(|p| Complex64::new(gh[a][p] * dz[p] - dh[p] * grad_v[a][p], 0.0))
                .collect();
            torus.forward(&mut comp);
            for ((q, x), r) in qb.iter_mut().zip(&comp).zip(&symbols.riesz[a]) {
                *q += x * r;
            }
        }
        let zero = Complex64::new(0.0, 0.0);
        for ((a, b), keep) in qa.iter_mut().zip(qb.iter_mut()).zip(torus.keep_mask()) {
            if !keep {
                *a = zero;
                *b = zero;
            }
        }
        (qa, qb)
    }

    /// `(Q_a, Q_b)` on every slice.
    pub(crate) fn q_all(
        &self,
        symbols: &SymbolTable,
        v: &[&[Complex64]],
    ) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let dzv = dz_raw(v, self.strip.step());
        let pairs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..self.strip.len())
            .into_par_iter()
            .map(|m| self.q_slice(symbols, m, v[m], &dzv[m]))
            .collect();
        pairs.into_iter().unzip()
    }
}

/// `Q_a = grad H . grad v - c d_z v` and `Q_b = R(grad H d_z v - |D|H grad v)`
/// for a potential `v` and a lift `H` on the same strip.
pub fn q_forms(v: &StripField, h: &StripField) -> Result<(StripField, StripField)> {
    if v.strip() != h.strip() {
        return Err(Error::GridMismatch);
    }
    let geom = Geometry::from_lift(h.clone())?;
    let symbols = SymbolTable::new(v.strip().torus());
    let raw: Vec<&[Complex64]> = v.slices().iter().map(|s| s.coeffs()).collect();
    let (qa, qb) = geom.q_all(&symbols, &raw);
    Ok((StripField::from_raw(v.strip(), qa), StripField::from_raw(v.strip(), qb)))
}
