use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, AbsD, Partial, Poisson, SpectralField, TorusGrid};

/// Second-order finite-difference solution of `div(A grad v) = 0` on
/// `[0, L) x [-Z, 0]`, stored row by row from `z = 0` down to `z = -Z`.
#[derive(Debug, Clone, Serialize)]
pub struct FdSolution {
    pub nx: usize,
    pub nz: usize,
    pub depth: f64,
    pub period: f64,
    pub values: Vec<f64>,
    pub iterations: usize,
    /// `||A v - b|| / ||b||` of the returned solution.
    pub residual: f64,
}

impl FdSolution {
    pub fn hx(&self) -> f64 {
        self.period / self.nx as f64
    }

    pub fn hz(&self) -> f64 {
        self.depth / self.nz as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.nx..(j + 1) * self.nx]
    }
}

/// Coefficients of the flattened operator sampled where the stencil needs
/// them.
#[derive(Debug, Clone)]
pub(crate) struct FdOperator {
    nx: usize,
    nz: usize,
    hx: f64,
    hz: f64,
    /// `d_z rho` on x-edges `(i + 1/2, j)`.
    a11: Vec<f64>,
    /// `(1 + rho_x^2)/d_z rho` on z-edges `(i, j + 1/2)`.
    a22: Vec<f64>,
    /// `-rho_x` at cell centres `(i + 1/2, j + 1/2)`.
    a12: Vec<f64>,
}

/// `(rho_x, d_z rho)` at depth `z`, sampled at `x_i + shift`.
fn lift_samples(eta: &SpectralField, z: f64, shift: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = apply_multiplier(eta, &Poisson(-z))?;
    let h = if shift != 0.0 { h.translate(&[-shift]) } else { h };
    let hx = apply_multiplier(&h, &Partial(0))?.to_physical();
    let dz = apply_multiplier(&h, &AbsD)?.to_physical().into_iter().map(|v| 1.0 + v).collect();
    Ok((hx, dz))
}

impl FdOperator {
    pub(crate) fn new(eta: &SpectralField, nx: usize, nz: usize, depth: f64) -> Result<Self> {
        let period = eta.grid().period();
        let (hx, hz) = (period / nx as f64, depth / nz as f64);
        let mut a11 = vec![0.0; (nz + 1) * nx];
        let mut a22 = vec![0.0; nz * nx];
        let mut a12 = vec![0.0; nz * nx];
        for j in 0..=nz {
            let z = -(j as f64) * hz;
            let (rx, dz) = lift_samples(eta, z, 0.5 * hx)?;
            a11[j * nx..(j + 1) * nx].copy_from_slice(&dz);
            for i in 0..nx {
                check_spd(dz[i], rx[i])?;
            }
            if j < nz {
                let zm = -(j as f64 + 0.5) * hz;
                let (rx, dz) = lift_samples(eta, zm, 0.0)?;
                for i in 0..nx {
                    check_spd(dz[i], rx[i])?;
                    a22[j * nx + i] = (1.0 + rx[i] * rx[i]) / dz[i];
                }
                let (rx, dz) = lift_samples(eta, zm, 0.5 * hx)?;
                for i in 0..nx {
                    check_spd(dz[i], rx[i])?;
                    a12[j * nx + i] = -rx[i];
                }
            }
        }
        Ok(Self {
            nx,
            nz,
            hx,
            hz,
            a11,
            a22,
            a12,
        })
    }

    /// Gradient of the discrete energy
    /// `1/2 sum a11 (dx v)^2 + 1/2 sum a22 (dz v)^2 + sum a12 gx gz` over all
    /// nodes, boundary rows included.
    pub(crate) fn energy_gradient(&self, v: &[f64]) -> Vec<f64> {
        let (nx, nz, hx, hz) = (self.nx, self.nz, self.hx, self.hz);
        let mut out = vec![0.0; v.len()];
        let rx = hz / hx;
        for j in 1..nz {
            for i in 0..nx {
                let ip = (i + 1) % nx;
                let (p, q) = (j * nx + i, j * nx + ip);
                let t = self.a11[p] * rx * (v[q] - v[p]);
                out[q] += t;
                out[p] -= t;
            }
        }
        let rz = hx / hz;
        for j in 0..nz {
            for i in 0..nx {
                let (p, q) = (j * nx + i, (j + 1) * nx + i);
                let t = self.a22[p] * rz * (v[p] - v[q]);
                out[p] += t;
                out[q] -= t;
            }
        }
        for j in 0..nz {
            for i in 0..nx {
                let ip = (i + 1) % nx;
                let (tl, tr) = (j * nx + i, j * nx + ip);
                let (bl, br) = ((j + 1) * nx + i, (j + 1) * nx + ip);
                // the hx hz cell area cancels against the 1/(2hx) 1/(2hz) differences
                let gx = v[tr] + v[br] - v[tl] - v[bl];
                let gz = v[tl] + v[tr] - v[bl] - v[br];
                let a = 0.25 * self.a12[j * nx + i];
                let (dgx, dgz) = (a * gz, a * gx);
                out[tr] += dgx + dgz;
                out[br] += dgx - dgz;
                out[tl] += -dgx + dgz;
                out[bl] += -dgx - dgz;
            }
        }
        out
    }

    fn interior(&self) -> std::ops::Range<usize> {
        self.nx..self.nz * self.nx
    }

    /// System matrix applied to interior unknowns.
    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; (self.nz + 1) * self.nx];
        full[self.interior()].copy_from_slice(x);
        self.energy_gradient(&full)[self.interior()].to_vec()
    }

    pub(crate) fn unknowns(&self) -> usize {
        (self.nz - 1) * self.nx
    }
}

fn check_spd(dz_rho: f64, rho_x: f64) -> Result<()> {
    if !(dz_rho >= 0.5) {
        return Err(Error::NotSpd(format!("d_z rho = {dz_rho:.4} < 1/2")));
    }
    if !rho_x.is_finite() {
        return Err(Error::NotSpd("non-finite interface slope".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from zero; stops at `||r|| <= tol ||b||`.
pub(crate) fn conjugate_gradient(op: &FdOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let nb = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        let ap = op.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd(format!("non-positive curvature {pap:e} in conjugate gradients")));
        }
        let alpha = rr / pap;
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * nb {
            return Ok((x, it));
        }
        let beta = rr_new / rr;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / nb,
    })
}

fn fd_grid(eta: &SpectralField, nx: usize) -> Result<TorusGrid> {
    if eta.grid().dim() != 1 {
        return Err(Error::UnsupportedDimension(eta.grid().dim()));
    }
    TorusGrid::new(1, nx, eta.grid().period())
}

fn check_sizes(nx: usize, nz: usize, depth: f64) -> Result<()> {
    if nx < 32 || nz < 32 {
        return Err(Error::InvalidGrid(format!("finite-difference grid needs nx, nz >= 32, got {nx} x {nz}")));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::InvalidGrid(format!("depth must be positive, got {depth}")));
    }
    Ok(())
}

/// Finite-difference potential with `v = f` on top and the flat extension
/// `e^{-Z|D|} f` at the bottom.
pub fn fd_harmonic_extension(eta: &SpectralField, f: &SpectralField, nx: usize, nz: usize, depth: f64) -> Result<FdSolution> {
    eta.same_grid(f)?;
    check_sizes(nx, nz, depth)?;
    let grid = fd_grid(eta, nx)?;
    let eta_fd = eta.resample(&grid)?;
    let f_fd = f.resample(&grid)?;
    let op = FdOperator::new(&eta_fd, nx, nz, depth)?;

    let mut boundary = vec![0.0; (nz + 1) * nx];
    boundary[..nx].copy_from_slice(&f_fd.to_physical());
    let bottom = apply_multiplier(&f_fd, &Poisson(depth))?.to_physical();
    boundary[nz * nx..].copy_from_slice(&bottom);
    let b: Vec<f64> = op.energy_gradient(&boundary)[op.interior()].iter().map(|v| -v).collect();
    let (x, iterations) = conjugate_gradient(&op, &b, 1e-10, 20 * op.unknowns())?;

    let ax = op.apply(&x);
    let res: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let residual = res / dot(&b, &b).sqrt().max(f64::MIN_POSITIVE);
    let mut values = boundary;
    values[op.interior()].copy_from_slice(&x);
    Ok(FdSolution {
        nx,
        nz,
        depth,
        period: grid.period(),
        values,
        iterations,
        residual,
    })
}

/// `((1 + rho_x^2)/d_z rho) d_z v - rho_x v_x` at `z = 0` from the
/// finite-difference potential, on an `nx`-point grid.
pub fn fd_dn(eta: &SpectralField, f: &SpectralField, nx: usize, nz: usize, depth: f64) -> Result<SpectralField> {
    let sol = fd_harmonic_extension(eta, f, nx, nz, depth)?;
    let grid = fd_grid(eta, nx)?;
    let eta_fd = eta.resample(&grid)?;
    let (rx, dz_rho) = lift_samples(&eta_fd, 0.0, 0.0)?;
    let (hx, hz) = (sol.hx(), sol.hz());
    let (v0, v1, v2) = (sol.row(0), sol.row(1), sol.row(2));
    let out: Vec<f64> = (0..nx)
        .map(|i| {
            let dzv = (3.0 * v0[i] - 4.0 * v1[i] + v2[i]) / (2.0 * hz);
            let dxv = (v0[(i + 1) % nx] - v0[(i + nx - 1) % nx]) / (2.0 * hx);
            (1.0 + rx[i] * rx[i]) / dz_rho[i] * dzv - rx[i] * dxv
        })
        .collect();
    Ok(SpectralField::from_physical(&grid, &out)?.mean_free())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::loglog_fit;

    fn cosine(g: &TorusGrid, a: f64, k: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| a * (k * x[0]).cos()).mean_free()
    }

    fn flat_error(n: usize, depth: f64) -> f64 {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let f = cosine(&g, 1.0, 2.0);
        let sol = fd_harmonic_extension(&SpectralField::zeros(&g), &f, n, n, depth).unwrap();
        let mut err = 0.0f64;
        for j in 0..=n {
            let z = -(j as f64) * sol.hz();
            for i in 0..n {
                let x = i as f64 * sol.hx();
                err = err.max((sol.at(i, j) - (2.0 * z).exp() * (2.0 * x).cos()).abs());
            }
        }
        err
    }

    #[test]
    fn flat_solution_and_refinement() {
        let ns = [32, 64, 128];
        let errs: Vec<f64> = ns.iter().map(|&n| flat_error(n, 4.0)).collect();
        assert!(errs[0] < 2e-2, "{errs:?}");
        let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let fit = loglog_fit(&hs, &errs).unwrap();
        assert!((1.8..=2.2).contains(&fit.slope), "{fit:?}");
    }

    #[test]
    fn residual_contract() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let eta = cosine(&g, 0.05, 1.0);
        let sol = fd_harmonic_extension(&eta, &cosine(&g, 1.0, 2.0), 64, 64, 5.0).unwrap();
        assert!(sol.residual <= 1e-9, "{}", sol.residual);
    }

    #[test]
    fn system_is_symmetric_positive_definite() {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let eta = &cosine(&g, 0.06, 1.0) + &SpectralField::from_fn(&g, |x| 0.02 * (3.0 * x[0]).sin());
        let op = FdOperator::new(&eta, 32, 32, 4.0).unwrap();
        let n = op.unknowns();
        let mut a = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = op.apply(&e);
            e[c] = 0.0;
            for r in 0..n {
                a[r * n + c] = col[r];
            }
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..n {
            for c in 0..r {
                assert!((a[r * n + c] - a[c * n + r]).abs() <= 1e-13 * scale);
            }
        }
        // Cholesky succeeds iff positive definite
        let mut l = a.clone();
        for k in 0..n {
            let d = l[k * n + k] - (0..k).map(|m| l[k * n + m] * l[k * n + m]).sum::<f64>();
            assert!(d > 0.0, "pivot {k} = {d}");
            let d = d.sqrt();
            l[k * n + k] = d;
            for r in k + 1..n {
                let s = l[r * n + k] - (0..k).map(|m| l[r * n + m] * l[k * n + m]).sum::<f64>();
                l[r * n + k] = s / d;
            }
        }
    }

    #[test]
    fn flat_dn_is_abs_d() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let f = &cosine(&g, 1.0, 2.0) + &SpectralField::from_fn(&g, |x| 0.3 * x[0].sin());
        let want = apply_multiplier(&f, &AbsD).unwrap();
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| (&fd_dn(&SpectralField::zeros(&g), &f, n, n, 5.0).unwrap().resample(&g).unwrap() - &want).sup_norm())
            .collect();
        assert!(errs[0] < 3e-2 && errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn discrete_dn_is_nearly_symmetric() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let eta = cosine(&g, 0.05, 1.0);
        let f = cosine(&g, 1.0, 2.0);
        let h = &SpectralField::from_fn(&g, |x| (x[0] + 0.3).sin()) + &cosine(&g, 0.5, 2.0);
        let gaps: Vec<f64> = [64, 128]
            .iter()
            .map(|&n| {
                let gf = fd_dn(&eta, &f, n, n, 5.0).unwrap().resample(&g).unwrap();
                let gh = fd_dn(&eta, &h, n, n, 5.0).unwrap().resample(&g).unwrap();
                (gf.l2_inner(&h) - f.l2_inner(&gh)).abs()
            })
            .collect();
        assert!(gaps[1] < gaps[0] / 2.5 && gaps[0] < 1e-2, "{gaps:?}");
    }

    #[test]
    fn rejects_bad_input() {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let f = cosine(&g, 1.0, 1.0);
        assert!(matches!(fd_harmonic_extension(&f, &f, 16, 32, 4.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(fd_harmonic_extension(&cosine(&g, 2.0, 1.0), &f, 32, 32, 4.0), Err(Error::NotSpd(_))));
        let g2 = TorusGrid::new(2, 8, 6.0).unwrap();
        let z = SpectralField::zeros(&g2);
        assert!(matches!(fd_harmonic_extension(&z, &z, 32, 32, 4.0), Err(Error::UnsupportedDimension(2))));
    }
}
