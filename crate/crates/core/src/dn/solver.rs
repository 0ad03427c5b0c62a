use log::debug;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::Geometry;
use super::strip::{dz_raw, StripField, StripGrid};
use crate::besov::{abs_d_b0, DyadicPartition};
use crate::error::{Error, Result};
use crate::spectral::{ExpStepWeights, SpectralField, SymbolTable, TorusGrid};

/// Tunables of the strip solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnConfig {
    /// Number of z-nodes `M`.
    pub z_nodes: usize,
    /// Strip depth; `None` selects `ln(1e12)/k_min`.
    pub depth: Option<f64>,
    /// Picard tolerance on the strip sup-norm of successive iterates,
    /// relative to `sup |f|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallness threshold on `|| |D| eta ||_{B^0_{inf,1}}`.
    pub c_star: f64,
}

impl Default for DnConfig {
    fn default() -> Self {
        Self {
            z_nodes: 257,
            depth: None,
            tol: 1e-12,
            max_iter: 60,
            c_star: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

/// Converged (or last) state of the Picard iteration for the flattened
/// potential.
#[derive(Debug, Clone)]
pub struct FlattenedPotential {
    pub v: StripField,
    pub w: StripField,
    pub h: StripField,
    pub q_a: StripField,
    pub q_b: StripField,
    pub converged: bool,
    pub iterations: usize,
    /// Last successive-difference sup-norm, relative to `sup |f|`.
    pub residual: f64,
    /// Successive-difference history (relative).
    pub history: Vec<f64>,
    /// Largest ratio of successive differences above the round-off floor.
    pub contraction_ratio: f64,
}

impl FlattenedPotential {
    /// `R^-(eta) f = w(z = 0)`.
    pub fn remainder(&self) -> SpectralField {
        self.w.top().mean_free()
    }

    /// `(d_z v - Q_a)` at `z = 0`, the Neumann data read off the potential
    /// itself. Agrees with `|D| f + w(0)` up to the z-discretization error.
    pub fn direct_dn(&self) -> SpectralField {
        let top: Vec<&[Complex64]> = self.v.slices()[..5].iter().map(|s| s.coeffs()).collect();
        let dz = dz_raw(&top, self.v.strip().step());
        let coeffs = dz[0].iter().zip(self.q_a.top().coeffs()).map(|(a, b)| a - b).collect();
        SpectralField::from_coeffs_unchecked(self.v.strip().torus().clone(), coeffs).mean_free()
    }
}

/// Output of one application of the fixed-point map.
pub(crate) struct Sweep {
    pub v: Vec<Vec<Complex64>>,
    pub w: Vec<Vec<Complex64>>,
    pub qa: Vec<Vec<Complex64>>,
    pub qb: Vec<Vec<Complex64>>,
}

/// Dirichlet-Neumann solver on a fixed strip.
#[derive(Debug, Clone)]
pub struct DnSolver {
    strip: StripGrid,
    partition: DyadicPartition,
    config: DnConfig,
    symbols: SymbolTable,
    steps: ExpStepWeights,
    /// `e^{z_m |k|}` per node and mode.
    extension: Vec<Vec<f64>>,
}

impl DnSolver {
    pub fn new(torus: &TorusGrid, config: DnConfig) -> Result<Self> {
        if !(config.tol > 0.0) || config.max_iter == 0 {
            return Err(Error::Config("dn solver needs tol > 0 and max_iter > 0".into()));
        }
        if !(config.c_star > 0.0 && config.c_star < 1.0) {
            return Err(Error::Config(format!("c_star must lie in (0, 1), got {}", config.c_star)));
        }
        let strip = match config.depth {
            Some(z) => StripGrid::new(torus, z, config.z_nodes)?,
            None => StripGrid::with_default_depth(torus, config.z_nodes)?,
        };
        let symbols = SymbolTable::new(torus);
        let steps = ExpStepWeights::new(&symbols.abs, strip.step());
        let extension = strip
            .nodes()
            .iter()
            .map(|&z| symbols.abs.iter().map(|&k| (z * k).exp()).collect())
            .collect();
        Ok(Self {
            partition: DyadicPartition::new(torus),
            strip,
            config,
            symbols,
            steps,
            extension,
        })
    }

    pub fn strip(&self) -> &StripGrid {
        &self.strip
    }

    pub fn torus(&self) -> &TorusGrid {
        self.strip.torus()
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    pub fn config(&self) -> &DnConfig {
        &self.config
    }

    /// `|| |D| eta ||_{B^0_{inf,1}}`.
    pub fn smallness(&self, eta: &SpectralField) -> f64 {
        abs_d_b0(eta, &self.partition)
    }

    /// Check smallness and build the lifted geometry of `eta`.
    pub fn prepare(&self, eta: &SpectralField) -> Result<Geometry> {
        if eta.grid() != self.torus() {
            return Err(Error::GridMismatch);
        }
        let norm = self.smallness(eta);
        if !(norm <= self.config.c_star * (1.0 + 1e-12)) {
            return Err(Error::SmallnessViolated {
                norm,
                threshold: self.config.c_star,
                node: None,
            });
        }
        Geometry::new(eta, &self.strip)
    }

    fn flat_extension(&self, f: &SpectralField) -> Vec<Vec<Complex64>> {
        self.extension
            .iter()
            .map(|e| f.coeffs().iter().zip(e).map(|(c, e)| c * e).collect())
            .collect()
    }

    /// One application of the fixed-point map to `v`.
    pub(crate) fn sweep(&self, geom: &Geometry, ext: &[Vec<Complex64>], v: &[&[Complex64]]) -> Sweep {
        let m = self.strip.len();
        let n = self.torus().len();
        let (qa, qb) = geom.q_all(&self.symbols, v);
        let g: Vec<Vec<Complex64>> = qa
            .iter()
            .zip(&qb)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(&self.symbols.abs)
                    .map(|((a, b), k)| (b - a) * k)
                    .collect()
            })
            .collect();

        // w solves (d_z + |D|) w = g with w = 0 at the bottom, integrated upward
        let zero = Complex64::new(0.0, 0.0);
        let mut w = vec![vec![zero; n]; m];
        for i in (0..m - 1).rev() {
            for k in 0..n {
                w[i][k] = self.steps.advance(k, w[i + 1][k], g[i + 1][k], g[i][k]);
            }
        }
        // v = e^{z|D|} f - int_z^0 e^{-(z'-z)|D|} (w + Q_a)(z') dz', integrated downward
        let mut u = vec![zero; n];
        let mut out = Vec::with_capacity(m);
        out.push(ext[0].clone());
        for i in 0..m - 1 {
            let mut slice = Vec::with_capacity(n);
            for k in 0..n {
                let fa = w[i][k] + qa[i][k];
                let fb = w[i + 1][k] + qa[i + 1][k];
                u[k] = self.steps.advance(k, u[k], fa, fb);
                slice.push(ext[i + 1][k] - u[k]);
            }
            out.push(slice);
        }
        Sweep { v: out, w, qa, qb }
    }

    /// `T[v]` for a given state, interface and Dirichlet data.
    pub fn apply_t(&self, v: &StripField, eta: &SpectralField, f: &SpectralField) -> Result<StripField> {
        if v.strip() != &self.strip || f.grid() != self.torus() {
            return Err(Error::GridMismatch);
        }
        let geom = Geometry::new(eta, &self.strip)?;
        let ext = self.flat_extension(f);
        let raw: Vec<&[Complex64]> = v.slices().iter().map(|s| s.coeffs()).collect();
        Ok(StripField::from_raw(&self.strip, self.sweep(&geom, &ext, &raw).v))
    }

    /// Picard iteration for the flattened potential from `e^{z|D|} f`.
    pub fn solve_potential(&self, eta: &SpectralField, f: &SpectralField) -> Result<FlattenedPotential> {
        let geom = self.prepare(eta)?;
        self.solve_with(&geom, f)
    }

    pub fn solve_with(&self, geom: &Geometry, f: &SpectralField) -> Result<FlattenedPotential> {
        if f.grid() != self.torus() {
            return Err(Error::GridMismatch);
        }
        let ext = self.flat_extension(f);
        let scale = f.sup_norm().max(f64::MIN_POSITIVE);
        let floor = 1e3 * f64::EPSILON;
        let mut v = ext.clone();
        let mut history = Vec::new();
        let mut ratio = 0.0f64;
        let mut converged = false;
        let mut last = None;
        for it in 1..=self.config.max_iter {
            let raw: Vec<&[Complex64]> = v.iter().map(|s| s.as_slice()).collect();
            let sweep = self.sweep(geom, &ext, &raw);
            let diff = self.sup_distance(&sweep.v, &v) / scale;
            if !diff.is_finite() || diff > 1e6 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: diff,
                });
            }
            if let Some(&prev) = history.last() {
                if prev > floor && diff > floor {
                    ratio = ratio.max(diff / prev);
                }
            }
            history.push(diff);
            v = sweep.v.clone();
            last = Some(sweep);
            if diff <= self.config.tol {
                converged = true;
                break;
            }
        }
        let sweep = last.expect("at least one sweep");
        let residual = *history.last().expect("at least one sweep");
        if !converged {
            let n = history.len();
            let diverging = n >= 2 && history[n - 1] >= history[n - 2];
            if diverging {
                return Err(Error::NoConvergence {
                    iterations: n,
                    residual,
                });
            }
        }
        debug!(
            "potential: {} sweeps, residual {residual:e}, ratio {ratio:.3}",
            history.len()
        );
        Ok(FlattenedPotential {
            v: StripField::from_raw(&self.strip, v),
            w: StripField::from_raw(&self.strip, sweep.w),
            h: geom.lift().clone(),
            q_a: StripField::from_raw(&self.strip, sweep.qa),
            q_b: StripField::from_raw(&self.strip, sweep.qb),
            converged,
            iterations: history.len(),
            residual,
            history,
            contraction_ratio: ratio,
        })
    }

    fn sup_distance(&self, a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
        let torus = self.torus();
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let mut buf: Vec<Complex64> = x.iter().zip(y).map(|(x, y)| x - y).collect();
                torus.inverse(&mut buf);
                buf.iter().fold(0.0f64, |m, c| m.max(c.re.abs()))
            })
            .fold(0.0, f64::max)
    }

    /// `R^-(eta) f`, requiring a converged potential.
    pub fn remainder_with(&self, geom: &Geometry, f: &SpectralField) -> Result<SpectralField> {
        let pot = self.solve_with(geom, f)?;
        if !pot.converged {
            return Err(Error::NoConvergence {
                iterations: pot.iterations,
                residual: pot.residual,
            });
        }
        let r = pot.remainder();
        let alt = self.remainder_integral(&pot);
        let gap = r.max_coeff_distance(&alt);
        let size = r.coeffs().iter().chain(alt.coeffs()).fold(0.0f64, |m, c| m.max(c.norm()));
        if gap > 1e-10 * size + 1e-14 * f.sup_norm() {
            return Err(Error::CrossCheckFailed(format!(
                "remainder recursion and integral differ by {gap:e}"
            )));
        }
        Ok(r)
    }

    /// `int_{-Z}^0 e^{t|D|} |D| (Q_b - Q_a) dt` with the same per-interval
    /// exponential weights, summed directly instead of recursively.
    pub fn remainder_integral(&self, pot: &FlattenedPotential) -> SpectralField {
        let m = self.strip.len();
        let n = self.torus().len();
        let h = self.strip.step();
        let g: Vec<Vec<Complex64>> = (0..m)
            .map(|i| {
                pot.q_a
                    .slice(i)
                    .coeffs()
                    .iter()
                    .zip(pot.q_b.slice(i).coeffs())
                    .zip(&self.symbols.abs)
                    .map(|((a, b), k)| (b - a) * k)
                    .collect()
            })
            .collect();
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let r = self.symbols.abs[k];
                (0..m - 1)
                    .map(|i| {
                        let piece = g[i + 1][k] * self.steps.wa[k] + g[i][k] * self.steps.wb[k];
                        piece * (-r * i as f64 * h).exp()
                    })
                    .sum()
            })
            .collect();
        SpectralField::from_coeffs_unchecked(self.torus().clone(), coeffs).mean_free()
    }

    pub fn remainder(&self, eta: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
        let geom = self.prepare(eta)?;
        self.remainder_with(&geom, f)
    }

    /// `G^-(eta) f = |D| f + R^-(eta) f` or `G^+(eta) f = -G^-(-eta) f`.
    pub fn apply(&self, eta: &SpectralField, f: &SpectralField, side: Side) -> Result<SpectralField> {
        match side {
            Side::Minus => {
                let r = self.remainder(eta, f)?;
                Ok(&self.abs_d(f) + &r)
            }
            Side::Plus => Ok(-&self.apply(&-eta, f, Side::Minus)?),
        }
    }

    /// `R^+(eta) g = G^+(eta) g + |D| g = -R^-(-eta) g`.
    pub fn remainder_plus(&self, eta: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        Ok(-&self.remainder(&-eta, g)?)
    }

    /// `R^+(eta) g` from the prepared geometry of `-eta`.
    pub fn remainder_plus_with(&self, reflected: &Geometry, g: &SpectralField) -> Result<SpectralField> {
        Ok(-&self.remainder_with(reflected, g)?)
    }

    pub fn abs_d(&self, f: &SpectralField) -> SpectralField {
        let coeffs = f.coeffs().iter().zip(&self.symbols.abs).map(|(c, k)| c * k).collect();
        SpectralField::from_coeffs_unchecked(self.torus().clone(), coeffs)
    }
}

/// `R^-(eta) f` with a solver built from `config`.
pub fn dn_remainder(eta: &SpectralField, f: &SpectralField, config: DnConfig) -> Result<SpectralField> {
    DnSolver::new(eta.grid(), config)?.remainder(eta, f)
}

/// `G^-(eta) f` or `G^+(eta) f` with a solver built from `config`.
pub fn dn_apply(eta: &SpectralField, f: &SpectralField, side: Side, config: DnConfig) -> Result<SpectralField> {
    DnSolver::new(eta.grid(), config)?.apply(eta, f, side)
}

/// Flattened potential of `f` under `eta` with a solver built from `config`.
pub fn solve_potential(eta: &SpectralField, f: &SpectralField, config: DnConfig) -> Result<FlattenedPotential> {
    DnSolver::new(eta.grid(), config)?.solve_potential(eta, f)
}
