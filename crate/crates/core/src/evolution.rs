//! Interface evolution `d_t eta + kappa |D| eta = N(eta)`: Picard iteration of
//! the mild form over a whole time interval, an exponential time stepper, and
//! norm-based stability probes.

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, chemin_lerner_norm, NormReport, TimeExponent};
use crate::dn::DnSolver;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::spectral::{poisson_semigroup, ExpStepWeights, SpectralField};
use crate::two_phase::{checked_split, rhs_prepared};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    OnePhase,
    TwoPhase,
}

/// Which interface equation to evolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Problem {
    pub kind: ProblemKind,
    pub params: PhysicalParams,
    /// Tolerance of the inner `f^-` solve (two-phase only).
    pub closure_tol: f64,
}

impl Problem {
    pub fn one_phase(params: PhysicalParams) -> Self {
        Self {
            kind: ProblemKind::OnePhase,
            params,
            closure_tol: 1e-12,
        }
    }

    pub fn two_phase(params: PhysicalParams, closure_tol: f64) -> Self {
        Self {
            kind: ProblemKind::TwoPhase,
            params,
            closure_tol,
        }
    }

    /// `rho^-/mu^-` for one phase, `(rho^- - rho^+)/(mu^+ + mu^-)` for two.
    pub fn kappa(&self) -> f64 {
        match self.kind {
            ProblemKind::OnePhase => self.params.rho_minus / self.params.mu_minus,
            ProblemKind::TwoPhase => self.params.kappa(),
        }
    }

    /// `N(eta) = d_t eta + kappa |D| eta`.
    pub fn nonlinearity(&self, dn: &DnSolver, eta: &SpectralField) -> Result<SpectralField> {
        let kappa = self.kappa();
        match self.kind {
            ProblemKind::OnePhase => Ok(dn.remainder(eta, eta)?.scale(-kappa)),
            ProblemKind::TwoPhase => {
                let rhs = self.rhs(dn, eta)?;
                Ok((&rhs + &dn.abs_d(eta).scale(kappa)).mean_free())
            }
        }
    }

    /// `d_t eta`.
    pub fn rhs(&self, dn: &DnSolver, eta: &SpectralField) -> Result<SpectralField> {
        match self.kind {
            ProblemKind::OnePhase => {
                let g = dn.apply(eta, eta, crate::dn::Side::Minus)?;
                Ok(g.scale(-self.params.rho_minus / self.params.mu_minus))
            }
            ProblemKind::TwoPhase => {
                if !(self.params.mu_plus > 0.0) {
                    return Err(Error::Config("the two-phase closure needs mu_plus > 0".into()));
                }
                let geom = dn.prepare(eta)?;
                let reflected = dn.prepare(&-eta)?;
                checked_split(rhs_prepared(dn, &geom, &reflected, eta, &self.params, self.closure_tol)?)
            }
        }
    }
}

/// Sampled solution on `[0, T]`.
#[derive(Debug, Clone)]
pub struct SolutionPath {
    pub times: Vec<f64>,
    pub etas: Vec<SpectralField>,
    pub problem: Problem,
    pub report: NormReport,
    pub iterations: usize,
    /// Successive-iterate differences in `X^1_kappa`, relative to
    /// `||eta_0||_{B^1}` (global Picard only).
    pub history: Vec<f64>,
    pub contraction_ratio: f64,
}

impl SolutionPath {
    pub fn terminal(&self) -> &SpectralField {
        self.etas.last().expect("paths are never empty")
    }

    pub fn x1_kappa(&self) -> f64 {
        self.report.final_x1_kappa()
    }
}

/// Settings of the whole-interval Picard iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    /// Number of time intervals `K`; the path has `K + 1` nodes.
    pub k: usize,
    /// Stop when successive iterates differ by at most `tol ||eta_0||_{B^1}`
    /// in `X^1_kappa`.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible `||eta_0||_{B^1_{inf,1}}`.
    pub delta: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            k: 64,
            tol: 1e-10,
            max_iter: 50,
            delta: 0.05,
        }
    }
}

/// `||u||_{L~^inf B^1} + kappa ||u||_{L~^1 B^2}` of a sampled path.
pub fn x1_kappa_norm(times: &[f64], path: &[SpectralField], kappa: f64, dn: &DnSolver) -> Result<f64> {
    let p = dn.partition();
    let a = chemin_lerner_norm(times, path, TimeExponent::Infinity, 1.0, p)?;
    let b = chemin_lerner_norm(times, path, TimeExponent::One, 2.0, p)?;
    Ok(a + kappa * b)
}

/// Time integrator bound to one strip solver and one problem.
#[derive(Debug, Clone)]
pub struct Evolution {
    dn: DnSolver,
    problem: Problem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub ratio: f64,
    pub identical: bool,
    pub data_distance: f64,
    pub path_distance: f64,
}

impl Evolution {
    pub fn new(dn: DnSolver, problem: Problem) -> Result<Self> {
        problem.params.validate()?;
        if problem.kind == ProblemKind::TwoPhase && !(problem.params.mu_plus > 0.0) {
            return Err(Error::Config("the two-phase problem needs mu_plus > 0".into()));
        }
        Ok(Self { dn, problem })
    }

    pub fn dn(&self) -> &DnSolver {
        &self.dn
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn kappa(&self) -> f64 {
        self.problem.kappa()
    }

    fn rates(&self) -> Vec<f64> {
        let k = self.kappa();
        self.dn.torus().abs_xi().iter().map(|x| k * x).collect()
    }

    /// `e^{-kappa t |D|} eta_0`.
    pub fn linear_flow(&self, eta0: &SpectralField, t: f64) -> Result<SpectralField> {
        poisson_semigroup(eta0, t, self.kappa())
    }

    fn nonlinearity_at(&self, etas: &[SpectralField]) -> Result<Vec<SpectralField>> {
        etas.par_iter()
            .enumerate()
            .map(|(i, eta)| {
                self.problem.nonlinearity(&self.dn, eta).map_err(|e| match e {
                    Error::SmallnessViolated { norm, threshold, .. } => Error::SmallnessViolated {
                        norm,
                        threshold,
                        node: Some(i),
                    },
                    other => other,
                })
            })
            .collect()
    }

    /// `e^{-kappa t|D|} eta_0 + int_0^t e^{-kappa(t-s)|D|} N(eta(s)) ds` at every
    /// node of `times`, from the values of `N` on the given path.
    pub fn duhamel_map(&self, times: &[f64], etas: &[SpectralField], eta0: &SpectralField) -> Result<Vec<SpectralField>> {
        let forcing = self.nonlinearity_at(etas)?;
        self.duhamel_with(times, &forcing, eta0)
    }

    /// The mild map with an explicit forcing path.
    pub fn duhamel_with(&self, times: &[f64], forcing: &[SpectralField], eta0: &SpectralField) -> Result<Vec<SpectralField>> {
        if times.len() != forcing.len() || times.is_empty() || times[0] != 0.0 {
            return Err(Error::InvalidInput("time nodes must start at 0 and match the path".into()));
        }
        let rates = self.rates();
        let n = rates.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let mut out = Vec::with_capacity(times.len());
        out.push(eta0.clone());
        let mut weights: Option<(f64, ExpStepWeights)> = None;
        for i in 0..times.len() - 1 {
            let dt = times[i + 1] - times[i];
            if !(dt > 0.0) {
                return Err(Error::InvalidInput("time nodes must increase".into()));
            }
            if weights.as_ref().map_or(true, |(h, _)| *h != dt) {
                weights = Some((dt, ExpStepWeights::new(&rates, dt)));
            }
            let w = &weights.as_ref().expect("just set").1;
            let (a, b) = (forcing[i].coeffs(), forcing[i + 1].coeffs());
            for k in 0..n {
                acc[k] = w.advance(k, acc[k], a[k], b[k]);
            }
            let lin = self.linear_flow(eta0, times[i + 1])?;
            let coeffs = lin.coeffs().iter().zip(&acc).map(|(l, a)| l + a).collect();
            out.push(SpectralField::from_coeffs_unchecked(eta0.grid().clone(), coeffs));
        }
        Ok(out)
    }

    fn uniform_times(t: f64, k: usize) -> Result<Vec<f64>> {
        if !(t > 0.0 && t.is_finite()) || k == 0 {
            return Err(Error::InvalidInput(format!("need T > 0 and K > 0, got T = {t}, K = {k}")));
        }
        Ok((0..=k).map(|i| if i == k { t } else { t * i as f64 / k as f64 }).collect())
    }

    fn path(&self, times: Vec<f64>, etas: Vec<SpectralField>, iterations: usize, history: Vec<f64>, ratio: f64) -> Result<SolutionPath> {
        let report = NormReport::from_path(&times, &etas, self.kappa(), self.dn.partition())?;
        Ok(SolutionPath {
            times,
            etas,
            problem: self.problem,
            report,
            iterations,
            history,
            contraction_ratio: ratio,
        })
    }

    fn check_data(&self, eta0: &SpectralField, delta: f64) -> Result<f64> {
        if eta0.grid() != self.dn.torus() {
            return Err(Error::GridMismatch);
        }
        if !eta0.is_mean_zero() {
            return Err(Error::InvalidInput("initial interface must have zero mean".into()));
        }
        let norm = besov_norm(eta0, 1.0, self.dn.partition());
        if !(norm <= delta * (1.0 + 1e-12)) {
            return Err(Error::DataTooLarge { norm, delta });
        }
        Ok(norm)
    }

    /// Picard iteration of the mild map on the whole path, from the linear flow.
    pub fn solve_global_picard(&self, eta0: &SpectralField, t: f64, cfg: &PicardConfig) -> Result<SolutionPath> {
        if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
            return Err(Error::Config("picard needs tol > 0 and max_iter > 0".into()));
        }
        let size = self.check_data(eta0, cfg.delta)?;
        let times = Self::uniform_times(t, cfg.k)?;
        let kappa = self.kappa();
        let mut path = times
            .iter()
            .map(|&s| self.linear_flow(eta0, s))
            .collect::<Result<Vec<_>>>()?;
        if size == 0.0 {
            return self.path(times, path, 1, vec![0.0], 0.0);
        }
        let floor = 1e3 * f64::EPSILON;
        let mut history: Vec<f64> = Vec::new();
        let mut ratio = 0.0f64;
        for it in 1..=cfg.max_iter {
            let next = self.duhamel_map(&times, &path, eta0)?;
            let diffs: Vec<SpectralField> = next.iter().zip(&path).map(|(a, b)| a - b).collect();
            let diff = x1_kappa_norm(&times, &diffs, kappa, &self.dn)? / size;
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
            path = next;
            debug!("global picard sweep {it}: difference {diff:e}");
            if diff <= cfg.tol {
                return self.path(times, path, it, history, ratio);
            }
        }
        Err(Error::NoConvergence {
            iterations: cfg.max_iter,
            residual: *history.last().expect("at least one sweep"),
        })
    }

    /// One exponential Runge-Kutta step of order two.
    pub fn step_march(&self, eta: &SpectralField, dt: f64) -> Result<SpectralField> {
        let w = ExpStepWeights::new(&self.rates(), dt);
        self.step_with(&w, eta)
    }

    fn step_with(&self, w: &ExpStepWeights, eta: &SpectralField) -> Result<SpectralField> {
        let n0 = self.problem.nonlinearity(&self.dn, eta)?;
        let advance = |b: &SpectralField| -> SpectralField {
            let coeffs = (0..eta.coeffs().len())
                .map(|k| w.advance(k, eta.coeffs()[k], n0.coeffs()[k], b.coeffs()[k]))
                .collect();
            SpectralField::from_coeffs_unchecked(eta.grid().clone(), coeffs)
        };
        let predictor = advance(&n0);
        let n1 = self.problem.nonlinearity(&self.dn, &predictor)?;
        Ok(advance(&n1))
    }

    /// `steps` uniform stepper steps from `eta_0` to time `t`.
    pub fn march(&self, eta0: &SpectralField, t: f64, steps: usize) -> Result<SolutionPath> {
        self.check_data(eta0, f64::INFINITY)?;
        let times = Self::uniform_times(t, steps)?;
        let w = ExpStepWeights::new(&self.rates(), t / steps as f64);
        let mut etas = Vec::with_capacity(steps + 1);
        etas.push(eta0.clone());
        for i in 0..steps {
            let next = self.step_with(&w, &etas[i]).map_err(|e| match e {
                Error::SmallnessViolated { norm, threshold, .. } => Error::SmallnessViolated {
                    norm,
                    threshold,
                    node: Some(i),
                },
                other => other,
            })?;
            etas.push(next);
        }
        self.path(times, etas, steps, Vec::new(), 0.0)
    }

    /// `||eta_a - eta_b||_{X^1_kappa} / ||eta_a(0) - eta_b(0)||_{B^1}` from
    /// two global Picard solves.
    pub fn stability_probe(
        &self,
        eta0_a: &SpectralField,
        eta0_b: &SpectralField,
        t: f64,
        cfg: &PicardConfig,
    ) -> Result<StabilityReport> {
        let data_distance = besov_norm(&(eta0_a - eta0_b), 1.0, self.dn.partition());
        if data_distance == 0.0 {
            return Ok(StabilityReport {
                ratio: 0.0,
                identical: true,
                data_distance,
                path_distance: 0.0,
            });
        }
        let a = self.solve_global_picard(eta0_a, t, cfg)?;
        let b = self.solve_global_picard(eta0_b, t, cfg)?;
        let diffs: Vec<SpectralField> = a.etas.iter().zip(&b.etas).map(|(x, y)| x - y).collect();
        let path_distance = x1_kappa_norm(&a.times, &diffs, self.kappa(), &self.dn)?;
        Ok(StabilityReport {
            ratio: path_distance / data_distance,
            identical: false,
            data_distance,
            path_distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dn::DnConfig;
    use crate::fit::loglog_fit;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    fn one_phase(n: usize) -> Evolution {
        let g = TorusGrid::periodic_1d(n).unwrap();
        let dn = DnSolver::new(&g, DnConfig::default()).unwrap();
        Evolution::new(dn, Problem::one_phase(PhysicalParams::one_phase(1.0, 1.0).unwrap())).unwrap()
    }

    fn data(g: &TorusGrid, a: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| a * (x[0].cos() + 0.5 * (2.0 * x[0] + 0.3).sin())).mean_free()
    }

    #[test]
    fn zero_data_stays_zero() {
        let ev = one_phase(32);
        let zero = SpectralField::zeros(ev.dn().torus());
        let cfg = PicardConfig { k: 8, ..PicardConfig::default() };
        let path = ev.solve_global_picard(&zero, 1.0, &cfg).unwrap();
        assert!(path.etas.iter().all(|e| *e == zero));
        let times: Vec<f64> = (0..5).map(|i| i as f64 * 0.25).collect();
        let mapped = ev.duhamel_map(&times, &vec![zero.clone(); 5], &zero).unwrap();
        assert!(mapped.iter().all(|e| *e == zero));
        assert_eq!(ev.step_march(&zero, 0.1).unwrap(), zero);
    }

    #[test]
    fn linear_part_is_exact() {
        let ev = one_phase(32);
        let g = ev.dn().torus().clone();
        let eta0 = data(&g, 0.01);
        let times: Vec<f64> = (0..9).map(|i| i as f64 * 0.125).collect();
        let zero = vec![SpectralField::zeros(&g); times.len()];
        let out = ev.duhamel_with(&times, &zero, &eta0).unwrap();
        for (t, e) in times.iter().zip(&out) {
            for (k, c) in e.coeffs().iter().enumerate() {
                let want = eta0.coeffs()[k] * (-t * g.abs_xi()[k]).exp();
                assert!((c - want).norm() <= 1e-17);
            }
        }
    }

    #[test]
    fn one_mild_step_is_quadratic() {
        let ev = one_phase(64);
        let g = ev.dn().torus().clone();
        let p = ev.dn().partition().clone();
        let times: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let mut dev = Vec::new();
        let amps = [4e-3, 2e-3, 1e-3, 5e-4];
        for a in amps {
            let eta0 = data(&g, a);
            let path = vec![eta0.clone(); times.len()];
            let out = ev.duhamel_map(&times, &path, &eta0).unwrap();
            let lin: Vec<SpectralField> = times.iter().map(|&t| ev.linear_flow(&eta0, t).unwrap()).collect();
            let diffs: Vec<SpectralField> = out.iter().zip(&lin).map(|(a, b)| a - b).collect();
            dev.push(chemin_lerner_norm(&times, &diffs, TimeExponent::Infinity, 1.0, &p).unwrap());
        }
        let fit = loglog_fit(&amps, &dev).unwrap();
        assert!((1.9..=2.1).contains(&fit.slope), "{fit:?}");
    }

    #[test]
    fn global_picard_contracts() {
        let ev = one_phase(64);
        let g = ev.dn().torus().clone();
        let eta0 = data(&g, 0.02);
        let size = besov_norm(&eta0, 1.0, ev.dn().partition());
        let cfg = PicardConfig { k: 32, ..PicardConfig::default() };
        let path = ev.solve_global_picard(&eta0, 1.0, &cfg).unwrap();
        assert!(path.contraction_ratio <= 0.5, "{:?}", path.history);
        assert!(path.x1_kappa() <= 2.2 * size);
        assert!(path.etas.iter().all(|e| e.is_mean_zero()));
    }

    #[test]
    fn data_too_large() {
        let ev = one_phase(32);
        let eta0 = data(ev.dn().torus(), 0.2);
        assert!(matches!(
            ev.solve_global_picard(&eta0, 1.0, &PicardConfig::default()),
            Err(Error::DataTooLarge { .. })
        ));
    }

    #[test]
    fn stepper_is_second_order() {
        let ev = one_phase(32);
        let g = ev.dn().torus().clone();
        let eta0 = data(&g, 0.04);
        let reference = ev.march(&eta0, 1.0, 256).unwrap();
        let steps = [8, 16, 32, 64];
        let errs: Vec<f64> = steps
            .iter()
            .map(|&s| (ev.march(&eta0, 1.0, s).unwrap().terminal() - reference.terminal()).sup_norm())
            .collect();
        let dts: Vec<f64> = steps.iter().map(|&s| 1.0 / s as f64).collect();
        let fit = loglog_fit(&dts, &errs).unwrap();
        assert!((1.8..=2.2).contains(&fit.slope), "{fit:?} {errs:?}");
    }

    #[test]
    fn linear_mode_decays_exactly_in_one_step() {
        let ev = one_phase(32);
        let g = ev.dn().torus().clone();
        let eta0 = SpectralField::from_fn(&g, |x| 1e-9 * (3.0 * x[0]).cos());
        let next = ev.step_march(&eta0, 0.2).unwrap();
        let want = eta0.scale((-0.6f64).exp());
        assert!(next.max_coeff_distance(&want) <= 1e-15 * 1e-9 + 1e-9 * 1e-9);
    }

    #[test]
    fn picard_and_stepper_agree() {
        let ev = one_phase(64);
        let g = ev.dn().torus().clone();
        let eta0 = data(&g, 0.02);
        let cfg = PicardConfig { k: 64, ..PicardConfig::default() };
        let a = ev.solve_global_picard(&eta0, 1.0, &cfg).unwrap();
        let b = ev.march(&eta0, 1.0, 64).unwrap();
        let gap = (a.terminal() - b.terminal()).sup_norm();
        assert!(gap <= 1e-6 * eta0.sup_norm(), "{gap:e}");
    }

    #[test]
    fn translation_equivariance() {
        let ev = one_phase(64);
        let g = ev.dn().torus().clone();
        let eta0 = data(&g, 0.01);
        let shift = [0.737];
        let a = ev.march(&eta0.translate(&shift), 0.5, 8).unwrap();
        let b = ev.march(&eta0, 0.5, 8).unwrap();
        assert!(a.terminal().max_coeff_distance(&b.terminal().translate(&shift)) <= 1e-12);
    }

    #[test]
    fn mode_magnitudes_do_not_grow() {
        let ev = one_phase(64);
        let g = ev.dn().torus().clone();
        let eta0 = SpectralField::from_modes(&g, &[(vec![1], 1e-4, 0.0), (vec![2], 5e-5, 0.3 - PI / 2.0)]).unwrap();
        let size = besov_norm(&eta0, 1.0, ev.dn().partition());
        let end = ev.march(&eta0, 1.0, 16).unwrap();
        // modes absent from the data are measured against the largest one
        let top = eta0.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
        for (c0, c1) in eta0.coeffs().iter().zip(end.terminal().coeffs()) {
            let bound = if c0.norm() > 0.0 { c0.norm() * (1.0 + 10.0 * size) } else { 10.0 * size * top };
            assert!(c1.norm() <= bound, "{} > {bound}", c1.norm());
        }
    }

    #[test]
    fn two_phase_matches_linear_rate() {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let dn = DnSolver::new(&g, DnConfig { z_nodes: 129, ..DnConfig::default() }).unwrap();
        let params = PhysicalParams::new(0.5, 1.0, 1.0, 2.0).unwrap();
        let ev = Evolution::new(dn, Problem::two_phase(params, 1e-12)).unwrap();
        let eta0 = SpectralField::from_fn(&g, |x| 1e-6 * ((2.0 * x[0]).cos() + (5.0 * x[0]).sin())).mean_free();
        let end = ev.march(&eta0, 0.5, 4).unwrap();
        for k in [2i64, 5] {
            let c0 = eta0.coeff(&[k]).unwrap().norm();
            let c1 = end.terminal().coeff(&[k]).unwrap().norm();
            let rate = -(c1 / c0).ln() / 0.5;
            assert!((rate / (params.kappa() * k as f64) - 1.0).abs() <= 1e-2, "k={k} rate {rate}");
        }
    }
}
