//! Closure of the two-phase problem: the lower trace `f^-` as the fixed point
//! of `K(eta)`, the upper trace `f^+`, and the interface velocity.

use log::debug;
use serde::Serialize;

use crate::besov::besov_norm;
use crate::dn::{DnSolver, Geometry, Side};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::spectral::{apply_multiplier, InvAbsD, SpectralField};

/// Traces of the two pressures (shifted by `rho eta`) on a given interface.
#[derive(Debug, Clone)]
pub struct TwoPhaseState {
    pub eta: SpectralField,
    pub f_minus: SpectralField,
    pub f_plus: SpectralField,
    pub params: PhysicalParams,
    pub kappa_eff: f64,
    pub iterations: usize,
    /// Residual of the `f^-` equation, `sup |D|(f - K f)` relative to
    /// `sup |D| f`.
    pub residual: f64,
    pub contraction_ratio: f64,
    /// `|| |D| f^- ||_{B^0} / (jump || |D| eta ||_{B^0})`.
    pub bound_ratio: f64,
    pub(crate) r_plus_f: SpectralField,
    pub(crate) r_minus_f: SpectralField,
    pub(crate) r_plus_eta: SpectralField,
}

/// Both evaluations of `d_t eta`.
#[derive(Debug, Clone)]
pub struct RhsForms {
    /// `-kappa |D| eta - kappa (R^+ + R^-) f^- / jump + kappa R^+ eta`.
    pub split: SpectralField,
    /// `-(1/mu^-) G^-(eta) f^-`.
    pub direct: SpectralField,
    pub mismatch: f64,
    pub allowed: f64,
    pub state: TwoPhaseState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxCheck {
    /// `sup |(1/mu^+) G^+ f^+ - (1/mu^-) G^- f^-|`.
    pub mismatch: f64,
    /// `sup |(1/mu^-) G^- f^-|`.
    pub scale: f64,
}

fn inv_abs_d(u: &SpectralField) -> Result<SpectralField> {
    apply_multiplier(&u.mean_free(), &InvAbsD)
}

fn check_params(params: &PhysicalParams) -> Result<()> {
    params.validate()?;
    if !(params.mu_plus > 0.0) {
        return Err(Error::Config("the two-phase closure needs mu_plus > 0".into()));
    }
    Ok(())
}

/// Picard iteration for `f^-` started from the forcing term of `K(eta)`.
pub fn solve_f_minus(
    dn: &DnSolver,
    eta: &SpectralField,
    params: &PhysicalParams,
    tol: f64,
    max_iter: usize,
) -> Result<TwoPhaseState> {
    check_params(params)?;
    let geom = dn.prepare(eta)?;
    let reflected = dn.prepare(&-eta)?;
    solve_prepared(dn, &geom, &reflected, eta, params, tol, max_iter)
}

pub(crate) fn solve_prepared(
    dn: &DnSolver,
    geom: &Geometry,
    reflected: &Geometry,
    eta: &SpectralField,
    params: &PhysicalParams,
    tol: f64,
    max_iter: usize,
) -> Result<TwoPhaseState> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Config("two-phase solve needs tol > 0 and max_iter > 0".into()));
    }
    let (mp, mm) = (params.mu_plus, params.mu_minus);
    let mu = mp + mm;
    let jump = params.jump();
    let abs_eta = dn.abs_d(eta);

    // G^+(eta) eta = -|D| eta + R^+(eta) eta
    let r_plus_eta = dn.remainder_plus_with(reflected, eta)?;
    let g_plus_eta = &r_plus_eta - &abs_eta;
    let forcing = inv_abs_d(&g_plus_eta)?.scale(-jump * mm / mu);

    let floor = 1e3 * f64::EPSILON;
    let mut g = forcing.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut ratio = 0.0f64;
    for it in 1..=max_iter {
        let rp = dn.remainder_plus_with(reflected, &g)?;
        let rm = dn.remainder_with(geom, &g)?;
        let next = &inv_abs_d(&rp.lin_comb(mm / mu, &rm, -mp / mu))? + &forcing;
        let abs_g = dn.abs_d(&g).sup_norm();
        let step = dn.abs_d(&(&next - &g)).sup_norm();
        let diff = if abs_g > 0.0 { step / abs_g } else { step };
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
        if diff <= tol {
            let p = dn.partition();
            let denom = jump * besov_norm(&abs_eta, 0.0, p);
            let bound_ratio = if denom > 0.0 {
                besov_norm(&dn.abs_d(&g), 0.0, p) / denom
            } else {
                0.0
            };
            debug!("f^-: {it} sweeps, residual {diff:e}, ratio {ratio:.3}, bound ratio {bound_ratio:.3}");
            let f_plus = recover_f_plus(&g, eta, params);
            return Ok(TwoPhaseState {
                eta: eta.clone(),
                f_minus: g,
                f_plus,
                params: *params,
                kappa_eff: params.kappa(),
                iterations: it,
                residual: diff,
                contraction_ratio: ratio,
                bound_ratio,
                r_plus_f: rp,
                r_minus_f: rm,
                r_plus_eta,
            });
        }
        g = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: *history.last().expect("at least one sweep"),
    })
}

/// `f^+ = f^- - (rho^- - rho^+) eta`.
pub fn recover_f_plus(f_minus: &SpectralField, eta: &SpectralField, params: &PhysicalParams) -> SpectralField {
    f_minus.lin_comb(1.0, eta, -params.jump())
}

/// Normal-flux balance of a solved state, with `G^+` evaluated directly.
pub fn flux_check(dn: &DnSolver, state: &TwoPhaseState) -> Result<FluxCheck> {
    let p = &state.params;
    let upper = dn.apply(&state.eta, &state.f_plus, Side::Plus)?.scale(1.0 / p.mu_plus);
    let lower = dn.apply(&state.eta, &state.f_minus, Side::Minus)?.scale(1.0 / p.mu_minus);
    Ok(FluxCheck {
        mismatch: (&upper - &lower).sup_norm(),
        scale: lower.sup_norm(),
    })
}

/// `d_t eta` evaluated in the split and the direct form.
pub fn two_phase_rhs_forms(dn: &DnSolver, eta: &SpectralField, params: &PhysicalParams, tol: f64) -> Result<RhsForms> {
    check_params(params)?;
    let geom = dn.prepare(eta)?;
    let reflected = dn.prepare(&-eta)?;
    rhs_prepared(dn, &geom, &reflected, eta, params, tol)
}

pub(crate) fn rhs_prepared(
    dn: &DnSolver,
    geom: &Geometry,
    reflected: &Geometry,
    eta: &SpectralField,
    params: &PhysicalParams,
    tol: f64,
) -> Result<RhsForms> {
    let state = solve_prepared(dn, geom, reflected, eta, params, tol, 100)?;
    let kappa = params.kappa();
    let abs_eta = dn.abs_d(eta);
    let r_sum = &state.r_plus_f + &state.r_minus_f;
    let split = &(&abs_eta.scale(-kappa) - &r_sum.scale(kappa / params.jump())) + &state.r_plus_eta.scale(kappa);
    let g_minus = &dn.abs_d(&state.f_minus) + &dn.remainder_with(geom, &state.f_minus)?;
    let direct = g_minus.scale(-1.0 / params.mu_minus);
    let mismatch = (&split - &direct).sup_norm();
    let allowed = 10.0 * tol * (kappa * abs_eta.sup_norm());
    Ok(RhsForms {
        split: split.mean_free(),
        direct: direct.mean_free(),
        mismatch,
        allowed,
        state,
    })
}

/// `d_t eta` of the two-phase problem in split form, after checking it against
/// `-(1/mu^-) G^-(eta) f^-`.
pub fn two_phase_rhs(dn: &DnSolver, eta: &SpectralField, params: &PhysicalParams, tol: f64) -> Result<SpectralField> {
    let forms = two_phase_rhs_forms(dn, eta, params, tol)?;
    checked_split(forms)
}

pub(crate) fn checked_split(forms: RhsForms) -> Result<SpectralField> {
    if forms.mismatch > forms.allowed {
        return Err(Error::FormMismatch {
            mismatch: forms.mismatch,
            allowed: forms.allowed,
        });
    }
    Ok(forms.split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dn::DnConfig;
    use crate::spectral::TorusGrid;

    fn setup() -> (TorusGrid, DnSolver) {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let dn = DnSolver::new(&g, DnConfig::default()).unwrap();
        (g, dn)
    }

    fn params() -> PhysicalParams {
        PhysicalParams::new(0.5, 1.0, 1.0, 2.0).unwrap()
    }

    fn eta(g: &TorusGrid, a: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| a * (x[0].cos() + 0.5 * (2.0 * x[0] + 0.4).sin())).mean_free()
    }

    #[test]
    fn flat_interface() {
        let (g, dn) = setup();
        let zero = SpectralField::zeros(&g);
        let s = solve_f_minus(&dn, &zero, &params(), 1e-10, 50).unwrap();
        assert_eq!(s.f_minus, zero);
        assert_eq!(s.f_plus, zero);
        assert_eq!(two_phase_rhs(&dn, &zero, &params(), 1e-10).unwrap(), zero);
    }

    #[test]
    fn traces_differ_by_density_jump() {
        let (g, dn) = setup();
        let e = eta(&g, 0.02);
        let s = solve_f_minus(&dn, &e, &params(), 1e-10, 50).unwrap();
        let want = e.scale(-params().jump());
        assert!((&s.f_plus - &s.f_minus).max_coeff_distance(&want) <= 1e-10);
        assert!(s.f_minus.is_mean_zero() && s.f_plus.is_mean_zero());
        assert_eq!(recover_f_plus(&s.f_minus, &SpectralField::zeros(&g), &params()), s.f_minus);
    }

    #[test]
    fn leading_order_trace() {
        // f^- = kappa mu^- eta + O(eta^2)
        let (g, dn) = setup();
        let p = params();
        let mut dev = Vec::new();
        for a in [0.02, 0.01, 0.005] {
            let e = eta(&g, a);
            let s = solve_f_minus(&dn, &e, &p, 1e-12, 50).unwrap();
            dev.push((&s.f_minus - &e.scale(p.kappa() * p.mu_minus)).sup_norm());
        }
        let order = (dev[0] / dev[2]).log2() / 2.0;
        assert!((1.8..=2.2).contains(&order), "{dev:?}");
    }

    #[test]
    fn flux_balance() {
        let (g, dn) = setup();
        let p = params();
        let tol = 1e-10;
        let s = solve_f_minus(&dn, &eta(&g, 0.02), &p, tol, 50).unwrap();
        let fc = flux_check(&dn, &s).unwrap();
        let allowed = 10.0 * tol * (1.0 + p.mu_minus / p.mu_plus) * fc.scale;
        assert!(fc.mismatch <= allowed, "{fc:?}");
    }

    #[test]
    fn forms_agree_and_rhs_is_mean_zero() {
        let (g, dn) = setup();
        let forms = two_phase_rhs_forms(&dn, &eta(&g, 0.03), &params(), 1e-10).unwrap();
        assert!(forms.mismatch <= forms.allowed, "{} > {}", forms.mismatch, forms.allowed);
        assert!(forms.split.is_mean_zero());
        assert!(forms.state.contraction_ratio <= 0.5);
    }

    #[test]
    fn density_jump_scaling() {
        let (g, dn) = setup();
        let e = eta(&g, 0.01);
        let p1 = PhysicalParams::new(0.5, 1.0, 1.0, 2.0).unwrap();
        let p2 = PhysicalParams::new(0.5, 1.0, 1.0, 3.0).unwrap();
        let f1 = solve_f_minus(&dn, &e, &p1, 1e-12, 50).unwrap().f_minus;
        let f2 = solve_f_minus(&dn, &e, &p2, 1e-12, 50).unwrap().f_minus;
        let p = dn.partition();
        let gap = besov_norm(&(&f2 - &f1.scale(2.0)), 1.0, p) / besov_norm(&f2, 1.0, p);
        assert!(gap <= 5.0 * besov_norm(&e, 1.0, p), "{gap}");
    }

    #[test]
    fn needs_upper_viscosity() {
        let (g, dn) = setup();
        let p = PhysicalParams::one_phase(1.0, 1.0).unwrap();
        assert!(matches!(solve_f_minus(&dn, &eta(&g, 0.01), &p, 1e-10, 10), Err(Error::Config(_))));
    }
}
