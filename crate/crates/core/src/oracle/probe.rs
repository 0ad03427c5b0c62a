use serde::{Deserialize, Serialize};

use crate::besov::besov_norm;
use crate::error::{Error, Result};
use crate::evolution::{Evolution, PicardConfig};
use crate::fit::loglog_fit;
use crate::spectral::SpectralField;
use crate::two_phase::solve_f_minus;

/// Quantities whose order in the interface amplitude is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// `|| R^-(eps eta) f ||_{B^1}`.
    RMinusLinearity,
    /// `|| eta(T) - e^{-kappa T|D|} eta_0 ||_{B^1}` with `eta_0 = eps eta`.
    MildDeviation,
    /// `|| f^-(eps eta) - kappa mu^- eps eta ||_{B^1}`.
    FMinusCorrection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Solvers and horizon shared by the probes.
#[derive(Debug, Clone)]
pub struct ProbeContext<'a> {
    pub evolution: &'a Evolution,
    pub horizon: f64,
    pub picard: PicardConfig,
    pub closure_tol: f64,
}

/// Evaluate the named quantity on `eps * base_eta` and fit its log-log slope.
pub fn epsilon_scaling_probe(
    kind: ProbeKind,
    eps_list: &[f64],
    base_eta: &SpectralField,
    base_f: &SpectralField,
    ctx: &ProbeContext,
) -> Result<ProbeResult> {
    let values = epsilon_sweep(kind, eps_list, base_eta, base_f, ctx)?;
    let fit = loglog_fit(eps_list, &values)?;
    if fit.r2 < 0.99 {
        return Err(Error::PoorFit {
            r2: fit.r2,
            slope: fit.slope,
        });
    }
    Ok(ProbeResult {
        kind,
        eps: eps_list.to_vec(),
        values,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
    })
}

/// The raw values behind [`epsilon_scaling_probe`].
pub fn epsilon_sweep(
    kind: ProbeKind,
    eps_list: &[f64],
    base_eta: &SpectralField,
    base_f: &SpectralField,
    ctx: &ProbeContext,
) -> Result<Vec<f64>> {
    if eps_list.len() < 4 || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("need at least four positive amplitudes".into()));
    }
    let (lo, hi) = eps_list
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    if hi / lo < 10.0 {
        return Err(Error::InvalidInput("amplitudes must span at least a decade".into()));
    }
    let ev = ctx.evolution;
    let dn = ev.dn();
    let p = dn.partition();
    eps_list
        .iter()
        .map(|&e| {
            let eta = base_eta.scale(e);
            match kind {
                ProbeKind::RMinusLinearity => Ok(besov_norm(&dn.remainder(&eta, base_f)?, 1.0, p)),
                ProbeKind::MildDeviation => {
                    let path = ev.solve_global_picard(&eta, ctx.horizon, &ctx.picard)?;
                    let lin = ev.linear_flow(&eta, ctx.horizon)?;
                    Ok(besov_norm(&(path.terminal() - &lin), 1.0, p))
                }
                ProbeKind::FMinusCorrection => {
                    let params = ev.problem().params;
                    let s = solve_f_minus(dn, &eta, &params, ctx.closure_tol, 100)?;
                    let lead = eta.scale(params.kappa() * params.mu_minus);
                    Ok(besov_norm(&(&s.f_minus - &lead), 1.0, p))
                }
            }
        })
        .collect()
}
