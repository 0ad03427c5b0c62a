//! Run configuration: a fixed JSON schema, validated before any compute.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dn::DnConfig;
use crate::error::{Error, Result};
use crate::evolution::{PicardConfig, Problem, ProblemKind};
use crate::params::PhysicalParams;
use crate::spectral::{SpectralField, TorusGrid};
use crate::verify::VerifySettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Integer wavevector, one entry per axis.
    pub k: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

/// Initial interface: `sum amplitude cos(k.x + phase)` or samples read from
/// a file (whitespace-separated, row-major, `N^d` values; the mean is removed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Eta0Spec {
    Modes(Vec<ModeSpec>),
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub dn_tol: f64,
    pub c_star: f64,
    pub delta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            dn_tol: 1e-12,
            c_star: 0.1,
            delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
    /// Strip depth; `null` selects the default truncation depth.
    #[serde(rename = "Z")]
    pub z: Option<f64>,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub dt: Option<f64>,
    pub params: PhysicalParams,
    pub eta0: Eta0Spec,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_dir: String,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=2).contains(&self.d) {
            return bad(format!("d must be 1 or 2, got {}", self.d));
        }
        if self.n < 8 || self.n % 2 != 0 {
            return bad(format!("N must be even and at least 8, got {}", self.n));
        }
        if !(self.l.is_finite() && self.l > 0.0) {
            return bad(format!("L must be positive, got {}", self.l));
        }
        if self.m < 9 || self.m % 2 == 0 {
            return bad(format!("M must be odd and at least 9, got {}", self.m));
        }
        if let Some(z) = self.z {
            if !(z.is_finite() && z > 0.0) {
                return bad(format!("Z must be positive, got {z}"));
            }
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return bad(format!("T must be positive, got {}", self.t));
        }
        self.steps()?;
        self.params.validate()?;
        match self.problem {
            ProblemKind::OnePhase if self.params.mu_plus != 0.0 || self.params.rho_plus != 0.0 => {
                return bad("one_phase takes mu_plus = rho_plus = 0".into());
            }
            ProblemKind::TwoPhase if !(self.params.mu_plus > 0.0) => {
                return bad("two_phase needs mu_plus > 0".into());
            }
            _ => {}
        }
        let t = &self.tolerances;
        for (name, v) in [("picard_tol", t.picard_tol), ("dn_tol", t.dn_tol), ("c_star", t.c_star), ("delta", t.delta)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if t.c_star >= 1.0 {
            return bad(format!("c_star must be below 1, got {}", t.c_star));
        }
        if self.output_dir.is_empty() {
            return bad("output_dir is empty".into());
        }
        if let Eta0Spec::Modes(modes) = &self.eta0 {
            for m in modes {
                if m.k.len() != self.d {
                    return bad(format!("mode {:?} does not have {} components", m.k, self.d));
                }
                if m.k.iter().all(|&c| c == 0) {
                    return bad("mode k = 0 would give the interface a mean".into());
                }
                if m.k.iter().any(|&c| c.unsigned_abs() as usize >= self.n / 2) {
                    return bad(format!("mode {:?} is not resolved on N = {}", m.k, self.n));
                }
                if !(m.amplitude.is_finite() && m.phase.is_finite()) {
                    return bad("mode amplitude and phase must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Number of time intervals, from `K` or from `T / dt`.
    pub fn steps(&self) -> Result<usize> {
        match (self.k, self.dt) {
            (Some(k), None) if k > 0 => Ok(k),
            (None, Some(dt)) if dt.is_finite() && dt > 0.0 => {
                let k = (self.t / dt).round();
                if k < 1.0 || (k * dt - self.t).abs() > 1e-9 * self.t {
                    return Err(Error::Config(format!("dt = {dt} does not divide T = {}", self.t)));
                }
                Ok(k as usize)
            }
            _ => Err(Error::Config("give exactly one of K > 0 and dt > 0".into())),
        }
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.d, self.n, self.l)
    }

    pub fn dn_config(&self) -> DnConfig {
        DnConfig {
            z_nodes: self.m,
            depth: self.z,
            tol: self.tolerances.dn_tol,
            c_star: self.tolerances.c_star,
            ..DnConfig::default()
        }
    }

    pub fn picard_config(&self) -> Result<PicardConfig> {
        Ok(PicardConfig {
            k: self.steps()?,
            tol: self.tolerances.picard_tol,
            delta: self.tolerances.delta,
            ..PicardConfig::default()
        })
    }

    pub fn problem(&self) -> Problem {
        match self.problem {
            ProblemKind::OnePhase => Problem::one_phase(self.params),
            ProblemKind::TwoPhase => Problem::two_phase(self.params, self.tolerances.dn_tol),
        }
    }

    /// The initial interface; file paths are taken relative to `base`.
    pub fn eta0(&self, base: &Path) -> Result<SpectralField> {
        let grid = self.grid()?;
        match &self.eta0 {
            Eta0Spec::Modes(modes) => {
                let m: Vec<(Vec<i64>, f64, f64)> = modes.iter().map(|m| (m.k.clone(), m.amplitude, m.phase)).collect();
                SpectralField::from_modes(&grid, &m)
            }
            Eta0Spec::File(name) => {
                let path = base.join(name);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let values = text
                    .split_whitespace()
                    .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad sample {s:?}: {e}"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(SpectralField::from_physical(&grid, &values)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                    .mean_free())
            }
        }
    }

    pub fn verify_settings(&self) -> VerifySettings {
        VerifySettings {
            seed: self.seed,
            picard_tol: self.tolerances.picard_tol,
            dn_tol: self.tolerances.dn_tol,
            c_star: self.tolerances.c_star,
            delta: self.tolerances.delta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "problem": "one_phase", "d": 1, "N": 32, "L": 6.283185307179586, "M": 129, "Z": null,
        "T": 1.0, "K": 16, "dt": null,
        "params": {"mu_plus": 0.0, "mu_minus": 1.0, "rho_plus": 0.0, "rho_minus": 1.0},
        "eta0": {"modes": [{"k": [1], "amplitude": 0.001, "phase": 0.0}]},
        "tolerances": {"picard_tol": 1e-10, "dn_tol": 1e-12, "c_star": 0.1, "delta": 0.05},
        "seed": 7, "output_dir": "out"
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.steps().unwrap(), 16);
        let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        let eta = cfg.eta0(Path::new(".")).unwrap();
        assert!(eta.is_mean_zero());
        assert!((eta.sup_norm() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            edit(|v| v["extra"] = 1.into()),
            edit(|v| v["tolerances"]["c_star"] = 1.5.into()),
            edit(|v| v["tolerances"]["picard_tol"] = 0.0.into()),
            edit(|v| v["K"] = serde_json::Value::Null),
            edit(|v| v["dt"] = 0.1.into()),
            edit(|v| v["eta0"]["modes"][0]["k"] = serde_json::json!([0])),
            edit(|v| v["eta0"]["modes"][0]["k"] = serde_json::json!([16])),
            edit(|v| v["problem"] = "two_phase".into()),
            edit(|v| v["params"]["rho_minus"] = (-1.0).into()),
            edit(|v| v["d"] = 3.into()),
            edit(|v| v["M"] = 128.into()),
        ];
        for c in cases {
            assert!(matches!(RunConfig::from_json(&c), Err(Error::Config(_))), "{c}");
        }
    }

    #[test]
    fn dt_in_place_of_k() {
        let cfg = RunConfig::from_json(&edit(|v| {
            v["K"] = serde_json::Value::Null;
            v["dt"] = 0.125.into();
        }))
        .unwrap();
        assert_eq!(cfg.steps().unwrap(), 8);
        assert!(RunConfig::from_json(&edit(|v| {
            v["K"] = serde_json::Value::Null;
            v["dt"] = 0.3.into();
        }))
        .is_err());
    }
}
