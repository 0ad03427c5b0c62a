use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Viscosities and densities of the two fluids; `-` is the lower fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
}

impl PhysicalParams {
    pub fn new(mu_plus: f64, mu_minus: f64, rho_plus: f64, rho_minus: f64) -> Result<Self> {
        let p = Self {
            mu_plus,
            mu_minus,
            rho_plus,
            rho_minus,
        };
        p.validate()?;
        Ok(p)
    }

    /// A single fluid below a region of zero pressure.
    pub fn one_phase(mu_minus: f64, rho_minus: f64) -> Result<Self> {
        Self::new(0.0, mu_minus, 0.0, rho_minus)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_plus, self.mu_minus, self.rho_plus, self.rho_minus];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("physical parameters must be finite".into()));
        }
        if self.mu_plus < 0.0 || self.mu_minus <= 0.0 {
            return Err(Error::Config(format!(
                "need mu_plus >= 0 and mu_minus > 0, got {} and {}",
                self.mu_plus, self.mu_minus
            )));
        }
        if self.rho_minus <= self.rho_plus {
            return Err(Error::Config(format!(
                "unstable configuration: rho_minus = {} must exceed rho_plus = {}",
                self.rho_minus, self.rho_plus
            )));
        }
        Ok(())
    }

    /// Density jump `rho_minus - rho_plus`.
    pub fn jump(&self) -> f64 {
        self.rho_minus - self.rho_plus
    }

    pub fn kappa(&self) -> f64 {
        self.jump() / (self.mu_plus + self.mu_minus)
    }
}
