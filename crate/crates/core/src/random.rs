//! Seeded random trigonometric polynomials for the randomized suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::besov::{abs_d_b0, besov_norm, DyadicPartition};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Norm used to normalise a random field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetNorm {
    /// `||u||_{B^1_{inf,1}}`.
    B1,
    /// `|| |D| u ||_{B^0_{inf,1}}`.
    AbsDB0,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn measure(u: &SpectralField, norm: TargetNorm, p: &DyadicPartition) -> f64 {
    match norm {
        TargetNorm::B1 => besov_norm(u, 1.0, p),
        TargetNorm::AbsDB0 => abs_d_b0(u, p),
    }
}

/// Mean-zero trigonometric polynomial with between one and `max_modes`
/// (at most 8) modes of wavenumber `1..=kmax` per axis, scaled so that the
/// chosen norm equals `target`.
pub fn random_trig(
    rng: &mut ChaCha8Rng,
    p: &DyadicPartition,
    max_modes: usize,
    kmax: i64,
    target: f64,
    norm: TargetNorm,
) -> Result<SpectralField> {
    let grid = p.grid();
    if max_modes == 0 || max_modes > 8 || kmax < 1 {
        return Err(Error::InvalidInput(format!(
            "need 1..=8 modes and kmax >= 1, got {max_modes} and {kmax}"
        )));
    }
    if (kmax as f64) > grid.n() as f64 / 3.0 {
        return Err(Error::InvalidInput(format!("wavenumber {kmax} is not resolved on {} points", grid.n())));
    }
    let count = rng.gen_range(1..=max_modes);
    let modes: Vec<(Vec<i64>, f64, f64)> = (0..count)
        .map(|_| {
            let mut k: Vec<i64> = (0..grid.dim()).map(|_| rng.gen_range(-kmax..=kmax)).collect();
            if k.iter().all(|&c| c == 0) {
                k[0] = rng.gen_range(1..=kmax);
            }
            (k, rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let u = SpectralField::from_modes(grid, &modes)?;
    let size = measure(&u, norm, p);
    if size == 0.0 {
        return Err(Error::InvalidInput("random modes cancelled".into()));
    }
    Ok(u.scale(target / size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn seeded_and_normalised() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let p = DyadicPartition::new(&g);
        let a = random_trig(&mut rng(3), &p, 8, 6, 0.05, TargetNorm::B1).unwrap();
        let b = random_trig(&mut rng(3), &p, 8, 6, 0.05, TargetNorm::B1).unwrap();
        assert_eq!(a, b);
        assert!(a.is_mean_zero());
        assert!((besov_norm(&a, 1.0, &p) - 0.05).abs() < 1e-15);
        let c = random_trig(&mut rng(4), &p, 8, 6, 0.1, TargetNorm::AbsDB0).unwrap();
        assert!((abs_d_b0(&c, &p) - 0.1).abs() < 1e-15);
        assert!(random_trig(&mut rng(1), &p, 9, 3, 1.0, TargetNorm::B1).is_err());
        assert!(random_trig(&mut rng(1), &p, 4, 30, 1.0, TargetNorm::B1).is_err());
    }
}
