//! Littlewood-Paley blocks and homogeneous Besov / Chemin-Lerner norms.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{apply_multiplier, AbsD, SpectralField, TorusGrid};

const CHI_INNER: f64 = 0.75;
const CHI_OUTER: f64 = 4.0 / 3.0;

fn mollifier(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Radial cutoff: 1 on `|xi| <= 3/4`, 0 on `|xi| >= 4/3`.
pub fn chi(r: f64) -> f64 {
    if r <= CHI_INNER {
        1.0
    } else if r >= CHI_OUTER {
        0.0
    } else {
        let t = (r - CHI_INNER) / (CHI_OUTER - CHI_INNER);
        let a = mollifier(1.0 - t);
        a / (a + mollifier(t))
    }
}

/// Annulus profile `phi(xi) = chi(xi/2) - chi(xi)`.
pub fn phi(r: f64) -> f64 {
    chi(r / 2.0) - chi(r)
}

/// Dyadic weights `phi(2^{-j} xi)` tabulated on every grid wavevector.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: TorusGrid,
    j_min: i32,
    j_max: i32,
    weights: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: &TorusGrid) -> Self {
        let j_min = grid.k_min().log2().floor() as i32 - 2;
        let j_max = grid.k_max().log2().ceil() as i32 + 1;
        let weights = (j_min..=j_max)
            .map(|j| {
                let s = 2f64.powi(-j);
                grid.abs_xi()
                    .iter()
                    .map(|&k| if k == 0.0 { 0.0 } else { phi(s * k) })
                    .collect()
            })
            .collect();
        Self {
            grid: grid.clone(),
            j_min,
            j_max,
            weights,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn blocks(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn num_blocks(&self) -> usize {
        self.weights.len()
    }

    /// `phi(2^{-j} xi)` at every flat index.
    pub fn weights(&self, j: i32) -> Result<&[f64]> {
        self.check(j)?;
        Ok(&self.weights[(j - self.j_min) as usize])
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::BlockOutOfRange {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(())
    }

    /// `Delta_j u`.
    pub fn block(&self, u: &SpectralField, j: i32) -> Result<SpectralField> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let w = self.weights(j)?;
        let coeffs: Vec<Complex64> = u.coeffs().iter().zip(w).map(|(c, w)| c * w).collect();
        Ok(SpectralField::from_coeffs_unchecked(self.grid.clone(), coeffs))
    }

    /// `sup_x |Delta_j u|` for every block, in increasing `j`.
    pub fn block_sup_norms(&self, u: &SpectralField) -> Vec<f64> {
        self.block_lp_norms(u, f64::INFINITY)
    }

    /// `||Delta_j u||_{L^p}` for every block.
    pub fn block_lp_norms(&self, u: &SpectralField, p: f64) -> Vec<f64> {
        assert!(u.grid() == &self.grid, "field and partition grids differ");
        let volume = self.grid.period().powi(self.grid.dim() as i32);
        self.weights
            .iter()
            .map(|w| {
                if u.coeffs().iter().zip(w).all(|(c, w)| *w == 0.0 || c.norm() == 0.0) {
                    return 0.0;
                }
                let coeffs: Vec<Complex64> = u.coeffs().iter().zip(w).map(|(c, w)| c * w).collect();
                let vals = SpectralField::from_coeffs_unchecked(self.grid.clone(), coeffs).to_physical();
                lp_norm(&vals, p, volume)
            })
            .collect()
    }

    fn weighted_sum(&self, norms: &[f64], s: f64, r: f64) -> f64 {
        let terms = self.blocks().zip(norms).map(|(j, n)| 2f64.powf(s * j as f64) * n);
        if r.is_infinite() {
            terms.fold(0.0, f64::max)
        } else if r == 1.0 {
            terms.sum()
        } else {
            terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
        }
    }
}

fn lp_norm(vals: &[f64], p: f64, volume: f64) -> f64 {
    if p.is_infinite() {
        vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        let mean = vals.iter().map(|v| v.abs().powf(p)).sum::<f64>() / vals.len() as f64;
        (mean * volume).powf(1.0 / p)
    }
}

/// `||u||_{B^s_{inf,1}} = sum_j 2^{sj} sup |Delta_j u|`.
pub fn besov_norm(u: &SpectralField, s: f64, p: &DyadicPartition) -> f64 {
    p.weighted_sum(&p.block_sup_norms(u), s, 1.0)
}

/// General homogeneous `B^s_{p,r}` norm with `p, r` in `[1, inf]`.
pub fn besov_norm_pr(u: &SpectralField, s: f64, p_exp: f64, r: f64, p: &DyadicPartition) -> f64 {
    assert!(p_exp >= 1.0 && r >= 1.0, "Lebesgue exponents must be >= 1");
    p.weighted_sum(&p.block_lp_norms(u, p_exp), s, r)
}

/// `|| |D| eta ||_{B^0_{inf,1}}`, the smallness measure of an interface.
pub fn abs_d_b0(eta: &SpectralField, p: &DyadicPartition) -> f64 {
    let d_eta = apply_multiplier(eta, &AbsD).expect("|D| is a real symbol");
    besov_norm(&d_eta, 0.0, p)
}

/// Time exponent of a Chemin-Lerner norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeExponent {
    One,
    Infinity,
}

/// `|| u ||_{L~^q(I; B^s_{inf,1})}` on a sampled path.
///
/// For `q = 1` the time integral of each block norm is the composite
/// trapezoid rule on the samples.
pub fn chemin_lerner_norm(
    times: &[f64],
    path: &[SpectralField],
    q: TimeExponent,
    s: f64,
    p: &DyadicPartition,
) -> Result<f64> {
    check_path(times, path, q)?;
    let per_node: Vec<Vec<f64>> = path.iter().map(|u| p.block_sup_norms(u)).collect();
    let nb = p.num_blocks();
    let mut acc = vec![0.0; nb];
    for (i, norms) in per_node.iter().enumerate() {
        for b in 0..nb {
            match q {
                TimeExponent::Infinity => acc[b] = f64::max(acc[b], norms[b]),
                TimeExponent::One => {
                    if i > 0 {
                        acc[b] += 0.5 * (times[i] - times[i - 1]) * (norms[b] + per_node[i - 1][b]);
                    }
                }
            }
        }
    }
    Ok(p.weighted_sum(&acc, s, 1.0))
}

fn check_path(times: &[f64], path: &[SpectralField], q: TimeExponent) -> Result<()> {
    if times.len() != path.len() {
        return Err(Error::DegeneratePath(format!(
            "{} times for {} samples",
            times.len(),
            path.len()
        )));
    }
    if path.is_empty() {
        return Err(Error::DegeneratePath("empty path".into()));
    }
    if q == TimeExponent::One && path.len() < 2 {
        return Err(Error::DegeneratePath("time integral needs at least two samples".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DegeneratePath("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Norm history of a run. Entry `i` of each Chemin-Lerner column is taken over
/// `[t_0, t_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub besov_1: Vec<f64>,
    pub besov_2: Vec<f64>,
    pub cl_infty_1: Vec<f64>,
    pub cl_1_2: Vec<f64>,
    pub x1_kappa: Vec<f64>,
}

impl NormReport {
    pub fn from_path(times: &[f64], path: &[SpectralField], kappa: f64, p: &DyadicPartition) -> Result<Self> {
        check_path(times, path, TimeExponent::Infinity)?;
        let nb = p.num_blocks();
        let w1: Vec<f64> = p.blocks().map(|j| 2f64.powi(j)).collect();
        let w2: Vec<f64> = p.blocks().map(|j| 4f64.powi(j)).collect();
        let dot = |w: &[f64], n: &[f64]| w.iter().zip(n).map(|(a, b)| a * b).sum::<f64>();

        let mut sup_acc = vec![0.0; nb];
        let mut int_acc = vec![0.0; nb];
        let mut prev: Option<Vec<f64>> = None;
        let mut r = Self {
            kappa,
            times: times.to_vec(),
            besov_1: Vec::with_capacity(path.len()),
            besov_2: Vec::with_capacity(path.len()),
            cl_infty_1: Vec::with_capacity(path.len()),
            cl_1_2: Vec::with_capacity(path.len()),
            x1_kappa: Vec::with_capacity(path.len()),
        };
        for (i, u) in path.iter().enumerate() {
            let norms = p.block_sup_norms(u);
            for b in 0..nb {
                sup_acc[b] = f64::max(sup_acc[b], norms[b]);
                if let Some(pn) = &prev {
                    int_acc[b] += 0.5 * (times[i] - times[i - 1]) * (norms[b] + pn[b]);
                }
            }
            let cl1 = dot(&w1, &sup_acc);
            let cl2 = dot(&w2, &int_acc);
            r.besov_1.push(dot(&w1, &norms));
            r.besov_2.push(dot(&w2, &norms));
            r.cl_infty_1.push(cl1);
            r.cl_1_2.push(cl2);
            r.x1_kappa.push(cl1 + kappa * cl2);
            prev = Some(norms);
        }
        Ok(r)
    }

    pub fn final_x1_kappa(&self) -> f64 {
        *self.x1_kappa.last().expect("report is never empty")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,besov1,besov2,cl_inf_b1,cl_1_b2,x1kappa\n");
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i], self.besov_1[i], self.besov_2[i], self.cl_infty_1[i], self.cl_1_2[i], self.x1_kappa[i]
            )
            .expect("writing to a String");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::poisson_semigroup;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_poly(rng: &mut ChaCha8Rng, g: &TorusGrid, kmax: i64, terms: usize) -> SpectralField {
        let modes: Vec<_> = (0..terms)
            .map(|_| {
                let k = rng.gen_range(1..=kmax) * if rng.gen_bool(0.5) { 1 } else { -1 };
                (vec![k], rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        SpectralField::from_modes(g, &modes).unwrap()
    }

    fn partition_scan(g: &TorusGrid) {
        let p = DyadicPartition::new(g);
        for flat in 1..g.len() {
            let k = g.abs_xi()[flat];
            let mut sum = 0.0;
            let mut sq = 0.0;
            let mut active = 0;
            for j in p.blocks() {
                let w = p.weights(j).unwrap()[flat];
                assert!((0.0..=1.0).contains(&w));
                let r = 2f64.powi(-j) * k;
                if !(0.75..=8.0 / 3.0).contains(&r) {
                    assert_eq!(w, 0.0, "weight outside annulus at j={j} r={r}");
                }
                sum += w;
                sq += w * w;
                if w > 0.0 {
                    active += 1;
                }
            }
            assert!((sum - 1.0).abs() <= 1e-12, "sum {sum} at |xi|={k}");
            assert!(sq >= 0.5 - 1e-12 && sq <= 1.0 + 1e-12);
            assert!(active <= 2);
        }
    }

    #[test]
    fn partition_of_unity_1d() {
        partition_scan(&TorusGrid::periodic_1d(512).unwrap());
        partition_scan(&TorusGrid::new(1, 64, 0.37).unwrap());
    }

    #[test]
    fn partition_of_unity_2d() {
        partition_scan(&TorusGrid::new(2, 32, 2.0 * PI).unwrap());
    }

    #[test]
    fn block_range_and_errors() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let p = DyadicPartition::new(&g);
        assert!(p.j_min() <= g.k_min().log2().floor() as i32 - 2);
        assert!(p.j_max() >= g.k_max().log2().ceil() as i32 + 1);
        let u = SpectralField::from_fn(&g, |x| x[0].cos());
        assert!(matches!(p.block(&u, p.j_max() + 1), Err(Error::BlockOutOfRange { .. })));
        // weight at 2^{-j}|xi| = 1/2 vanishes
        assert_eq!(phi(0.5), 0.0);
    }

    #[test]
    fn single_mode_blocks_and_norm() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let p = DyadicPartition::new(&g);
        let k0 = 5.0;
        let u = SpectralField::from_fn(&g, |x| (k0 * x[0]).cos());
        let mut expect = 0.0;
        for j in p.blocks() {
            let w = phi(2f64.powi(-j) * k0);
            let b = p.block(&u, j).unwrap();
            assert!(b.max_coeff_distance(&u.scale(w)) < 1e-15);
            expect += 2f64.powi(j) * w;
        }
        assert!((besov_norm(&u, 1.0, &p) - expect).abs() < 1e-13);
    }

    #[test]
    fn blocks_reconstruct_and_separate() {
        let g = TorusGrid::periodic_1d(128).unwrap();
        let p = DyadicPartition::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = &random_poly(&mut rng, &g, 60, 8) + &SpectralField::from_fn(&g, |_| 0.3);
        let mut sum = SpectralField::zeros(&g);
        for j in p.blocks() {
            sum = &sum + &p.block(&u, j).unwrap();
            for jj in p.blocks().filter(|jj| (jj - j).abs() >= 2) {
                let twice = p.block(&p.block(&u, j).unwrap(), jj).unwrap();
                assert!(twice.coeffs().iter().all(|c| c.norm() == 0.0));
            }
        }
        assert!(sum.max_coeff_distance(&u.mean_free()) < 1e-12);
    }

    #[test]
    fn constants_have_zero_norm() {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let p = DyadicPartition::new(&g);
        let u = SpectralField::from_fn(&g, |_| 2.5);
        assert_eq!(besov_norm(&u, 1.0, &p), 0.0);
    }

    #[test]
    fn bounded_by_wiener_norm() {
        let g = TorusGrid::periodic_1d(256).unwrap();
        let p = DyadicPartition::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let u = random_poly(&mut rng, &g, 80, 8);
            assert!(besov_norm(&u, 1.0, &p) <= 4.0 / 3.0 * u.wiener_norm_1() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dyadic_homogeneity() {
        let g = TorusGrid::periodic_1d(128).unwrap();
        let half = g.with_period(PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let u = random_poly(&mut rng, &g, 40, 6);
            // the same coefficients on a grid of half the period sample u(2x)
            let dilated = SpectralField::from_coeffs(&half, u.coeffs().to_vec()).unwrap();
            let a = besov_norm(&u, 1.0, &DyadicPartition::new(&g));
            let b = besov_norm(&dilated, 1.0, &DyadicPartition::new(&half));
            assert!((b - 2.0 * a).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn sup_norm_floors() {
        let g = TorusGrid::periodic_1d(128).unwrap();
        let p = DyadicPartition::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let u = &random_poly(&mut rng, &g, 50, 8) + &SpectralField::from_fn(&g, |_| -0.4);
            let b0 = besov_norm(&u, 0.0, &p);
            let active = p.block_sup_norms(&u).iter().filter(|n| **n > 0.0).count() as f64;
            let osc = u.mean_free().sup_norm();
            assert!(b0 >= osc / active);
            assert!(u.sup_norm() <= b0 + u.mean().abs() + 1e-12);
        }
    }

    #[test]
    fn chemin_lerner_examples() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let p = DyadicPartition::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u0 = random_poly(&mut rng, &g, 20, 5);
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let path = vec![u0.clone(); times.len()];
        let b = besov_norm(&u0, 1.0, &p);
        let inf = chemin_lerner_norm(&times, &path, TimeExponent::Infinity, 1.0, &p).unwrap();
        let one = chemin_lerner_norm(&times, &path, TimeExponent::One, 1.0, &p).unwrap();
        assert!((inf - b).abs() < 1e-13 * b);
        assert!((one - 3.0 * b).abs() < 1e-12 * b);

        // a decaying path: the Chemin-Lerner norm dominates the sup in time
        let decaying: Vec<SpectralField> =
            times.iter().map(|&t| poisson_semigroup(&u0, t, 1.0).unwrap()).collect();
        let cl = chemin_lerner_norm(&times, &decaying, TimeExponent::Infinity, 1.0, &p).unwrap();
        let max_b = decaying.iter().map(|u| besov_norm(u, 1.0, &p)).fold(0.0, f64::max);
        assert!(cl >= max_b * (1.0 - 1e-14));
    }

    #[test]
    fn degenerate_paths() {
        let g = TorusGrid::periodic_1d(16).unwrap();
        let p = DyadicPartition::new(&g);
        let u = SpectralField::zeros(&g);
        assert!(chemin_lerner_norm(&[0.0], &[u.clone()], TimeExponent::One, 1.0, &p).is_err());
        assert!(chemin_lerner_norm(&[0.0, 0.0], &[u.clone(), u.clone()], TimeExponent::Infinity, 1.0, &p).is_err());
        assert!(chemin_lerner_norm(&[], &[], TimeExponent::Infinity, 1.0, &p).is_err());
        assert!(chemin_lerner_norm(&[0.0], &[u], TimeExponent::Infinity, 1.0, &p).is_ok());
    }

    #[test]
    fn report_prefixes_match_direct_norms() {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let p = DyadicPartition::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let u0 = random_poly(&mut rng, &g, 20, 5);
        let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
        let path: Vec<SpectralField> = times.iter().map(|&t| poisson_semigroup(&u0, t, 2.0).unwrap()).collect();
        let r = NormReport::from_path(&times, &path, 2.0, &p).unwrap();
        for i in 1..times.len() {
            let inf = chemin_lerner_norm(&times[..=i], &path[..=i], TimeExponent::Infinity, 1.0, &p).unwrap();
            let one = chemin_lerner_norm(&times[..=i], &path[..=i], TimeExponent::One, 2.0, &p).unwrap();
            assert!((r.cl_infty_1[i] - inf).abs() <= 1e-13 * inf);
            assert!((r.cl_1_2[i] - one).abs() <= 1e-13 * one);
            assert_eq!(r.x1_kappa[i], r.cl_infty_1[i] + 2.0 * r.cl_1_2[i]);
        }
        let csv = r.to_csv();
        assert!(csv.starts_with("t,besov1,besov2,cl_inf_b1,cl_1_b2,x1kappa\n"));
        assert_eq!(csv.lines().count(), times.len() + 1);
    }

    proptest! {
        #[test]
        fn norm_is_seminorm(seed in any::<u64>(), lambda in -4.0f64..4.0, s in 0.0f64..2.0) {
            let g = TorusGrid::periodic_1d(64).unwrap();
            let p = DyadicPartition::new(&g);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_poly(&mut rng, &g, 25, 6);
            let v = random_poly(&mut rng, &g, 25, 6);
            let nu = besov_norm(&u, s, &p);
            let nv = besov_norm(&v, s, &p);
            prop_assert!(besov_norm(&(&u + &v), s, &p) <= (nu + nv) * (1.0 + 1e-12));
            prop_assert!((besov_norm(&u.scale(lambda), s, &p) - lambda.abs() * nu).abs() <= 1e-12 * nu.max(1e-300));
            let gen = besov_norm_pr(&u, s, 2.0, 2.0, &p);
            let gen_uv = besov_norm_pr(&(&u + &v), s, 2.0, 2.0, &p);
            prop_assert!(gen_uv <= (gen + besov_norm_pr(&v, s, 2.0, 2.0, &p)) * (1.0 + 1e-12));
        }
    }
}
