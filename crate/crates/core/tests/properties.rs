use muskat_core::besov::{besov_norm, DyadicPartition};
use muskat_core::dn::{DnConfig, DnSolver, Side};
use muskat_core::evolution::{Evolution, Problem};
use muskat_core::random::{random_trig, rng, TargetNorm};
use muskat_core::spectral::{SpectralField, TorusGrid};
use muskat_core::two_phase::two_phase_rhs;
use muskat_core::PhysicalParams;
use proptest::prelude::*;

fn solver() -> DnSolver {
    let g = TorusGrid::periodic_1d(32).unwrap();
    DnSolver::new(&g, DnConfig { z_nodes: 65, ..DnConfig::default() }).unwrap()
}

fn sample(dn: &DnSolver, seed: u64, eta_size: f64) -> (SpectralField, SpectralField) {
    let p = dn.partition();
    let mut r = rng(seed);
    let eta = random_trig(&mut r, p, 8, 5, eta_size, TargetNorm::AbsDB0).unwrap();
    let f = random_trig(&mut r, p, 8, 5, 1.0, TargetNorm::B1).unwrap();
    (eta, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // pointwise products see the same samples only for grid shifts
    #[test]
    fn dn_commutes_with_grid_translations(seed in any::<u64>(), m in 0usize..32, size in 0.0..0.08f64) {
        let dn = solver();
        let shift = m as f64 * std::f64::consts::TAU / 32.0;
        let (eta, f) = sample(&dn, seed, size);
        let a = dn.apply(&eta.translate(&[shift]), &f.translate(&[shift]), Side::Minus).unwrap();
        let b = dn.apply(&eta, &f, Side::Minus).unwrap().translate(&[shift]);
        prop_assert!(a.max_coeff_distance(&b) <= 1e-11 * (1.0 + b.sup_norm()));
    }

    #[test]
    fn dn_output_is_mean_free_and_kills_constants(seed in any::<u64>(), size in 0.0..0.08f64, c in -5.0..5.0f64) {
        let dn = solver();
        let (eta, f) = sample(&dn, seed, size);
        prop_assert!(dn.apply(&eta, &f, Side::Minus).unwrap().is_mean_zero());
        let constant = SpectralField::from_fn(eta.grid(), |_| c);
        prop_assert!(dn.apply(&eta, &constant, Side::Minus).unwrap().sup_norm() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn plus_and_minus_operators_are_reflections(seed in any::<u64>(), size in 0.0..0.08f64) {
        let dn = solver();
        let (eta, f) = sample(&dn, seed, size);
        let plus = dn.apply(&eta, &f, Side::Plus).unwrap();
        let minus = dn.apply(&-&eta, &f, Side::Minus).unwrap();
        prop_assert!((&plus + &minus).sup_norm() <= 1e-12 * (1.0 + minus.sup_norm()));
    }

    #[test]
    fn besov_norms_are_seminorms(seed in any::<u64>(), a in -3.0..3.0f64, s in 0.0..2.0f64) {
        let dn = solver();
        let p: &DyadicPartition = dn.partition();
        let (u, v) = sample(&dn, seed, 0.05);
        let nu = besov_norm(&u, s, p);
        prop_assert!((besov_norm(&u.scale(a), s, p) - a.abs() * nu).abs() <= 1e-12 * (1.0 + nu));
        prop_assert!(besov_norm(&(&u + &v), s, p) <= nu + besov_norm(&v, s, p) + 1e-12);
    }

    #[test]
    fn linear_flow_damps_every_mode(seed in any::<u64>(), t in 0.0..3.0f64, kappa in 0.1..4.0f64) {
        let g = TorusGrid::periodic_1d(32).unwrap();
        let dn = DnSolver::new(&g, DnConfig { z_nodes: 65, ..DnConfig::default() }).unwrap();
        let (eta, _) = sample(&dn, seed, 0.05);
        let ev = Evolution::new(dn, Problem::one_phase(PhysicalParams::one_phase(1.0, kappa).unwrap())).unwrap();
        let out = ev.linear_flow(&eta, t).unwrap();
        for (a, b) in out.coeffs().iter().zip(eta.coeffs()) {
            prop_assert!(a.norm() <= b.norm());
        }
    }

    #[test]
    fn two_phase_velocity_is_odd_at_leading_order(seed in any::<u64>()) {
        // rhs(-eta) = -rhs(eta) up to the quadratic remainder
        let dn = solver();
        let (eta, _) = sample(&dn, seed, 0.002);
        let params = PhysicalParams::new(0.5, 1.0, 1.0, 2.0).unwrap();
        let a = two_phase_rhs(&dn, &eta, &params, 1e-12).unwrap();
        let b = two_phase_rhs(&dn, &-&eta, &params, 1e-12).unwrap();
        prop_assert!((&a + &b).sup_norm() <= 0.05 * a.sup_norm());
    }
}
