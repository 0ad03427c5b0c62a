//! Independent checks: a finite-difference solve of the flattened elliptic
//! problem, and amplitude sweeps that fit nonlinearity orders.

mod fd;
mod probe;

pub use fd::{fd_dn, fd_harmonic_extension, FdSolution};
pub use probe::{epsilon_scaling_probe, epsilon_sweep, ProbeContext, ProbeKind, ProbeResult};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dn::{DnConfig, DnSolver, Side};
    use crate::evolution::{Evolution, PicardConfig, Problem};
    use crate::params::PhysicalParams;
    use crate::spectral::{SpectralField, TorusGrid};

    #[test]
    fn spectral_and_fd_agree() {
        let g = TorusGrid::periodic_1d(128).unwrap();
        let eta = SpectralField::from_fn(&g, |x| 0.05 * x[0].cos()).mean_free();
        let f = SpectralField::from_fn(&g, |x| (2.0 * x[0]).cos()).mean_free();
        let dn = DnSolver::new(&g, DnConfig { z_nodes: 513, ..DnConfig::default() }).unwrap();
        let spectral = dn.apply(&eta, &f, Side::Minus).unwrap();
        let fd = fd_dn(&eta, &f, 128, 128, 5.0).unwrap();
        let rel = (&spectral - &fd).sup_norm() / spectral.sup_norm();
        assert!(rel <= 5e-3, "relative gap {rel:e}");
    }

    fn context_evolution(params: PhysicalParams, two_phase: bool) -> Evolution {
        let g = TorusGrid::periodic_1d(64).unwrap();
        let dn = DnSolver::new(&g, DnConfig::default()).unwrap();
        let problem = if two_phase { Problem::two_phase(params, 1e-12) } else { Problem::one_phase(params) };
        Evolution::new(dn, problem).unwrap()
    }

    #[test]
    fn probes_fit_expected_orders() {
        let ev = context_evolution(PhysicalParams::one_phase(1.0, 1.0).unwrap(), false);
        let g = ev.dn().torus().clone();
        let base = SpectralField::from_fn(&g, |x| (2.0 * x[0]).cos() + 0.5 * (3.0 * x[0]).sin()).mean_free();
        let f = SpectralField::from_fn(&g, |x| x[0].cos() + 0.5 * (2.0 * x[0] + 0.3).sin()).mean_free();
        let ctx = ProbeContext {
            evolution: &ev,
            horizon: 0.5,
            picard: PicardConfig { k: 16, ..PicardConfig::default() },
            closure_tol: 1e-12,
        };
        let eps = [0.02, 0.01, 0.003, 0.001];
        let r = epsilon_scaling_probe(ProbeKind::RMinusLinearity, &eps, &base, &f, &ctx).unwrap();
        assert!((0.9..=1.1).contains(&r.slope), "{r:?}");
        let m = epsilon_scaling_probe(ProbeKind::MildDeviation, &eps, &base.scale(0.5), &f, &ctx).unwrap();
        assert!((1.9..=2.1).contains(&m.slope), "{m:?}");

        let ev2 = context_evolution(PhysicalParams::new(0.5, 1.0, 1.0, 2.0).unwrap(), true);
        let ctx2 = ProbeContext { evolution: &ev2, ..ctx };
        let c = epsilon_scaling_probe(ProbeKind::FMinusCorrection, &eps, &base, &f, &ctx2).unwrap();
        assert!((1.9..=2.1).contains(&c.slope), "{c:?}");
    }

    #[test]
    fn probe_preconditions() {
        let ev = context_evolution(PhysicalParams::one_phase(1.0, 1.0).unwrap(), false);
        let g = ev.dn().torus().clone();
        let base = SpectralField::from_fn(&g, |x| x[0].cos()).mean_free();
        let ctx = ProbeContext {
            evolution: &ev,
            horizon: 0.5,
            picard: PicardConfig::default(),
            closure_tol: 1e-12,
        };
        assert!(epsilon_scaling_probe(ProbeKind::RMinusLinearity, &[0.01, 0.02, 0.03], &base, &base, &ctx).is_err());
        assert!(epsilon_scaling_probe(ProbeKind::RMinusLinearity, &[0.01, 0.011, 0.012, 0.013], &base, &base, &ctx).is_err());
    }
}
