use std::path::{Path, PathBuf};

use muskat_core::besov::{abs_d_b0, besov_norm};
use muskat_core::config::{Eta0Spec, RunConfig};
use muskat_core::dn::{strip_csv, DnSolver};
use muskat_core::evolution::{Evolution, ProblemKind};
use muskat_core::oracle::fd_dn;
use muskat_core::spectral::{SpectralField, TorusGrid};
use muskat_core::two_phase::{flux_check, solve_f_minus, two_phase_rhs_forms};
use muskat_core::verify::run_verify;
use muskat_core::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{Cli, Command};

const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.json");

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SMALLNESS: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::InvalidGrid(_) | Error::UnsupportedDimension(_) => EXIT_CONFIG,
            Error::SmallnessViolated { .. } | Error::DataTooLarge { .. } | Error::DenominatorTooSmall { .. } => EXIT_SMALLNESS,
            _ => EXIT_CHECK,
        };
        Self::new(code, e.to_string())
    }
}

type Outcome = Result<(), CliError>;

struct Context {
    cfg: RunConfig,
    base: PathBuf,
    out: PathBuf,
    dump_strip: bool,
    quiet: bool,
}

impl Context {
    fn load(cli: &Cli) -> Result<Self, CliError> {
        let (mut cfg, base) = match &cli.config {
            Some(path) => (
                RunConfig::from_path(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (RunConfig::from_json(DEFAULT_CONFIG)?, PathBuf::new()),
        };
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &cli.out {
            cfg.output_dir = out.display().to_string();
        }
        cfg.validate()?;
        Ok(Self {
            out: PathBuf::from(&cfg.output_dir),
            cfg,
            base,
            dump_strip: cli.dump_strip,
            quiet: cli.quiet,
        })
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        std::fs::create_dir_all(&self.out)
            .and_then(|_| std::fs::write(self.out.join(name), contents))
            .map_err(|e| CliError::new(EXIT_CHECK, format!("cannot write {}: {e}", self.out.join(name).display())))
    }

    fn write_json(&self, name: &str, value: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(value).expect("json values always serialize");
        self.write(name, &(text + "\n"))
    }

    fn solver(&self) -> Result<DnSolver, CliError> {
        Ok(DnSolver::new(&self.cfg.grid()?, self.cfg.dn_config())?)
    }

    fn dump(&self, dn: &DnSolver, eta: &SpectralField, f: &SpectralField) -> Outcome {
        if !self.dump_strip {
            return Ok(());
        }
        let pot = dn.solve_potential(eta, f)?;
        self.write("strip.csv", &strip_csv(&["v", "w", "h"], &[&pot.v, &pot.w, &pot.h])?)
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::DnCheck => dn_check(&ctx),
        Command::Evolve => evolve(&ctx).map(|_| ()),
        Command::TwoPhase => two_phase(&ctx),
        Command::Besov { field } => besov(&ctx, field.as_deref()),
        Command::Verify { only } => verify(&ctx, only),
    }
}

fn failed(what: &str) -> CliError {
    CliError::new(EXIT_CHECK, format!("{what} failed; see the report"))
}

/// Boundary data for the DN table: a few resolved modes along the first axis
/// (and a diagonal one in 2-D).
fn test_functions(grid: &TorusGrid) -> Result<Vec<(String, SpectralField)>, CliError> {
    let d = grid.dim();
    let along = |k: i64| {
        let mut v = vec![0; d];
        v[0] = k;
        v
    };
    let mut sets: Vec<(String, Vec<(Vec<i64>, f64, f64)>)> = vec![
        ("cos(x)".into(), vec![(along(1), 1.0, 0.0)]),
        ("cos(2x) + 0.5 sin(3x)".into(), vec![(along(2), 1.0, 0.0), (along(3), 0.5, -std::f64::consts::FRAC_PI_2)]),
        ("cos(4x + 0.4)".into(), vec![(along(4), 1.0, 0.4)]),
    ];
    if d == 2 {
        sets.push(("cos(x + y)".into(), vec![(vec![1, 1], 1.0, 0.0)]));
    }
    let limit = grid.n() as f64 / 3.0;
    sets.into_iter()
        .filter(|(_, modes)| modes.iter().all(|(k, _, _)| k.iter().all(|&c| (c.abs() as f64) < limit)))
        .map(|(name, modes)| Ok((name, SpectralField::from_modes(grid, &modes)?)))
        .collect()
}

const FD_NZ: usize = 256;
const FD_DEPTH: f64 = 5.0;

fn dn_check(ctx: &Context) -> Outcome {
    let dn = ctx.solver()?;
    let grid = dn.torus().clone();
    let eta = ctx.cfg.eta0(&ctx.base)?;
    let fs = test_functions(&grid)?;
    if let Some((_, f)) = fs.first() {
        ctx.dump(&dn, &eta, f)?;
    }
    let fd_grid = if grid.dim() == 1 { Some(grid.with_n(grid.n().max(256))?) } else { None };
    let rows = fs
        .par_iter()
        .map(|(name, f)| -> Result<Value, CliError> {
            let pot = dn.solve_potential(&eta, f)?;
            let flat = dn.abs_d(f);
            let g = &flat + &pot.remainder();
            let integral = &flat + &dn.remainder_integral(&pot);
            let fd_gap = match &fd_grid {
                Some(fg) => {
                    let fd = fd_dn(&eta, f, fg.n(), FD_NZ, FD_DEPTH)?;
                    let g_fine = g.resample(fg)?;
                    Some((&g_fine - &fd).sup_norm() / g_fine.sup_norm())
                }
                None => None,
            };
            Ok(json!({
                "f": name,
                "iterations": pot.iterations,
                "contraction_ratio": pot.contraction_ratio,
                "sup_dn": g.sup_norm(),
                "remainder_forms_gap": (&g - &integral).sup_norm(),
                "direct_trace_gap": (&g - &pot.direct_dn()).sup_norm(),
                "flat_gap": (&g - &flat).sup_norm(),
                "fd_relative_gap": fd_gap,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let col = |key: &str| rows.iter().filter_map(|r| r[key].as_f64()).fold(0.0, f64::max);
    let scale = col("sup_dn").max(1.0);
    let max_error = col("remainder_forms_gap");
    let max_fd = col("fd_relative_gap");
    let passed = max_error <= 1e-10 * scale && max_fd <= 5e-3;
    ctx.write_json(
        "run-summary.json",
        &json!({
            "subcommand": "dn-check",
            "config": ctx.cfg,
            "eta0_abs_d_b0": abs_d_b0(&eta, dn.partition()),
            "fd": fd_grid.as_ref().map(|g| json!({"nx": g.n(), "nz": FD_NZ, "depth": FD_DEPTH})),
            "rows": rows,
            "max_error": max_error,
            "max_fd_relative_gap": fd_grid.as_ref().map(|_| max_fd),
            "passed": passed,
        }),
    )?;
    ctx.say(format!("dn-check: max error {max_error:.3e}, max oracle gap {max_fd:.3e}"));
    if passed {
        Ok(())
    } else {
        Err(failed("dn-check"))
    }
}

/// Global Picard run; writes norms.csv and returns the summary fields.
fn evolution_summary(ctx: &Context, dn: DnSolver, eta: &SpectralField) -> Result<(Value, bool), CliError> {
    let cfg = &ctx.cfg;
    let ev = Evolution::new(dn, cfg.problem())?;
    let picard = cfg.picard_config()?;
    let path = ev.solve_global_picard(eta, cfg.t, &picard)?;
    let size = besov_norm(eta, 1.0, ev.dn().partition());
    let accepted = path.contraction_ratio <= 0.5 && path.x1_kappa() <= 2.2 * size;
    ctx.write("norms.csv", &path.report.to_csv())?;
    ctx.say(format!(
        "{} sweeps, contraction ratio {:.3e}, X1_kappa {:.6e} (data {:.6e})",
        path.iterations,
        path.contraction_ratio,
        path.x1_kappa(),
        size
    ));
    Ok((
        json!({
            "problem": cfg.problem,
            "N": cfg.n,
            "K": picard.k,
            "T": cfg.t,
            "kappa": ev.kappa(),
            "delta": picard.delta,
            "iterations": path.iterations,
            "contraction_ratio": path.contraction_ratio,
            "picard_history": path.history,
            "eta0_b1": size,
            "x1_kappa_final": path.x1_kappa(),
            "accepted": accepted,
        }),
        accepted,
    ))
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

fn evolve(ctx: &Context) -> Outcome {
    let dn = ctx.solver()?;
    let eta = ctx.cfg.eta0(&ctx.base)?;
    ctx.dump(&dn, &eta, &eta)?;
    let (summary, accepted) = evolution_summary(ctx, dn, &eta)?;
    ctx.write_json(
        "run-summary.json",
        &merge(json!({"subcommand": "evolve", "config": ctx.cfg}), summary),
    )?;
    if accepted {
        Ok(())
    } else {
        Err(failed("evolve"))
    }
}

fn two_phase(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg;
    if cfg.problem != ProblemKind::TwoPhase {
        return Err(CliError::new(EXIT_CONFIG, "two-phase needs \"problem\": \"two_phase\""));
    }
    let dn = ctx.solver()?;
    let eta = cfg.eta0(&ctx.base)?;
    ctx.dump(&dn, &eta, &eta)?;
    let tol = cfg.tolerances.dn_tol;
    let p = cfg.params;
    let state = solve_f_minus(&dn, &eta, &p, tol, 100)?;
    let flux = flux_check(&dn, &state)?;
    let flux_allowed = 10.0 * tol * (1.0 + p.mu_minus / p.mu_plus) * flux.scale;
    let forms = two_phase_rhs_forms(&dn, &eta, &p, tol)?;
    let closure_ok = flux.mismatch <= flux_allowed && forms.mismatch <= forms.allowed;
    ctx.say(format!(
        "closure: {} iterations, ratio {:.3e}, flux mismatch {:.3e}, rhs forms mismatch {:.3e}",
        state.iterations, state.contraction_ratio, flux.mismatch, forms.mismatch
    ));
    let closure = json!({
        "iterations": state.iterations,
        "residual": state.residual,
        "contraction_ratio": state.contraction_ratio,
        "bound_ratio": state.bound_ratio,
        "kappa_eff": state.kappa_eff,
        "f_minus_b1": besov_norm(&state.f_minus, 1.0, dn.partition()),
        "f_plus_b1": besov_norm(&state.f_plus, 1.0, dn.partition()),
        "flux_mismatch": flux.mismatch,
        "flux_allowed": flux_allowed,
        "rhs_forms_mismatch": forms.mismatch,
        "rhs_forms_allowed": forms.allowed,
        "passed": closure_ok,
    });
    let (summary, accepted) = evolution_summary(ctx, dn, &eta)?;
    ctx.write_json(
        "run-summary.json",
        &merge(json!({"subcommand": "two-phase", "config": cfg, "closure": closure}), summary),
    )?;
    if closure_ok && accepted {
        Ok(())
    } else {
        Err(failed("two-phase"))
    }
}

fn besov(ctx: &Context, field: Option<&Path>) -> Outcome {
    let (u, source) = match field {
        Some(path) => {
            let mut cfg = ctx.cfg.clone();
            cfg.eta0 = Eta0Spec::File(path.display().to_string());
            (cfg.eta0(Path::new(""))?, path.display().to_string())
        }
        None => (ctx.cfg.eta0(&ctx.base)?, "eta0".to_string()),
    };
    let dn = ctx.solver()?;
    let p = dn.partition();
    let norms: Vec<f64> = [0.0, 1.0, 2.0].iter().map(|&s| besov_norm(&u, s, p)).collect();
    ctx.write_json(
        "run-summary.json",
        &json!({
            "subcommand": "besov",
            "config": ctx.cfg,
            "source": source,
            "b0": norms[0],
            "b1": norms[1],
            "b2": norms[2],
            "abs_d_b0": abs_d_b0(&u, p),
            "sup": u.sup_norm(),
            "blocks": p.blocks().collect::<Vec<_>>(),
            "block_sup_norms": p.block_sup_norms(&u),
        }),
    )?;
    ctx.say(format!("B0 {:.6e}  B1 {:.6e}  B2 {:.6e}", norms[0], norms[1], norms[2]));
    Ok(())
}

fn verify(ctx: &Context, only: &[u8]) -> Outcome {
    let report = run_verify(only, &ctx.cfg.verify_settings())?;
    for c in &report.criteria {
        ctx.say(format!(
            "criterion {:>2} {:<28} {}{}",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default()
        ));
    }
    ctx.write_json("verify-report.json", &json!({"config": ctx.cfg, "report": report}))?;
    if report.all_passed {
        Ok(())
    } else {
        Err(CliError::new(EXIT_CHECK, format!("{} of {} criteria failed", report.failed, report.criteria.len())))
    }
}
