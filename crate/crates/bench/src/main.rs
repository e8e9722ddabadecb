use clap::{Args, Parser, Subcommand};
use expint::harness::{
    check_jacobian, check_order_conditions, order_conditions_table, ratios_to_csv, rows_to_csv, run_convergence_study, run_efficiency_study,
    run_single, HarnessError, StudyConfig, JACOBIAN_FAIL_THRESHOLD,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Convergence, efficiency and verification studies for the exponential
/// integrators.
#[derive(Parser)]
#[command(name = "expint-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` study file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Engine tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Error against step size with fitted orders.
    Converge(Common),
    /// Errors, timings and step-size ratios at error thresholds.
    Efficiency(Common),
    /// One integration with per-step diagnostics.
    Run(Common),
    /// Finite-difference check of the shallow-water Jacobian.
    CheckJacobian(Common),
    /// Stiff order-condition residuals on random matrices.
    OrderConditions {
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(c: &Common, fallback: &str) -> Result<StudyConfig, HarnessError> {
    let text = match &c.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| HarnessError::Invalid(format!("reading {}: {e}", p.display())))?,
        None => fallback.to_string(),
    };
    let mut cfg = StudyConfig::parse(&text)?;
    if let Some(t) = c.tol {
        cfg.set("tol", t)?;
    }
    if let Some(s) = c.seed {
        cfg.set("seed", s)?;
    }
    if let Some(o) = &c.out {
        cfg.set("out", o.display())?;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn sibling(out: Option<&Path>, suffix: &str) -> Option<PathBuf> {
    out.map(|p| {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        p.with_file_name(format!("{stem}{suffix}"))
    })
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Converge(c) => {
            let cfg = load(&c, "")?;
            let r = run_convergence_study(&cfg)?;
            emit(cfg.out.as_deref(), &rows_to_csv(&r.rows))?;
            eprint!("{}", r.summary());
            Ok(true)
        }
        Command::Efficiency(c) => {
            let cfg = load(&c, "")?;
            let r = run_efficiency_study(&cfg)?;
            emit(cfg.out.as_deref(), &rows_to_csv(&r.rows))?;
            let ratios = ratios_to_csv(&r.ratios, cfg.baseline);
            match sibling(cfg.out.as_deref(), "_ratios.csv") {
                Some(p) => emit(Some(&p), &ratios)?,
                None => eprint!("{ratios}"),
            }
            Ok(true)
        }
        Command::Run(c) => {
            let cfg = load(&c, "")?;
            let r = run_single(&cfg)?;
            emit(cfg.out.as_deref(), &r.csv)?;
            eprintln!("{} dt = {} steps = {} matvecs = {}", r.scheme, r.dt, r.steps, r.matvecs);
            if let Some(e) = r.error_linf {
                eprintln!("error_linf = {e:e}");
            }
            if let Some(d) = r.max_drift {
                eprintln!("max drift: mass {:e} energy {:e} enstrophy {:e}", d.mass, d.energy, d.enstrophy);
            }
            Ok(true)
        }
        Command::CheckJacobian(c) => {
            let cfg = load(&c, "problem = swe_planar")?;
            let r = check_jacobian(&cfg)?;
            let mut text = String::from("state,direction,rel_error\n");
            for (name, rep) in [("rest", &r.rest), ("smooth", &r.smooth)] {
                for (i, e) in rep.errors.iter().enumerate() {
                    text.push_str(&format!("{name},{i},{e:e}\n"));
                }
            }
            emit(cfg.out.as_deref(), &text)?;
            eprintln!(
                "max relative error: rest {:e}, smooth {:e} (limit {:e})",
                r.rest.max_rel_error, r.smooth.max_rel_error, JACOBIAN_FAIL_THRESHOLD
            );
            Ok(r.passed())
        }
        Command::OrderConditions { samples, seed, out } => {
            let rows = check_order_conditions(samples, seed)?;
            emit(out.as_deref(), &order_conditions_table(&rows))?;
            Ok(rows.iter().all(|r| r.passed()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
