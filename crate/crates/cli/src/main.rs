use anyhow::Result;
use clap::{Parser, Subcommand};
use fluidq::sim::{simulate, verify_exact_identities};
use fluidq_cli::{
    fluid_report, run_agreement, run_convergence, run_figure1, ExperimentConfig,
};
use std::fs::File;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "fluidq", version, about = "Priority-queue fluid models and their pre-limit systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the fluid model from a TOML config and write CSV/JSON outputs.
    FluidSolve {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Certification tolerance override.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Simulate one pre-limit system and write job and state traces.
    Simulate {
        config: PathBuf,
        /// System size; defaults to the first entry of n_list.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check the exact path identities on one simulated trace.
    Verify {
        config: PathBuf,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Identity tolerance override (absolute; default 1e-9 * n).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Law-of-large-numbers convergence sweep over n_list.
    Converge {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Same-seed SJF vs SRPT agreement study.
    Agreement {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Preset switching-arrival workload with lead-time histograms.
    Figure1 {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>, tol: Option<f64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol {
        cfg.tol = Some(t);
    }
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(out: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(out.join(name), json)?;
    Ok(())
}

fn run() -> Result<bool> {
    match Cli::parse().cmd {
        Cmd::FluidSolve { config, out, tol } => {
            let cfg = load(&config, None, tol)?;
            let sol = cfg.solve_fluid()?;
            std::fs::create_dir_all(&out)?;
            sol.xi().write_csv(&mut File::create(out.join("xi.csv"))?)?;
            sol.rho().write_csv(&mut File::create(out.join("rho.csv"))?)?;
            sol.iota()
                .write_csv(&mut File::create(out.join("iota.csv"))?)?;
            let report = fluid_report(&sol);
            write_json(&out, "report.json", &report)?;
            let ok = report.certified.unwrap_or(true);
            println!(
                "{} fluid solve (final queue mass {:.6}, final rho {:.6})",
                if ok { "PASS" } else { "FAIL" },
                report.final_queue_mass,
                report.final_rho
            );
            Ok(ok)
        }
        Cmd::Simulate {
            config,
            n,
            seed,
            out,
        } => {
            let cfg = load(&config, seed, None)?;
            let n = n.unwrap_or(cfg.n_list[0]);
            let trace = simulate(&cfg.sim_config(n, cfg.seed))?;
            std::fs::create_dir_all(&out)?;
            trace.write_jobs_csv(&mut File::create(out.join("jobs.csv"))?)?;
            trace.write_state_csv(&mut File::create(out.join("state.csv"))?)?;
            let report = verify_exact_identities(&trace, 1e-9 * n as f64)?;
            println!(
                "{} simulate n={} seed={} ({} jobs, max identity residual {:.3e})",
                if report.passed() { "PASS" } else { "FAIL" },
                n,
                cfg.seed,
                trace.jobs.len(),
                report.max_residual()
            );
            Ok(report.passed())
        }
        Cmd::Verify {
            config,
            n,
            seed,
            tol,
        } => {
            let cfg = load(&config, seed, None)?;
            let n = n.unwrap_or(cfg.n_list[0]);
            let trace = simulate(&cfg.sim_config(n, cfg.seed))?;
            let report = verify_exact_identities(&trace, tol.unwrap_or(1e-9 * n as f64))?;
            println!("{:#?}", report);
            println!(
                "{} verify n={} seed={}",
                if report.passed() { "PASS" } else { "FAIL" },
                n,
                cfg.seed
            );
            Ok(report.passed())
        }
        Cmd::Converge { config, seed, out } => {
            let cfg = load(&config, seed, None)?;
            let report = run_convergence(&cfg)?;
            write_json(&out, "report.json", &report)?;
            for row in &report.rows {
                println!(
                    "n={:<6} median d_L {:.5}  median sup|rho - rho_fluid| {:.5}  median sup|e| {:.5}",
                    row.n, row.median_levy_xi, row.median_sup_rho, row.median_sup_e
                );
            }
            println!("{} converge", if report.pass { "PASS" } else { "FAIL" });
            Ok(report.pass)
        }
        Cmd::Agreement { config, seed, out } => {
            let cfg = load(&config, seed, None)?;
            let report = run_agreement(&cfg)?;
            write_json(&out, "report.json", &report)?;
            for row in &report.rows {
                println!("n={:<6} median SJF/SRPT gap {:.5}", row.n, row.median_gap);
            }
            println!("{} agreement", if report.pass { "PASS" } else { "FAIL" });
            Ok(report.pass)
        }
        Cmd::Figure1 { seed, out } => {
            let report = run_figure1(seed, &out)?;
            for e in &report.epochs {
                println!(
                    "epoch {:>5}: {} queued, {} recently admitted -> {}",
                    e.epoch, e.queued_jobs, e.recently_admitted, e.file
                );
            }
            println!("PASS figure1 (non-gating)");
            Ok(true)
        }
    }
}

fn main() {
    match run() {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
