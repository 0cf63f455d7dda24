//! Experiment runners: law-of-large-numbers convergence sweeps and the
//! SJF vs SRPT agreement study.

use crate::config::{ExperimentConfig, FluidSolution};
use anyhow::{bail, Result};
use fluidq::sim::{scale_trace, simulate, verify_exact_identities, Policy, ScaledTrace};
use fluidq::{levy_distance, MeasurePath};
use serde::Serialize;

/// Slack factor for "nonincreasing" checks on medians across system sizes.
pub const MONOTONE_SLACK: f64 = 1.25;
/// Absolute floor below which monotonicity comparisons are considered noise.
const MONOTONE_FLOOR: f64 = 1e-9;

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `v` is nonincreasing up to a multiplicative slack and an absolute floor.
pub fn nonincreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2)
        .all(|w| w[1] <= slack * w[0] + MONOTONE_FLOOR)
}

/// Largest per-time Levy distance between two measure paths on the same
/// time grid.
pub fn sup_levy(a: &MeasurePath<f64>, b: &MeasurePath<f64>) -> f64 {
    assert_eq!(a.num_times(), b.num_times(), "time grids differ");
    (0..a.num_times())
        .map(|k| levy_distance(&a.measure_at_index(k), &b.measure_at_index(k)))
        .fold(0.0f64, f64::max)
}

/// Deterministic per-run seed; distinct across `(n index, replication)`.
pub fn run_seed(base: u64, n_index: usize, rep: u32) -> u64 {
    base.wrapping_add(1_000_000 * n_index as u64)
        .wrapping_add(rep as u64)
}

#[derive(Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub median_levy_xi: f64,
    pub median_sup_rho: f64,
    pub median_sup_e: f64,
    pub max_identity_residual: f64,
    pub identity_tol: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub policy: Policy,
    pub n_list: Vec<u64>,
    pub replications: u32,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    pub levy_monotone: bool,
    pub rho_monotone: bool,
    pub e_monotone: bool,
    pub identities_pass: bool,
    pub pass: bool,
}

/// Solve the fluid model once, simulate each `(n, replication)`, scale by
/// `1/n`, and summarize distances to the fluid solution.  A hard-EDF fluid
/// solution that fails certification aborts the run.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let fluid = cfg.solve_fluid()?;
    fluid.require_certified()?;
    let (t_m, x_m) = cfg.metric_grids();
    let fluid_xi = fluid.xi().resample(t_m.clone(), x_m.clone())?;
    let fluid_rho = fluid.rho().sample_on(&t_m)?;

    let mut rows = Vec::new();
    let mut identities_pass = true;
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let identity_tol = 1e-9 * n as f64;
        let mut levies = Vec::new();
        let mut rhos = Vec::new();
        let mut es = Vec::new();
        let mut max_resid = 0.0f64;
        for rep in 0..cfg.replications {
            let sim_cfg = cfg.sim_config(n, run_seed(cfg.seed, ni, rep));
            let trace = simulate(&sim_cfg)?;
            let report = verify_exact_identities(&trace, identity_tol)?;
            max_resid = max_resid.max(report.max_residual());
            if !report.passed() {
                identities_pass = false;
            }
            let scaled: ScaledTrace = scale_trace(&trace, &t_m, &x_m)?;
            levies.push(sup_levy(&scaled.xi, &fluid_xi));
            rhos.push(scaled.rho.sub(&fluid_rho).sup_norm());
            // vanishing pre-limit error: completion-count vs effort gap for
            // EDF, scaled in-service residual for the work policies
            if cfg.policy.is_edf() {
                es.push(scaled.e.sup_norm());
            } else {
                let j_sup = trace.residual.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                es.push(j_sup / n as f64);
            }
        }
        rows.push(ConvergenceRow {
            n,
            median_levy_xi: median(levies),
            median_sup_rho: median(rhos),
            median_sup_e: median(es),
            max_identity_residual: max_resid,
            identity_tol,
        });
    }

    let levy_monotone = nonincreasing(
        &rows.iter().map(|r| r.median_levy_xi).collect::<Vec<_>>(),
        MONOTONE_SLACK,
    );
    let rho_monotone = nonincreasing(
        &rows.iter().map(|r| r.median_sup_rho).collect::<Vec<_>>(),
        MONOTONE_SLACK,
    );
    let e_monotone = nonincreasing(
        &rows.iter().map(|r| r.median_sup_e).collect::<Vec<_>>(),
        MONOTONE_SLACK,
    );
    let pass = levy_monotone && rho_monotone && e_monotone && identities_pass;
    Ok(ConvergenceReport {
        policy: cfg.policy,
        n_list: cfg.n_list.clone(),
        replications: cfg.replications,
        seed: cfg.seed,
        rows,
        levy_monotone,
        rho_monotone,
        e_monotone,
        identities_pass,
        pass,
    })
}

#[derive(Debug, Serialize)]
pub struct AgreementRow {
    pub n: u64,
    pub median_gap: f64,
}

#[derive(Debug, Serialize)]
pub struct AgreementReport {
    pub n_list: Vec<u64>,
    pub replications: u32,
    pub seed: u64,
    pub rows: Vec<AgreementRow>,
    pub gap_monotone: bool,
    pub pass: bool,
}

/// Pair SJF and SRPT on identical arrival streams (same seed) and measure
/// the gap between their scaled workload measures; the two policies share a
/// fluid limit, so the gap should shrink with `n`.
pub fn run_agreement(cfg: &ExperimentConfig) -> Result<AgreementReport> {
    if cfg.is_edf() {
        bail!("agreement runs need a job-size (SJF/SRPT) configuration");
    }
    let (t_m, x_m) = cfg.metric_grids();
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let mut gaps = Vec::new();
        for rep in 0..cfg.replications {
            let seed = run_seed(cfg.seed, ni, rep);
            let mut cfg_sjf = cfg.sim_config(n, seed);
            cfg_sjf.policy = Policy::Sjf;
            let mut cfg_srpt = cfg.sim_config(n, seed);
            cfg_srpt.policy = Policy::Srpt;
            let a = scale_trace(&simulate(&cfg_sjf)?, &t_m, &x_m)?;
            let b = scale_trace(&simulate(&cfg_srpt)?, &t_m, &x_m)?;
            gaps.push(sup_levy(&a.xi, &b.xi));
        }
        rows.push(AgreementRow {
            n,
            median_gap: median(gaps),
        });
    }
    let gap_monotone = nonincreasing(
        &rows.iter().map(|r| r.median_gap).collect::<Vec<_>>(),
        MONOTONE_SLACK,
    );
    Ok(AgreementReport {
        n_list: cfg.n_list.clone(),
        replications: cfg.replications,
        seed: cfg.seed,
        rows,
        gap_monotone,
        pass: gap_monotone,
    })
}

pub use crate::config::FluidSolution as Fluid;

/// Summary of one fluid solve, written alongside the CSV outputs.
#[derive(Debug, Serialize)]
pub struct FluidReport {
    pub certified: Option<bool>,
    pub mvsp_residual: Option<f64>,
    pub expired_mass: Option<f64>,
    pub renege_mismatch: Option<f64>,
    pub final_rho: f64,
    pub final_queue_mass: f64,
    pub final_iota: f64,
}

pub fn fluid_report(sol: &FluidSolution) -> FluidReport {
    let cert = match sol {
        FluidSolution::Edf(s) => Some(&s.cert),
        _ => None,
    };
    let xi = sol.xi();
    FluidReport {
        certified: cert.map(|c| c.certified()),
        mvsp_residual: cert.map(|c| c.mvsp_residual),
        expired_mass: cert.map(|c| c.expired_mass),
        renege_mismatch: cert.map(|c| c.renege_mismatch),
        final_rho: sol.rho().last_value(),
        final_queue_mass: *xi.row(xi.num_times() - 1).last().unwrap_or(&0.0),
        final_iota: sol.iota().last_value(),
    }
}
