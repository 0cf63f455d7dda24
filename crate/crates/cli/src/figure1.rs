//! Preset workload: hard EDF under a periodically switching arrival pattern,
//! with lead-time histograms of queued vs recently admitted jobs.
//!
//! The pattern alternates every 200 time units between rate 100 with
//! uniform [50, 299] relative deadlines and rate 50 with uniform [600, 849]
//! deadlines (period 400).  The server works at 60 effort units per unit
//! time and every job needs one unit of effort, so service completes 60
//! jobs per unit time when busy.

use anyhow::Result;
use fluidq::fluid::{MarkLaw, Piecewise};
use fluidq::sim::{simulate, Policy, ServiceLaw, SimConfig, SimTrace};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const EPOCHS: [f64; 3] = [150.0, 210.0, 350.0];
const HORIZON: f64 = 460.0;
/// Admissions inside `(t - WINDOW, t]` count as "recently sent to service".
const WINDOW: f64 = 1.0;
const BIN_WIDTH: f64 = 25.0;
const LEAD_MIN: f64 = -100.0;
const LEAD_MAX: f64 = 900.0;

pub fn preset_config(seed: u64) -> SimConfig {
    let tight = MarkLaw::Uniform {
        low: 50.0,
        high: 299.0,
    };
    let loose = MarkLaw::Uniform {
        low: 600.0,
        high: 849.0,
    };
    SimConfig {
        n: 1,
        policy: Policy::EdfHard,
        horizon: HORIZON,
        lambda: Piecewise::new(vec![0.0, 200.0, 400.0], vec![100.0, 50.0, 100.0]).unwrap(),
        mark: tight.clone(),
        service: ServiceLaw::Deterministic,
        mark_phases: vec![(200.0, loose), (400.0, tight)],
        m: Piecewise::constant(60.0),
        mu0_jumps: vec![],
        initial_mass: 0.0,
        deadline_shift: 0.0,
        seed,
    }
}

#[derive(Debug, Serialize)]
pub struct EpochSummary {
    pub epoch: f64,
    pub file: String,
    pub queued_jobs: usize,
    pub recently_admitted: usize,
    pub min_queued_lead: Option<f64>,
    pub max_admitted_lead: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Figure1Report {
    pub seed: u64,
    pub total_jobs: usize,
    pub reneged_jobs: usize,
    pub epochs: Vec<EpochSummary>,
    pub pass: bool,
}

fn write_epoch_csv(trace: &SimTrace, epoch: f64, path: &Path) -> Result<EpochSummary> {
    let mut queued = Vec::new();
    let mut admitted = Vec::new();
    for j in &trace.jobs {
        if j.arrival <= epoch {
            let leave = j.admit.or(j.renege).unwrap_or(f64::INFINITY);
            if leave > epoch {
                queued.push(j.mark - epoch);
            }
        }
        if let Some(a) = j.admit {
            if a <= epoch && a > epoch - WINDOW {
                admitted.push(j.mark - a);
            }
        }
    }

    let bins = ((LEAD_MAX - LEAD_MIN) / BIN_WIDTH) as usize;
    let mut q_counts = vec![0u64; bins];
    let mut a_counts = vec![0u64; bins];
    let bin_of = |lead: f64| {
        (((lead - LEAD_MIN) / BIN_WIDTH) as usize).min(bins - 1)
    };
    for &l in &queued {
        q_counts[bin_of(l)] += 1;
    }
    for &l in &admitted {
        a_counts[bin_of(l)] += 1;
    }

    let mut f = std::fs::File::create(path)?;
    writeln!(f, "lead_low,lead_high,queued,recently_admitted")?;
    for b in 0..bins {
        writeln!(
            f,
            "{},{},{},{}",
            LEAD_MIN + b as f64 * BIN_WIDTH,
            LEAD_MIN + (b + 1) as f64 * BIN_WIDTH,
            q_counts[b],
            a_counts[b]
        )?;
    }

    Ok(EpochSummary {
        epoch,
        file: path.file_name().unwrap().to_string_lossy().into_owned(),
        queued_jobs: queued.len(),
        recently_admitted: admitted.len(),
        min_queued_lead: queued.iter().copied().min_by(f64::total_cmp),
        max_admitted_lead: admitted.iter().copied().max_by(f64::total_cmp),
    })
}

/// Run the preset and write one histogram CSV per epoch plus a JSON summary.
/// Not a gating experiment; `pass` only records that the outputs exist.
pub fn run_figure1(seed: u64, out_dir: &Path) -> Result<Figure1Report> {
    std::fs::create_dir_all(out_dir)?;
    let cfg = preset_config(seed);
    let trace = simulate(&cfg)?;
    let mut epochs = Vec::new();
    for &e in &EPOCHS {
        let path = out_dir.join(format!("figure1_leadtimes_t{}.csv", e as u64));
        epochs.push(write_epoch_csv(&trace, e, &path)?);
    }
    let report = Figure1Report {
        seed,
        total_jobs: trace.jobs.len(),
        reneged_jobs: trace.jobs.iter().filter(|j| j.renege.is_some()).count(),
        epochs,
        pass: true,
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("figure1_report.json"), json)?;
    Ok(report)
}
