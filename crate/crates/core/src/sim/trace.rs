//! Recorded runs: event-grid state, measure-path reconstruction, exact
//! identity verification against the measure-valued map, and fluid scaling.

use super::{JobRecord, Policy, SimConfig};
use crate::error::Result;
use crate::measure_path::MeasurePath;
use crate::mvsm::theta;
use crate::step_path::StepPath;
use std::io::Write;

/// One run: job lifetimes plus scalar state sampled at every event time.
/// All cumulative arrays are exactly nondecreasing.
#[derive(Clone, Debug)]
pub struct SimTrace {
    pub config: SimConfig,
    pub jobs: Vec<JobRecord>,
    pub times: Vec<f64>,
    /// Delivered effort `T^N`.
    pub effort: Vec<f64>,
    /// Unused effort `iota^N`.
    pub iota: Vec<f64>,
    /// Admission count.
    pub admitted: Vec<f64>,
    /// Total initial work admitted (work policies).
    pub adm_work: Vec<f64>,
    /// Renege count `rho^N`.
    pub rho: Vec<f64>,
    /// Remaining work of the job in service, `J^N`.
    pub residual: Vec<f64>,
    pub busy: Vec<f64>,
}

impl SimTrace {
    pub(super) fn assemble(config: SimConfig, jobs: Vec<JobRecord>, s: super::engine::Snaps) -> Self {
        SimTrace {
            config,
            jobs,
            times: s.times,
            effort: s.effort,
            iota: s.iota,
            admitted: s.admitted,
            adm_work: s.adm_work,
            rho: s.rho,
            residual: s.residual,
            busy: s.busy,
        }
    }

    fn path(&self, values: &[f64]) -> StepPath<f64> {
        StepPath::new(self.times.clone(), values.to_vec()).unwrap()
    }

    pub fn rho_path(&self) -> StepPath<f64> {
        self.path(&self.rho)
    }

    pub fn iota_path(&self) -> StepPath<f64> {
        self.path(&self.iota)
    }

    /// Completion-vs-effort error `e^N = beta^s[0,inf) - T^N` (EDF).
    pub fn e_values(&self) -> Vec<f64> {
        self.admitted
            .iter()
            .zip(&self.effort)
            .map(|(a, t)| a - t)
            .collect()
    }

    pub fn e_path(&self) -> StepPath<f64> {
        self.path(&self.e_values())
    }

    /// Per-job lifetimes, CSV.
    pub fn write_jobs_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "id,arrival,mark,requirement,admit,depart,renege")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for j in &self.jobs {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                j.id,
                j.arrival,
                j.mark,
                opt(j.requirement),
                opt(j.admit),
                opt(j.depart),
                opt(j.renege)
            )?;
        }
        Ok(())
    }

    /// Scalar state on the event grid, CSV.
    pub fn write_state_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,effort,iota,admitted,adm_work,rho,residual,busy")?;
        for k in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.times[k],
                self.effort[k],
                self.iota[k],
                self.admitted[k],
                self.adm_work[k],
                self.rho[k],
                self.residual[k],
                self.busy[k]
            )?;
        }
        Ok(())
    }
}

/// Distinct mark values with 0 prepended, as a support grid.
fn support_grid(marks: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = marks.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    if v.first() != Some(&0.0) {
        v.insert(0, 0.0);
    }
    v
}

/// Span of one contribution: weight `w` at location `x` during `[start, end)`.
type Span = (f64, f64, f64, f64);

/// Assemble a measure path from spans.  Each row is rebuilt from scratch as
/// a prefix sum of nonnegative bin masses, so rows are valid CDFs exactly.
fn build_path(times: &[f64], support: &[f64], items: &[Span]) -> Result<MeasurePath<f64>> {
    let j_len = support.len();
    let j_of: Vec<usize> = items
        .iter()
        .map(|it| support.partition_point(|&x| x < it.2).min(j_len - 1))
        .collect();
    let mut cdf = vec![0.0; times.len() * j_len];
    let mut bins = vec![0.0; j_len];
    for (k, &t) in times.iter().enumerate() {
        bins.iter_mut().for_each(|b| *b = 0.0);
        for (it, &j) in items.iter().zip(&j_of) {
            if it.0 <= t && t < it.1 {
                bins[j] += it.3;
            }
        }
        let mut acc = 0.0;
        for j in 0..j_len {
            acc += bins[j];
            cdf[k * j_len + j] = acc;
        }
    }
    MeasurePath::new(times.to_vec(), support.to_vec(), cdf)
}

const INF: f64 = f64::INFINITY;

/// Residuals of the pre-limit path identities, each a max over the event
/// grid (and support grid where applicable).  Fields not applicable to the
/// trace's policy are zero.
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    /// EDF queue balance: `xi[0,x] = alpha[0,x] - beta^s[0,x] - rho(t /\ x)`.
    pub queue_balance: f64,
    /// Hard EDF: no queued mass at or below the clock.
    pub expired_zero: f64,
    /// Total balance: `beta[0,inf) + iota = mu + rho + e`.
    pub total_balance: f64,
    /// Renege locations: `beta^r[0,x] = rho(t /\ x)`.
    pub renege_locations: f64,
    /// Workload balance: `xi^w = alpha^w - beta^w`.
    pub work_balance: f64,
    /// Server workload: `beta^w[0,inf) = T + J - J(0)`.
    pub server_work: f64,
    /// Gap to the measure-valued map re-solved on the event grid.
    pub theta_gap: f64,
    pub tol: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.queue_balance
            .max(self.expired_zero)
            .max(self.total_balance)
            .max(self.renege_locations)
            .max(self.work_balance)
            .max(self.server_work)
            .max(self.theta_gap)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() <= self.tol
    }
}

/// Check every identity the policy is subject to, re-solving the
/// measure-valued map on the exact event grid.
pub fn verify_exact_identities(trace: &SimTrace, tol: f64) -> Result<IdentityReport> {
    let mut rep = IdentityReport {
        tol,
        ..Default::default()
    };
    match trace.config.policy {
        Policy::EdfHard | Policy::EdfSoft => verify_edf(trace, &mut rep)?,
        Policy::Sjf => verify_work(trace, &mut rep, true)?,
        Policy::Srpt => verify_work(trace, &mut rep, false)?,
    }
    Ok(rep)
}

fn verify_edf(trace: &SimTrace, rep: &mut IdentityReport) -> Result<()> {
    let times = &trace.times;
    let support = support_grid(trace.jobs.iter().map(|j| j.mark));
    let j_len = support.len();
    let top = j_len - 1;

    let span = |start: Option<f64>, end: f64, j: &JobRecord| (start.unwrap_or(INF), end, j.mark, 1.0);
    let alpha_items: Vec<Span> = trace.jobs.iter().map(|j| span(Some(j.arrival), INF, j)).collect();
    let beta_s_items: Vec<Span> = trace.jobs.iter().map(|j| span(j.admit, INF, j)).collect();
    let beta_r_items: Vec<Span> = trace.jobs.iter().map(|j| span(j.renege, INF, j)).collect();
    let xi_items: Vec<Span> = trace
        .jobs
        .iter()
        .map(|j| span(Some(j.arrival), j.admit.or(j.renege).unwrap_or(INF), j))
        .collect();

    let alpha = build_path(times, &support, &alpha_items)?;
    let beta_s = build_path(times, &support, &beta_s_items)?;
    let beta_r = build_path(times, &support, &beta_r_items)?;
    let xi = build_path(times, &support, &xi_items)?;
    let rho = trace.rho_path();
    let e = trace.e_values();

    for (k, &t) in times.iter().enumerate() {
        for j in 0..j_len {
            let r_tx = rho.eval(t.min(support[j]));
            let q = xi.value(k, j) - (alpha.value(k, j) - beta_s.value(k, j) - r_tx);
            rep.queue_balance = rep.queue_balance.max(q.abs());
            let loc = beta_r.value(k, j) - r_tx;
            rep.renege_locations = rep.renege_locations.max(loc.abs());
        }
        if trace.config.policy == Policy::EdfHard {
            let c = support.partition_point(|&x| x <= t);
            if c > 0 {
                rep.expired_zero = rep.expired_zero.max(xi.value(k, c - 1));
            }
        }
        let beta_total = beta_s.value(k, top) + beta_r.value(k, top);
        let lhs = beta_total + trace.iota[k];
        let rhs = trace.config.mu_n(t) + trace.rho[k] + e[k];
        rep.total_balance = rep.total_balance.max((lhs - rhs).abs());
    }

    // re-solve the map from (alpha, mu + rho + e); the drift equals
    // iota + admissions + rho exactly, which is nondecreasing termwise
    let drift: Vec<f64> = (0..times.len())
        .map(|k| trace.iota[k] + trace.admitted[k] + trace.rho[k])
        .collect();
    let sol = theta(&alpha, &StepPath::new(times.clone(), drift)?)?;
    for k in 0..times.len() {
        for j in 0..j_len {
            let beta_rec = beta_s.value(k, j) + beta_r.value(k, j);
            let g = (sol.xi.value(k, j) - xi.value(k, j))
                .abs()
                .max((sol.beta.value(k, j) - beta_rec).abs());
            rep.theta_gap = rep.theta_gap.max(g);
        }
        rep.theta_gap = rep
            .theta_gap
            .max((sol.iota.values()[k] - trace.iota[k]).abs());
    }
    Ok(())
}

fn verify_work(trace: &SimTrace, rep: &mut IdentityReport, sjf: bool) -> Result<()> {
    let times = &trace.times;
    let support = support_grid(trace.jobs.iter().map(|j| j.mark));
    let j_len = support.len();
    let top = j_len - 1;

    // SJF keys the queue by initial size and counts the in-service job in
    // beta; SRPT counts a job in xi until it fully departs
    let leave = |j: &JobRecord| {
        if sjf {
            j.admit.unwrap_or(INF)
        } else {
            j.depart.unwrap_or(INF)
        }
    };
    let alpha_items: Vec<Span> = trace
        .jobs
        .iter()
        .map(|j| (j.arrival, INF, j.mark, j.mark))
        .collect();
    let xi_items: Vec<Span> = trace
        .jobs
        .iter()
        .map(|j| (j.arrival, leave(j), j.mark, j.mark))
        .collect();
    let beta_items: Vec<Span> = trace
        .jobs
        .iter()
        .filter_map(|j| {
            let s = if sjf { j.admit } else { j.depart };
            s.map(|s| (s, INF, j.mark, j.mark))
        })
        .collect();

    let alpha = build_path(times, &support, &alpha_items)?;
    let xi = build_path(times, &support, &xi_items)?;
    let beta = build_path(times, &support, &beta_items)?;

    for k in 0..times.len() {
        for j in 0..j_len {
            let b = xi.value(k, j) - (alpha.value(k, j) - beta.value(k, j));
            rep.work_balance = rep.work_balance.max(b.abs());
        }
    }
    if !sjf {
        return Ok(());
    }

    for k in 0..times.len() {
        let lhs = beta.value(k, top);
        let rhs = trace.effort[k] + trace.residual[k] - trace.residual[0];
        rep.server_work = rep.server_work.max((lhs - rhs).abs());
    }

    // mu + J - J(0) = iota + admitted work - admitted work at 0, termwise
    // nondecreasing
    let drift: Vec<f64> = (0..times.len())
        .map(|k| trace.iota[k] + trace.adm_work[k] - trace.adm_work[0])
        .collect();
    let sol = theta(&alpha, &StepPath::new(times.clone(), drift)?)?;
    for k in 0..times.len() {
        for j in 0..j_len {
            let g = (sol.xi.value(k, j) - xi.value(k, j))
                .abs()
                .max((sol.beta.value(k, j) - beta.value(k, j)).abs());
            rep.theta_gap = rep.theta_gap.max(g);
        }
        rep.theta_gap = rep
            .theta_gap
            .max((sol.iota.values()[k] - trace.iota[k]).abs());
    }
    Ok(())
}

/// A run divided by `N` and resampled onto experiment grids.
#[derive(Clone, Debug)]
pub struct ScaledTrace {
    /// Scaled queue measure (deadline counts under EDF, workload by initial
    /// size under SJF/SRPT); marks above the grid top are counted in the top
    /// cell.
    pub xi: MeasurePath<f64>,
    pub rho: StepPath<f64>,
    pub e: StepPath<f64>,
    pub iota: StepPath<f64>,
}

/// Scale a trace by `1/N` onto the given grids (CDF evaluation, no
/// smoothing).
pub fn scale_trace(trace: &SimTrace, t_grid: &[f64], x_grid: &[f64]) -> Result<ScaledTrace> {
    let inv = 1.0 / trace.config.n as f64;
    let leave = |j: &JobRecord| match trace.config.policy {
        Policy::EdfHard | Policy::EdfSoft => j.admit.or(j.renege).unwrap_or(INF),
        Policy::Sjf => j.admit.unwrap_or(INF),
        Policy::Srpt => j.depart.unwrap_or(INF),
    };
    let weight = |j: &JobRecord| {
        if trace.config.policy.is_edf() {
            1.0
        } else {
            j.mark
        }
    };
    let items: Vec<Span> = trace
        .jobs
        .iter()
        .map(|j| (j.arrival, leave(j), j.mark, weight(j)))
        .collect();
    let xi = build_path(t_grid, x_grid, &items)?.scale(inv);
    let sample = |vals: &[f64]| -> Result<StepPath<f64>> {
        Ok(trace.path(vals).sample_on(t_grid)?.scale(inv))
    };
    Ok(ScaledTrace {
        xi,
        rho: sample(&trace.rho)?,
        e: sample(&trace.e_values())?,
        iota: sample(&trace.iota)?,
    })
}
