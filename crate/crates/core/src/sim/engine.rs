//! Event-driven engine.  Completion times are found by inverting the
//! piecewise-linear effort integral, so there is no time discretization
//! inside a run.  At one timestamp the order is: completion, singular
//! effort, reneging, arrivals, admission — in particular a job whose
//! deadline equals an admission instant reneges rather than entering
//! service, and an arrival at that instant competes for the server.

use super::trace::SimTrace;
use super::{role_rng, JobRecord, Policy, SimConfig, ROLE_ARRIVAL, ROLE_INITIAL, ROLE_MARK, ROLE_SERVICE};
use crate::error::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BTreeSet;

/// Queue ordering: priority value (deadline or size), then arrival time,
/// then id.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key {
    p: f64,
    arr: f64,
    id: u64,
}

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p
            .total_cmp(&other.p)
            .then(self.arr.total_cmp(&other.arr))
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Inhomogeneous Poisson arrivals at intensity `n * lambda(t)` by thinning,
/// with an i.i.d. mark per accepted arrival.  Returns `(time, mark draw)`
/// pairs; marks are relative deadlines or sizes depending on policy.
pub fn sample_arrivals(cfg: &SimConfig) -> Vec<(f64, f64)> {
    let mut time_rng = role_rng(cfg.seed, ROLE_ARRIVAL);
    let mut mark_rng = role_rng(cfg.seed, ROLE_MARK);
    let n = cfg.n as f64;
    let rate_max = n * cfg.lambda.max_value();
    let mut out = Vec::new();
    if rate_max <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    loop {
        t += -(1.0 - time_rng.gen::<f64>()).ln() / rate_max;
        if t > cfg.horizon {
            return out;
        }
        if time_rng.gen::<f64>() * rate_max <= n * cfg.lambda.eval(t) {
            out.push((t, cfg.mark_law_at(t).sample(&mut mark_rng)));
        }
    }
}

struct Active {
    id: u64,
    remaining: f64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    jobs: Vec<JobRecord>,
    queue: BTreeSet<Key>,
    active: Option<Active>,
    t: f64,
    /// Delivered effort `T^N`.
    effort: f64,
    /// Unused effort, accumulated while idle (`iota^N = mu^N - T^N`).
    iota: f64,
    /// Admission count (`beta^{s,N}[0,inf)` under EDF).
    admitted: u64,
    /// Total initial work admitted (`T^N + J^N` under SJF, exactly).
    adm_work: f64,
    /// Renege count.
    rho: u64,
    service_rng: ChaCha8Rng,
    snaps: Snaps,
}

#[derive(Default)]
pub(super) struct Snaps {
    pub(super) times: Vec<f64>,
    pub(super) effort: Vec<f64>,
    pub(super) iota: Vec<f64>,
    pub(super) admitted: Vec<f64>,
    pub(super) adm_work: Vec<f64>,
    pub(super) rho: Vec<f64>,
    pub(super) residual: Vec<f64>,
    pub(super) busy: Vec<f64>,
}

/// Run one system to its horizon.
pub fn simulate(cfg: &SimConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let arrivals = sample_arrivals(cfg);
    let mut eng = Engine {
        cfg,
        jobs: Vec::new(),
        queue: BTreeSet::new(),
        active: None,
        t: 0.0,
        effort: 0.0,
        iota: 0.0,
        admitted: 0,
        adm_work: 0.0,
        rho: 0,
        service_rng: role_rng(cfg.seed, ROLE_SERVICE),
        snaps: Snaps::default(),
    };

    // initial jobs, present just before time 0
    let mut init_rng = role_rng(cfg.seed, ROLE_INITIAL);
    let n_init = (cfg.initial_mass * cfg.n as f64).round() as u64;
    for _ in 0..n_init {
        let draw = cfg.mark.sample(&mut init_rng);
        eng.create_job(0.0, draw);
    }

    let jumps = &cfg.mu0_jumps;
    let mut ai = 0usize; // arrival cursor
    let mut ji = jumps.iter().take_while(|&&(s, _)| s < 0.0).count();

    // time 0
    if ji < jumps.len() && jumps[ji].0 == 0.0 {
        eng.drain_expired();
        eng.deliver_jump(cfg.n as f64 * jumps[ji].1);
        ji += 1;
    }
    eng.drain_expired();
    while ai < arrivals.len() && arrivals[ai].0 == 0.0 {
        let (t, draw) = arrivals[ai];
        eng.create_job(t, draw);
        ai += 1;
    }
    eng.try_admit();
    eng.snapshot();

    loop {
        let next_arr = arrivals.get(ai).map(|a| a.0).unwrap_or(f64::INFINITY);
        let next_jump = jumps.get(ji).map(|j| j.0).unwrap_or(f64::INFINITY);
        let next_ren = if cfg.policy == Policy::EdfHard {
            eng.queue.first().map(|k| k.p).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        let next_comp = match &eng.active {
            Some(a) => completion_time(cfg, eng.t, a.remaining, next_jump),
            None => f64::INFINITY,
        };
        let t_next = next_arr.min(next_jump).min(next_ren).min(next_comp);
        if t_next > cfg.horizon {
            eng.advance_to(cfg.horizon);
            eng.snapshot();
            break;
        }

        eng.advance_to(t_next);
        if t_next == next_comp {
            eng.complete();
        }
        if t_next == next_jump {
            eng.drain_expired();
            eng.deliver_jump(cfg.n as f64 * jumps[ji].1);
            ji += 1;
        }
        eng.drain_expired();
        while ai < arrivals.len() && arrivals[ai].0 == t_next {
            let (t, draw) = arrivals[ai];
            eng.create_job(t, draw);
            ai += 1;
        }
        eng.try_admit();
        eng.snapshot();
    }

    Ok(SimTrace::assemble(cfg.clone(), eng.jobs, eng.snaps))
}

/// Earliest time `s > t` at which continuous effort at rate `n * m` delivers
/// `rem`, ignoring singular effort at or after `limit` (handled as its own
/// event).
fn completion_time(cfg: &SimConfig, mut t: f64, mut rem: f64, limit: f64) -> f64 {
    let n = cfg.n as f64;
    loop {
        let r = n * cfg.m.eval(t);
        let nb = cfg
            .m
            .breaks
            .iter()
            .copied()
            .find(|&b| b > t)
            .unwrap_or(f64::INFINITY);
        let b = nb.min(limit);
        if r > 0.0 {
            let s = t + rem / r;
            if s <= b {
                return s;
            }
        }
        if !b.is_finite() || b >= limit {
            return f64::INFINITY;
        }
        rem -= r * (b - t);
        t = b;
    }
}

impl Engine<'_> {
    fn create_job(&mut self, arrival: f64, draw: f64) {
        let id = self.jobs.len() as u64;
        let mark = if self.cfg.policy.is_edf() {
            arrival + draw + self.cfg.deadline_shift
        } else {
            draw
        };
        self.jobs.push(JobRecord {
            id,
            arrival,
            mark,
            requirement: None,
            admit: None,
            depart: None,
            renege: None,
        });
        self.queue.insert(Key {
            p: mark,
            arr: arrival,
            id,
        });
    }

    /// Move the clock, accruing continuous effort to the server when busy
    /// and to idleness otherwise.  The increment is computed as a difference
    /// of the exact cumulative integral so busy intervals leave `iota`
    /// untouched bit-for-bit.
    fn advance_to(&mut self, s: f64) {
        let n = self.cfg.n as f64;
        let d = n * (self.cfg.m.integral(s) - self.cfg.m.integral(self.t));
        match &mut self.active {
            Some(a) => {
                self.effort += d;
                a.remaining -= d;
            }
            None => self.iota += d,
        }
        self.t = s;
    }

    fn complete(&mut self) {
        let a = self.active.take().expect("completion without a server job");
        self.jobs[a.id as usize].depart = Some(self.t);
    }

    /// Instantaneous effort `amount`; drains jobs in priority order, with
    /// renege processing before each admission; leftover effort with an
    /// empty queue is lost to idleness.
    fn deliver_jump(&mut self, mut amount: f64) {
        while amount > 0.0 {
            if self.active.is_none() {
                self.drain_expired();
                if !self.admit_one() {
                    break;
                }
            }
            let a = self.active.as_mut().unwrap();
            let d = a.remaining.min(amount);
            a.remaining -= d;
            self.effort += d;
            amount -= d;
            if a.remaining <= 0.0 {
                self.complete();
            }
        }
        if amount > 0.0 {
            self.iota += amount;
        }
    }

    /// Hard EDF: remove every queued job whose deadline has been reached.
    fn drain_expired(&mut self) {
        if self.cfg.policy != Policy::EdfHard {
            return;
        }
        while let Some(&k) = self.queue.first() {
            if k.p > self.t {
                break;
            }
            self.queue.pop_first();
            self.jobs[k.id as usize].renege = Some(self.t);
            self.rho += 1;
        }
    }

    /// Seat the head of the queue.  Returns false if the queue is empty.
    fn admit_one(&mut self) -> bool {
        let k = match self.queue.pop_first() {
            Some(k) => k,
            None => return false,
        };
        let job = &mut self.jobs[k.id as usize];
        let req = match self.cfg.policy {
            Policy::EdfHard | Policy::EdfSoft => self.cfg.service.sample(&mut self.service_rng),
            // work policies: requirement is the remaining size carried in
            // the key (original size unless preempted)
            Policy::Sjf | Policy::Srpt => k.p,
        };
        if job.admit.is_none() {
            job.admit = Some(self.t);
            job.requirement = Some(match self.cfg.policy {
                Policy::Sjf | Policy::Srpt => job.mark,
                _ => req,
            });
            self.admitted += 1;
            self.adm_work += job.mark;
        }
        self.active = Some(Active {
            id: k.id,
            remaining: req,
        });
        true
    }

    /// Fill the server (and preempt under SRPT) until stable.
    fn try_admit(&mut self) {
        loop {
            if self.cfg.policy == Policy::Srpt {
                if let (Some(a), Some(&k)) = (&self.active, self.queue.first()) {
                    if k.p < a.remaining {
                        let out = self.active.take().unwrap();
                        self.queue.insert(Key {
                            p: out.remaining,
                            arr: self.jobs[out.id as usize].arrival,
                            id: out.id,
                        });
                    }
                }
            }
            if self.active.is_some() {
                return;
            }
            if !self.admit_one() {
                return;
            }
            if let Some(a) = &self.active {
                if a.remaining <= 0.0 {
                    self.complete();
                    continue;
                }
            }
            // SRPT: a freshly admitted job could itself be preemptible only
            // by a smaller queued key, impossible after admit_one took the
            // minimum; loop anyway for the zero-requirement cascade
            return;
        }
    }

    fn snapshot(&mut self) {
        let s = &mut self.snaps;
        // same-instant reprocessing overwrites the previous snapshot
        if s.times.last() == Some(&self.t) {
            s.times.pop();
            s.effort.pop();
            s.iota.pop();
            s.admitted.pop();
            s.adm_work.pop();
            s.rho.pop();
            s.residual.pop();
            s.busy.pop();
        }
        s.times.push(self.t);
        s.effort.push(self.effort);
        s.iota.push(self.iota);
        s.admitted.push(self.admitted as f64);
        s.adm_work.push(self.adm_work);
        s.rho.push(self.rho as f64);
        s.residual.push(self.active.as_ref().map(|a| a.remaining).unwrap_or(0.0));
        s.busy.push(if self.active.is_some() { 1.0 } else { 0.0 });
    }
}
