//! Discrete-event simulation of the pre-limit single-server systems
//! (hard/soft EDF with reneging, SJF, SRPT) and exact verification of the
//! path identities that tie a run to the measure-valued Skorokhod map.
//!
//! A run is deterministic given `(config, seed)`: arrival times, marks, and
//! service requirements come from independent per-role streams, so traces
//! pair across policies and across the soft/hard deadline-shift construction.

mod engine;
mod trace;

pub use engine::{sample_arrivals, simulate};
pub use trace::{scale_trace, verify_exact_identities, IdentityReport, ScaledTrace, SimTrace};

use crate::error::{Error, Result};
use crate::fluid::{MarkLaw, Piecewise};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Scheduling policy of the simulated server.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Earliest deadline first; queued jobs leave at their deadline.
    EdfHard,
    /// Earliest deadline first; late jobs keep waiting.
    EdfSoft,
    /// Shortest job first, non-preemptive.
    Sjf,
    /// Shortest remaining processing time, preemptive.
    Srpt,
}

impl Policy {
    pub fn is_edf(self) -> bool {
        matches!(self, Policy::EdfHard | Policy::EdfSoft)
    }
}

/// Unit-mean service-requirement law (effort units per job); used only by
/// the EDF policies, where job size and mark are independent.  The empirical
/// variant is rescaled to mean 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServiceLaw {
    Deterministic,
    Exponential,
    Lognormal { sigma: f64 },
    Empirical { atoms: Vec<(f64, f64)> },
}

impl ServiceLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceLaw::Deterministic => 1.0,
            ServiceLaw::Exponential => -(1.0 - rng.gen::<f64>()).ln(),
            ServiceLaw::Lognormal { sigma } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                (sigma * z - 0.5 * sigma * sigma).exp()
            }
            ServiceLaw::Empirical { atoms } => {
                let law = MarkLaw::Empirical {
                    atoms: atoms.clone(),
                };
                law.sample(rng) / law.mean()
            }
        }
    }
}

/// One simulated system.  Rates are given at fluid scale; the running system
/// uses arrival intensity `n * lambda(t)` and effort rate `n * m(t)` plus
/// instantaneous effort `n * w` at each `(t, w)` in `mu0_jumps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u64,
    pub policy: Policy,
    pub horizon: f64,
    pub lambda: Piecewise<f64>,
    /// Relative deadline (EDF) or job size (SJF/SRPT).
    pub mark: MarkLaw,
    #[serde(default = "default_service")]
    pub service: ServiceLaw,
    /// Overrides `mark` for arrivals from each listed start time on; entries
    /// must be increasing in time.  Empty means `mark` applies throughout.
    #[serde(default)]
    pub mark_phases: Vec<(f64, MarkLaw)>,
    pub m: Piecewise<f64>,
    #[serde(default)]
    pub mu0_jumps: Vec<(f64, f64)>,
    /// Fluid-scale initial queue mass; `round(n * initial_mass)` jobs are
    /// present just before time 0, with marks drawn from `mark`.
    #[serde(default)]
    pub initial_mass: f64,
    /// Added to every absolute deadline (EDF); the soft/hard equivalence
    /// shifts deadlines past the horizon.
    #[serde(default)]
    pub deadline_shift: f64,
    pub seed: u64,
}

fn default_service() -> ServiceLaw {
    ServiceLaw::Deterministic
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.initial_mass < 0.0 {
            return Err(Error::Config("initial mass must be nonnegative".into()));
        }
        if self
            .mu0_jumps
            .windows(2)
            .any(|w| w[1].0 <= w[0].0)
            || self.mu0_jumps.iter().any(|&(t, w)| t < 0.0 || w < 0.0)
        {
            return Err(Error::Config(
                "mu0 jumps must be increasing in time with nonnegative weights".into(),
            ));
        }
        if self.mark_phases.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "mark phases must be increasing in time".into(),
            ));
        }
        Ok(())
    }

    /// Mark law in force for an arrival at time `t`.
    pub fn mark_law_at(&self, t: f64) -> &MarkLaw {
        self.mark_phases
            .iter()
            .rev()
            .find(|&&(s, _)| s <= t)
            .map(|(_, law)| law)
            .unwrap_or(&self.mark)
    }

    /// Cumulative effort `mu^N(t) = n (mu0(t) + int_0^t m)`.
    pub fn mu_n(&self, t: f64) -> f64 {
        let jumps: f64 = self
            .mu0_jumps
            .iter()
            .filter(|&&(s, _)| s <= t)
            .map(|&(_, w)| w)
            .sum();
        self.n as f64 * (self.m.integral(t) + jumps)
    }
}

/// One job's lifetime.  `mark` is the absolute deadline (EDF, shift
/// included) or the initial size (SJF/SRPT); `requirement` is in effort
/// units and is drawn at first admission for EDF.
#[derive(Clone, Debug, PartialEq)]
pub struct JobRecord {
    pub id: u64,
    pub arrival: f64,
    pub mark: f64,
    pub requirement: Option<f64>,
    pub admit: Option<f64>,
    pub depart: Option<f64>,
    pub renege: Option<f64>,
}

pub(crate) const ROLE_ARRIVAL: u64 = 1;
pub(crate) const ROLE_MARK: u64 = 2;
pub(crate) const ROLE_SERVICE: u64 = 3;
pub(crate) const ROLE_INITIAL: u64 = 4;

pub(crate) fn role_rng(seed: u64, role: u64) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    s[8..16].copy_from_slice(&role.to_le_bytes());
    ChaCha8Rng::from_seed(s)
}
