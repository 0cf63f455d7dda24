//! TOML experiment configuration and the primitives it expands into.

use anyhow::{bail, Context, Result};
use fluidq::fluid::{
    build_alpha_edf, build_alpha_work, build_mu, edf_fluid_solve, edf_soft_solve,
    sjf_srpt_fluid_solve, uniform_grid, EdfFluidSolution, EdfPrimitives, EdfSolveOptions, MarkLaw,
    Piecewise,
};
use fluidq::sim::{Policy, ServiceLaw, SimConfig};
use fluidq::step_path::StepPath;
use fluidq::{FiniteMeasure, MeasurePath, MvsmSolution};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_n_list() -> Vec<u64> {
    vec![50]
}

fn one() -> u32 {
    1
}

fn default_service() -> ServiceLaw {
    ServiceLaw::Deterministic
}

/// One experiment: a fluid model, the matching family of simulated systems,
/// and solver/metric resolutions.  Parsed from a single TOML file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub policy: Policy,
    pub horizon: f64,
    /// Fluid time step.
    pub dt: f64,
    /// Fluid support pitch; defaults to `dt`.
    #[serde(default)]
    pub dx: Option<f64>,
    /// Top of the support grid; defaults to covering horizon plus mark range.
    #[serde(default)]
    pub x_max: Option<f64>,
    /// System sizes for convergence runs, strictly increasing.
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u64>,
    #[serde(default = "one")]
    pub replications: u32,
    #[serde(default)]
    pub seed: u64,
    /// Fluid-scale mass present just before time 0, marks drawn from `mark`.
    #[serde(default)]
    pub initial_mass: f64,
    /// Certification / gating tolerance override.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Arrival rate (fluid scale; the size-`n` system uses `n * lambda`).
    pub lambda: Piecewise<f64>,
    /// Relative deadline law (EDF) or job size law (SJF/SRPT).
    pub mark: MarkLaw,
    /// Service requirement law, EDF only; unit mean.
    #[serde(default = "default_service")]
    pub service: ServiceLaw,
    /// Service rate.
    pub m: Piecewise<f64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            bail!("horizon must be positive");
        }
        if !(self.dt > 0.0) {
            bail!("dt must be positive");
        }
        if let Some(dx) = self.dx {
            if !(dx > 0.0) {
                bail!("dx must be positive");
            }
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            bail!("n_list must be nonempty and strictly increasing");
        }
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        if self.initial_mass < 0.0 {
            bail!("initial_mass must be nonnegative");
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.dx.unwrap_or(self.dt)
    }

    pub fn is_edf(&self) -> bool {
        self.policy.is_edf()
    }

    /// Upper cap used when discretizing the mark law.
    pub fn mark_top(&self) -> f64 {
        match &self.mark {
            MarkLaw::Deterministic { value } => *value,
            MarkLaw::Uniform { high, .. } => *high,
            MarkLaw::Exponential { mean } => 40.0 * mean,
            MarkLaw::Empirical { atoms } => atoms
                .iter()
                .map(|a| a.0)
                .fold(0.0f64, f64::max),
        }
    }

    /// Top of the support grid.
    pub fn x_top(&self) -> f64 {
        self.x_max.unwrap_or_else(|| {
            if self.is_edf() {
                self.horizon + self.mark_top()
            } else {
                self.mark_top()
            }
        })
    }

    /// Fluid solver grids `(t, x)`.
    pub fn grids(&self) -> (Vec<f64>, Vec<f64>) {
        (
            uniform_grid(self.horizon, self.dt),
            uniform_grid(self.x_top(), self.dx()),
        )
    }

    /// Coarser grids used for convergence metrics, so Levy distances stay
    /// cheap at large replication counts.
    pub fn metric_grids(&self) -> (Vec<f64>, Vec<f64>) {
        let dt = self.dt.max(self.horizon / 64.0);
        let dx = self.dx().max(self.x_top() / 128.0);
        (uniform_grid(self.horizon, dt), uniform_grid(self.x_top(), dx))
    }

    /// Mark law as a finite measure on the fluid support pitch.
    pub fn mark_measure(&self) -> Result<FiniteMeasure<f64>> {
        Ok(self.mark.to_measure(self.dx(), self.mark_top())?)
    }

    /// Pre-limit system of size `n` with the given seed.
    pub fn sim_config(&self, n: u64, seed: u64) -> SimConfig {
        SimConfig {
            n,
            policy: self.policy,
            horizon: self.horizon,
            lambda: self.lambda.clone(),
            mark: self.mark.clone(),
            service: self.service.clone(),
            mark_phases: vec![],
            m: self.m.clone(),
            mu0_jumps: vec![],
            initial_mass: self.initial_mass,
            deadline_shift: 0.0,
            seed,
        }
    }

    /// Solve the fluid model matching `policy`.
    pub fn solve_fluid(&self) -> Result<FluidSolution> {
        let (t_grid, x_grid) = self.grids();
        let nu = self.mark_measure()?;
        if self.is_edf() {
            let xi0minus = nu.scale(self.initial_mass);
            let prim = EdfPrimitives {
                lambda: self.lambda.clone(),
                nu,
                m: self.m.clone(),
                mu0: StepPath::zero(),
                xi0minus,
            };
            let alpha = build_alpha_edf(&prim, &t_grid, &x_grid)?;
            let mu = build_mu(&prim, &t_grid)?;
            if self.policy == Policy::EdfSoft {
                let sol = edf_soft_solve(&alpha, &mu)?;
                Ok(FluidSolution::Soft(sol.mvsm))
            } else {
                let mut opts = EdfSolveOptions::default();
                if let Some(tol) = self.tol {
                    opts.cert_tol = tol;
                }
                let sol = edf_fluid_solve(&alpha, &mu, &opts)?;
                Ok(FluidSolution::Edf(Box::new(sol)))
            }
        } else {
            let initial_work = nu.scale(self.initial_mass);
            let alpha = build_alpha_work(&self.lambda, &nu, &initial_work, &t_grid, &x_grid)?;
            let mu = StepPath::new(
                t_grid.clone(),
                t_grid.iter().map(|&t| self.m.integral(t)).collect(),
            )?;
            Ok(FluidSolution::Work(sjf_srpt_fluid_solve(&alpha, &mu)?))
        }
    }
}

/// A solved fluid model, tagged by which solver produced it.
pub enum FluidSolution {
    Edf(Box<EdfFluidSolution<f64>>),
    Soft(MvsmSolution<f64>),
    Work(MvsmSolution<f64>),
}

impl FluidSolution {
    pub fn xi(&self) -> &MeasurePath<f64> {
        match self {
            FluidSolution::Edf(s) => &s.mvsm.xi,
            FluidSolution::Soft(s) | FluidSolution::Work(s) => &s.xi,
        }
    }

    pub fn iota(&self) -> &StepPath<f64> {
        match self {
            FluidSolution::Edf(s) => &s.mvsm.iota,
            FluidSolution::Soft(s) | FluidSolution::Work(s) => &s.iota,
        }
    }

    /// Reneging path; identically zero outside hard EDF.
    pub fn rho(&self) -> StepPath<f64> {
        match self {
            FluidSolution::Edf(s) => s.rho.clone(),
            FluidSolution::Soft(_) | FluidSolution::Work(_) => StepPath::zero(),
        }
    }

    /// Fails when the hard-EDF solution does not certify.
    pub fn require_certified(&self) -> Result<()> {
        if let FluidSolution::Edf(s) = self {
            if !s.cert.certified() {
                bail!(
                    "fluid solution failed certification: residual {:.3e}, expired {:.3e}, \
                     renege mismatch {:.3e} (tol {:.1e} at scale {:.3e})",
                    s.cert.mvsp_residual,
                    s.cert.expired_mass,
                    s.cert.renege_mismatch,
                    s.cert.tol,
                    s.cert.scale
                );
            }
        }
        Ok(())
    }
}
