//! Earliest-deadline-first fluid queue with reneging.
//!
//! The solver finds the minimal nondecreasing renege path `rho` such that
//! `(xi, beta, iota) = Theta(alpha, mu + rho)` carries no queue mass strictly
//! below the current time (expired deadlines leave instantly).  A forward
//! sweep maintains the per-column running minima of the scalar Skorokhod
//! inputs; at each step the expired mass is read off the largest support
//! point below the clock and added to `rho`, which zeroes that column and
//! every column under it in one update.  The result is certified a
//! posteriori against the defining properties, which identify it uniquely.

use crate::error::{Error, Result};
use crate::measure_path::MeasurePath;
use crate::mvsm::{theta, verify_mvsp, MvsmSolution};
use crate::step_path::StepPath;
use num_traits::Float;

/// Tolerances for the a-posteriori certificate.
#[derive(Clone, Copy, Debug)]
pub struct EdfSolveOptions<F> {
    /// Relative certification tolerance (scaled by the input magnitude).
    pub cert_tol: F,
    /// How far the queue frontier may trail the clock before a renege
    /// increment counts as misplaced.  Defaults to twice the widest support
    /// spacing.
    pub frontier_slack: Option<F>,
}

impl<F: Float> Default for EdfSolveOptions<F> {
    fn default() -> Self {
        EdfSolveOptions {
            cert_tol: F::from(1e-6).unwrap(),
            frontier_slack: None,
        }
    }
}

/// A-posteriori certificate of an EDF fluid solution.
#[derive(Clone, Debug)]
pub struct EdfCertification {
    /// Worst residual of the map's defining properties under `mu + rho`.
    pub mvsp_residual: f64,
    /// Largest queue mass found strictly below the clock.
    pub expired_mass: f64,
    /// Renege mass spent while the queue frontier was beyond the clock
    /// (minimality: reneging only happens at the frontier).
    pub renege_mismatch: f64,
    /// Magnitude the tolerance is scaled by.
    pub scale: f64,
    /// Absolute tolerance, `cert_tol * scale`.
    pub tol: f64,
}

impl EdfCertification {
    pub fn certified(&self) -> bool {
        self.mvsp_residual <= self.tol
            && self.expired_mass <= self.tol
            && self.renege_mismatch <= self.tol
    }
}

/// EDF fluid solution: the queue/departure/idleness triple, the renege path,
/// and the queue frontier (smallest deadline present, `+inf` when empty).
#[derive(Clone, Debug)]
pub struct EdfFluidSolution<F> {
    pub mvsm: MvsmSolution<F>,
    pub rho: StepPath<F>,
    pub sigma: StepPath<F>,
    pub cert: EdfCertification,
}

/// Largest support index strictly below `t`, if any.
fn expired_index<F: Float>(support: &[F], t: F) -> Option<usize> {
    let n = support.partition_point(|&x| x < t);
    n.checked_sub(1)
}

/// Solve the EDF fluid model: minimal `rho` with
/// `(xi, beta, iota) = Theta(alpha, mu + rho)` and `xi_t[0, t) = 0`.
///
/// `alpha` is on absolute deadlines and must be monotone with support
/// containing 0; `mu` lives on `alpha`'s time grid.
pub fn edf_fluid_solve<F: Float>(
    alpha: &MeasurePath<F>,
    mu: &StepPath<F>,
    opts: &EdfSolveOptions<F>,
) -> Result<EdfFluidSolution<F>> {
    if mu.breakpoints() != alpha.times() {
        return Err(Error::GridMismatch(
            "mu must be sampled on alpha's time grid".into(),
        ));
    }
    let times = alpha.times();
    let support = alpha.support();
    let k_len = times.len();
    let j_len = support.len();

    // forward sweep: per-column running minima of
    // psi_j = alpha[0,x_j] - mu - rho, with rho growing by the expired mass
    let mut run_min = vec![F::zero(); j_len];
    let row0 = alpha.row(0);
    let mu0 = mu.values()[0];
    for j in 0..j_len {
        run_min[j] = F::min(F::zero(), row0[j] - mu0);
    }
    let mut rho_vals = vec![F::zero(); k_len];
    let mut r = F::zero();
    for k in 1..k_len {
        let row = alpha.row(k);
        let mu_k = mu.values()[k];
        for j in 0..j_len {
            let psi = row[j] - mu_k - r;
            if psi < run_min[j] {
                run_min[j] = psi;
            }
        }
        if let Some(js) = expired_index(support, times[k]) {
            let d = F::max(F::zero(), row[js] - mu_k - r - run_min[js]);
            if d > F::zero() {
                r = r + d;
                for j in 0..j_len {
                    let psi = row[j] - mu_k - r;
                    if psi < run_min[j] {
                        run_min[j] = psi;
                    }
                }
            }
        }
        rho_vals[k] = r;
    }
    let rho = StepPath::new(times.to_vec(), rho_vals)?;

    let mu_rho = mu.add(&rho);
    let mvsm = theta(alpha, &mu_rho)?;
    let cert_scale = scale_of(alpha, &mu_rho);
    let tol = opts.cert_tol.to_f64().unwrap() * cert_scale;
    let mass_tol = F::from(tol).unwrap();
    let sigma = frontier(&mvsm.xi, mass_tol);

    let report = verify_mvsp(alpha, &mu_rho, &mvsm)?;
    let mut expired = 0.0f64;
    for k in 0..k_len {
        if let Some(js) = expired_index(support, times[k]) {
            expired = expired.max(mvsm.xi.value(k, js).to_f64().unwrap());
        }
    }
    let slack = opts
        .frontier_slack
        .unwrap_or_else(|| max_spacing(support) * F::from(2.0).unwrap());
    let mut mismatch = F::zero();
    for k in 1..k_len {
        if sigma.values()[k] > times[k] + slack {
            mismatch = mismatch + (rho.values()[k] - rho.values()[k - 1]);
        }
    }

    let cert = EdfCertification {
        mvsp_residual: report.max_residual(),
        expired_mass: expired,
        renege_mismatch: mismatch.to_f64().unwrap(),
        scale: cert_scale,
        tol,
    };
    Ok(EdfFluidSolution {
        mvsm,
        rho,
        sigma,
        cert,
    })
}

fn scale_of<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> f64 {
    let top = alpha.num_support() - 1;
    let a = alpha.value(alpha.num_times() - 1, top).to_f64().unwrap();
    let m = mu.last_value().to_f64().unwrap();
    1.0f64.max(a).max(m)
}

fn max_spacing<F: Float>(grid: &[F]) -> F {
    grid.windows(2)
        .map(|w| w[1] - w[0])
        .fold(F::zero(), F::max)
}

/// Smallest support point carrying queue mass at each time, as a path;
/// `+inf` where the queue is (numerically) empty.
pub fn frontier<F: Float>(xi: &MeasurePath<F>, mass_tol: F) -> StepPath<F> {
    let j_len = xi.num_support();
    let values = (0..xi.num_times())
        .map(|k| {
            let row = xi.row(k);
            match (0..j_len).find(|&j| row[j] > mass_tol) {
                Some(j) => xi.support()[j],
                None => F::infinity(),
            }
        })
        .collect();
    StepPath::new(xi.times().to_vec(), values).unwrap()
}

/// Outcome of comparing renege paths across a dominated pair of inputs.
#[derive(Clone, Debug)]
pub struct RhoComparison<F> {
    /// `inf_t (rho1 - rho2)(t)`; nonnegative up to tolerance when input 1
    /// dominates (more arrivals, less service).
    pub min_gap: F,
    pub rho1: StepPath<F>,
    pub rho2: StepPath<F>,
}

impl<F: Float> RhoComparison<F> {
    pub fn holds(&self, tol: F) -> bool {
        self.min_gap >= -tol
    }
}

/// Check the comparison principle: if `alpha1 >= alpha2` cell-wise and
/// `mu1 <= mu2`, the heavier system reneges at least as much.  Errors if the
/// domination precondition fails.
pub fn rho_monotonicity_check<F: Float>(
    alpha1: &MeasurePath<F>,
    mu1: &StepPath<F>,
    alpha2: &MeasurePath<F>,
    mu2: &StepPath<F>,
    opts: &EdfSolveOptions<F>,
) -> Result<RhoComparison<F>> {
    if alpha1.times() != alpha2.times() || alpha1.support() != alpha2.support() {
        return Err(Error::GridMismatch(
            "comparison needs both inputs on one grid".into(),
        ));
    }
    let eps = F::from(1e-12).unwrap();
    for k in 0..alpha1.num_times() {
        if mu1.values()[k] > mu2.values()[k] + eps {
            return Err(Error::Config("mu1 must not exceed mu2".into()));
        }
        let (r1, r2) = (alpha1.row(k), alpha2.row(k));
        for j in 0..alpha1.num_support() {
            if r1[j] + eps < r2[j] {
                return Err(Error::Config("alpha1 must dominate alpha2".into()));
            }
        }
    }
    let sol1 = edf_fluid_solve(alpha1, mu1, opts)?;
    let sol2 = edf_fluid_solve(alpha2, mu2, opts)?;
    let min_gap = sol1
        .rho
        .values()
        .iter()
        .zip(sol2.rho.values())
        .map(|(&a, &b)| a - b)
        .fold(F::infinity(), F::min);
    Ok(RhoComparison {
        min_gap,
        rho1: sol1.rho,
        rho2: sol2.rho,
    })
}

/// Soft-deadline EDF fluid: late mass stays in queue (no reneging), so the
/// model is the plain map under `mu`.  Equivalently, the hard model with
/// every deadline pushed past the horizon.
#[derive(Clone, Debug)]
pub struct SoftEdfSolution<F> {
    pub mvsm: MvsmSolution<F>,
}

impl<F: Float> SoftEdfSolution<F> {
    /// Queue mass already past its deadline at time index `k`.
    pub fn late_mass(&self, k: usize) -> F {
        let t = self.mvsm.xi.times()[k];
        match expired_index(self.mvsm.xi.support(), t) {
            Some(js) => self.mvsm.xi.value(k, js),
            None => F::zero(),
        }
    }
}

pub fn edf_soft_solve<F: Float>(
    alpha: &MeasurePath<F>,
    mu: &StepPath<F>,
) -> Result<SoftEdfSolution<F>> {
    Ok(SoftEdfSolution {
        mvsm: theta(alpha, mu)?,
    })
}
