//! The measure-valued Skorokhod map `Theta`, its LIFO variant, the
//! solution verifier, and the K-class priority oracle.
//!
//! `Theta(alpha, mu)` drains the arrival measure path lowest-location first
//! at cumulative rate `mu`: the idleness regulator comes from the total-mass
//! column, and every support column is then an independent scalar Skorokhod
//! map of `alpha[0,x] - mu + iota`.

use crate::error::{Error, Result};
use crate::measure_path::MeasurePath;
use crate::step_path::{merge_grids, StepPath};
use num_traits::Float;

/// Output of the measure-valued Skorokhod map.
#[derive(Clone, Debug)]
pub struct MvsmSolution<F> {
    /// Queue content `xi`.
    pub xi: MeasurePath<F>,
    /// Departed mass `beta` (monotone path).
    pub beta: MeasurePath<F>,
    /// Idleness `iota` (nondecreasing, `iota(0-) = 0`).
    pub iota: StepPath<F>,
}

impl<F: Float> MvsmSolution<F> {
    /// `beta_t(x_j, inf) = beta_t[0, x_max] - beta_t[0, x_j]` as a path in t.
    /// Valid because the support grid carries all of beta's mass.
    pub fn beta_tail_column(&self, j: usize) -> StepPath<F> {
        let top = self.beta.num_support() - 1;
        let values = (0..self.beta.num_times())
            .map(|k| self.beta.value(k, top) - self.beta.value(k, j))
            .collect();
        StepPath::new(self.beta.times().to_vec(), values).unwrap()
    }
}

/// The measure-valued Skorokhod map.
///
/// Requires `alpha` monotone with support grid containing 0, and `mu`
/// nondecreasing on exactly `alpha`'s time grid (resample first if needed).
pub fn theta<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> Result<MvsmSolution<F>> {
    check_theta_inputs(alpha, mu)?;
    let k_len = alpha.num_times();
    let j_len = alpha.num_support();

    // iota from the total-mass column: Gamma_2[alpha[0,inf) - mu]
    let iota = compute_iota(alpha, mu);

    // per-column scalar Skorokhod maps of alpha[0,x_j] - mu + iota
    let mut xi = vec![F::zero(); k_len * j_len];
    let mut beta_tail = vec![F::zero(); k_len * j_len]; // beta_t(x_j, inf)
    for j in 0..j_len {
        let mut run_min = F::zero();
        for k in 0..k_len {
            let psi = alpha.value(k, j) - mu.values()[k] + iota.values()[k];
            if psi < run_min {
                run_min = psi;
            }
            xi[k * j_len + j] = psi - run_min;
            beta_tail[k * j_len + j] = -run_min;
        }
    }

    // close beta[0, inf) through the x = 0 cell: beta_t[0,inf) =
    // beta_t(0,inf) + alpha_t({0}) - xi_t({0})
    let mut beta = vec![F::zero(); k_len * j_len];
    for k in 0..k_len {
        let total = beta_tail[k * j_len] + alpha.value(k, 0) - xi[k * j_len];
        for j in 0..j_len {
            beta[k * j_len + j] = total - beta_tail[k * j_len + j];
        }
    }

    let xi = MeasurePath::new(alpha.times().to_vec(), alpha.support().to_vec(), xi)?;
    let beta = MeasurePath::new(alpha.times().to_vec(), alpha.support().to_vec(), beta)?;
    Ok(MvsmSolution { xi, beta, iota })
}

fn check_theta_inputs<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> Result<()> {
    if alpha.support()[0] != F::zero() {
        return Err(Error::GridMismatch(
            "alpha's support grid must include 0".into(),
        ));
    }
    if mu.breakpoints() != alpha.times() {
        return Err(Error::GridMismatch(
            "mu must be sampled on alpha's time grid".into(),
        ));
    }
    if !mu.is_nondecreasing() {
        return Err(Error::InvalidPath("mu must be nondecreasing".into()));
    }
    let top = alpha.value(alpha.num_times() - 1, alpha.num_support() - 1);
    let tol = F::from(1e-12).unwrap() * F::max(F::one(), top);
    if let Some((k, j, j2)) = alpha.first_monotonicity_violation(tol) {
        return Err(Error::NonMonotonePath { k, j, j2 });
    }
    Ok(())
}

fn compute_iota<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> StepPath<F> {
    let top = alpha.num_support() - 1;
    let mut run_min = F::zero();
    let values = (0..alpha.num_times())
        .map(|k| {
            let psi = alpha.value(k, top) - mu.values()[k];
            if psi < run_min {
                run_min = psi;
            }
            -run_min
        })
        .collect();
    StepPath::new(alpha.times().to_vec(), values).unwrap()
}

/// LIFO variant: the map with the priority direction inverted in x,
/// implemented by reflecting the support grid about its maximum, applying
/// `theta`, and reflecting back.  Requires bounded support (always true on a
/// finite grid).
pub fn theta_lifo<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> Result<MvsmSolution<F>> {
    check_theta_inputs(alpha, mu)?;
    let reflected = reflect_support(alpha);
    let sol = theta(&reflected, mu)?;
    Ok(MvsmSolution {
        xi: reflect_support(&sol.xi),
        beta: reflect_support(&sol.beta),
        iota: sol.iota,
    })
}

/// Reflect the support grid `x -> x_max - x`, carrying atom weights across.
fn reflect_support<F: Float>(path: &MeasurePath<F>) -> MeasurePath<F> {
    let xs = path.support();
    let j_len = xs.len();
    let x_max = xs[j_len - 1];
    let new_support: Vec<F> = xs.iter().rev().map(|&x| x_max - x).collect();
    let mut cdf = Vec::with_capacity(path.num_times() * j_len);
    for k in 0..path.num_times() {
        let row = path.row(k);
        let total = row[j_len - 1];
        // F'[j'] = total - F[J-2-j'] with F[-1] = 0
        for jp in 0..j_len {
            let idx = j_len.checked_sub(2 + jp);
            let below = match idx {
                Some(i) => row[i],
                None => F::zero(),
            };
            cdf.push(total - below);
        }
    }
    MeasurePath::new(path.times().to_vec(), new_support, cdf).unwrap()
}

/// Per-property maximum residuals of the four defining identities of the
/// measure-valued Skorokhod problem, plus the balance identity
/// `xi = alpha - beta` cell-wise.
#[derive(Clone, Debug, Default)]
pub struct MvspReport {
    /// max over (t, x) of |xi[0,x] - (alpha[0,x] - mu + beta(x,inf) + iota)|
    pub identity: f64,
    /// max over x of |int xi[0,x] d beta(x,inf)|
    pub beta_complementarity: f64,
    /// max over x of |int xi[0,x] d iota|
    pub iota_complementarity: f64,
    /// max over t of |beta[0,inf) + iota - mu|
    pub mass_balance: f64,
    /// max over (t, x) of |xi[0,x] - (alpha[0,x] - beta[0,x])|
    pub balance: f64,
}

impl MvspReport {
    pub fn max_residual(&self) -> f64 {
        self.identity
            .max(self.beta_complementarity)
            .max(self.iota_complementarity)
            .max(self.mass_balance)
            .max(self.balance)
    }
}

/// Check a candidate solution against the defining properties on the grid.
pub fn verify_mvsp<F: Float>(
    alpha: &MeasurePath<F>,
    mu: &StepPath<F>,
    sol: &MvsmSolution<F>,
) -> Result<MvspReport> {
    if sol.xi.times() != alpha.times() || sol.xi.support() != alpha.support() {
        return Err(Error::GridMismatch("solution grids differ from alpha".into()));
    }
    let k_len = alpha.num_times();
    let j_len = alpha.num_support();
    let top = j_len - 1;
    let mut report = MvspReport::default();
    let to_f64 = |v: F| v.to_f64().unwrap();

    for k in 0..k_len {
        let beta_total = sol.beta.value(k, top);
        let mu_k = mu.values()[k];
        let iota_k = sol.iota.values()[k];
        report.mass_balance = report
            .mass_balance
            .max(to_f64((beta_total + iota_k - mu_k).abs()));
        for j in 0..j_len {
            let xi = sol.xi.value(k, j);
            let beta_tail = beta_total - sol.beta.value(k, j);
            let ident = xi - (alpha.value(k, j) - mu_k + beta_tail + iota_k);
            report.identity = report.identity.max(to_f64(ident.abs()));
            let bal = xi - (alpha.value(k, j) - sol.beta.value(k, j));
            report.balance = report.balance.max(to_f64(bal.abs()));
        }
    }

    // complementarity: Stieltjes sums of xi[0,x] against d beta(x,inf) and
    // d iota, including the time-zero atom of the regulators
    for j in 0..j_len {
        let mut acc = sol.xi.value(0, j) * sol.beta_tail_column(j).values()[0];
        for k in 1..k_len {
            let dbeta = (sol.beta.value(k, top) - sol.beta.value(k, j))
                - (sol.beta.value(k - 1, top) - sol.beta.value(k - 1, j));
            acc = acc + sol.xi.value(k, j) * dbeta;
        }
        report.beta_complementarity = report.beta_complementarity.max(to_f64(acc.abs()));

        let mut acc = sol.xi.value(0, j) * sol.iota.values()[0];
        for k in 1..k_len {
            let diota = sol.iota.values()[k] - sol.iota.values()[k - 1];
            acc = acc + sol.xi.value(k, j) * diota;
        }
        report.iota_complementarity = report.iota_complementarity.max(to_f64(acc.abs()));
    }
    Ok(report)
}

/// Solution of the K-class priority model: prefix contents
/// `X[1,i]`, lower-priority service allocations `B_hat_i`, and idleness.
#[derive(Clone, Debug)]
pub struct KclassSolution<F> {
    /// `X[1,i](t)`: total content of classes `1..=i`.
    pub x_prefix: Vec<StepPath<F>>,
    /// `B_hat_i(t)`: cumulative effort spent on classes below priority i.
    pub b_hat: Vec<StepPath<F>>,
    /// Cumulative lost effort.
    pub i_hat: StepPath<F>,
}

impl<F: Float> KclassSolution<F> {
    /// Per-class content by differencing the prefix paths.
    pub fn per_class(&self) -> Vec<StepPath<F>> {
        let mut out = Vec::with_capacity(self.x_prefix.len());
        for (i, x) in self.x_prefix.iter().enumerate() {
            if i == 0 {
                out.push(x.clone());
            } else {
                out.push(x.sub(&self.x_prefix[i - 1]));
            }
        }
        out
    }
}

/// Solve the K-class priority model by K scalar Skorokhod maps:
/// `(X[1,i], B_hat_i + I_hat) = Gamma[A[1,i] - M]`.
pub fn kclass_solve<F: Float>(arrivals: &[StepPath<F>], m: &StepPath<F>) -> Result<KclassSolution<F>> {
    if arrivals.is_empty() {
        return Err(Error::Config("need at least one class".into()));
    }
    for a in arrivals {
        if !a.is_nondecreasing() {
            return Err(Error::InvalidPath("class arrivals must be nondecreasing".into()));
        }
    }
    // common grid
    let mut grid = m.breakpoints().to_vec();
    for a in arrivals {
        grid = merge_grids(&grid, a.breakpoints());
    }
    let m = m.sample_on(&grid)?;

    let mut x_prefix = Vec::with_capacity(arrivals.len());
    let mut regulators = Vec::with_capacity(arrivals.len());
    let mut prefix = StepPath::zero().sample_on(&grid)?;
    for a in arrivals {
        prefix = prefix.add(&a.sample_on(&grid)?);
        let (phi, eta) = prefix.sub(&m).skorokhod_map();
        x_prefix.push(phi);
        regulators.push(eta);
    }
    // B_hat_K = 0, so I_hat is the last regulator
    let i_hat = regulators.last().unwrap().clone();
    let b_hat = regulators.iter().map(|r| r.sub(&i_hat)).collect();
    Ok(KclassSolution {
        x_prefix,
        b_hat,
        i_hat,
    })
}

/// Cross-check `theta` against the K-class oracle on an atomic arrival path:
/// returns the max over the grid of `|xi_t[0, x_i] - X[1,i](t)|`.
pub fn theta_vs_kclass<F: Float>(alpha: &MeasurePath<F>, mu: &StepPath<F>) -> Result<F> {
    let sol = theta(alpha, mu)?;
    // class arrival paths: A_i(t) = alpha_t({x_i}) for nonzero support columns,
    // with the x = 0 column folded into the first class when it carries mass
    let j_len = alpha.num_support();
    let mut arrivals = Vec::new();
    let mut class_cols = Vec::new();
    for j in 0..j_len {
        let col = alpha.column(j);
        let prev = if j == 0 {
            StepPath::zero().sample_on(alpha.times()).unwrap()
        } else {
            alpha.column(j - 1)
        };
        let a = col.sub(&prev);
        // the x = 0 column is only a class when it carries mass
        if j > 0 || a.sup_norm() > F::zero() {
            arrivals.push(a);
            class_cols.push(j);
        }
    }
    let kc = kclass_solve(&arrivals, mu)?;
    let mut worst = F::zero();
    for (i, &j) in class_cols.iter().enumerate() {
        let d = sol.xi.column(j).sup_distance(&kc.x_prefix[i]);
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..=n).map(|k| k as f64 * dt).collect()
    }

    /// alpha_t = t (delta_1 + delta_2) on support {0, 1, 2}
    fn two_atom_alpha(times: &[f64]) -> MeasurePath<f64> {
        MeasurePath::from_cdf_fn(times.to_vec(), vec![0.0, 1.0, 2.0], |t, x| {
            let mut v = 0.0;
            if x >= 1.0 {
                v += t;
            }
            if x >= 2.0 {
                v += t;
            }
            v
        })
        .unwrap()
    }

    fn linear_mu(times: &[f64], rate: f64) -> StepPath<f64> {
        StepPath::new(times.to_vec(), times.iter().map(|t| rate * t).collect()).unwrap()
    }

    #[test]
    fn theta_two_atom_example() {
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let sol = theta(&alpha, &mu).unwrap();
        for (k, &t) in times.iter().enumerate() {
            // xi_t = t delta_2, beta_t = t delta_1, iota = 0
            assert!((sol.xi.value(k, 2) - t).abs() < 1e-12);
            assert!(sol.xi.value(k, 1).abs() < 1e-12);
            assert!((sol.beta.value(k, 1) - t).abs() < 1e-12);
            assert!((sol.beta.value(k, 2) - t).abs() < 1e-12);
            assert!(sol.iota.values()[k].abs() < 1e-12);
        }
    }

    #[test]
    fn theta_overcapacity_example() {
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 3.0);
        let sol = theta(&alpha, &mu).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!(sol.xi.value(k, 2).abs() < 1e-12);
            assert!((sol.beta.value(k, 1) - t).abs() < 1e-12);
            assert!((sol.beta.value(k, 2) - 2.0 * t).abs() < 1e-12);
            assert!((sol.iota.values()[k] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_empty_system_idles() {
        let times = grid(5, 1.0);
        let alpha =
            MeasurePath::from_cdf_fn(times.clone(), vec![0.0, 1.0], |_, _| 0.0).unwrap();
        let mu = linear_mu(&times, 2.0);
        let sol = theta(&alpha, &mu).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert_eq!(sol.xi.value(k, 1), 0.0);
            assert_eq!(sol.beta.value(k, 1), 0.0);
            assert!((sol.iota.values()[k] - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_lifo_mirrors_priority() {
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let sol = theta_lifo(&alpha, &mu).unwrap();
        for (k, &t) in times.iter().enumerate() {
            // highest x drains first: xi_t = t delta_1, beta_t = t delta_2
            assert!((sol.xi.value(k, 1) - t).abs() < 1e-12);
            assert!((sol.xi.value(k, 2) - t).abs() < 1e-12);
            assert!(sol.beta.value(k, 1).abs() < 1e-12);
            assert!((sol.beta.value(k, 2) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_lifo_single_atom_matches_theta() {
        let times = grid(8, 0.25);
        let alpha = MeasurePath::from_cdf_fn(times.clone(), vec![0.0, 1.5], |t, x| {
            if x >= 1.5 {
                2.0 * t
            } else {
                0.0
            }
        })
        .unwrap();
        let mu = linear_mu(&times, 1.0);
        let a = theta(&alpha, &mu).unwrap();
        let b = theta_lifo(&alpha, &mu).unwrap();
        for k in 0..times.len() {
            assert!((a.xi.value(k, 1) - b.xi.value(k, 1)).abs() < 1e-12);
            assert!((a.beta.value(k, 1) - b.beta.value(k, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_mvsp_closed_form_is_exact() {
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let sol = theta(&alpha, &mu).unwrap();
        let report = verify_mvsp(&alpha, &mu, &sol).unwrap();
        assert_eq!(report.max_residual(), 0.0);
    }

    #[test]
    fn verify_mvsp_detects_planted_violation() {
        let times = grid(4, 1.0);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let mut sol = theta(&alpha, &mu).unwrap();
        // inflate beta by 1 at one cell
        let mut cdf: Vec<f64> = (0..sol.beta.num_times())
            .flat_map(|k| sol.beta.row(k).to_vec())
            .collect();
        let j_len = sol.beta.num_support();
        cdf[3 * j_len + 2] += 1.0;
        sol.beta = MeasurePath::new(times.clone(), alpha.support().to_vec(), cdf).unwrap();
        let report = verify_mvsp(&alpha, &mu, &sol).unwrap();
        assert!((report.identity - 1.0).abs() < 1e-12);
        assert!((report.mass_balance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kclass_single_class_reduces_to_scalar_map() {
        let times = grid(6, 0.5);
        let a = StepPath::new(times.clone(), times.iter().map(|t| 2.0 * t).collect()).unwrap();
        let m = linear_mu(&times, 1.0);
        let kc = kclass_solve(std::slice::from_ref(&a), &m).unwrap();
        let (phi, eta) = a.sub(&m).skorokhod_map();
        assert_eq!(kc.x_prefix[0], phi);
        assert_eq!(kc.i_hat, eta);
    }

    #[test]
    fn kclass_two_class_busy() {
        let times = grid(6, 0.5);
        let a: Vec<_> = (0..2)
            .map(|_| StepPath::new(times.clone(), times.clone()).unwrap())
            .collect();
        let m = linear_mu(&times, 1.0);
        let kc = kclass_solve(&a, &m).unwrap();
        let per = kc.per_class();
        for (k, &t) in times.iter().enumerate() {
            assert!(per[0].values()[k].abs() < 1e-12);
            assert!((per[1].values()[k] - t).abs() < 1e-12);
            assert!(kc.i_hat.values()[k].abs() < 1e-12);
        }
    }

    #[test]
    fn theta_matches_kclass_on_two_atoms() {
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let d = theta_vs_kclass(&alpha, &mu).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn xi_generally_not_monotone_but_beta_is() {
        // two-atom example with service: xi swings, beta accumulates
        let times = grid(10, 0.5);
        let alpha = two_atom_alpha(&times);
        let mu = linear_mu(&times, 1.0);
        let sol = theta(&alpha, &mu).unwrap();
        assert!(sol.beta.is_monotone());
        // xi here is monotone (pure growth at delta_2); plant a drain phase
        let times2: Vec<f64> = grid(8, 0.5);
        let alpha2 = MeasurePath::from_cdf_fn(times2.clone(), vec![0.0, 1.0], |t, x| {
            if x >= 1.0 {
                t.min(1.0)
            } else {
                0.0
            }
        })
        .unwrap();
        let mu2 = StepPath::new(
            times2.clone(),
            times2.iter().map(|&t| (t - 1.0).max(0.0)).collect(),
        )
        .unwrap();
        let sol2 = theta(&alpha2, &mu2).unwrap();
        assert!(!sol2.xi.is_monotone());
        assert!(sol2.beta.is_monotone());
    }
}
