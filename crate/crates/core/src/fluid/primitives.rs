//! Fluid-model primitives and exact arrival-path builders.
//!
//! Rates are piecewise constant and all integrals below are computed
//! segment-exactly, so the built paths are the represented objects, not
//! quadrature approximations of them.

use crate::error::{Error, Result};
use crate::measure::FiniteMeasure;
use crate::measure_path::MeasurePath;
use crate::step_path::StepPath;
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// A piecewise-constant nonnegative function of time: value `values[i]` on
/// `[breaks[i], breaks[i+1])`, last value extended to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piecewise<F> {
    pub breaks: Vec<F>,
    pub values: Vec<F>,
}

impl<F: Float> Piecewise<F> {
    pub fn new(breaks: Vec<F>, values: Vec<F>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::Config("piecewise function shape mismatch".into()));
        }
        if breaks[0] != F::zero() {
            return Err(Error::Config("piecewise function must start at 0".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("piecewise breaks must increase".into()));
        }
        if values.iter().any(|&v| v < F::zero()) {
            return Err(Error::Config("piecewise values must be nonnegative".into()));
        }
        Ok(Piecewise { breaks, values })
    }

    pub fn constant(v: F) -> Self {
        Piecewise {
            breaks: vec![F::zero()],
            values: vec![v],
        }
    }

    pub fn eval(&self, t: F) -> F {
        let mut i = 0;
        while i + 1 < self.breaks.len() && self.breaks[i + 1] <= t {
            i += 1;
        }
        self.values[i]
    }

    /// Exact integral over `[0, t]`.
    pub fn integral(&self, t: F) -> F {
        let mut acc = F::zero();
        for i in 0..self.breaks.len() {
            let a = self.breaks[i];
            if a >= t {
                break;
            }
            let b = if i + 1 < self.breaks.len() {
                self.breaks[i + 1].min(t)
            } else {
                t
            };
            acc = acc + self.values[i] * (b - a);
        }
        acc
    }

    pub fn min_on(&self, horizon: F) -> F {
        let mut m = F::infinity();
        for i in 0..self.breaks.len() {
            if self.breaks[i] > horizon {
                break;
            }
            if self.values[i] < m {
                m = self.values[i];
            }
        }
        m
    }

    pub fn max_value(&self) -> F {
        self.values.iter().fold(F::zero(), |m, &v| v.max(m))
    }
}

/// Parametric mark distribution (relative deadline, or job size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkLaw {
    Deterministic { value: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { mean: f64 },
    Empirical { atoms: Vec<(f64, f64)> },
}

impl MarkLaw {
    /// Convert to a probability measure.  Continuous laws are discretized at
    /// pitch `dx` up to `x_max`, with the remaining tail mass lumped at
    /// `x_max`.
    pub fn to_measure(&self, dx: f64, x_max: f64) -> Result<FiniteMeasure<f64>> {
        match self {
            MarkLaw::Deterministic { value } => Ok(FiniteMeasure::dirac(*value)),
            MarkLaw::Empirical { atoms } => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if total <= 0.0 {
                    return Err(Error::Config("empirical law has no mass".into()));
                }
                FiniteMeasure::from_atoms(
                    atoms.iter().map(|&(x, w)| (x, w / total)).collect(),
                )
            }
            MarkLaw::Uniform { low, high } => {
                if !(high > low) || *low < 0.0 {
                    return Err(Error::Config("uniform law needs 0 <= low < high".into()));
                }
                discretize_cdf(|x| ((x - low) / (high - low)).clamp(0.0, 1.0), dx, x_max)
            }
            MarkLaw::Exponential { mean } => {
                if *mean <= 0.0 {
                    return Err(Error::Config("exponential mean must be positive".into()));
                }
                discretize_cdf(|x| 1.0 - (-x / mean).exp(), dx, x_max)
            }
        }
    }

    /// Draw one mark.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkLaw::Deterministic { value } => *value,
            MarkLaw::Uniform { low, high } => rng.gen_range(*low..*high),
            MarkLaw::Exponential { mean } => -mean * (1.0 - rng.gen::<f64>()).ln(),
            MarkLaw::Empirical { atoms } => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                for &(x, w) in atoms {
                    acc += w;
                    if u < acc {
                        return x;
                    }
                }
                atoms.last().map(|a| a.0).unwrap_or(0.0)
            }
        }
    }

    /// Mean of the law (exact, pre-discretization).
    pub fn mean(&self) -> f64 {
        match self {
            MarkLaw::Deterministic { value } => *value,
            MarkLaw::Uniform { low, high } => 0.5 * (low + high),
            MarkLaw::Exponential { mean } => *mean,
            MarkLaw::Empirical { atoms } => {
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                atoms.iter().map(|&(x, w)| x * w).sum::<f64>() / total
            }
        }
    }
}

fn discretize_cdf(
    cdf: impl Fn(f64) -> f64,
    dx: f64,
    x_max: f64,
) -> Result<FiniteMeasure<f64>> {
    if dx <= 0.0 || x_max <= 0.0 {
        return Err(Error::Config("discretization needs dx > 0, x_max > 0".into()));
    }
    let n = (x_max / dx).ceil() as usize;
    let mut atoms = Vec::new();
    let mut prev = 0.0;
    for i in 1..=n {
        let x = (i as f64 * dx).min(x_max);
        let c = if i == n { 1.0 } else { cdf(x) };
        if c > prev {
            atoms.push((x, c - prev));
        }
        prev = c;
    }
    FiniteMeasure::new(atoms)
}

/// Data of the EDF fluid model: arrival rate, relative-deadline law, service
/// rate, singular service part, and the initial deadline profile.
#[derive(Clone, Debug)]
pub struct EdfPrimitives<F> {
    /// Arrival rate `lambda(t)` (mass per unit time).
    pub lambda: Piecewise<F>,
    /// Relative-deadline distribution (probability measure, or any finite
    /// measure; mass is multiplied by `lambda`).
    pub nu: FiniteMeasure<F>,
    /// Absolutely continuous service rate `m(t)`.
    pub m: Piecewise<F>,
    /// Singular cumulative service part (jumps allowed).
    pub mu0: StepPath<F>,
    /// Deadline profile of mass present just before time 0.
    pub xi0minus: FiniteMeasure<F>,
}

impl<F: Float> EdfPrimitives<F> {
    /// Surrogate checks of the standing fluid-model assumptions; returns
    /// human-readable warnings rather than failing, since the solver can
    /// still run (certification decides).
    pub fn assumption_warnings(&self, horizon: F, small_x: F) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.m.min_on(horizon) > F::zero()) {
            w.push("service rate m is not bounded away from zero on the horizon".into());
        }
        let near_zero = self.nu.cdf(small_x).to_f64().unwrap_or(0.0);
        if near_zero > 0.0 {
            w.push(format!(
                "deadline law puts mass {} at or below {}",
                near_zero,
                small_x.to_f64().unwrap_or(f64::NAN)
            ));
        }
        if !self.mu0.is_nondecreasing() {
            w.push("singular service part mu0 is not nondecreasing".into());
        }
        w
    }
}

/// Uniform grid `0, dt, 2 dt, ..., >= t_max` (last point may exceed `t_max`
/// by less than `dt`).
pub fn uniform_grid<F: Float>(t_max: F, dt: F) -> Vec<F> {
    let n = (t_max / dt).ceil().to_usize().unwrap();
    (0..=n.max(1)).map(|k| F::from(k).unwrap() * dt).collect()
}

/// Cumulative EDF arrival path on absolute deadlines:
/// `alpha_t[0,x] = xi0minus[0,x] + int_0^t lambda(s) nu[0, x - s] ds`.
///
/// The support grid must reach past the horizon plus the deadline range so
/// the top column carries total mass.
pub fn build_alpha_edf<F: Float>(
    p: &EdfPrimitives<F>,
    t_grid: &[F],
    x_grid: &[F],
) -> Result<MeasurePath<F>> {
    let horizon = *t_grid.last().unwrap();
    let x_max = *x_grid.last().unwrap();
    let nu_top = p.nu.atoms().last().map(|a| a.0).unwrap_or(F::zero());
    let init_top = p.xi0minus.atoms().last().map(|a| a.0).unwrap_or(F::zero());
    if p.nu.total_mass() > F::zero() && x_max < horizon + nu_top {
        return Err(Error::Config(format!(
            "support grid top {} does not cover horizon + deadline range {}",
            x_max.to_f64().unwrap_or(f64::NAN),
            (horizon + nu_top).to_f64().unwrap_or(f64::NAN)
        )));
    }
    if x_max < init_top {
        return Err(Error::Config(
            "support grid does not cover the initial deadline profile".into(),
        ));
    }

    let k_len = t_grid.len();
    let j_len = x_grid.len();
    let mut cdf = vec![F::zero(); k_len * j_len];

    // per-column exact integration of s -> lambda(s) * nu[0, x_j - s]
    for (j, &x) in x_grid.iter().enumerate() {
        // integrand breakpoints: lambda breaks, and s = x - a for nu atoms a
        let mut breaks: Vec<F> = p
            .lambda
            .breaks
            .iter()
            .copied()
            .filter(|&b| b < horizon)
            .collect();
        for &(a, _) in p.nu.atoms() {
            let s = x - a;
            if s > F::zero() && s < horizon {
                breaks.push(s);
            }
        }
        breaks.push(F::zero());
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();

        // walk breakpoints and grid times together, accumulating exactly;
        // the integrand is constant on each open segment, so evaluating at
        // the midpoint sidesteps which endpoint carries a nu atom
        let two = F::from(2.0).unwrap();
        let seg_end = |i: usize| {
            if i + 1 < breaks.len() {
                breaks[i + 1]
            } else {
                horizon
            }
        };
        let val_on = |lo: F, hi: F| {
            let mid = (lo + hi) / two;
            p.lambda.eval(mid) * p.nu.cdf(x - mid)
        };
        let mut acc = F::zero();
        let mut seg = 0usize; // current integrand segment index
        let mut seg_start = F::zero();
        let mut seg_val = val_on(F::zero(), seg_end(0));
        let init = p.xi0minus.cdf(x);
        for (k, &t) in t_grid.iter().enumerate() {
            while seg + 1 < breaks.len() && breaks[seg + 1] <= t {
                let b = breaks[seg + 1];
                acc = acc + seg_val * (b - seg_start);
                seg += 1;
                seg_start = b;
                seg_val = val_on(b, seg_end(seg));
            }
            cdf[k * j_len + j] = init + acc + seg_val * (t - seg_start);
        }
    }

    let pre_initial: Vec<F> = x_grid.iter().map(|&x| p.xi0minus.cdf(x)).collect();
    MeasurePath::new(t_grid.to_vec(), x_grid.to_vec(), cdf)?.with_pre_initial(pre_initial)
}

/// Cumulative service `mu(t) = mu0(t) + int_0^t m(s) ds` on the grid.
pub fn build_mu<F: Float>(p: &EdfPrimitives<F>, t_grid: &[F]) -> Result<StepPath<F>> {
    let values = t_grid
        .iter()
        .map(|&t| p.mu0.eval(t) + p.m.integral(t))
        .collect();
    StepPath::new(t_grid.to_vec(), values)
}

/// FIFO arrival path: `alpha_t[0,x] = int_0^{t /\ x} lambda(s) ds`.
pub fn build_alpha_fifo<F: Float>(
    lambda: &Piecewise<F>,
    t_grid: &[F],
    x_grid: &[F],
) -> Result<MeasurePath<F>> {
    MeasurePath::from_cdf_fn(t_grid.to_vec(), x_grid.to_vec(), |t, x| {
        lambda.integral(t.min(x))
    })
}

/// A rate density on `[0,T] x [0,X]`, piecewise constant on a rectangle grid.
#[derive(Clone, Debug)]
pub struct ContinuumRate<F> {
    pub t_breaks: Vec<F>,
    pub x_breaks: Vec<F>,
    /// `rates[i][j]` on `[t_i, t_{i+1}) x [x_j, x_{j+1})`; zero outside the
    /// last breaks.
    pub rates: Vec<Vec<F>>,
}

impl<F: Float> ContinuumRate<F> {
    /// `int_{[0,t] x [0,x]} rate ds dy`, exact.
    pub fn integral(&self, t: F, x: F) -> F {
        let mut acc = F::zero();
        for i in 0..self.rates.len() {
            let t0 = self.t_breaks[i];
            let t1 = self.t_breaks[i + 1];
            let dt = t.min(t1) - t0;
            if dt <= F::zero() {
                continue;
            }
            for j in 0..self.rates[i].len() {
                let x0 = self.x_breaks[j];
                let x1 = self.x_breaks[j + 1];
                let dx = x.min(x1) - x0;
                if dx <= F::zero() {
                    continue;
                }
                acc = acc + self.rates[i][j] * dt * dx;
            }
        }
        acc
    }
}

/// Continuum-priority arrival path from a two-dimensional rate density.
pub fn build_alpha_continuum<F: Float>(
    rate: &ContinuumRate<F>,
    t_grid: &[F],
    x_grid: &[F],
) -> Result<MeasurePath<F>> {
    MeasurePath::from_cdf_fn(t_grid.to_vec(), x_grid.to_vec(), |t, x| rate.integral(t, x))
}

/// Workload arrival path for SJF/SRPT: jobs arrive at rate `lambda(t)` with
/// sizes drawn from `size_law`, so work with size in `[0,x]` accumulates at
/// rate `lambda(s) * int_{[0,x]} y size_law(dy)`.
pub fn build_alpha_work<F: Float>(
    lambda: &Piecewise<F>,
    size_law: &FiniteMeasure<F>,
    initial_work: &FiniteMeasure<F>,
    t_grid: &[F],
    x_grid: &[F],
) -> Result<MeasurePath<F>> {
    let work_cdf = |x: F| {
        size_law
            .atoms()
            .iter()
            .take_while(|&&(y, _)| y <= x)
            .fold(F::zero(), |a, &(y, w)| a + y * w)
    };
    let path = MeasurePath::from_cdf_fn(t_grid.to_vec(), x_grid.to_vec(), |t, x| {
        initial_work.cdf(x) + lambda.integral(t) * work_cdf(x)
    })?;
    let pre = x_grid.iter().map(|&x| initial_work.cdf(x)).collect();
    path.with_pre_initial(pre)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_integral_exact() {
        let m = Piecewise::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(m.integral(2.0), 3.0);
        assert_eq!(m.integral(0.5), 0.5);
        assert_eq!(m.eval(1.0), 2.0);
        assert_eq!(m.eval(0.999), 1.0);
    }

    #[test]
    fn build_mu_examples() {
        let grid = uniform_grid(2.0, 0.5);
        let p = EdfPrimitives {
            lambda: Piecewise::constant(0.0),
            nu: FiniteMeasure::dirac(1.0),
            m: Piecewise::constant(1.0),
            mu0: StepPath::zero(),
            xi0minus: FiniteMeasure::empty(),
        };
        let mu = build_mu(&p, &grid).unwrap();
        assert_eq!(mu.eval(2.0), 2.0);

        let p2 = EdfPrimitives {
            mu0: StepPath::constant(1.0),
            ..p.clone()
        };
        let mu = build_mu(&p2, &grid).unwrap();
        assert_eq!(mu.eval(1.5), 2.5);

        let p3 = EdfPrimitives {
            m: Piecewise::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap(),
            mu0: StepPath::zero(),
            ..p
        };
        let mu = build_mu(&p3, &grid).unwrap();
        assert_eq!(mu.eval(2.0), 3.0);
    }

    #[test]
    fn alpha_edf_closed_form() {
        // lambda = 2, nu = delta_1: alpha_t[0,x] = 2 max(0, min(t, x - 1))
        let p = EdfPrimitives {
            lambda: Piecewise::constant(2.0),
            nu: FiniteMeasure::dirac(1.0),
            m: Piecewise::constant(1.0),
            mu0: StepPath::zero(),
            xi0minus: FiniteMeasure::empty(),
        };
        let t_grid = uniform_grid(2.0, 0.25);
        let x_grid = uniform_grid(3.25, 0.25);
        let alpha = build_alpha_edf(&p, &t_grid, &x_grid).unwrap();
        for (k, &t) in t_grid.iter().enumerate() {
            for (j, &x) in x_grid.iter().enumerate() {
                let expect = 2.0 * (t.min(x - 1.0)).max(0.0);
                assert!(
                    (alpha.value(k, j) - expect).abs() < 1e-12,
                    "t={} x={}",
                    t,
                    x
                );
            }
        }
        assert!(alpha.is_monotone());
    }

    #[test]
    fn alpha_edf_zero_rate_keeps_initial_profile() {
        let p = EdfPrimitives {
            lambda: Piecewise::constant(0.0),
            nu: FiniteMeasure::dirac(1.0),
            m: Piecewise::constant(1.0),
            mu0: StepPath::zero(),
            xi0minus: FiniteMeasure::new(vec![(0.5, 1.0), (1.5, 2.0)]).unwrap(),
        };
        let t_grid = uniform_grid(1.0, 0.5);
        let x_grid = uniform_grid(2.0, 0.5);
        let alpha = build_alpha_edf(&p, &t_grid, &x_grid).unwrap();
        for k in 0..t_grid.len() {
            assert_eq!(alpha.value(k, 1), 1.0); // x = 0.5
            assert_eq!(alpha.value(k, 4), 3.0); // x = 2.0
        }
        assert_eq!(alpha.pre_initial().unwrap()[4], 3.0);
    }

    #[test]
    fn alpha_edf_total_mass_marginal() {
        // lambda = 1, nu uniform on [0,1] (discretized): alpha_t[0,inf) = t
        let nu = MarkLaw::Uniform {
            low: 0.0,
            high: 1.0,
        }
        .to_measure(0.05, 1.0)
        .unwrap();
        let p = EdfPrimitives {
            lambda: Piecewise::constant(1.0),
            nu,
            m: Piecewise::constant(1.0),
            mu0: StepPath::zero(),
            xi0minus: FiniteMeasure::empty(),
        };
        let t_grid = uniform_grid(2.0, 0.1);
        let x_grid = uniform_grid(3.0, 0.05);
        let alpha = build_alpha_edf(&p, &t_grid, &x_grid).unwrap();
        let top = x_grid.len() - 1;
        for (k, &t) in t_grid.iter().enumerate() {
            assert!((alpha.value(k, top) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_edf_rejects_short_support_grid() {
        let p = EdfPrimitives {
            lambda: Piecewise::constant(1.0),
            nu: FiniteMeasure::dirac(5.0),
            m: Piecewise::constant(1.0),
            mu0: StepPath::zero(),
            xi0minus: FiniteMeasure::empty(),
        };
        let t_grid = uniform_grid(2.0, 0.5);
        let x_grid = uniform_grid(3.0, 0.5); // needs to reach 7
        assert!(build_alpha_edf(&p, &t_grid, &x_grid).is_err());
    }

    #[test]
    fn fifo_and_continuum_builders() {
        let t_grid = uniform_grid(2.0, 0.5);
        let x_grid = uniform_grid(2.0, 0.5);
        let fifo = build_alpha_fifo(&Piecewise::constant(1.0), &t_grid, &x_grid).unwrap();
        for (k, &t) in t_grid.iter().enumerate() {
            for (j, &x) in x_grid.iter().enumerate() {
                assert_eq!(fifo.value(k, j), t.min(x));
            }
        }
        let zero = build_alpha_fifo(&Piecewise::constant(0.0), &t_grid, &x_grid).unwrap();
        assert_eq!(zero.total_mass_path().last_value(), 0.0);

        let rate = ContinuumRate {
            t_breaks: vec![0.0, 10.0],
            x_breaks: vec![0.0, 1.0],
            rates: vec![vec![1.0]],
        };
        let cont = build_alpha_continuum(&rate, &t_grid, &x_grid).unwrap();
        for (k, &t) in t_grid.iter().enumerate() {
            for (j, &x) in x_grid.iter().enumerate() {
                assert!((cont.value(k, j) - t * x.min(1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mark_law_discretization_masses() {
        let u = MarkLaw::Uniform {
            low: 0.5,
            high: 1.5,
        }
        .to_measure(0.25, 3.0)
        .unwrap();
        assert!((u.total_mass() - 1.0).abs() < 1e-12);
        assert!((u.cdf(1.0) - 0.5).abs() < 1e-12);
        let e = MarkLaw::Exponential { mean: 1.0 }.to_measure(0.1, 5.0).unwrap();
        assert!((e.total_mass() - 1.0).abs() < 1e-12);
    }
}
