//! Time-indexed families of finite measures sharing one support grid,
//! stored as CDF matrices.  All module boundaries exchange CDFs because the
//! measure-valued Skorokhod map is stated entirely through `alpha_t[0,x]`.

use crate::error::{Error, Result};
use crate::measure::FiniteMeasure;
use crate::step_path::StepPath;
use num_traits::Float;
use std::fmt::Display;
use std::io::Write;

/// A cadlag measure-valued path on a finite time grid and support grid.
///
/// `cdf(k, j) = zeta_{t_k}[0, x_j]`.  An optional `pre_initial` row holds the
/// state at `0-` (used for the initial deadline profile `xi_{0-}`).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurePath<F> {
    times: Vec<F>,
    support: Vec<F>,
    cdf: Vec<F>, // row-major, len = times.len() * support.len()
    pre_initial: Option<Vec<F>>,
}

impl<F: Float> MeasurePath<F> {
    pub fn new(times: Vec<F>, support: Vec<F>, cdf: Vec<F>) -> Result<Self> {
        if times.is_empty() || support.is_empty() {
            return Err(Error::InvalidMeasure("empty grid".into()));
        }
        if times[0] != F::zero() {
            return Err(Error::InvalidMeasure("time grid must start at 0".into()));
        }
        if !strictly_increasing(&times) || !strictly_increasing(&support) {
            return Err(Error::InvalidMeasure(
                "grids must be strictly increasing".into(),
            ));
        }
        if support[0] < F::zero() {
            return Err(Error::InvalidMeasure("negative support point".into()));
        }
        if cdf.len() != times.len() * support.len() {
            return Err(Error::InvalidMeasure("cdf matrix shape mismatch".into()));
        }
        let path = MeasurePath {
            times,
            support,
            cdf,
            pre_initial: None,
        };
        // forgive float-accumulation wiggle relative to the row's magnitude
        for k in 0..path.times.len() {
            let row = path.row(k);
            let tol = F::from(1e-12).unwrap() * F::max(F::one(), row[row.len() - 1].abs());
            if row[0] < -tol || row.windows(2).any(|w| w[1] < w[0] - tol) {
                return Err(Error::InvalidMeasure(format!(
                    "row {} is not a valid CDF",
                    k
                )));
            }
        }
        Ok(path)
    }

    /// Build a path by evaluating `f(t, x)` on the grid.
    pub fn from_cdf_fn(times: Vec<F>, support: Vec<F>, f: impl Fn(F, F) -> F) -> Result<Self> {
        let mut cdf = Vec::with_capacity(times.len() * support.len());
        for &t in &times {
            for &x in &support {
                cdf.push(f(t, x));
            }
        }
        MeasurePath::new(times, support, cdf)
    }

    pub fn with_pre_initial(mut self, row: Vec<F>) -> Result<Self> {
        if row.len() != self.support.len() {
            return Err(Error::GridMismatch("pre-initial row length".into()));
        }
        self.pre_initial = Some(row);
        Ok(self)
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn support(&self) -> &[F] {
        &self.support
    }

    pub fn num_times(&self) -> usize {
        self.times.len()
    }

    pub fn num_support(&self) -> usize {
        self.support.len()
    }

    pub fn row(&self, k: usize) -> &[F] {
        let j = self.support.len();
        &self.cdf[k * j..(k + 1) * j]
    }

    pub fn pre_initial(&self) -> Option<&[F]> {
        self.pre_initial.as_deref()
    }

    pub fn value(&self, k: usize, j: usize) -> F {
        self.cdf[k * self.support.len() + j]
    }

    /// `zeta_t[0, x]` with right-continuous lookup in both arguments; 0 for
    /// `x` below the support grid.
    pub fn eval(&self, t: F, x: F) -> F {
        let k = lookup(&self.times, t);
        match lookup_opt(&self.support, x) {
            Some(j) => self.value(k, j),
            None => F::zero(),
        }
    }

    /// Total-mass path `t -> zeta_t[0, x_max]` as a step path.
    pub fn total_mass_path(&self) -> StepPath<F> {
        self.column(self.support.len() - 1)
    }

    /// Column `t -> zeta_t[0, x_j]` as a step path on the time grid.
    pub fn column(&self, j: usize) -> StepPath<F> {
        let values = (0..self.times.len()).map(|k| self.value(k, j)).collect();
        let p = StepPath::new(self.times.clone(), values).unwrap();
        match &self.pre_initial {
            Some(row) => p.with_initial_left_value(row[j]),
            None => p,
        }
    }

    /// The measure at time index `k` (row increments as atoms).
    pub fn measure_at_index(&self, k: usize) -> FiniteMeasure<F> {
        let row = self.row(k);
        let mut atoms = Vec::new();
        let mut prev = F::zero();
        for (j, &v) in row.iter().enumerate() {
            if v > prev {
                atoms.push((self.support[j], v - prev));
            }
            prev = v;
        }
        FiniteMeasure::new(atoms).unwrap()
    }

    pub fn measure_at(&self, t: F) -> FiniteMeasure<F> {
        self.measure_at_index(lookup(&self.times, t))
    }

    pub fn scale(&self, c: F) -> Self {
        MeasurePath {
            times: self.times.clone(),
            support: self.support.clone(),
            cdf: self.cdf.iter().map(|&v| v * c).collect(),
            pre_initial: self
                .pre_initial
                .as_ref()
                .map(|r| r.iter().map(|&v| v * c).collect()),
        }
    }

    /// Resample onto new grids by right-continuous CDF evaluation.
    pub fn resample(&self, times: Vec<F>, support: Vec<F>) -> Result<Self> {
        MeasurePath::from_cdf_fn(times, support, |t, x| self.eval(t, x))
    }

    /// Membership check for the monotone path space: for all `j < j2`, both
    /// `t -> F[k][j]` and `t -> F[k][j2] - F[k][j]` must be nondecreasing in
    /// `k`.  Equivalently, each time-increment row `D_k[j] = F_k[j] -
    /// F_{k-1}[j]` must be nonnegative and nondecreasing in `j`.  Returns the
    /// first violation `(k, j, j2)` if any, where `j2 == usize::MAX` flags a
    /// violation of the first family.  `tol` forgives float-accumulation
    /// wiggle in paths assembled from many summands.
    pub fn first_monotonicity_violation(&self, tol: F) -> Option<(usize, usize, usize)> {
        let j_len = self.support.len();
        for k in 1..self.times.len() {
            let prev = self.row(k - 1);
            let cur = self.row(k);
            for j in 0..j_len {
                if cur[j] < prev[j] - tol {
                    return Some((k, j, usize::MAX));
                }
                if j > 0 && cur[j] - prev[j] < cur[j - 1] - prev[j - 1] - tol {
                    return Some((k, j - 1, j));
                }
            }
        }
        None
    }

    pub fn is_monotone(&self) -> bool {
        self.first_monotonicity_violation(F::zero()).is_none()
    }
}

impl<F: Float + Display> MeasurePath<F> {
    /// CSV export, long format: header `t,x,cdf`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,x,cdf")?;
        for (k, &t) in self.times.iter().enumerate() {
            for (j, &x) in self.support.iter().enumerate() {
                writeln!(w, "{},{},{}", t, x, self.value(k, j))?;
            }
        }
        Ok(())
    }
}

fn strictly_increasing<F: Float>(v: &[F]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn lookup<F: Float>(grid: &[F], t: F) -> usize {
    lookup_opt(grid, t).expect("evaluation point below the first grid point")
}

/// Index of the largest grid point `<= t`, or `None` if `t` is below the grid.
fn lookup_opt<F: Float>(grid: &[F], t: F) -> Option<usize> {
    if t < grid[0] {
        return None;
    }
    let mut lo = 0usize;
    let mut hi = grid.len();
    while lo < hi {
        let mid = (lo + hi) / 2;
        if grid[mid] <= t {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Some(lo - 1)
}
