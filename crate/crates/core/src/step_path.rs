//! Cadlag real-valued paths on a finite breakpoint grid, and the
//! Skorokhod map on the half-line.
//!
//! Paths are piecewise constant: the value at a breakpoint holds until the
//! next breakpoint, so right-continuity is built into the representation and
//! the running-minimum formula for the reflection map is exact on the grid.

use crate::error::{Error, Result};
use num_traits::Float;
use std::fmt::Display;
use std::io::Write;

/// A right-continuous step function on `[0, inf)` with finitely many jumps.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPath<F> {
    breakpoints: Vec<F>,
    values: Vec<F>,
    initial_left_value: F,
}

impl<F: Float> StepPath<F> {
    /// Build a path from sorted breakpoints (first must be 0) and the values
    /// attained at and after each breakpoint.
    pub fn new(breakpoints: Vec<F>, values: Vec<F>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidPath("empty breakpoint list".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidPath(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != F::zero() {
            return Err(Error::InvalidPath("first breakpoint must be 0".into()));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidPath(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
        }
        Ok(StepPath {
            breakpoints,
            values,
            initial_left_value: F::zero(),
        })
    }

    /// The path that is identically `v`.
    pub fn constant(v: F) -> Self {
        StepPath {
            breakpoints: vec![F::zero()],
            values: vec![v],
            initial_left_value: F::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(F::zero())
    }

    pub fn breakpoints(&self) -> &[F] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at `0-`.  Defaults to 0 so regulator paths satisfy `eta(0-)=0`.
    pub fn initial_left_value(&self) -> F {
        self.initial_left_value
    }

    pub fn with_initial_left_value(mut self, v: F) -> Self {
        self.initial_left_value = v;
        self
    }

    pub fn last_time(&self) -> F {
        *self.breakpoints.last().unwrap()
    }

    pub fn last_value(&self) -> F {
        *self.values.last().unwrap()
    }

    /// Right-continuous evaluation: the value at the largest breakpoint `<= t`.
    pub fn eval(&self, t: F) -> F {
        assert!(t >= F::zero(), "eval called with negative time");
        self.values[self.index_at(t)]
    }

    fn index_at(&self, t: F) -> usize {
        // partition_point: first index with breakpoint > t
        let mut lo = 0usize;
        let mut hi = self.breakpoints.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.breakpoints[mid] <= t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo - 1
    }

    /// Solve the Skorokhod problem on the half-line for this path as input:
    /// `phi(t) = psi(t) - inf_{s<=t}(psi(s) /\ 0)` and `eta = phi - psi`.
    pub fn skorokhod_map(&self) -> (StepPath<F>, StepPath<F>) {
        let mut run_min = F::zero();
        let mut phi = Vec::with_capacity(self.values.len());
        let mut eta = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            if v < run_min {
                run_min = v;
            }
            phi.push(v - run_min);
            eta.push(-run_min);
        }
        (
            StepPath {
                breakpoints: self.breakpoints.clone(),
                values: phi,
                initial_left_value: F::zero(),
            },
            StepPath {
                breakpoints: self.breakpoints.clone(),
                values: eta,
                initial_left_value: F::zero(),
            },
        )
    }

    /// The shifted path `f^T(t) = f(T+t) - f(T)`.
    pub fn shift(&self, shift_time: F) -> Self {
        assert!(shift_time >= F::zero(), "shift time must be nonnegative");
        let base = self.eval(shift_time);
        let mut breakpoints = vec![F::zero()];
        let mut values = vec![F::zero()];
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if b > shift_time {
                breakpoints.push(b - shift_time);
                values.push(self.values[i] - base);
            }
        }
        StepPath {
            breakpoints,
            values,
            initial_left_value: F::zero(),
        }
    }

    /// Combine two paths pointwise on the merged breakpoint grid.  Grid times
    /// are deduplicated by exact equality.
    pub fn combine(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        let grid = merge_grids(&self.breakpoints, &other.breakpoints);
        let values = grid
            .iter()
            .map(|&t| f(self.eval(t), other.eval(t)))
            .collect();
        StepPath {
            breakpoints: grid,
            values,
            initial_left_value: f(self.initial_left_value, other.initial_left_value),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn scale(&self, c: F) -> Self {
        StepPath {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            initial_left_value: self.initial_left_value * c,
        }
    }

    /// Resample onto an explicit grid (right-continuous evaluation).
    pub fn sample_on(&self, grid: &[F]) -> Result<Self> {
        let values = grid.iter().map(|&t| self.eval(t)).collect();
        StepPath::new(grid.to_vec(), values)
            .map(|p| p.with_initial_left_value(self.initial_left_value))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values[0] >= self.initial_left_value
            && self.values.windows(2).all(|w| w[1] >= w[0])
            && self.values[0] >= F::zero()
    }

    /// Sup distance over the union of both breakpoint grids.
    pub fn sup_distance(&self, other: &Self) -> F {
        let grid = merge_grids(&self.breakpoints, &other.breakpoints);
        let mut m = F::zero();
        for &t in &grid {
            let d = (self.eval(t) - other.eval(t)).abs();
            if d > m {
                m = d;
            }
        }
        m
    }

    pub fn sup_norm(&self) -> F {
        self.values
            .iter()
            .fold(F::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    /// Jump sizes `Delta f(t_i)`, with the jump at `t_0 = 0` measured from the
    /// initial left value.
    pub fn increments(&self) -> Vec<F> {
        let mut prev = self.initial_left_value;
        self.values
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }
}

impl<F: Float + Display> StepPath<F> {
    /// CSV export: header `t,value`, one row per breakpoint.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            writeln!(w, "{},{}", t, v)?;
        }
        Ok(())
    }
}

/// Merge two sorted grids, deduplicating exactly equal times.
pub fn merge_grids<F: Float>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let t = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            let t = a[i];
            i += 1;
            if j < b.len() && b[j] == t {
                j += 1;
            }
            t
        } else {
            let t = b[j];
            j += 1;
            t
        };
        out.push(t);
    }
    out
}

/// Lebesgue-Stieltjes integral of `g` against the measure induced by a
/// nondecreasing path: `zeta(0) g(0) + sum over jumps g(t) Delta zeta(t)`.
pub fn stieltjes_integral<F: Float>(g: impl Fn(F) -> F, zeta: &StepPath<F>) -> F {
    let mut acc = g(F::zero()) * zeta.eval(F::zero());
    let mut prev = zeta.values()[0];
    for (i, &t) in zeta.breakpoints().iter().enumerate().skip(1) {
        let v = zeta.values()[i];
        acc = acc + g(t) * (v - prev);
        prev = v;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(b: &[f64], v: &[f64]) -> StepPath<f64> {
        StepPath::new(b.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let path = p(&[0.0, 1.0], &[2.0, 5.0]);
        assert_eq!(path.eval(0.5), 2.0);
        assert_eq!(path.eval(1.0), 5.0);
        assert_eq!(path.eval(7.0), 5.0);
    }

    #[test]
    #[should_panic]
    fn eval_rejects_negative_time() {
        p(&[0.0], &[1.0]).eval(-1.0);
    }

    #[test]
    fn rejects_unsorted_breakpoints() {
        assert!(StepPath::new(vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 0.0]).is_err());
        assert!(StepPath::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn skorokhod_pure_reflection() {
        // psi(t) = -t sampled on a grid: phi = 0, eta(t) = t
        let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<f64> = grid.iter().map(|t| -t).collect();
        let psi = StepPath::new(grid.clone(), vals).unwrap();
        let (phi, eta) = psi.skorokhod_map();
        for (i, &t) in grid.iter().enumerate() {
            assert_eq!(phi.values()[i], 0.0);
            assert_eq!(eta.values()[i], t);
        }
    }

    #[test]
    fn skorokhod_nonnegative_input_invariant() {
        let grid: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let vals: Vec<f64> = grid.clone();
        let psi = StepPath::new(grid, vals).unwrap();
        let (phi, eta) = psi.skorokhod_map();
        assert_eq!(phi, psi);
        assert!(eta.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn skorokhod_hand_example() {
        let psi = p(&[0.0, 1.0, 2.0], &[1.0, -1.0, 2.0]);
        let (phi, eta) = psi.skorokhod_map();
        assert_eq!(phi.values(), &[1.0, 0.0, 3.0]);
        assert_eq!(eta.values(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn shift_examples() {
        // identity path is shift-invariant
        let grid: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let idp = StepPath::new(grid.clone(), grid.clone()).unwrap();
        let shifted = idp.shift(3.0);
        for t in [0.0, 1.0, 2.5, 4.0] {
            assert_eq!(shifted.eval(t), idp.eval(t));
        }
        // constant path shifts to zero
        let c = StepPath::constant(4.2);
        assert_eq!(c.shift(2.0), StepPath::zero());
        // hand example
        let psi = p(&[0.0, 1.0, 2.0], &[1.0, -1.0, 2.0]);
        let s = psi.shift(1.0);
        assert_eq!(s.breakpoints(), &[0.0, 1.0]);
        assert_eq!(s.values(), &[0.0, 3.0]);
    }

    #[test]
    fn stieltjes_examples() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let lin = StepPath::new(grid.clone(), grid.clone()).unwrap();
        assert_eq!(stieltjes_integral(|_| 1.0, &lin), 10.0);
        assert_eq!(stieltjes_integral(|_| 0.0, &lin), 0.0);
        let jump = p(&[0.0, 2.0], &[0.0, 1.0]);
        assert_eq!(stieltjes_integral(|t| t, &jump), 2.0);
    }

    #[test]
    fn complementarity_exact_on_grid() {
        let psi = p(&[0.0, 1.0, 2.0, 3.0], &[1.0, -1.0, 2.0, -4.0]);
        let (phi, eta) = psi.skorokhod_map();
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 0..eta.len() {
            acc += phi.values()[i] * (eta.values()[i] - prev);
            prev = eta.values()[i];
        }
        assert_eq!(acc, 0.0);
    }

    #[test]
    fn csv_roundtrip_format() {
        let path = p(&[0.0, 1.5], &[2.0, -1.0]);
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n0,2\n1.5,-1\n");
    }
}
