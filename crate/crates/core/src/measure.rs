//! Finite nonnegative measures on `[0, inf)` represented as sorted atom
//! lists, with the Levy metric used for all weak-convergence diagnostics.

use crate::error::{Error, Result};
use num_traits::Float;
use std::fmt::Display;
use std::io::Write;

/// A finite nonnegative Borel measure on `[0, inf)` as sorted atoms.
///
/// Atomless continuous measures are represented by many small atoms; the
/// `atomless_at` resolution check below classifies such approximations.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMeasure<F> {
    atoms: Vec<(F, F)>,
}

impl<F: Float> FiniteMeasure<F> {
    /// Build from (location, weight) pairs.  Locations must be strictly
    /// increasing and nonnegative, weights strictly positive.
    pub fn new(atoms: Vec<(F, F)>) -> Result<Self> {
        for (i, &(x, w)) in atoms.iter().enumerate() {
            if x < F::zero() {
                return Err(Error::InvalidMeasure("negative atom location".into()));
            }
            if !(w > F::zero()) {
                return Err(Error::InvalidMeasure("atom weight must be positive".into()));
            }
            if i > 0 && !(x > atoms[i - 1].0) {
                return Err(Error::InvalidMeasure(
                    "atom locations must be strictly increasing".into(),
                ));
            }
        }
        Ok(FiniteMeasure { atoms })
    }

    /// Collect possibly unsorted, possibly repeated atoms; merges weights at
    /// exactly equal locations and drops zero weights.
    pub fn from_atoms(mut atoms: Vec<(F, F)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(F, F)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if w == F::zero() {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1 + w,
                _ => merged.push((x, w)),
            }
        }
        FiniteMeasure::new(merged)
    }

    pub fn empty() -> Self {
        FiniteMeasure { atoms: Vec::new() }
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: F) -> Self {
        FiniteMeasure {
            atoms: vec![(x, F::one())],
        }
    }

    pub fn atoms(&self) -> &[(F, F)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> F {
        self.atoms.iter().fold(F::zero(), |a, &(_, w)| a + w)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// CDF evaluation `nu[0, x]`, extended by 0 on negative arguments.
    pub fn cdf(&self, x: F) -> F {
        let mut acc = F::zero();
        for &(loc, w) in &self.atoms {
            if loc <= x {
                acc = acc + w;
            } else {
                break;
            }
        }
        acc
    }

    pub fn scale(&self, c: F) -> Self {
        FiniteMeasure {
            atoms: self.atoms.iter().map(|&(x, w)| (x, w * c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        FiniteMeasure::from_atoms(atoms).unwrap()
    }

    /// Smallest atom location with weight above `mass_tol`; `None` encodes
    /// `+inf` (the min of the empty set).
    pub fn min_support(&self, mass_tol: F) -> Option<F> {
        self.atoms
            .iter()
            .find(|&&(_, w)| w > mass_tol)
            .map(|&(x, _)| x)
    }

    /// Whether every atom weight is at or below the declared resolution, i.e.
    /// the measure is a grid-level approximation of an atomless measure.
    pub fn atomless_at(&self, resolution: F) -> bool {
        self.atoms.iter().all(|&(_, w)| w <= resolution)
    }

    /// Largest gap between consecutive support points (0 for <2 atoms).
    pub fn max_atom_gap(&self) -> F {
        self.atoms
            .windows(2)
            .fold(F::zero(), |m, w| (w[1].0 - w[0].0).max(m))
    }
}

/// Exact sup-CDF distance `sup_x |nu1[0,x] - nu2[0,x]|`, evaluated over the
/// merged atom grid and just below each atom.
pub fn sup_cdf_distance<F: Float>(nu1: &FiniteMeasure<F>, nu2: &FiniteMeasure<F>) -> F {
    let mut best = F::zero();
    // Just below the smallest atom both CDFs are 0; between atoms the CDFs
    // are constant, so the sup is attained at atom locations and just below
    // them.  Just below an atom of nu1 at x: F1 = F1(x) - w, F2 = F2(x-).
    let mut check = |d: F| {
        if d.abs() > best {
            best = d.abs();
        }
    };
    for &(x, _) in nu1.atoms().iter().chain(nu2.atoms().iter()) {
        check(nu1.cdf(x) - nu2.cdf(x));
        check(cdf_left(nu1, x) - cdf_left(nu2, x));
    }
    best
}

fn cdf_left<F: Float>(nu: &FiniteMeasure<F>, x: F) -> F {
    let mut acc = F::zero();
    for &(loc, w) in nu.atoms() {
        if loc < x {
            acc = acc + w;
        } else {
            break;
        }
    }
    acc
}

/// The Levy metric: the smallest `eps` (to bisection tolerance 1e-10) with
/// `F1(x - eps) - eps <= F2(x) <= F1(x + eps) + eps` for all real `x`, where
/// CDFs are extended by 0 on `(-inf, 0)`.  The whole-line extension makes the
/// metric symmetric.
pub fn levy_distance<F: Float>(nu1: &FiniteMeasure<F>, nu2: &FiniteMeasure<F>) -> F {
    let tol = F::from(1e-10).unwrap();
    if nu1 == nu2 {
        return F::zero();
    }
    let mut lo = F::zero();
    // sup-CDF distance always dominates the Levy distance
    let mut hi = sup_cdf_distance(nu1, nu2);
    if hi == F::zero() {
        return F::zero();
    }
    // ensure feasibility at hi (it is, by the comparison bound, but guard
    // against boundary rounding)
    while !levy_feasible(nu1, nu2, hi) {
        hi = hi + tol.max(hi * F::from(1e-12).unwrap());
    }
    while hi - lo > tol {
        let mid = (lo + hi) / (F::one() + F::one());
        if levy_feasible(nu1, nu2, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Feasibility of a candidate `eps` in the two-sided Levy sandwich.  Both
/// CDFs are piecewise constant, so violations can only occur at atoms and
/// their `eps`-shifts (approached from the left).
fn levy_feasible<F: Float>(nu1: &FiniteMeasure<F>, nu2: &FiniteMeasure<F>, eps: F) -> bool {
    one_sided(nu1, nu2, eps) && one_sided(nu2, nu1, eps)
}

// F1(x - eps) - eps <= F2(x) for all x in R (CDFs 0 below 0).
fn one_sided<F: Float>(nu1: &FiniteMeasure<F>, nu2: &FiniteMeasure<F>, eps: F) -> bool {
    // The left side jumps at x = a + eps for atoms a of nu1; the right side
    // jumps at atoms of nu2.  Check at those candidate points.
    for &(a, _) in nu1.atoms() {
        let x = a + eps;
        if nu1.cdf(a) - eps > nu2.cdf(x) {
            return false;
        }
    }
    for &(b, _) in nu2.atoms() {
        // just below an atom of nu2 the right side is F2(b-); left side there
        // is F1((b - eps)-), which is bounded below by any F1(y) with
        // y < b - eps; the binding check just below b:
        let left = cdf_left(nu1, b - eps);
        if left - eps > cdf_left(nu2, b) {
            return false;
        }
    }
    true
}

impl<F: Float + Display> FiniteMeasure<F> {
    /// CSV export: header `x,weight`, one row per atom.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x,weight")?;
        for &(x, wt) in &self.atoms {
            writeln!(w, "{},{}", x, wt)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_support_examples() {
        assert_eq!(FiniteMeasure::<f64>::empty().min_support(0.0), None);
        let m = FiniteMeasure::new(vec![(2.0, 1.0), (5.0, 1.0)]).unwrap();
        assert_eq!(m.min_support(0.0), Some(2.0));
        let m = FiniteMeasure::new(vec![(1.0, 1e-12), (3.0, 0.5)]).unwrap();
        assert_eq!(m.min_support(1e-9), Some(3.0));
    }

    #[test]
    fn sup_cdf_examples() {
        let d0 = FiniteMeasure::dirac(0.0);
        let d03 = FiniteMeasure::dirac(0.3);
        assert_eq!(sup_cdf_distance(&d0, &d0), 0.0);
        assert_eq!(sup_cdf_distance(&d0, &d03), 1.0);
        let two = FiniteMeasure::new(vec![(1.0, 2.0)]).unwrap();
        let one = FiniteMeasure::dirac(1.0);
        assert_eq!(sup_cdf_distance(&two, &one), 1.0);
    }

    #[test]
    fn levy_examples() {
        let d0 = FiniteMeasure::dirac(0.0);
        let d03 = FiniteMeasure::dirac(0.3);
        assert!(levy_distance(&d0, &d0).abs() < 1e-10);
        assert!((levy_distance(&d0, &d03) - 0.3).abs() < 1e-9);
        assert!((levy_distance(&d03, &d0) - 0.3).abs() < 1e-9);
        let two = FiniteMeasure::new(vec![(1.0, 2.0)]).unwrap();
        let one = FiniteMeasure::dirac(1.0);
        assert!((levy_distance(&two, &one) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn levy_below_sup_cdf() {
        let a = FiniteMeasure::new(vec![(0.2, 0.5), (1.4, 1.0)]).unwrap();
        let b = FiniteMeasure::new(vec![(0.25, 0.6), (2.0, 0.7)]).unwrap();
        assert!(levy_distance(&a, &b) <= sup_cdf_distance(&a, &b) + 1e-10);
    }

    #[test]
    fn from_atoms_merges_duplicates() {
        let m = FiniteMeasure::from_atoms(vec![(1.0, 0.5), (0.5, 1.0), (1.0, 0.25)]).unwrap();
        assert_eq!(m.atoms(), &[(0.5, 1.0), (1.0, 0.75)]);
    }
}
