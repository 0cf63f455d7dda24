//! Shortest-job and shortest-remaining fluid models in workload form.
//!
//! Both policies are the plain measure-valued map applied to workload
//! measures on the size axis (smallest size drains first).  SJF tracks
//! residual work keyed by original size, SRPT by remaining size; in fluid
//! scale the two coincide, so one solve serves both.  `count_transform`
//! converts a workload path back to a job-count path by dividing atom
//! weights by their location.

use crate::error::Result;
use crate::measure_path::MeasurePath;
use crate::mvsm::{theta, MvsmSolution};
use crate::step_path::StepPath;
use num_traits::Float;

/// Solve the workload fluid model: `(xi^w, beta^w, iota) = Theta(alpha^w, mu)`
/// with `alpha^w` the cumulative workload arrival path on the size axis.
pub fn sjf_srpt_fluid_solve<F: Float>(
    alpha_w: &MeasurePath<F>,
    mu: &StepPath<F>,
) -> Result<MvsmSolution<F>> {
    theta(alpha_w, mu)
}

/// Divide each atom's weight by its location, turning work into job counts.
/// Mass at locations `<= y_floor` is dropped; the largest mass dropped at
/// any single time is returned alongside the path.
pub fn count_transform<F: Float>(
    work: &MeasurePath<F>,
    y_floor: F,
) -> Result<(MeasurePath<F>, F)> {
    let k_len = work.num_times();
    let j_len = work.num_support();
    let support = work.support();
    let mut cdf = vec![F::zero(); k_len * j_len];
    let mut dropped = F::zero();
    for k in 0..k_len {
        let row = work.row(k);
        let mut acc = F::zero();
        let mut lost = F::zero();
        let mut prev = F::zero();
        for j in 0..j_len {
            let w = row[j] - prev;
            prev = row[j];
            if support[j] > y_floor {
                acc = acc + w / support[j];
            } else {
                lost = lost + w;
            }
            cdf[k * j_len + j] = acc;
        }
        dropped = F::max(dropped, lost);
    }
    let counts = MeasurePath::new(work.times().to_vec(), support.to_vec(), cdf)?;
    Ok((counts, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_path::MeasurePath;

    // workload arrives at rate 1 at size 1 and rate 1 at size 2, capacity
    // 1.5: size-1 work is served as it arrives, size-2 work drains at the
    // remaining rate 0.5, so the queued work is 0.5 t at size 2
    #[test]
    fn two_size_workload_split() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let support = vec![0.0, 1.0, 2.0];
        let alpha_w = MeasurePath::from_cdf_fn(times.clone(), support, |t, x| {
            let mut v = 0.0;
            if x >= 1.0 {
                v += t;
            }
            if x >= 2.0 {
                v += t;
            }
            v
        })
        .unwrap();
        let mu = StepPath::new(times.clone(), times.iter().map(|t| 1.5 * t).collect()).unwrap();
        let sol = sjf_srpt_fluid_solve(&alpha_w, &mu).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((sol.xi.value(k, 1) - 0.0).abs() < 1e-12);
            assert!((sol.xi.value(k, 2) - 0.5 * t).abs() < 1e-12);
            assert!((sol.iota.values()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn count_transform_divides_by_size() {
        let times = vec![0.0, 1.0, 2.0];
        let support = vec![0.0, 2.0];
        let work = MeasurePath::from_cdf_fn(times, support, |t, x| {
            if x >= 2.0 {
                0.5 * t
            } else {
                0.0
            }
        })
        .unwrap();
        let (counts, dropped) = count_transform(&work, 1e-9).unwrap();
        assert_eq!(dropped, 0.0);
        assert_eq!(counts.value(2, 1), 0.5);
        assert_eq!(counts.value(1, 1), 0.25);
    }

    #[test]
    fn count_transform_drops_floor_mass() {
        let times = vec![0.0, 1.0];
        let support = vec![0.0, 1.0];
        let work = MeasurePath::from_cdf_fn(times, support, |t, x| {
            if x >= 1.0 {
                t + 0.125
            } else {
                0.125
            }
        })
        .unwrap();
        let (counts, dropped) = count_transform(&work, 0.5).unwrap();
        assert_eq!(dropped, 0.125);
        assert_eq!(counts.value(1, 1), 1.0);
    }
}
