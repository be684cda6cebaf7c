//! Trajectory evaluation: percent length error, Average Displacement Error,
//! Final Displacement Error, and batch aggregation across seeded trials.
//!
//! The estimated trajectory carries timestamps while the ground truth is a
//! geometric polyline, so pointwise comparison aligns them by normalized
//! time: the truth is linearly interpolated at each estimate's fraction of
//! the total run duration.

use std::collections::BTreeMap;
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("ground-truth trajectory has zero length")]
    ZeroLengthTruth,
    #[error("trajectory is empty")]
    EmptyTrajectory,
}

/// Per-trial evaluation of one trajectory against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEval {
    pub percent_error: f64,
    pub ade: f64,
    pub fde: f64,
    pub est_length: f64,
    pub true_length: f64,
}

/// Arc length of a sampled polyline.
pub fn arc_length(points: &[Point2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Relative arc-length discrepancy, percent. Pure geometry: invariant
/// under reparametrization of time.
pub fn percent_error(est: &[Point2], truth: &[Point2]) -> Result<f64, MetricsError> {
    let true_len = arc_length(truth);
    if true_len.is_nan() || true_len <= 0.0 {
        return Err(MetricsError::ZeroLengthTruth);
    }
    Ok((arc_length(est) - true_len).abs() / true_len * 100.0)
}

/// Point on `truth` at `fraction` in [0, 1] of its arc length.
fn truth_at_fraction(truth: &[Point2], fraction: f64) -> Point2 {
    debug_assert!(truth.len() >= 2);
    let total = arc_length(truth);
    if total <= 0.0 {
        return truth[0];
    }
    let mut remaining = fraction.clamp(0.0, 1.0) * total;
    for w in truth.windows(2) {
        let seg = w[0].distance(w[1]);
        if remaining <= seg {
            if seg <= 0.0 {
                return w[0];
            }
            let t = remaining / seg;
            return Point2::new(
                w[0].x + t * (w[1].x - w[0].x),
                w[0].y + t * (w[1].y - w[0].y),
            );
        }
        remaining -= seg;
    }
    *truth.last().expect("non-empty")
}

/// Average Displacement Error: mean distance between each timestamped
/// estimate and the truth interpolated at the same normalized time.
pub fn ade(est: &[(f64, Point2)], truth: &[Point2]) -> Result<f64, MetricsError> {
    if est.is_empty() || truth.len() < 2 {
        return Err(MetricsError::EmptyTrajectory);
    }
    let t0 = est[0].0;
    let t_final = est[est.len() - 1].0;
    let span = t_final - t0;
    let sum = kahan_sum(est.iter().map(|&(t, p)| {
        let fraction = if span > 0.0 { (t - t0) / span } else { 1.0 };
        p.distance(truth_at_fraction(truth, fraction))
    }));
    Ok(sum / est.len() as f64)
}

/// Final Displacement Error: distance between the final points.
pub fn fde(est: &[Point2], truth: &[Point2]) -> Result<f64, MetricsError> {
    match (est.last(), truth.last()) {
        (Some(&e), Some(&t)) => Ok(e.distance(t)),
        _ => Err(MetricsError::EmptyTrajectory),
    }
}

/// Evaluates one timestamped trajectory against a ground-truth polyline.
pub fn evaluate(est: &[(f64, Point2)], truth: &[Point2]) -> Result<TrajectoryEval, MetricsError> {
    if est.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    let est_points: Vec<Point2> = est.iter().map(|&(_, p)| p).collect();
    Ok(TrajectoryEval {
        percent_error: percent_error(&est_points, truth)?,
        ade: ade(est, truth)?,
        fde: fde(&est_points, truth)?,
        est_length: arc_length(&est_points),
        true_length: arc_length(truth),
    })
}

/// Improvement of `b` over baseline `a`, percent: (a - b) / a * 100.
pub fn improvement_pct(a: f64, b: f64) -> f64 {
    (a - b) / a * 100.0
}

/// Compensated (Kahan) summation.
fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// One trial's metrics with its grouping key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub path_class: u32,
    /// 1-based approach index.
    pub approach: u8,
    pub eval: TrajectoryEval,
}

/// Mean metrics of one (class, approach) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMeans {
    pub trials: usize,
    pub percent_error: f64,
    pub ade: f64,
    pub fde: f64,
}

/// Per-class and overall means for each approach, plus the improvement of
/// the second approach over the first where both are present.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchSummary {
    /// (path_class, approach) -> means. BTreeMap keeps report order stable.
    pub groups: BTreeMap<(u32, u8), GroupMeans>,
    /// approach -> overall means across all classes.
    pub overall: BTreeMap<u8, GroupMeans>,
}

impl BatchSummary {
    pub fn group(&self, path_class: u32, approach: u8) -> Option<&GroupMeans> {
        self.groups.get(&(path_class, approach))
    }

    /// Improvement percentages (percent_error, ade, fde) of approach
    /// `b` over approach `a`, overall.
    pub fn overall_improvement(&self, a: u8, b: u8) -> Option<(f64, f64, f64)> {
        let (ga, gb) = (self.overall.get(&a)?, self.overall.get(&b)?);
        Some((
            improvement_pct(ga.percent_error, gb.percent_error),
            improvement_pct(ga.ade, gb.ade),
            improvement_pct(ga.fde, gb.fde),
        ))
    }
}

/// Aggregates per-trial results into per-class and overall means.
pub fn batch_evaluate(results: &[TrialResult]) -> BatchSummary {
    let mut summary = BatchSummary::default();
    let mut buckets: BTreeMap<(u32, u8), Vec<&TrialResult>> = BTreeMap::new();
    let mut overall: BTreeMap<u8, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        buckets
            .entry((r.path_class, r.approach))
            .or_default()
            .push(r);
        overall.entry(r.approach).or_default().push(r);
    }
    let means = |rs: &[&TrialResult]| GroupMeans {
        trials: rs.len(),
        percent_error: kahan_sum(rs.iter().map(|r| r.eval.percent_error)) / rs.len() as f64,
        ade: kahan_sum(rs.iter().map(|r| r.eval.ade)) / rs.len() as f64,
        fde: kahan_sum(rs.iter().map(|r| r.eval.fde)) / rs.len() as f64,
    };
    for (key, rs) in &buckets {
        summary.groups.insert(*key, means(rs));
    }
    for (key, rs) in &overall {
        summary.overall.insert(*key, means(rs));
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn timed(points: &[(f64, f64)]) -> Vec<(f64, Point2)> {
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i as f64, Point2::new(x, y)))
            .collect()
    }

    fn line(points: &[(f64, f64)]) -> Vec<Point2> {
        points.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn identical_trajectories_score_zero() {
        let truth = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let est = timed(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let eval = evaluate(&est, &truth).unwrap();
        assert_abs_diff_eq!(eval.percent_error, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eval.ade, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eval.fde, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn percent_error_matches_reported_average_magnitude() {
        let est = line(&[(0.0, 0.0), (106.51, 0.0)]);
        let truth = line(&[(0.0, 0.0), (100.0, 0.0)]);
        assert_abs_diff_eq!(percent_error(&est, &truth).unwrap(), 6.51, epsilon = 1e-9);
    }

    #[test]
    fn percent_error_is_reparametrization_invariant() {
        // Same geometry traversed at different speeds: slow start, fast end.
        let truth = line(&[(0.0, 0.0), (5.0, 5.0), (10.0, 0.0)]);
        let est_geom = line(&[
            (0.0, 0.0),
            (1.0, 1.0),
            (1.5, 1.5),
            (2.0, 2.0),
            (5.0, 5.0),
            (10.0, 0.0),
        ]);
        assert_abs_diff_eq!(
            percent_error(&est_geom, &truth).unwrap(),
            0.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn zero_length_truth_is_an_error() {
        let est = line(&[(0.0, 0.0), (1.0, 0.0)]);
        let truth = line(&[(2.0, 2.0), (2.0, 2.0)]);
        assert_eq!(
            percent_error(&est, &truth),
            Err(MetricsError::ZeroLengthTruth)
        );
    }

    #[test]
    fn constant_offset_gives_offset_ade() {
        // Truth sampled evenly, estimate shifted by +1 in x at every point.
        let truth = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        let est = timed(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0), (5.0, 0.0)]);
        assert_abs_diff_eq!(ade(&est, &truth).unwrap(), 1.0, epsilon = 1e-12);
        let est_points: Vec<Point2> = est.iter().map(|&(_, p)| p).collect();
        assert_abs_diff_eq!(fde(&est_points, &truth).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ade_equals_direct_summation_oracle() {
        let truth = line(&[(0.0, 0.0), (3.0, 4.0), (8.0, 4.0), (12.0, 1.0)]);
        let est = timed(&[(0.5, 0.2), (3.1, 3.6), (7.5, 4.4), (11.8, 1.3)]);
        let got = ade(&est, &truth).unwrap();

        let t0 = est[0].0;
        let span = est[est.len() - 1].0 - t0;
        let mut oracle = 0.0;
        for &(t, p) in &est {
            let q = truth_at_fraction(&truth, (t - t0) / span);
            oracle += p.distance(q);
        }
        oracle /= est.len() as f64;
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-12);
    }

    #[test]
    fn fde_three_four_five() {
        let est = line(&[(0.0, 0.0), (0.0, 0.0)]);
        let truth = line(&[(0.0, 0.0), (3.0, 4.0)]);
        assert_abs_diff_eq!(fde(&est, &truth).unwrap(), 5.0, epsilon = 1e-12);
    }

    fn eval_of(pe: f64, ade: f64, fde: f64) -> TrajectoryEval {
        TrajectoryEval {
            percent_error: pe,
            ade,
            fde,
            est_length: 0.0,
            true_length: 0.0,
        }
    }

    #[test]
    fn single_trial_summary_is_that_trial() {
        let results = [TrialResult {
            path_class: 1,
            approach: 2,
            eval: eval_of(6.51, 2.97, 3.27),
        }];
        let summary = batch_evaluate(&results);
        let g = summary.group(1, 2).unwrap();
        assert_eq!(g.trials, 1);
        assert_abs_diff_eq!(g.percent_error, 6.51, epsilon = 1e-12);
        assert_abs_diff_eq!(g.ade, 2.97, epsilon = 1e-12);
        assert_abs_diff_eq!(g.fde, 3.27, epsilon = 1e-12);
    }

    #[test]
    fn improvement_arithmetic_matches_reported_ratio() {
        // A drop from 5.56 to 2.97 is a ~46.6% improvement.
        let imp = improvement_pct(5.56, 2.97);
        assert!((imp - 46.6).abs() < 0.1, "improvement {imp}");
    }

    #[test]
    fn identical_groups_summarize_identically() {
        let mk = |class| TrialResult {
            path_class: class,
            approach: 1,
            eval: eval_of(10.0, 5.0, 6.0),
        };
        let results = vec![mk(1), mk(1), mk(2), mk(2)];
        let summary = batch_evaluate(&results);
        assert_eq!(summary.group(1, 1), summary.group(2, 1));
    }

    #[test]
    fn batch_means_match_naive_means_closely() {
        let results: Vec<TrialResult> = (0..10_000)
            .map(|i| TrialResult {
                path_class: 1,
                approach: 1,
                eval: eval_of(
                    10.0 + (i % 7) as f64 * 0.1,
                    5.0 + (i % 13) as f64 * 0.01,
                    6.0 + (i % 3) as f64 * 0.001,
                ),
            })
            .collect();
        let summary = batch_evaluate(&results);
        let naive: f64 =
            results.iter().map(|r| r.eval.percent_error).sum::<f64>() / results.len() as f64;
        let g = summary.group(1, 1).unwrap();
        assert!((g.percent_error - naive).abs() < 1e-12);
    }
}
