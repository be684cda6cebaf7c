//! Simulated landmark-based range localization: anchor selection, noisy
//! range generation, linear least-squares trilateration, and nonlinear
//! position refinement.
//!
//! Stereo vision ranging is replaced by a configurable Gaussian range
//! oracle; the rest of the fix pipeline (pick three well-conditioned
//! anchors, trilaterate, refine the estimate against the raw ranges) runs
//! exactly as it would against real range data.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::{triangle_area, Point2};
use crate::motion::EntityState;

/// Minimum triangle area (m^2) of an accepted anchor triple; rejecting
/// near-collinear triples bounds the trilateration condition number.
pub const MIN_ANCHOR_TRIANGLE_AREA: f64 = 1.0;

/// Default sensing radius (meters) for landmark detection on the map.
pub const DEFAULT_DETECT_RANGE: f64 = 50.0;

/// Gradient-norm target for the nonlinear refinement.
pub const REFINE_GRAD_TOL: f64 = 1e-9;

/// Refinement iteration cap; at the cap a gradient norm above
/// [`REFINE_FLAG_TOL`] flags the result as non-converged.
pub const REFINE_MAX_ITERS: usize = 200;

/// Gradient norm above which a capped refinement is flagged.
pub const REFINE_FLAG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalizationError {
    /// Fewer than 3 landmarks within the detection range.
    #[error("need at least 3 landmarks in range, found {found}")]
    InsufficientAnchors { found: usize },
    /// Every candidate anchor triple is near-collinear, or the linear
    /// system is singular.
    #[error("anchor geometry is degenerate")]
    DegenerateGeometry,
}

/// A mapped landmark usable as a localization anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Landmark {
    pub id: u32,
    pub position: Point2,
    pub cluster_id: u32,
}

/// One measured distance to a landmark anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMeasurement {
    pub landmark_id: u32,
    pub distance: f64,
}

/// Standard deviations of the simulated sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    /// Gaussian noise on each anchor range, meters.
    pub sigma_range: f64,
    /// Gaussian noise on the speed sensor, m/s.
    pub sigma_speed: f64,
}

impl MeasurementNoise {
    pub const ZERO: Self = Self {
        sigma_range: 0.0,
        sigma_speed: 0.0,
    };
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        // Range sigma sized so that the per-axis fix error of a
        // well-spread anchor triple lands a few centimeters RMS.
        Self {
            sigma_range: 0.05,
            sigma_speed: 0.05,
        }
    }
}

/// Result of the nonlinear refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub position: Point2,
    /// False when the iteration cap was reached with the gradient norm
    /// still above [`REFINE_FLAG_TOL`]. The position is returned either way.
    pub converged: bool,
    pub iterations: usize,
    /// Final sum of squared range residuals.
    pub cost: f64,
}

/// A complete position-and-speed fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fix {
    pub position: Point2,
    pub speed: f64,
    pub converged: bool,
}

/// Picks the three nearest in-range landmarks whose triangle is not
/// near-collinear.
///
/// Candidates are ordered by distance (ties by id) and triples are tried
/// in lexicographic order over that ranking, so the nearest acceptable
/// triple wins.
pub fn select_trilateration_set(
    true_pos: Point2,
    landmarks: &[Landmark],
    detect_range: f64,
) -> Result<[&Landmark; 3], LocalizationError> {
    let mut in_range: Vec<&Landmark> = landmarks
        .iter()
        .filter(|l| l.position.distance(true_pos) <= detect_range)
        .collect();
    if in_range.len() < 3 {
        return Err(LocalizationError::InsufficientAnchors {
            found: in_range.len(),
        });
    }
    in_range.sort_by(|a, b| {
        let da = a.position.distance(true_pos);
        let db = b.position.distance(true_pos);
        (da, a.id)
            .partial_cmp(&(db, b.id))
            .expect("finite distances")
    });

    let n = in_range.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (in_range[i], in_range[j], in_range[k]);
                if triangle_area(a.position, b.position, c.position) >= MIN_ANCHOR_TRIANGLE_AREA {
                    return Ok([a, b, c]);
                }
            }
        }
    }
    Err(LocalizationError::DegenerateGeometry)
}

/// Simulates one range reading per anchor: true distance plus Gaussian
/// noise, floored at zero.
pub fn simulate_ranges<R: Rng + ?Sized>(
    true_pos: Point2,
    anchors: &[&Landmark],
    noise: &MeasurementNoise,
    rng: &mut R,
) -> Vec<RangeMeasurement> {
    anchors
        .iter()
        .map(|l| {
            let d = l.position.distance(true_pos)
                + noise.sigma_range * rng.sample::<f64, _>(StandardNormal);
            RangeMeasurement {
                landmark_id: l.id,
                distance: d.max(0.0),
            }
        })
        .collect()
}

/// Linear trilateration: subtracting the first range circle equation from
/// the other two leaves a 2x2 linear system in the position.
pub fn trilaterate_linear(
    anchors: &[&Landmark; 3],
    ranges: &[RangeMeasurement; 3],
) -> Result<Point2, LocalizationError> {
    debug_assert!(anchors
        .iter()
        .zip(ranges.iter())
        .all(|(a, r)| a.id == r.landmark_id));

    let p0 = anchors[0].position;
    let r0 = ranges[0].distance;
    let mut m = [[0.0f64; 2]; 2];
    let mut b = [0.0f64; 2];
    for (row, (a, r)) in anchors.iter().zip(ranges.iter()).skip(1).enumerate() {
        let p = a.position;
        m[row][0] = 2.0 * (p.x - p0.x);
        m[row][1] = 2.0 * (p.y - p0.y);
        b[row] =
            r0 * r0 - r.distance * r.distance + p.x * p.x - p0.x * p0.x + p.y * p.y - p0.y * p0.y;
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-9 {
        return Err(LocalizationError::DegenerateGeometry);
    }
    Ok(Point2::new(
        (b[0] * m[1][1] - b[1] * m[0][1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ))
}

fn range_cost(p: Point2, anchors: &[&Landmark], ranges: &[RangeMeasurement]) -> f64 {
    anchors
        .iter()
        .zip(ranges.iter())
        .map(|(a, r)| {
            let res = p.distance(a.position) - r.distance;
            res * res
        })
        .sum()
}

/// Refines a position estimate by descending the sum of squared range
/// residuals with a damped Gauss-Newton iteration.
///
/// Steps are accepted only when they lower the cost, so the refined cost
/// never exceeds the initial cost.
pub fn refine_position(
    initial: Point2,
    anchors: &[&Landmark],
    ranges: &[RangeMeasurement],
) -> Refinement {
    let mut p = initial;
    let mut cost = range_cost(p, anchors, ranges);
    let mut lambda = 1e-3;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..REFINE_MAX_ITERS {
        iterations = iter;
        // Normal equations of the residual Jacobian.
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (a, r) in anchors.iter().zip(ranges.iter()) {
            let d = p.distance(a.position).max(1e-12);
            let res = d - r.distance;
            let jx = (p.x - a.position.x) / d;
            let jy = (p.y - a.position.y) / d;
            jtj[0][0] += jx * jx;
            jtj[0][1] += jx * jy;
            jtj[1][0] += jy * jx;
            jtj[1][1] += jy * jy;
            jtr[0] += jx * res;
            jtr[1] += jy * res;
        }
        grad_norm = 2.0 * (jtr[0] * jtr[0] + jtr[1] * jtr[1]).sqrt();
        if grad_norm <= REFINE_GRAD_TOL {
            break;
        }

        let mut accepted = false;
        for _ in 0..16 {
            let a00 = jtj[0][0] + lambda;
            let a11 = jtj[1][1] + lambda;
            let det = a00 * a11 - jtj[0][1] * jtj[1][0];
            if det.abs() < 1e-18 {
                lambda *= 10.0;
                continue;
            }
            let dx = -(jtr[0] * a11 - jtr[1] * jtj[0][1]) / det;
            let dy = -(a00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            let trial = Point2::new(p.x + dx, p.y + dy);
            let trial_cost = range_cost(trial, anchors, ranges);
            if trial_cost < cost {
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No descent direction left at this scale; the gradient check
            // above decides whether that counts as converged.
            break;
        }
    }

    Refinement {
        position: p,
        converged: grad_norm <= REFINE_FLAG_TOL,
        iterations,
        cost,
    }
}

/// Full measurement pipeline: select anchors around the true position,
/// simulate noisy ranges, trilaterate, refine, and read the speed sensor.
pub fn landmark_fix<R: Rng + ?Sized>(
    true_state: &EntityState,
    landmarks: &[Landmark],
    detect_range: f64,
    noise: &MeasurementNoise,
    rng: &mut R,
) -> Result<Fix, LocalizationError> {
    let anchors = select_trilateration_set(true_state.position, landmarks, detect_range)?;
    let ranges = simulate_ranges(true_state.position, &anchors, noise, rng);
    let ranges: [RangeMeasurement; 3] = [ranges[0], ranges[1], ranges[2]];
    let linear = trilaterate_linear(&anchors, &ranges)?;
    let refined = refine_position(linear, &anchors, &ranges);
    let speed = true_state.velocity + noise.sigma_speed * rng.sample::<f64, _>(StandardNormal);
    Ok(Fix {
        position: refined.position,
        speed,
        converged: refined.converged,
    })
}
