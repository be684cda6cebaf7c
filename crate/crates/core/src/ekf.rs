//! Extended Kalman Filter over the motion model, with state vector
//! (x, y, v, theta).
//!
//! The prediction step runs the noiseless motion update and propagates
//! covariance through its Jacobian; the update step fuses a linear
//! (x, y, v) measurement. Heading is never measured directly — it is
//! observable only through the position rows of the transition Jacobian.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};
use thiserror::Error;

use crate::geometry::Point2;
use crate::localization::MeasurementNoise;
use crate::motion::{self, normalize_angle, ControlInput, EntityState, MotionParams, ProcessNoise};

/// Innovation covariance condition number beyond which the update is
/// rejected as singular.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EkfError {
    #[error("innovation covariance is singular or ill-conditioned")]
    SingularInnovation,
}

/// Gaussian belief over the entity state (x, y, v, theta).
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl BeliefState {
    pub fn new(mean: Vector4<f64>, covariance: Matrix4<f64>) -> Self {
        let mut b = Self { mean, covariance };
        b.mean[3] = normalize_angle(b.mean[3]);
        b
    }

    /// Belief centered on a known state with the default initial spread.
    pub fn from_state(state: &EntityState) -> Self {
        Self::new(
            Vector4::new(
                state.position.x,
                state.position.y,
                state.velocity,
                state.heading,
            ),
            Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 0.25, 0.05)),
        )
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> f64 {
        self.mean[2]
    }

    pub fn heading(&self) -> f64 {
        self.mean[3]
    }

    /// Mean as an entity state, with velocity clamped into the feasible
    /// range so it can be fed back into the motion model.
    pub fn to_entity_state(&self, params: &MotionParams) -> EntityState {
        EntityState::new(
            self.position(),
            self.mean[2].clamp(0.0, params.v_max),
            self.mean[3],
        )
    }
}

/// Noise and observation configuration of the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Process noise covariance Q, 4x4.
    pub process_noise: Matrix4<f64>,
    /// Measurement noise covariance R, 3x3.
    pub measurement_noise: Matrix3<f64>,
    /// Observation matrix H, 3x4; the default picks (x, y, v).
    pub observation: SMatrix<f64, 3, 4>,
}

impl FilterConfig {
    /// Builds Q from the motion process noise and R from the measurement
    /// noise. The per-axis position error of a refined fix is close to
    /// 0.8 * sigma_range for well-spread anchors, so sigma_range itself is
    /// a slightly conservative R entry. Variances are floored to keep the
    /// innovation covariance well conditioned in noiseless configurations.
    pub fn from_noise(process: &ProcessNoise, measurement: &MeasurementNoise) -> Self {
        let floor = 1e-9;
        Self {
            process_noise: Matrix4::from_diagonal(&Vector4::new(
                (process.sigma_x * process.sigma_x).max(floor),
                (process.sigma_y * process.sigma_y).max(floor),
                (process.sigma_v * process.sigma_v).max(floor),
                (process.sigma_theta * process.sigma_theta).max(floor),
            )),
            measurement_noise: Matrix3::from_diagonal(&Vector3::new(
                (measurement.sigma_range * measurement.sigma_range).max(floor),
                (measurement.sigma_range * measurement.sigma_range).max(floor),
                (measurement.sigma_speed * measurement.sigma_speed).max(floor),
            )),
            observation: SMatrix::<f64, 3, 4>::new(
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ),
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::from_noise(&ProcessNoise::default(), &MeasurementNoise::default())
    }
}

/// Noiseless transition of the mean plus its Jacobian, computed together so
/// the active velocity-clamp branch is shared between them.
fn transition(
    mean: &Vector4<f64>,
    u: &ControlInput,
    params: &MotionParams,
) -> (Vector4<f64>, Matrix4<f64>) {
    let state = EntityState::new(
        Point2::new(mean[0], mean[1]),
        mean[2].clamp(0.0, params.v_max),
        mean[3],
    );
    let next = motion::step_deterministic(&state, u, params);

    // Subgradient of the velocity update: 1 only while the rate-limited
    // term is the active min/max argument, 0 inside a clamp.
    let v = state.velocity;
    let dt = params.dt;
    let g_v = if u.desired_speed > v {
        let ramp = v + params.terrain_factor * params.accel_limit * dt;
        if ramp < u.desired_speed && ramp < params.v_max {
            1.0
        } else {
            0.0
        }
    } else {
        let ramp = v - params.terrain_factor * params.decel_limit * dt;
        if ramp > u.desired_speed && ramp > 0.0 {
            1.0
        } else {
            0.0
        }
    };

    let (sin_h, cos_h) = next.heading.sin_cos();
    let v_next = next.velocity;
    #[rustfmt::skip]
    let jacobian = Matrix4::new(
        1.0, 0.0, g_v * dt * cos_h, -v_next * dt * sin_h,
        0.0, 1.0, g_v * dt * sin_h,  v_next * dt * cos_h,
        0.0, 0.0, g_v,               0.0,
        0.0, 0.0, 0.0,               1.0,
    );
    let mean_next = Vector4::new(
        next.position.x,
        next.position.y,
        next.velocity,
        next.heading,
    );
    (mean_next, jacobian)
}

/// Jacobian of the noiseless state transition at `mean` under control `u`.
pub fn jacobian_f(mean: &Vector4<f64>, u: &ControlInput, params: &MotionParams) -> Matrix4<f64> {
    transition(mean, u, params).1
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

/// Prediction step: mean through the noiseless motion update, covariance
/// through F P F^T + Q, re-symmetrized.
pub fn predict(
    belief: &BeliefState,
    u: &ControlInput,
    params: &MotionParams,
    cfg: &FilterConfig,
) -> BeliefState {
    let (mean, f) = transition(&belief.mean, u, params);
    let covariance = symmetrize(&(f * belief.covariance * f.transpose() + cfg.process_noise));
    BeliefState { mean, covariance }
}

/// Update step with an (x, y, v) measurement.
pub fn update(
    belief: &BeliefState,
    z: &Vector3<f64>,
    cfg: &FilterConfig,
) -> Result<BeliefState, EkfError> {
    let h = cfg.observation;
    let s = h * belief.covariance * h.transpose() + cfg.measurement_noise;

    let eigen = s.symmetric_eigen();
    let min_ev = eigen.eigenvalues.min();
    let max_ev = eigen.eigenvalues.max();
    if min_ev.is_nan() || min_ev <= 0.0 || max_ev / min_ev > MAX_INNOVATION_CONDITION {
        return Err(EkfError::SingularInnovation);
    }
    let s_inv = s.try_inverse().ok_or(EkfError::SingularInnovation)?;

    let gain = belief.covariance * h.transpose() * s_inv;
    let residual = z - h * belief.mean;
    let mut mean = belief.mean + gain * residual;
    mean[3] = normalize_angle(mean[3]);
    let covariance = symmetrize(&((Matrix4::identity() - gain * h) * belief.covariance));
    Ok(BeliefState { mean, covariance })
}

/// Runs the filter over a control sequence with optional per-step
/// measurements; steps without a measurement are prediction-only. Returns
/// the belief after each step.
pub fn run_filter(
    initial: &BeliefState,
    steps: &[(ControlInput, Option<Vector3<f64>>)],
    params: &MotionParams,
    cfg: &FilterConfig,
) -> Result<Vec<BeliefState>, EkfError> {
    let mut belief = initial.clone();
    let mut out = Vec::with_capacity(steps.len());
    for (control, measurement) in steps {
        belief = predict(&belief, control, params, cfg);
        if let Some(z) = measurement {
            belief = update(&belief, z, cfg)?;
        }
        out.push(belief.clone());
    }
    Ok(out)
}
