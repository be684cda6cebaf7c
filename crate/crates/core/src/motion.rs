//! Motion model of a mobile entity: velocity, heading, and position updates
//! under control inputs, capability limits, terrain effects, and process
//! noise.
//!
//! The deterministic update and the stochastic update share one code path
//! ([`step_with_draws`]); with all noise draws zero the stochastic model
//! reduces to the deterministic one bit-for-bit.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotionError {
    #[error("desired speed must be positive to compute a travel time")]
    ZeroSpeed,
}

/// Kinematic state of the moving entity at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntityState {
    pub position: Point2,
    /// Ground speed, m/s, in `[0, v_max]`.
    pub velocity: f64,
    /// Heading, radians, normalized to `[-pi, pi)`.
    pub heading: f64,
}

impl EntityState {
    pub fn new(position: Point2, velocity: f64, heading: f64) -> Self {
        Self {
            position,
            velocity,
            heading: normalize_angle(heading),
        }
    }
}

/// Command issued to the motion model for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    /// Speed setpoint, m/s, >= 0.
    pub desired_speed: f64,
    /// Requested heading change over one step, radians. Clipped to the
    /// maneuverability limit when applied.
    pub heading_change: f64,
}

/// Capability limits and terrain scaling of the entity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    /// Acceleration capability, m/s^2.
    pub accel_limit: f64,
    /// Deceleration capability, m/s^2.
    pub decel_limit: f64,
    /// Maximum heading change rate, rad/s.
    pub maneuverability: f64,
    /// Top speed, m/s.
    pub v_max: f64,
    /// Step duration, s.
    pub dt: f64,
    /// Terrain factor in (0, 1]; scales effective acceleration and
    /// deceleration (rough ground degrades agility).
    pub terrain_factor: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            accel_limit: 1.5,
            decel_limit: 1.5,
            maneuverability: 0.6,
            v_max: 10.0,
            dt: 1.0,
            terrain_factor: 1.0,
        }
    }
}

/// Standard deviations of the per-step process noise terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_theta: f64,
    pub sigma_v: f64,
}

impl ProcessNoise {
    pub const ZERO: Self = Self {
        sigma_x: 0.0,
        sigma_y: 0.0,
        sigma_theta: 0.0,
        sigma_v: 0.0,
    };
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            sigma_x: 0.05,
            sigma_y: 0.05,
            sigma_theta: 0.01,
            sigma_v: 0.05,
        }
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = (angle + PI).rem_euclid(two_pi) - PI;
    if a >= PI {
        a -= two_pi;
    }
    a
}

/// Velocity update: approach the setpoint at the terrain-scaled
/// acceleration or deceleration rate, clamped to `[0, v_max]` after noise.
pub fn update_velocity(v: f64, u: &ControlInput, params: &MotionParams, noise_draw: f64) -> f64 {
    let next = if u.desired_speed > v {
        let rate = params.terrain_factor * params.accel_limit;
        (v + rate * params.dt)
            .min(u.desired_speed)
            .min(params.v_max)
    } else {
        let rate = params.terrain_factor * params.decel_limit;
        (v - rate * params.dt).max(u.desired_speed).max(0.0)
    };
    (next + noise_draw).clamp(0.0, params.v_max)
}

/// Heading update: requested change clipped to the maneuverability limit,
/// result normalized to `[-pi, pi)`.
pub fn update_heading(theta: f64, u: &ControlInput, params: &MotionParams, noise_draw: f64) -> f64 {
    let limit = params.maneuverability * params.dt;
    normalize_angle(theta + u.heading_change.clamp(-limit, limit) + noise_draw)
}

/// One motion step with explicit noise draws `[v, theta, x, y]`.
///
/// Velocity and heading update first; the displacement then uses the new
/// velocity and new heading in both position components.
pub fn step_with_draws(
    state: &EntityState,
    u: &ControlInput,
    params: &MotionParams,
    draws: [f64; 4],
) -> EntityState {
    let velocity = update_velocity(state.velocity, u, params, draws[0]);
    let heading = update_heading(state.heading, u, params, draws[1]);
    let position = Point2::new(
        state.position.x + velocity * params.dt * heading.cos() + draws[2],
        state.position.y + velocity * params.dt * heading.sin() + draws[3],
    );
    EntityState {
        position,
        velocity,
        heading,
    }
}

/// Noiseless motion step.
pub fn step_deterministic(
    state: &EntityState,
    u: &ControlInput,
    params: &MotionParams,
) -> EntityState {
    step_with_draws(state, u, params, [0.0; 4])
}

/// Stochastic motion step; draws one Gaussian per noise term, in the order
/// velocity, heading, x, y.
pub fn step<R: Rng + ?Sized>(
    state: &EntityState,
    u: &ControlInput,
    params: &MotionParams,
    noise: &ProcessNoise,
    rng: &mut R,
) -> EntityState {
    let draws = [
        noise.sigma_v * rng.sample::<f64, _>(StandardNormal),
        noise.sigma_theta * rng.sample::<f64, _>(StandardNormal),
        noise.sigma_x * rng.sample::<f64, _>(StandardNormal),
        noise.sigma_y * rng.sample::<f64, _>(StandardNormal),
    ];
    step_with_draws(state, u, params, draws)
}

/// Control input that points the entity at `target`, plus the travel time
/// at the commanded speed.
pub fn compute_control(
    current: &EntityState,
    target: Point2,
    desired_speed: f64,
) -> Result<(ControlInput, f64), MotionError> {
    if desired_speed <= 0.0 {
        return Err(MotionError::ZeroSpeed);
    }
    let dx = target.x - current.position.x;
    let dy = target.y - current.position.y;
    let distance = dx.hypot(dy);
    let heading_change = normalize_angle(dy.atan2(dx) - current.heading);
    Ok((
        ControlInput {
            desired_speed,
            heading_change,
        },
        distance / desired_speed,
    ))
}
