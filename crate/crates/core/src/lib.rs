//! Simulation library for guiding a moving entity along a convex-hull
//! segmented safe corridor in a GPS-denied map.
//!
//! The crate is organized around the stages of one navigation step:
//!
//! - [`geometry`] — convex hulls (Graham scan and Chan's algorithm) and
//!   point-inclusion predicates over corridor segments.
//! - [`motion`] — the deterministic and stochastic motion model of the
//!   entity: velocity, heading, and position updates under control inputs,
//!   capability limits, and terrain effects.
//! - [`localization`] — the simulated landmark range measurement model:
//!   anchor selection, noisy ranging, linear least-squares trilateration,
//!   and nonlinear position refinement.
//! - [`ekf`] — an Extended Kalman Filter built on the motion model, fusing
//!   landmark fixes into a (x, y, v, heading) belief.
//! - [`navigator`] — the safe-navigation loop: hull-based safety checks on
//!   predicted positions and control recomputation toward segment centroids,
//!   in two variants (raw fixes vs. EKF-fused).
//! - [`scenario`] — battlefield maps, landmark clusters, ground-truth
//!   trajectories, corridor construction, and scenario (de)serialization.
//! - [`metrics`] — percent length error, ADE, FDE, and batch aggregation
//!   over seeded trials.
//!
//! Everything is deterministic given a seed: randomness enters only through
//! explicitly passed ChaCha generators.

pub mod ekf;
pub mod geometry;
pub mod localization;
pub mod metrics;
pub mod motion;
pub mod navigator;
pub mod scenario;

pub use ekf::{BeliefState, FilterConfig};
pub use geometry::{ConvexHullPolygon, PathSegment, Point2};
pub use localization::{Landmark, MeasurementNoise, RangeMeasurement};
pub use metrics::{BatchSummary, TrajectoryEval};
pub use motion::{ControlInput, EntityState, MotionParams, ProcessNoise};
pub use navigator::{Approach, NavConfig, NavigationOutcome, SafeCorridor, SafetyDecision};
pub use scenario::{BattlefieldMap, GroundTruthTrajectory, PathSpec, Scenario};
