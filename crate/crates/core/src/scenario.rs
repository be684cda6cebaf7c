//! Battlefield map and dataset construction: landmark clusters,
//! ground-truth trajectories through cluster centroids, safe corridors
//! with navigable margins, and scenario (de)serialization.
//!
//! # Scenario file schema (version 1)
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "map": { "width": 200.0, "height": 200.0 },
//!   "landmarks": [ { "id": 0, "x": 14.2, "y": 31.8, "cluster": 0 } ],
//!   "obstacles": [ [ [60.0, 58.0], [75.0, 52.0], [88.0, 63.0] ] ],
//!   "paths": [
//!     { "class": 1, "cluster_sequence": [0, 1, 2], "margin": 5.0, "segment_len": 20.0 }
//!   ]
//! }
//! ```
//!
//! Numbers round-trip exactly: floats are written shortest-roundtrip, so
//! save followed by load reproduces every field bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::geometry::{chan_hull, PathSegment, Point2};
use crate::localization::Landmark;
use crate::navigator::{NavigateError, SafeCorridor};

/// Current scenario file schema version.
pub const SCENARIO_VERSION: u32 = 1;

/// Spacing (meters) of the ground-truth polyline samples.
pub const DEFAULT_SAMPLE_SPACING: f64 = 1.0;

/// Default lateral margin (meters) of the navigable corridor.
pub const DEFAULT_MARGIN: f64 = 5.0;

/// Default arc length (meters) of one corridor segment.
pub const DEFAULT_SEGMENT_LEN: f64 = 20.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cluster {0} has no landmarks")]
    EmptyCluster(u32),
    #[error("scenario file version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Corridor(#[from] NavigateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The map: bounds, landmarks grouped into clusters, and obstacle/hazard
/// annotations (polygons used for rendering and post-hoc checks only).
#[derive(Debug, Clone, PartialEq)]
pub struct BattlefieldMap {
    pub width: f64,
    pub height: f64,
    pub landmarks: Vec<Landmark>,
    pub obstacles: Vec<Vec<Point2>>,
}

impl BattlefieldMap {
    /// Ids of the clusters present, ascending.
    pub fn cluster_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.landmarks.iter().map(|l| l.cluster_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn cluster_members(&self, cluster_id: u32) -> Vec<&Landmark> {
        self.landmarks
            .iter()
            .filter(|l| l.cluster_id == cluster_id)
            .collect()
    }

    /// Mean position of a cluster's landmarks.
    pub fn cluster_centroid(&self, cluster_id: u32) -> Result<Point2, ScenarioError> {
        let members = self.cluster_members(cluster_id);
        if members.is_empty() {
            return Err(ScenarioError::EmptyCluster(cluster_id));
        }
        let n = members.len() as f64;
        Ok(Point2::new(
            members.iter().map(|l| l.position.x).sum::<f64>() / n,
            members.iter().map(|l| l.position.y).sum::<f64>() / n,
        ))
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.width.is_finite() && self.width > 0.0)
            || !(self.height.is_finite() && self.height > 0.0)
        {
            return Err(ScenarioError::Invalid(format!(
                "map size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        let mut ids = std::collections::HashSet::new();
        for l in &self.landmarks {
            if !l.position.is_finite() {
                return Err(ScenarioError::Invalid(format!(
                    "landmark {} has non-finite coordinates",
                    l.id
                )));
            }
            if l.position.x < 0.0
                || l.position.y < 0.0
                || l.position.x > self.width
                || l.position.y > self.height
            {
                return Err(ScenarioError::Invalid(format!(
                    "landmark {} lies outside the map",
                    l.id
                )));
            }
            if !ids.insert(l.id) {
                return Err(ScenarioError::Invalid(format!(
                    "duplicate landmark id {}",
                    l.id
                )));
            }
        }
        // Cluster ids must be contiguous from 0.
        let clusters = self.cluster_ids();
        for (expect, got) in clusters.iter().enumerate() {
            if *got != expect as u32 {
                return Err(ScenarioError::Invalid(format!(
                    "cluster ids must be contiguous from 0, found {got}"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth path: waypoints at cluster centroids and the densely
/// sampled polyline through them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrajectory {
    pub waypoints: Vec<Point2>,
    pub polyline: Vec<Point2>,
    /// Total arc length of the polyline, meters.
    pub length: f64,
}

/// Recipe for one safe path: the clusters it visits and its corridor
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub class_id: u32,
    pub cluster_sequence: Vec<u32>,
    pub margin: f64,
    pub segment_len: f64,
}

/// A realized path: ground truth plus its corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedPath {
    pub truth: GroundTruthTrajectory,
    pub corridor: SafeCorridor,
}

/// A full scenario: the map and the safe paths defined over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: BattlefieldMap,
    pub paths: Vec<PathSpec>,
}

impl Scenario {
    /// Class ids in ascending order.
    pub fn class_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.paths.iter().map(|p| p.class_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Builds the ground truth and corridor for one path spec.
    pub fn realize(&self, spec: &PathSpec) -> Result<RealizedPath, ScenarioError> {
        let truth =
            generate_ground_truth(&self.map, &spec.cluster_sequence, DEFAULT_SAMPLE_SPACING)?;
        let corridor = build_safe_corridor(&truth, spec.margin, spec.segment_len)?;
        Ok(RealizedPath { truth, corridor })
    }
}

/// Piecewise-linear polyline through the centroids of `cluster_sequence`,
/// sampled every `sample_spacing` meters (each waypoint is always a sample).
pub fn generate_ground_truth(
    map: &BattlefieldMap,
    cluster_sequence: &[u32],
    sample_spacing: f64,
) -> Result<GroundTruthTrajectory, ScenarioError> {
    if cluster_sequence.len() < 2 {
        return Err(ScenarioError::Invalid(
            "a path needs at least 2 clusters".into(),
        ));
    }
    if sample_spacing.is_nan() || sample_spacing <= 0.0 {
        return Err(ScenarioError::Invalid(
            "sample spacing must be positive".into(),
        ));
    }
    let waypoints: Vec<Point2> = cluster_sequence
        .iter()
        .map(|&c| map.cluster_centroid(c))
        .collect::<Result<_, _>>()?;

    let mut polyline = vec![waypoints[0]];
    for leg in waypoints.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let len = a.distance(b);
        if len < 1e-12 {
            continue;
        }
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        let whole_steps = (len / sample_spacing).floor() as usize;
        for j in 1..=whole_steps {
            let d = j as f64 * sample_spacing;
            polyline.push(Point2::new(a.x + ux * d, a.y + uy * d));
        }
        if polyline.last().expect("non-empty").distance(b) > 1e-9 {
            polyline.push(b);
        }
    }

    let length = polyline.windows(2).map(|w| w[0].distance(w[1])).sum();
    Ok(GroundTruthTrajectory {
        waypoints,
        polyline,
        length,
    })
}

/// Index spans `(first, last)` splitting a polyline into stretches of
/// roughly `segment_len` arc length. Consecutive spans share their boundary
/// sample.
pub fn segment_spans(polyline: &[Point2], segment_len: f64) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut acc = 0.0;
    for i in 1..polyline.len() {
        acc += polyline[i - 1].distance(polyline[i]);
        if acc >= segment_len || i == polyline.len() - 1 {
            spans.push((start, i));
            start = i;
            acc = 0.0;
        }
    }
    // A trailing sliver shorter than half a segment merges into its
    // predecessor.
    if spans.len() >= 2 {
        let (ls, le) = *spans.last().expect("non-empty");
        let tail_len: f64 = (ls..le)
            .map(|i| polyline[i].distance(polyline[i + 1]))
            .sum();
        if tail_len < 0.5 * segment_len {
            spans.pop();
            let (ps, _) = spans.pop().expect("checked len >= 2");
            spans.push((ps, le));
        }
    }
    spans
}

/// Builds the corridor: splits the polyline into segments, widens each
/// stretch by `margin` on both sides (perpendicular to the local
/// direction), and hulls each widened point cluster.
///
/// Every polyline sample of a segment sits midway between its two offsets,
/// so each hull contains its stretch of the ground truth by construction;
/// the corridor constructor still verifies connectivity and fails loudly.
pub fn build_safe_corridor(
    truth: &GroundTruthTrajectory,
    margin: f64,
    segment_len: f64,
) -> Result<SafeCorridor, ScenarioError> {
    if !margin.is_finite() || margin <= 0.0 {
        return Err(ScenarioError::Invalid(
            "margin must be positive and finite".into(),
        ));
    }
    if !segment_len.is_finite() || segment_len <= 0.0 {
        return Err(ScenarioError::Invalid(
            "segment length must be positive and finite".into(),
        ));
    }
    let line = &truth.polyline;
    if line.len() < 2 {
        return Err(ScenarioError::Invalid("polyline too short".into()));
    }

    // Unit normal at each sample, from the chord through its neighbors.
    let normals: Vec<(f64, f64)> = (0..line.len())
        .map(|i| {
            let prev = line[i.saturating_sub(1)];
            let next = line[(i + 1).min(line.len() - 1)];
            let (dx, dy) = (next.x - prev.x, next.y - prev.y);
            let len = dx.hypot(dy).max(1e-12);
            (-dy / len, dx / len)
        })
        .collect();

    let mut segments = Vec::new();
    let mut hulls = Vec::new();
    let mut centroids = Vec::new();
    for (seq, &(first, last)) in segment_spans(line, segment_len).iter().enumerate() {
        let mut points = Vec::with_capacity(3 * (last - first + 1));
        points.extend_from_slice(&line[first..=last]);
        for i in first..=last {
            let (nx, ny) = normals[i];
            points.push(Point2::new(
                line[i].x + margin * nx,
                line[i].y + margin * ny,
            ));
            points.push(Point2::new(
                line[i].x - margin * nx,
                line[i].y - margin * ny,
            ));
        }
        let hull = chan_hull(&points)
            .map_err(|e| ScenarioError::Invalid(format!("segment {seq} hull: {e}")))?;
        for &p in &line[first..=last] {
            if !hull.contains(p) {
                return Err(ScenarioError::Invalid(format!(
                    "segment {seq} hull does not cover its ground-truth samples"
                )));
            }
        }
        centroids.push(hull.centroid());
        hulls.push(hull);
        segments.push(PathSegment {
            sequence_index: seq,
            points,
        });
    }

    Ok(SafeCorridor::new(segments, hulls, centroids)?)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FileMap {
    width: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
struct FileLandmark {
    id: u32,
    x: f64,
    y: f64,
    cluster: u32,
}

#[derive(Serialize, Deserialize)]
struct FilePath {
    class: u32,
    cluster_sequence: Vec<u32>,
    margin: f64,
    segment_len: f64,
}

#[derive(Serialize, Deserialize)]
struct FileScenario {
    version: u32,
    map: FileMap,
    landmarks: Vec<FileLandmark>,
    obstacles: Vec<Vec<[f64; 2]>>,
    paths: Vec<FilePath>,
}

impl From<&Scenario> for FileScenario {
    fn from(s: &Scenario) -> Self {
        FileScenario {
            version: SCENARIO_VERSION,
            map: FileMap {
                width: s.map.width,
                height: s.map.height,
            },
            landmarks: s
                .map
                .landmarks
                .iter()
                .map(|l| FileLandmark {
                    id: l.id,
                    x: l.position.x,
                    y: l.position.y,
                    cluster: l.cluster_id,
                })
                .collect(),
            obstacles: s
                .map
                .obstacles
                .iter()
                .map(|poly| poly.iter().map(|p| [p.x, p.y]).collect())
                .collect(),
            paths: s
                .paths
                .iter()
                .map(|p| FilePath {
                    class: p.class_id,
                    cluster_sequence: p.cluster_sequence.clone(),
                    margin: p.margin,
                    segment_len: p.segment_len,
                })
                .collect(),
        }
    }
}

/// Serializes a scenario to pretty-printed JSON; deterministic byte-for-byte
/// for identical inputs.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let file = FileScenario::from(scenario);
    let mut out = serde_json::to_string_pretty(&file).expect("scenario serializes");
    out.push('\n');
    out
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_string(scenario))?;
    Ok(())
}

/// Parses a scenario document, validating the schema version and the map
/// invariants.
pub fn scenario_from_str(text: &str) -> Result<Scenario, ScenarioError> {
    // Read the version first so a newer-schema file reports a version
    // mismatch rather than a field error.
    #[derive(Deserialize)]
    struct VersionOnly {
        version: u32,
    }
    let version: VersionOnly = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    if version.version != SCENARIO_VERSION {
        return Err(ScenarioError::VersionMismatch {
            found: version.version,
            expected: SCENARIO_VERSION,
        });
    }

    let file: FileScenario = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let scenario = Scenario {
        map: BattlefieldMap {
            width: file.map.width,
            height: file.map.height,
            landmarks: file
                .landmarks
                .iter()
                .map(|l| Landmark {
                    id: l.id,
                    position: Point2::new(l.x, l.y),
                    cluster_id: l.cluster,
                })
                .collect(),
            obstacles: file
                .obstacles
                .iter()
                .map(|poly| poly.iter().map(|&[x, y]| Point2::new(x, y)).collect())
                .collect(),
        },
        paths: file
            .paths
            .iter()
            .map(|p| PathSpec {
                class_id: p.class,
                cluster_sequence: p.cluster_sequence.clone(),
                margin: p.margin,
                segment_len: p.segment_len,
            })
            .collect(),
    };
    scenario.map.validate()?;
    for (i, p) in scenario.paths.iter().enumerate() {
        if p.cluster_sequence.len() < 2 {
            return Err(ScenarioError::Invalid(format!(
                "path {i} visits fewer than 2 clusters"
            )));
        }
        if !(p.margin.is_finite() && p.margin > 0.0)
            || !(p.segment_len.is_finite() && p.segment_len > 0.0)
        {
            return Err(ScenarioError::Invalid(format!(
                "path {i} has non-positive margin or segment_len"
            )));
        }
    }
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_str(&text)
}

fn parse_error(e: &serde_json::Error) -> ScenarioError {
    ScenarioError::ParseError {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Built-in scenario
// ---------------------------------------------------------------------------

/// Cluster center layout of the built-in 200x200 map: three west-east bands
/// of six clusters each, with mild per-cluster elevation changes so paths
/// bend gently.
const BUILTIN_CENTERS: [(f64, f64); 18] = [
    // Band A, clusters 0-5.
    (15.0, 28.0),
    (50.0, 32.0),
    (85.0, 29.0),
    (120.0, 34.0),
    (155.0, 30.0),
    (190.0, 28.0),
    // Band B, clusters 6-11.
    (15.0, 94.0),
    (50.0, 91.0),
    (85.0, 96.0),
    (120.0, 92.0),
    (155.0, 97.0),
    (190.0, 94.0),
    // Band C, clusters 12-17.
    (15.0, 158.0),
    (50.0, 162.0),
    (85.0, 157.0),
    (120.0, 163.0),
    (155.0, 159.0),
    (190.0, 161.0),
];

const LANDMARKS_PER_CLUSTER: usize = 5;

/// Builds the built-in scenario: 18 landmark clusters on a 200x200 map and
/// three path classes (6, 5, and 6 member paths). Landmark placement is
/// jittered deterministically from `seed`.
pub fn builtin_scenario(seed: u64) -> Scenario {
    builtin_scenario_sized(seed, 200.0, 200.0)
}

/// Built-in scenario scaled to a `width` x `height` map.
pub fn builtin_scenario_sized(seed: u64, width: f64, height: f64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sx, sy) = (width / 200.0, height / 200.0);
    let mut landmarks = Vec::new();
    let mut id = 0u32;
    for (cluster, &(cx, cy)) in BUILTIN_CENTERS.iter().enumerate() {
        for k in 0..LANDMARKS_PER_CLUSTER {
            // Landmarks ring the cluster center at jittered angles and
            // radii, far enough apart that anchor triples stay
            // well-conditioned.
            let angle = (k as f64 / LANDMARKS_PER_CLUSTER as f64) * std::f64::consts::TAU
                + rng.random_range(-0.35..0.35);
            let radius = rng.random_range(4.0..7.5);
            let x = (cx + radius * angle.cos()) * sx;
            let y = (cy + radius * angle.sin()) * sy;
            landmarks.push(Landmark {
                id,
                position: Point2::new(x.clamp(0.0, width), y.clamp(0.0, height)),
                cluster_id: cluster as u32,
            });
            id += 1;
        }
    }

    let obstacles = vec![
        vec![
            Point2::new(60.0 * sx, 58.0 * sy),
            Point2::new(78.0 * sx, 53.0 * sy),
            Point2::new(90.0 * sx, 63.0 * sy),
            Point2::new(72.0 * sx, 70.0 * sy),
        ],
        vec![
            Point2::new(110.0 * sx, 124.0 * sy),
            Point2::new(132.0 * sx, 119.0 * sy),
            Point2::new(138.0 * sx, 132.0 * sy),
            Point2::new(116.0 * sx, 137.0 * sy),
        ],
    ];

    let spec = |class_id: u32, seq: &[u32]| PathSpec {
        class_id,
        cluster_sequence: seq.to_vec(),
        margin: DEFAULT_MARGIN,
        segment_len: DEFAULT_SEGMENT_LEN,
    };
    let paths = vec![
        // Class 1: band A west to east, six member paths.
        spec(1, &[0, 1, 2, 3, 4, 5]),
        spec(1, &[0, 2, 3, 4, 5]),
        spec(1, &[0, 1, 3, 4, 5]),
        spec(1, &[0, 1, 2, 4, 5]),
        spec(1, &[0, 1, 2, 3, 5]),
        spec(1, &[0, 2, 4, 5]),
        // Class 2: band B, five member paths.
        spec(2, &[6, 7, 8, 9, 10, 11]),
        spec(2, &[6, 8, 9, 10, 11]),
        spec(2, &[6, 7, 9, 10, 11]),
        spec(2, &[6, 7, 8, 10, 11]),
        spec(2, &[6, 7, 8, 9, 11]),
        // Class 3: band C, six member paths.
        spec(3, &[12, 13, 14, 15, 16, 17]),
        spec(3, &[12, 14, 15, 16, 17]),
        spec(3, &[12, 13, 15, 16, 17]),
        spec(3, &[12, 13, 14, 16, 17]),
        spec(3, &[12, 13, 14, 15, 17]),
        spec(3, &[12, 14, 16, 17]),
    ];

    Scenario {
        map: BattlefieldMap {
            width,
            height,
            landmarks,
            obstacles,
        },
        paths,
    }
}
