//! Convex hull construction and point-inclusion predicates over safe-path
//! segments.
//!
//! Both hull algorithms return the *strict* hull: collinear boundary points
//! are removed and vertices are ordered counter-clockwise starting at the
//! lowest-y (then leftmost) vertex, so the outputs of [`graham_scan`] and
//! [`chan_hull`] are directly comparable vertex-for-vertex.

use thiserror::Error;

/// Absolute tolerance on the cross product below which a point triple is
/// treated as collinear.
pub const COLLINEAR_EPS: f64 = 1e-12;

/// Tolerance (meters) on the signed edge distance for point inclusion.
/// A point within this band of a hull edge counts as inside, so a predicted
/// position sitting exactly on the corridor boundary does not trigger an
/// unnecessary re-route.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// Initial guess for the hull vertex count in Chan's algorithm. The guess
/// doubles after each failed wrapping pass.
const CHAN_INITIAL_GUESS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    /// Fewer than 3 distinct points, or all points collinear.
    #[error("convex hull needs >= 3 distinct non-collinear points, got {distinct} distinct")]
    DegenerateInput { distinct: usize },
}

/// A point in map coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Twice the signed area of the triangle (o, a, b). Positive when the
/// triple turns counter-clockwise.
pub fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Area of the triangle spanned by three points.
pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * cross(a, b, c).abs()
}

/// Boundary polygon of one safe-corridor segment: at least 3 vertices in
/// counter-clockwise order, strictly convex, starting at the lowest-y
/// (then leftmost) vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHullPolygon {
    vertices: Vec<Point2>,
}

impl ConvexHullPolygon {
    /// Builds a hull from vertices already in CCW order, canonicalizing the
    /// start vertex and validating strict convexity.
    pub fn from_ccw_vertices(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::DegenerateInput {
                distinct: vertices.len(),
            });
        }
        let start = lowest_point_index(&vertices);
        vertices.rotate_left(start);
        let n = vertices.len();
        for i in 0..n {
            let turn = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if turn <= 0.0 {
                return Err(GeometryError::DegenerateInput { distinct: n });
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Directed edges (a, b) walking the boundary counter-clockwise,
    /// including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_convex_hull(p, self)
    }

    pub fn centroid(&self) -> Point2 {
        polygon_centroid(self)
    }
}

/// Index of the vertex with the lowest y-coordinate, leftmost on a tie.
fn lowest_point_index(points: &[Point2]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = points[best];
        if p.y < b.y || (p.y == b.y && p.x < b.x) {
            best = i;
        }
    }
    best
}

/// Deduplicates exact coordinate duplicates, preserving nothing about order.
fn dedup_points(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite coords"));
    pts.dedup();
    pts
}

/// True when every point lies within `COLLINEAR_EPS` of one line.
fn all_collinear(points: &[Point2]) -> bool {
    // `points` is lex-sorted, so first and last span the widest baseline.
    let a = points[0];
    let b = points[points.len() - 1];
    points
        .iter()
        .all(|&p| cross(a, b, p).abs() <= COLLINEAR_EPS)
}

fn validate_hull_input(points: &[Point2]) -> Result<Vec<Point2>, GeometryError> {
    let pts = dedup_points(points);
    if pts.len() < 3 || all_collinear(&pts) {
        return Err(GeometryError::DegenerateInput {
            distinct: pts.len(),
        });
    }
    Ok(pts)
}

/// Graham's scan.
///
/// Picks the lowest-y point (leftmost on a tie) as the pivot, sorts the rest
/// by polar angle around it (ties broken by increasing distance from the
/// pivot), and sweeps a stack popping every non-left turn. Collinear
/// boundary points are therefore excluded.
pub fn graham_scan(points: &[Point2]) -> Result<ConvexHullPolygon, GeometryError> {
    let mut pts = validate_hull_input(points)?;

    let pivot_ix = lowest_point_index(&pts);
    let pivot = pts.swap_remove(pivot_ix);
    pts.sort_by(|&a, &b| {
        let turn = cross(pivot, a, b);
        if turn > COLLINEAR_EPS {
            std::cmp::Ordering::Less
        } else if turn < -COLLINEAR_EPS {
            std::cmp::Ordering::Greater
        } else {
            let da = pivot.distance(a);
            let db = pivot.distance(b);
            da.partial_cmp(&db).expect("finite distances")
        }
    });

    let mut stack: Vec<Point2> = vec![pivot, pts[0]];
    for &p in &pts[1..] {
        while stack.len() >= 2
            && cross(stack[stack.len() - 2], stack[stack.len() - 1], p) <= COLLINEAR_EPS
        {
            stack.pop();
        }
        stack.push(p);
    }

    ConvexHullPolygon::from_ccw_vertices(stack)
}

/// Convex hull of a small subset, tolerant of degenerate subsets.
///
/// Returns the extreme points only: a single point, the two endpoints of a
/// collinear run, or the strict hull vertices.
fn subset_hull(chunk: &[Point2]) -> Vec<Point2> {
    let pts = dedup_points(chunk);
    if pts.len() <= 2 {
        return pts;
    }
    if all_collinear(&pts) {
        // Lex-sorted, so the ends of the run are first and last.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    match graham_scan(&pts) {
        Ok(hull) => hull.vertices().to_vec(),
        // A sliver that collapses at tolerance contributes its extreme
        // ends as wrap candidates.
        Err(_) => vec![pts[0], pts[pts.len() - 1]],
    }
}

/// Among `candidates`, the best successor of `current` while wrapping the
/// hull counter-clockwise: no other candidate may lie to the right of the
/// edge (current -> best); collinear ties prefer the farther point so that
/// collinear intermediates are skipped.
fn wrap_successor(current: Point2, best: Option<Point2>, candidate: Point2) -> Option<Point2> {
    if candidate == current {
        return best;
    }
    match best {
        None => Some(candidate),
        Some(b) => {
            let turn = cross(current, b, candidate);
            if turn < -COLLINEAR_EPS
                || (turn.abs() <= COLLINEAR_EPS
                    && current.distance(candidate) > current.distance(b))
            {
                Some(candidate)
            } else {
                Some(b)
            }
        }
    }
}

/// Chan's algorithm.
///
/// Guesses the hull size `m`, partitions the input into subsets of at most
/// `m` points, computes each subset hull with Graham's scan, then wraps the
/// overall hull over the subset-hull vertices for at most `m` steps. If the
/// hull does not close within the budget, the guess is doubled and the pass
/// repeats. Output is identical to [`graham_scan`] on the same input.
pub fn chan_hull(points: &[Point2]) -> Result<ConvexHullPolygon, GeometryError> {
    let pts = validate_hull_input(points)?;
    let n = pts.len();
    let start = pts[lowest_point_index(&pts)];

    let mut m = CHAN_INITIAL_GUESS.min(n);
    loop {
        let subhulls: Vec<Vec<Point2>> = pts.chunks(m).map(subset_hull).collect();

        let mut hull = vec![start];
        let mut closed = false;
        for _ in 0..m {
            let current = *hull.last().expect("hull is non-empty");
            let mut best = None;
            for sub in &subhulls {
                for &c in sub {
                    best = wrap_successor(current, best, c);
                }
            }
            let next = best.expect(">= 3 distinct points");
            if next == start {
                closed = true;
                break;
            }
            hull.push(next);
        }

        if closed && hull.len() >= 3 {
            return ConvexHullPolygon::from_ccw_vertices(hull);
        }
        if m >= n {
            // Wrapping over every point still failed to close a polygon:
            // the input is degenerate at tolerance.
            return Err(GeometryError::DegenerateInput { distinct: n });
        }
        m = (m * 2).min(n);
    }
}

/// Boundary-inclusive point-in-hull predicate.
///
/// True iff `p` lies on the non-negative side of every CCW edge, within
/// [`BOUNDARY_EPS`] of signed perpendicular distance.
pub fn point_in_convex_hull(p: Point2, hull: &ConvexHullPolygon) -> bool {
    hull.edges().all(|(a, b)| {
        let edge_len = a.distance(b);
        cross(a, b, p) >= -BOUNDARY_EPS * edge_len
    })
}

/// Area-weighted centroid of a convex polygon; strictly interior.
pub fn polygon_centroid(hull: &ConvexHullPolygon) -> Point2 {
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (a, b) in hull.edges() {
        let w = a.x * b.y - b.x * a.y;
        area2 += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Point2::new(cx / (3.0 * area2), cy / (3.0 * area2))
}

/// Sample points of one corridor segment (polyline samples plus lateral
/// offsets) whose convex hull bounds the navigable region of that segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    /// Position of this segment within its path; unique and ordered.
    pub sequence_index: usize,
    /// Point cluster the segment hull is computed from.
    pub points: Vec<Point2>,
}
