//! Shared input builders for the benchmark targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secnav_core::geometry::Point2;
use secnav_core::localization::Landmark;

/// Seeded uniform point cloud in a 100x100 box.
pub fn cloud(seed: u64, n: usize) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
        .collect()
}

/// Well-spread anchor triple around a fixed position.
pub fn anchor_triple() -> (Point2, Vec<Landmark>) {
    let p = Point2::new(50.0, 50.0);
    let anchors = vec![
        Landmark {
            id: 0,
            position: Point2::new(70.0, 55.0),
            cluster_id: 0,
        },
        Landmark {
            id: 1,
            position: Point2::new(40.0, 75.0),
            cluster_id: 0,
        },
        Landmark {
            id: 2,
            position: Point2::new(35.0, 30.0),
            cluster_id: 0,
        },
    ];
    (p, anchors)
}
