//! Frontier extraction and grouping.
//!
//! A frontier voxel is a known-free voxel with at least one unknown
//! 6-neighbor inside the workspace. Frontiers are grouped by divisive
//! 2-means: any group wider than the sensor-derived cutoff radius is split
//! and the halves re-queued, so every emitted cluster fits inside the
//! camera frustum at the nominal view distance. Cluster gain is simply the
//! member count — the number of frontier voxels a view of the cluster can
//! retire.

use crate::config::{FrontierConfig, SensorConfig};
use crate::mapping::{VoxelKey, VoxelMap, VoxelState};
use crate::Point3;
use std::collections::VecDeque;

/// A group of frontier voxels small enough to be observed in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    /// Emission index; stable for a fixed map snapshot.
    pub id: usize,
    pub members: Vec<VoxelKey>,
    pub centroid: Point3,
    /// Max member distance from the centroid, m.
    pub radius: f64,
}

impl FrontierCluster {
    /// Information gain: frontier voxels resolved by viewing this cluster.
    pub fn gain(&self) -> usize {
        self.members.len()
    }
}

/// Candidate observation pose for a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub position: Point3,
    /// Heading that centers the cluster centroid horizontally, rad.
    pub yaw: f64,
}

/// All frontier voxels of the map, in deterministic (linear index) order.
pub fn detect_frontiers(map: &VoxelMap) -> Vec<VoxelKey> {
    let mut out = Vec::new();
    for i in 0..map.len() {
        if map.classify_index(i) != VoxelState::Free {
            continue;
        }
        let k = map.key_of_index(i);
        if map.neighbors6(k).any(|n| map.classify(n) == VoxelState::Unknown) {
            out.push(k);
        }
    }
    out
}

/// Cluster radius cutoff: at the maximum usable depth the camera's
/// horizontal field of view spans `tan(fov/2) · d_max` to either side of the
/// optical axis, so a cluster within this radius of its centroid fits in one
/// view.
pub fn cluster_cutoff(sensor: &SensorConfig) -> f64 {
    (sensor.fov_horizontal * 0.5).tan() * sensor.d_max
}

fn centroid_radius(points: &[Point3]) -> (Point3, f64) {
    let mut c = nalgebra::Vector3::zeros();
    for p in points {
        c += p.coords;
    }
    let c = Point3::from(c / points.len() as f64);
    let r = points
        .iter()
        .map(|p| (p - c).norm())
        .fold(0.0f64, f64::max);
    (c, r)
}

/// Farthest pair of the group: exact O(n²) scan for small groups, double
/// sweep (any point -> farthest a -> farthest-from-a b) for large ones.
fn farthest_pair(points: &[Point3], idx: &[usize]) -> (usize, usize) {
    if idx.len() <= 2000 {
        let (mut best, mut pair) = (-1.0f64, (idx[0], idx[0]));
        for (i, &a) in idx.iter().enumerate() {
            for &b in &idx[i + 1..] {
                let d = (points[a] - points[b]).norm_squared();
                if d > best {
                    best = d;
                    pair = (a, b);
                }
            }
        }
        pair
    } else {
        let far_from = |p: Point3| {
            *idx.iter()
                .max_by(|&&i, &&j| {
                    (points[i] - p)
                        .norm_squared()
                        .total_cmp(&(points[j] - p).norm_squared())
                })
                .unwrap()
        };
        let a = far_from(points[idx[0]]);
        let b = far_from(points[a]);
        (a, b)
    }
}

/// Divisive 2-means over the frontier set. Groups are processed FIFO; any
/// group wider than `r_max` is split with Lloyd iterations seeded at its
/// farthest pair (median split along the widest axis if an assignment side
/// collapses) and both halves re-queued. Fully deterministic.
pub fn cluster_frontiers(map: &VoxelMap, frontiers: &[VoxelKey], r_max: f64) -> Vec<FrontierCluster> {
    let points: Vec<Point3> = frontiers.iter().map(|&k| map.center(k)).collect();
    let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
    if !frontiers.is_empty() {
        queue.push_back((0..frontiers.len()).collect());
    }
    let mut out = Vec::new();
    while let Some(group) = queue.pop_front() {
        let pts: Vec<Point3> = group.iter().map(|&i| points[i]).collect();
        let (centroid, radius) = centroid_radius(&pts);
        if radius <= r_max || group.len() == 1 {
            let mut members: Vec<VoxelKey> = group.iter().map(|&i| frontiers[i]).collect();
            members.sort_unstable();
            out.push(FrontierCluster {
                id: out.len(),
                members,
                centroid,
                radius,
            });
            continue;
        }
        let (sa, sb) = farthest_pair(&points, &group);
        let (mut ca, mut cb) = (points[sa], points[sb]);
        let mut assign = vec![false; group.len()]; // true = side b
        for _ in 0..20 {
            let mut changed = false;
            for (slot, &i) in assign.iter_mut().zip(&group) {
                let side_b = (points[i] - cb).norm_squared() < (points[i] - ca).norm_squared();
                if side_b != *slot {
                    *slot = side_b;
                    changed = true;
                }
            }
            let (mut sum_a, mut na) = (nalgebra::Vector3::zeros(), 0usize);
            let (mut sum_b, mut nb) = (nalgebra::Vector3::zeros(), 0usize);
            for (&b, &i) in assign.iter().zip(&group) {
                if b {
                    sum_b += points[i].coords;
                    nb += 1;
                } else {
                    sum_a += points[i].coords;
                    na += 1;
                }
            }
            if na == 0 || nb == 0 {
                break;
            }
            ca = Point3::from(sum_a / na as f64);
            cb = Point3::from(sum_b / nb as f64);
            if !changed {
                break;
            }
        }
        let mut left: Vec<usize> = Vec::new();
        let mut right: Vec<usize> = Vec::new();
        for (&b, &i) in assign.iter().zip(&group) {
            if b {
                right.push(i)
            } else {
                left.push(i)
            }
        }
        if left.is_empty() || right.is_empty() {
            // collapsed assignment: median split along the widest axis
            let axis = (0..3)
                .max_by(|&a, &b| {
                    let spread = |ax: usize| {
                        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                        for &i in &group {
                            lo = lo.min(points[i][ax]);
                            hi = hi.max(points[i][ax]);
                        }
                        hi - lo
                    };
                    spread(a).total_cmp(&spread(b))
                })
                .unwrap();
            let mut sorted = group.clone();
            sorted.sort_by(|&i, &j| points[i][axis].total_cmp(&points[j][axis]).then(i.cmp(&j)));
            let mid = sorted.len() / 2;
            left = sorted[..mid].to_vec();
            right = sorted[mid..].to_vec();
        }
        queue.push_back(left);
        queue.push_back(right);
    }
    out
}

/// Drop clusters whose centroid sits within `clearance` of known occupied
/// space; survivors keep their ids.
pub fn filter_feasible(map: &VoxelMap, clusters: Vec<FrontierCluster>, clearance: f64) -> Vec<FrontierCluster> {
    clusters
        .into_iter()
        .filter(|c| {
            let ok = !map.occupied_within(&c.centroid, clearance);
            if !ok {
                log::debug!(
                    "cluster {} rejected: centroid {:?} within {clearance} m of occupied space",
                    c.id,
                    c.centroid
                );
            }
            ok
        })
        .collect()
}

/// Indices of the `k` highest-gain clusters, ties broken toward lower id.
pub fn top_k_by_gain(clusters: &[FrontierCluster], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&i, &j| {
        clusters[j]
            .gain()
            .cmp(&clusters[i].gain())
            .then(clusters[i].id.cmp(&clusters[j].id))
    });
    order.truncate(k);
    order
}

/// Candidate viewpoints on a horizontal ring of radius `d_view` around the
/// cluster centroid, altitude clamped to the flight band. Only positions in
/// known-free space with `clearance` to occupied voxels survive; each
/// viewpoint yaws toward the centroid. Ring order (starting at `ring_phase`)
/// is preserved, so the result is deterministic for a fixed phase.
pub fn sample_viewpoints(
    map: &VoxelMap,
    cluster: &FrontierCluster,
    cfg: &FrontierConfig,
    ring_phase: f64,
) -> Vec<Viewpoint> {
    let z = cluster.centroid[2].clamp(cfg.viewpoint_z_min, cfg.viewpoint_z_max);
    let mut out = Vec::new();
    for i in 0..cfg.n_azimuth {
        let theta = ring_phase + std::f64::consts::TAU * i as f64 / cfg.n_azimuth as f64;
        let pos = Point3::new(
            cluster.centroid[0] + cfg.d_view * theta.cos(),
            cluster.centroid[1] + cfg.d_view * theta.sin(),
            z,
        );
        let free = matches!(map.state_at(&pos), VoxelState::Free);
        if free && !map.occupied_within(&pos, cfg.clearance) {
            let yaw = (cluster.centroid[1] - pos[1]).atan2(cluster.centroid[0] - pos[0]);
            out.push(Viewpoint { position: pos, yaw });
        }
    }
    out
}

/// Human-readable cluster summary for visualization tooling: one line per
/// cluster (id, member count, radius, centroid) followed by one indented
/// line per sampled viewpoint. `viewpoints[i]` belongs to `clusters[i]`;
/// pass empty inner vecs if viewpoints were not sampled.
pub fn clusters_debug_text(clusters: &[FrontierCluster], viewpoints: &[Vec<Viewpoint>]) -> String {
    use std::fmt::Write;
    assert_eq!(clusters.len(), viewpoints.len(), "one viewpoint list per cluster");
    let mut s = String::new();
    for (c, vps) in clusters.iter().zip(viewpoints) {
        writeln!(
            s,
            "cluster {:>3}  count {:>5}  radius {:7.3}  centroid ({:8.3}, {:8.3}, {:6.3})",
            c.id,
            c.gain(),
            c.radius,
            c.centroid[0],
            c.centroid[1],
            c.centroid[2]
        )
        .unwrap();
        for (i, vp) in vps.iter().enumerate() {
            writeln!(
                s,
                "  viewpoint {:>2}  ({:8.3}, {:8.3}, {:6.3})  yaw {:7.3}",
                i, vp.position[0], vp.position[1], vp.position[2], vp.yaw
            )
            .unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MappingConfig;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn blank(dims: [usize; 3]) -> VoxelMap {
        VoxelMap::with_grid(Point3::new(0.0, 0.0, 0.0), dims, &MappingConfig::default())
    }

    /// Independent brute-force frontier oracle.
    fn frontier_oracle(map: &VoxelMap) -> Vec<VoxelKey> {
        let dims = map.dims();
        let mut out = Vec::new();
        for z in 0..dims[2] as i32 {
            for y in 0..dims[1] as i32 {
                for x in 0..dims[0] as i32 {
                    let k = VoxelKey::new(x, y, z);
                    if map.classify(k) != VoxelState::Free {
                        continue;
                    }
                    let mut frontier = false;
                    for (dx, dy, dz) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                        let n = VoxelKey::new(x + dx, y + dy, z + dz);
                        if map.contains_key(n) && map.classify(n) == VoxelState::Unknown {
                            frontier = true;
                        }
                    }
                    if frontier {
                        out.push(k);
                    }
                }
            }
        }
        out
    }

    fn random_map(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> VoxelMap {
        let mut map = blank(dims);
        let n = map.len();
        for _ in 0..n {
            let k = map.key_of_index(rng.gen_range(0..n));
            match rng.gen_range(0..3) {
                0 => map.apply_hit(k),
                1 => map.apply_miss(k),
                _ => {}
            }
        }
        map
    }

    #[test]
    fn cutoff_matches_frustum_geometry() {
        let sensor = SensorConfig::default();
        let r = cluster_cutoff(&sensor);
        assert!((r - 2.731512449218952).abs() < 1e-12);
        assert!((r - (0.5f64).tan() * 5.0).abs() < 1e-15);
    }

    #[test]
    fn detection_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let map = random_map(&mut rng, [12, 12, 12]);
            assert_eq!(detect_frontiers(&map), frontier_oracle(&map));
        }
    }

    #[test]
    fn enclosed_free_region_has_no_frontier() {
        let mut map = blank([8, 8, 8]);
        for i in 0..map.len() {
            map.apply_miss(map.key_of_index(i)); // everything known free
        }
        assert!(detect_frontiers(&map).is_empty());
    }

    #[test]
    fn frontier_members_classify_free_with_unknown_neighbor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let map = random_map(&mut rng, [10, 10, 10]);
        for k in detect_frontiers(&map) {
            assert_eq!(map.classify(k), VoxelState::Free);
            assert!(map.neighbors6(k).any(|n| map.classify(n) == VoxelState::Unknown));
        }
    }

    /// Build a map whose free voxels are exactly `cells` (plus an unknown
    /// neighbor each, so they all register as frontiers).
    fn map_with_frontiers(cells: &[(i32, i32, i32)]) -> (VoxelMap, Vec<VoxelKey>) {
        let mut map = blank([200, 200, 30]);
        for &(x, y, z) in cells {
            map.apply_miss(VoxelKey::new(x, y, z));
        }
        let f = detect_frontiers(&map);
        assert_eq!(f.len(), cells.len());
        (map, f)
    }

    #[test]
    fn two_separated_groups_cluster_exactly() {
        // 3x3 patch at the origin corner and another ~10 m away
        let mut cells = Vec::new();
        for dx in 0..3 {
            for dy in 0..3 {
                cells.push((10 + dx, 10 + dy, 5));
                cells.push((110 + dx, 10 + dy, 5));
            }
        }
        let (map, f) = map_with_frontiers(&cells);
        let clusters = cluster_frontiers(&map, &f, 2.7315);
        assert_eq!(clusters.len(), 2);
        for c in &clusters {
            assert_eq!(c.gain(), 9);
            assert!(c.radius <= 2.7315);
            let xs: Vec<i32> = c.members.iter().map(|k| k.x).collect();
            assert!(xs.iter().all(|&x| x < 20) || xs.iter().all(|&x| x >= 110));
        }
        assert_eq!(clusters[0].id, 0);
        assert_eq!(clusters[1].id, 1);
    }

    #[test]
    fn clustering_partitions_input_and_respects_cutoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..12 {
            let mut cells: Vec<(i32, i32, i32)> = (0..rng.gen_range(40..400))
                .map(|_| (rng.gen_range(0..180), rng.gen_range(0..180), rng.gen_range(0..25)))
                .collect();
            cells.sort_unstable();
            cells.dedup();
            let (map, f) = map_with_frontiers(&cells);
            let r_max = 2.731512449218952;
            let clusters = cluster_frontiers(&map, &f, r_max);

            let mut all: Vec<VoxelKey> = clusters.iter().flat_map(|c| c.members.clone()).collect();
            all.sort_unstable();
            let mut input = f.clone();
            input.sort_unstable();
            assert_eq!(all, input, "clusters must partition the frontier set");

            for c in &clusters {
                assert!(c.radius <= r_max + 1e-12);
                // radius recomputes from members
                let r = c
                    .members
                    .iter()
                    .map(|&k| (map.center(k) - c.centroid).norm())
                    .fold(0.0f64, f64::max);
                assert!((r - c.radius).abs() < 1e-12);
            }

            // determinism
            let again = cluster_frontiers(&map, &f, r_max);
            assert_eq!(clusters, again);
        }
    }

    #[test]
    fn feasibility_rejects_centroids_near_occupied() {
        let (mut map, f) = map_with_frontiers(&[(50, 50, 10), (51, 50, 10), (120, 50, 10)]);
        let clusters = cluster_frontiers(&map, &f, 2.7315);
        assert_eq!(clusters.len(), 2);
        // wall right next to the first group's centroid
        map.apply_hit(VoxelKey::new(52, 50, 10));
        let kept = filter_feasible(&map, clusters.clone(), 0.4);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].members[0], VoxelKey::new(120, 50, 10));
        // ids survive filtering
        assert_eq!(kept[0].id, clusters[1].id);
        // brute-force agreement on the occupied-within predicate
        assert!(map.occupied_within(&clusters[0].centroid, 0.4));
        assert!(!map.occupied_within(&clusters[1].centroid, 0.4));
    }

    #[test]
    fn top_k_orders_by_gain_then_id() {
        let mk = |id: usize, n: usize| FrontierCluster {
            id,
            members: vec![VoxelKey::new(0, 0, 0); n],
            centroid: Point3::origin(),
            radius: 0.0,
        };
        let clusters = vec![mk(0, 5), mk(1, 9), mk(2, 9), mk(3, 1)];
        assert_eq!(top_k_by_gain(&clusters, 3), vec![1, 2, 0]);
        assert_eq!(top_k_by_gain(&clusters, 10), vec![1, 2, 0, 3]);
    }

    #[test]
    fn viewpoints_ring_is_free_clear_and_centroid_facing() {
        let mut map = blank([200, 200, 25]);
        // open a generous known-free box around (10,10,1)
        for x in 60..140 {
            for y in 60..140 {
                for z in 2..22 {
                    map.apply_miss(VoxelKey::new(x, y, z));
                }
            }
        }
        let cluster = FrontierCluster {
            id: 0,
            members: vec![VoxelKey::new(100, 100, 10)],
            centroid: Point3::new(10.05, 10.05, 1.05),
            radius: 0.0,
        };
        let cfg = FrontierConfig::default();
        let vps = sample_viewpoints(&map, &cluster, &cfg, 0.3);
        assert_eq!(vps.len(), cfg.n_azimuth);
        for (i, vp) in vps.iter().enumerate() {
            let d = vp.position - cluster.centroid;
            assert!((d.xy().norm() - cfg.d_view).abs() < 1e-12);
            assert!((vp.position - cluster.centroid).norm() <= SensorConfig::default().d_max);
            // yaw points at the centroid
            let want = (cluster.centroid[1] - vp.position[1]).atan2(cluster.centroid[0] - vp.position[0]);
            assert_eq!(vp.yaw, want);
            // ring order: monotone phase progression
            if i > 0 {
                let a0 = (vps[i - 1].position[1] - cluster.centroid[1])
                    .atan2(vps[i - 1].position[0] - cluster.centroid[0]);
                let a1 = (vp.position[1] - cluster.centroid[1]).atan2(vp.position[0] - cluster.centroid[0]);
                let step = (a1 - a0).rem_euclid(std::f64::consts::TAU);
                assert!((step - std::f64::consts::TAU / cfg.n_azimuth as f64).abs() < 1e-9);
            }
        }

        // an occupied voxel near one ring slot removes exactly that slot
        let vp0 = vps[0].position;
        let k = map.key_at(&vp0).unwrap();
        map.apply_hit(VoxelKey::new(k.x + 2, k.y, k.z)); // occupied 0.2 m out (< clearance)
        let vps2 = sample_viewpoints(&map, &cluster, &cfg, 0.3);
        assert_eq!(vps2.len(), cfg.n_azimuth - 1);
        assert!(vps2.iter().all(|v| (v.position - vp0).norm() > 1e-9));

        // unknown-space ring slots are rejected outright
        let far_cluster = FrontierCluster {
            centroid: Point3::new(3.0, 3.0, 1.0),
            ..cluster.clone()
        };
        assert!(sample_viewpoints(&map, &far_cluster, &cfg, 0.0).is_empty());
    }

    #[test]
    fn debug_text_lists_clusters_and_viewpoints() {
        let cluster = FrontierCluster {
            id: 7,
            members: vec![VoxelKey::new(0, 0, 0); 3],
            centroid: Point3::new(1.0, 2.0, 0.5),
            radius: 0.25,
        };
        let vps = vec![
            Viewpoint { position: Point3::new(3.5, 2.0, 0.5), yaw: std::f64::consts::PI },
            Viewpoint { position: Point3::new(1.0, 4.5, 0.5), yaw: -std::f64::consts::FRAC_PI_2 },
        ];
        let text = clusters_debug_text(&[cluster], &[vps]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("cluster   7"));
        assert!(lines[0].contains("count     3"));
        assert!(lines[0].contains("radius   0.250"));
        assert!(lines[1].starts_with("  viewpoint  0"));
        assert!(lines[2].starts_with("  viewpoint  1"));
        assert!(lines[2].contains("yaw  -1.571"));
    }
}
