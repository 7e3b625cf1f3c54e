//! Dense probabilistic voxel map over the scenario bounds, fed by simulated
//! depth scans.
//!
//! Each voxel carries a clamped log-odds occupancy value plus an "ever
//! updated" flag; voxels never revert to unknown. The workspace is always
//! partitioned as `free ∪ occupied ∪ unknown`, with counts maintained
//! incrementally so `partition_counts` is O(1).
//!
//! Scan integration walks every ray with an Amanatides–Woo DDA: voxels
//! traversed before the endpoint receive a miss update, the endpoint voxel
//! receives a hit update for actual returns (max-range misses update only
//! the traversed voxels). Rays that hit the room shell record the hit in the
//! last interior voxel, so walls/floor/ceiling build up an occupied rind.

use crate::config::{MappingConfig, SensorConfig};
use crate::world::{Aabb, Scenario};
use crate::{Point3, Vec3};
use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};

/// Grid index of a voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelKey {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelKey {
    pub fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum VoxelState {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCounts {
    pub free: usize,
    pub occupied: usize,
    pub unknown: usize,
}

impl PartitionCounts {
    pub fn total(&self) -> usize {
        self.free + self.occupied + self.unknown
    }
}

/// Camera pose at scan time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPose {
    pub position: Point3,
    pub orientation: UnitQuaternion<f64>,
}

impl ScanPose {
    pub fn level(position: Point3, yaw: f64) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
        }
    }
}

/// One depth ray: world-frame unit direction plus measured range
/// (`None` = nothing within `max_range`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRay {
    pub dir: Vec3,
    pub range: Option<f64>,
}

/// A rendered depth scan. Rays whose true return would be closer than the
/// sensor's minimum range are omitted entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthScan {
    pub pose: ScanPose,
    pub max_range: f64,
    pub rays: Vec<DepthRay>,
}

/// Simulate the forward-facing depth camera at `pose` against ground truth.
///
/// Ray directions sit on an equiangular azimuth/elevation grid spanning the
/// configured fields of view with endpoints included, so the outer columns
/// deviate from the optical axis (body +x) by exactly `fov_horizontal / 2`.
pub fn render_depth_scan(scenario: &Scenario, pose: &ScanPose, sensor: &SensorConfig) -> DepthScan {
    let (nh, nv) = (sensor.rays_horizontal, sensor.rays_vertical);
    let mut rays = Vec::with_capacity(nh * nv);
    for iv in 0..nv {
        let elev = -0.5 * sensor.fov_vertical
            + sensor.fov_vertical * iv as f64 / (nv - 1) as f64;
        let (se, ce) = elev.sin_cos();
        for ih in 0..nh {
            let az = -0.5 * sensor.fov_horizontal
                + sensor.fov_horizontal * ih as f64 / (nh - 1) as f64;
            let (sa, ca) = az.sin_cos();
            let body = Vec3::new(ce * ca, ce * sa, se);
            let dir = pose.orientation * body;
            match scenario.raycast(&pose.position, &dir, sensor.d_max) {
                Some(t) if t < sensor.d_min => {} // inside the blind zone: no reading
                Some(t) => rays.push(DepthRay { dir, range: Some(t) }),
                None => rays.push(DepthRay { dir, range: None }),
            }
        }
    }
    DepthScan {
        pose: *pose,
        max_range: sensor.d_max,
        rays,
    }
}

/// Dense log-odds occupancy grid.
#[derive(Debug, Clone)]
pub struct VoxelMap {
    origin: Point3,
    resolution: f64,
    dims: [usize; 3],
    log_odds: Vec<f64>,
    updated: Vec<bool>,
    counts: PartitionCounts,
    l_hit: f64,
    l_miss: f64,
    l_min: f64,
    l_max: f64,
    l_occ: f64,
}

impl VoxelMap {
    /// Grid covering `bounds` exactly (dimensions rounded to the nearest
    /// whole voxel count per axis).
    pub fn from_bounds(bounds: &Aabb, cfg: &MappingConfig) -> Self {
        let e = bounds.extent();
        let dims = [
            (e[0] / cfg.resolution).round().max(1.0) as usize,
            (e[1] / cfg.resolution).round().max(1.0) as usize,
            (e[2] / cfg.resolution).round().max(1.0) as usize,
        ];
        Self::with_grid(Point3::new(bounds.min[0], bounds.min[1], bounds.min[2]), dims, cfg)
    }

    pub fn with_grid(origin: Point3, dims: [usize; 3], cfg: &MappingConfig) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        let odds = |p: f64| (p / (1.0 - p)).ln();
        Self {
            origin,
            resolution: cfg.resolution,
            dims,
            log_odds: vec![0.0; n],
            updated: vec![false; n],
            counts: PartitionCounts {
                free: 0,
                occupied: 0,
                unknown: n,
            },
            l_hit: odds(cfg.p_hit),
            l_miss: odds(cfg.p_miss),
            l_min: odds(cfg.p_min),
            l_max: odds(cfg.p_max),
            l_occ: odds(cfg.p_occ),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.log_odds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_odds.is_empty()
    }

    pub fn contains_key(&self, k: VoxelKey) -> bool {
        k.x >= 0
            && k.y >= 0
            && k.z >= 0
            && (k.x as usize) < self.dims[0]
            && (k.y as usize) < self.dims[1]
            && (k.z as usize) < self.dims[2]
    }

    pub fn index(&self, k: VoxelKey) -> Option<usize> {
        self.contains_key(k).then(|| {
            (k.z as usize * self.dims[1] + k.y as usize) * self.dims[0] + k.x as usize
        })
    }

    pub fn key_of_index(&self, idx: usize) -> VoxelKey {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        VoxelKey::new(x as i32, y as i32, z as i32)
    }

    /// Voxel containing a world point, if inside the grid.
    pub fn key_at(&self, p: &Point3) -> Option<VoxelKey> {
        let k = VoxelKey::new(
            ((p[0] - self.origin[0]) / self.resolution).floor() as i32,
            ((p[1] - self.origin[1]) / self.resolution).floor() as i32,
            ((p[2] - self.origin[2]) / self.resolution).floor() as i32,
        );
        self.contains_key(k).then_some(k)
    }

    pub fn center(&self, k: VoxelKey) -> Point3 {
        Point3::new(
            self.origin[0] + (k.x as f64 + 0.5) * self.resolution,
            self.origin[1] + (k.y as f64 + 0.5) * self.resolution,
            self.origin[2] + (k.z as f64 + 0.5) * self.resolution,
        )
    }

    pub fn classify(&self, k: VoxelKey) -> VoxelState {
        match self.index(k) {
            None => VoxelState::Unknown, // outside the workspace
            Some(i) => self.classify_index(i),
        }
    }

    #[inline]
    pub fn classify_index(&self, i: usize) -> VoxelState {
        if !self.updated[i] {
            VoxelState::Unknown
        } else if self.log_odds[i] >= self.l_occ {
            VoxelState::Occupied
        } else {
            VoxelState::Free
        }
    }

    pub fn state_at(&self, p: &Point3) -> VoxelState {
        self.key_at(p).map_or(VoxelState::Unknown, |k| self.classify(k))
    }

    /// Occupancy probability; 0.5 for never-updated voxels.
    pub fn probability(&self, k: VoxelKey) -> f64 {
        match self.index(k) {
            None => 0.5,
            Some(i) if !self.updated[i] => 0.5,
            Some(i) => 1.0 / (1.0 + (-self.log_odds[i]).exp()),
        }
    }

    pub fn partition_counts(&self) -> PartitionCounts {
        self.counts
    }

    /// Mean binary Shannon entropy over all workspace voxels, bits/voxel.
    /// A fresh map scores exactly 1.0.
    pub fn entropy_bits_per_voxel(&self) -> f64 {
        let mut sum = self.counts.unknown as f64; // H(0.5) = 1 bit
        for i in 0..self.log_odds.len() {
            if self.updated[i] {
                let p = 1.0 / (1.0 + (-self.log_odds[i]).exp());
                sum += -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
            }
        }
        sum / self.log_odds.len() as f64
    }

    #[inline]
    fn transition(&mut self, i: usize, delta: f64) {
        let before = self.classify_index(i);
        self.updated[i] = true;
        self.log_odds[i] = (self.log_odds[i] + delta).clamp(self.l_min, self.l_max);
        let after = self.classify_index(i);
        if before != after {
            match before {
                VoxelState::Unknown => self.counts.unknown -= 1,
                VoxelState::Free => self.counts.free -= 1,
                VoxelState::Occupied => self.counts.occupied -= 1,
            }
            match after {
                VoxelState::Unknown => self.counts.unknown += 1,
                VoxelState::Free => self.counts.free += 1,
                VoxelState::Occupied => self.counts.occupied += 1,
            }
        }
    }

    /// Single-voxel occupancy evidence (endpoint of a returned ray).
    pub fn apply_hit(&mut self, k: VoxelKey) {
        if let Some(i) = self.index(k) {
            self.transition(i, self.l_hit);
        }
    }

    /// Single-voxel pass-through evidence.
    pub fn apply_miss(&mut self, k: VoxelKey) {
        if let Some(i) = self.index(k) {
            self.transition(i, self.l_miss);
        }
    }

    /// Fold a depth scan into the map. The camera must sit inside the grid;
    /// rays leaving the grid update only their in-grid prefix.
    pub fn integrate_scan(&mut self, scan: &DepthScan) {
        let o = scan.pose.position;
        if self.key_at(&o).is_none() {
            log::warn!("integrate_scan: camera outside the mapped workspace; scan discarded");
            return;
        }
        for ray in &scan.rays {
            let (dist, hit) = match ray.range {
                Some(t) => (t, true),
                None => (scan.max_range, false),
            };
            let end_point = o + ray.dir * dist;
            let end_cell = if hit {
                // nudge into the solid side of the surface; fall back to the
                // last interior voxel for hits on the room shell
                let eps = self.resolution * 1e-4;
                self.key_at(&(end_point + ray.dir * eps))
                    .or_else(|| self.key_at(&(end_point - ray.dir * eps)))
            } else {
                self.key_at(&end_point)
            };
            self.traverse_ray(&o, &ray.dir, dist, end_cell);
            if hit {
                if let Some(k) = end_cell {
                    self.apply_hit(k);
                }
            }
        }
    }

    /// DDA walk from the camera to the ray endpoint, applying miss updates to
    /// every voxel strictly before `end_cell`.
    fn traverse_ray(&mut self, o: &Point3, dir: &Vec3, dist: f64, end_cell: Option<VoxelKey>) {
        let mut cell = match self.key_at(o) {
            Some(k) => k,
            None => return,
        };
        let res = self.resolution;
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        let mut step = [0i32; 3];
        let cell_idx = [cell.x, cell.y, cell.z];
        for a in 0..3 {
            if dir[a] > 0.0 {
                step[a] = 1;
                let bound = self.origin[a] + (cell_idx[a] + 1) as f64 * res;
                t_max[a] = (bound - o[a]) / dir[a];
                t_delta[a] = res / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                let bound = self.origin[a] + cell_idx[a] as f64 * res;
                t_max[a] = (bound - o[a]) / dir[a];
                t_delta[a] = res / -dir[a];
            }
        }
        // a straight segment can cross at most this many voxels
        let max_steps = self.dims[0] + self.dims[1] + self.dims[2] + 3;
        for _ in 0..max_steps {
            if Some(cell) == end_cell {
                return; // endpoint voxel: no miss update here
            }
            // crossing distance into the next cell
            let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            let crossing = t_max[a];
            self.apply_miss(cell);
            if crossing >= dist {
                // the endpoint sits in this cell or exactly on its far face
                return;
            }
            match a {
                0 => cell.x += step[0],
                1 => cell.y += step[1],
                _ => cell.z += step[2],
            }
            t_max[a] += t_delta[a];
            if !self.contains_key(cell) {
                return;
            }
        }
        debug_assert!(false, "DDA failed to terminate");
    }

    /// True when any occupied voxel center lies within `radius` of `p`.
    pub fn occupied_within(&self, p: &Point3, radius: f64) -> bool {
        let r = self.resolution;
        let lo = |v: f64, o: f64| (((v - radius) - o) / r).floor() as i32;
        let hi = |v: f64, o: f64| (((v + radius) - o) / r).floor() as i32;
        let r2 = radius * radius;
        for z in lo(p[2], self.origin[2])..=hi(p[2], self.origin[2]) {
            for y in lo(p[1], self.origin[1])..=hi(p[1], self.origin[1]) {
                for x in lo(p[0], self.origin[0])..=hi(p[0], self.origin[0]) {
                    let k = VoxelKey::new(x, y, z);
                    if self.classify(k) == VoxelState::Occupied
                        && (self.center(k) - p).norm_squared() <= r2
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// 6-connected neighbors that lie inside the grid.
    pub fn neighbors6(&self, k: VoxelKey) -> impl Iterator<Item = VoxelKey> + '_ {
        const OFFS: [(i32, i32, i32); 6] = [
            (1, 0, 0),
            (-1, 0, 0),
            (0, 1, 0),
            (0, -1, 0),
            (0, 0, 1),
            (0, 0, -1),
        ];
        OFFS.iter()
            .map(move |&(dx, dy, dz)| VoxelKey::new(k.x + dx, k.y + dy, k.z + dz))
            .filter(|&n| self.contains_key(n))
    }

    /// Build a fully known map from ground truth over the voxels selected by
    /// `known` (called with each voxel center). Solid voxels saturate
    /// occupied, the outermost voxel layer becomes the wall rind, everything
    /// else saturates free. Handy for planner tests and benchmarks.
    pub fn from_ground_truth(
        scenario: &Scenario,
        cfg: &MappingConfig,
        known: impl Fn(&Point3) -> bool,
    ) -> Self {
        let mut map = Self::from_bounds(&scenario.bounds, cfg);
        for i in 0..map.len() {
            let k = map.key_of_index(i);
            let c = map.center(k);
            if !known(&c) {
                continue;
            }
            let rind = k.x == 0
                || k.y == 0
                || k.z == 0
                || k.x as usize == map.dims[0] - 1
                || k.y as usize == map.dims[1] - 1
                || k.z as usize == map.dims[2] - 1;
            if rind || scenario.point_in_solid(&c) {
                map.transition(i, f64::INFINITY);
            } else {
                map.transition(i, f64::NEG_INFINITY);
            }
        }
        map
    }

    const DUMP_MAGIC: &'static [u8; 8] = b"VOXMAP01";

    /// Serialize (dims, resolution, origin, per-voxel state byte), little
    /// endian, preceded by the format magic/version `VOXMAP01`.
    pub fn dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(Self::DUMP_MAGIC)?;
        for d in self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&self.resolution.to_le_bytes())?;
        for a in 0..3 {
            w.write_all(&self.origin[a].to_le_bytes())?;
        }
        let states: Vec<u8> = (0..self.len()).map(|i| self.classify_index(i) as u8).collect();
        w.write_all(&states)
    }

    /// Read back a dump produced by [`VoxelMap::dump`].
    pub fn load_dump<R: Read>(r: &mut R) -> io::Result<MapDump> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::DUMP_MAGIC {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("bad map dump magic {magic:?}"),
            ));
        }
        let mut u32buf = [0u8; 4];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut u32buf)?;
            *d = u32::from_le_bytes(u32buf) as usize;
        }
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let resolution = f64::from_le_bytes(f64buf);
        let mut origin = [0.0; 3];
        for o in &mut origin {
            r.read_exact(&mut f64buf)?;
            *o = f64::from_le_bytes(f64buf);
        }
        let mut states = vec![0u8; dims[0] * dims[1] * dims[2]];
        r.read_exact(&mut states)?;
        if states.iter().any(|&s| s > 2) {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad voxel state byte"));
        }
        Ok(MapDump {
            dims,
            resolution,
            origin,
            states,
        })
    }
}

/// Decoded form of a binary map dump.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDump {
    pub dims: [usize; 3],
    pub resolution: f64,
    pub origin: [f64; 3],
    pub states: Vec<u8>,
}
