//! Ground-truth observability oracle.
//!
//! A mission cannot map voxels no admissible camera pose can see (inside
//! solids, hugging the ceiling above the sensor's elevation range, sealed
//! cavities, …), so terminating on "explored fraction of the whole grid"
//! would never trigger. This oracle sweeps a fixed family of candidate
//! camera positions around every ground-truth-free voxel — a ring of
//! azimuths at a few standoff distances and flight heights — and keeps the
//! voxel observable if any candidate sits in free space with flight
//! clearance, within the sensor's range and elevation envelope, and with an
//! unobstructed line of sight. Explored fraction is then measured against
//! the observable set only.

use crate::config::MissionConfig;
use crate::mapping::{VoxelMap, VoxelState};
use crate::world::Scenario;
use crate::{Point3, Vec3};

pub struct CoverageOracle {
    /// map indices of ground-truth-free voxels some camera pose can see
    observable: Vec<u32>,
    /// total ground-truth-free voxels (observable or not)
    pub free_count: usize,
}

const AZIMUTHS: usize = 16;
const STANDOFFS: [f64; 3] = [1.5, 2.5, 3.5];

impl CoverageOracle {
    pub fn build(scenario: &Scenario, cfg: &MissionConfig) -> Self {
        let gt = VoxelMap::from_ground_truth(scenario, &cfg.mapping, |_| true);
        let half_fov_v = 0.5 * cfg.sensor.fov_vertical;
        let clearance = cfg.frontier.clearance;
        let (z_lo, z_hi) = (cfg.frontier.viewpoint_z_min, cfg.frontier.viewpoint_z_max);
        // keep a margin inside the range gate so discrete scan rays that hit
        // slightly off the voxel center still count
        let d_near = cfg.sensor.d_min + 0.2;
        let d_far = cfg.sensor.d_max - 0.2;

        let mut observable = Vec::new();
        let mut free_count = 0usize;
        for i in 0..gt.len() {
            if gt.classify_index(i) != VoxelState::Free {
                continue;
            }
            free_count += 1;
            let v = gt.center(gt.key_of_index(i));
            if Self::visible_from_somewhere(scenario, &v, clearance, z_lo, z_hi, half_fov_v, d_near, d_far) {
                observable.push(i as u32);
            }
        }
        CoverageOracle { observable, free_count }
    }

    #[allow(clippy::too_many_arguments)]
    fn visible_from_somewhere(
        scenario: &Scenario,
        v: &Point3,
        clearance: f64,
        z_lo: f64,
        z_hi: f64,
        half_fov_v: f64,
        d_near: f64,
        d_far: f64,
    ) -> bool {
        let z_levels = [v.z.clamp(z_lo, z_hi), 1.0];
        for standoff in STANDOFFS {
            for k in 0..AZIMUTHS {
                let az = std::f64::consts::TAU * k as f64 / AZIMUTHS as f64;
                for (zi, &z) in z_levels.iter().enumerate() {
                    if zi == 1 && (z - z_levels[0]).abs() < 1e-9 {
                        continue;
                    }
                    let cam = Point3::new(v.x + standoff * az.cos(), v.y + standoff * az.sin(), z);
                    if !scenario.bounds.contains_interior(&cam) {
                        continue;
                    }
                    if scenario.clearance(&cam) < clearance {
                        continue;
                    }
                    let to_v: Vec3 = v - cam;
                    let dist = to_v.norm();
                    if !(d_near..=d_far).contains(&dist) {
                        continue;
                    }
                    let horiz = (to_v.x * to_v.x + to_v.y * to_v.y).sqrt();
                    if to_v.z.abs().atan2(horiz) > half_fov_v * 0.96 {
                        continue;
                    }
                    // line of sight: no surface strictly before the voxel
                    match scenario.raycast(&cam, &(to_v / dist), dist) {
                        Some(t) if t < dist - 1e-9 => continue,
                        _ => return true,
                    }
                }
            }
        }
        false
    }

    pub fn observable_count(&self) -> usize {
        self.observable.len()
    }

    /// Fraction of the observable set the map has stopped calling unknown.
    pub fn explored_fraction(&self, map: &VoxelMap) -> f64 {
        if self.observable.is_empty() {
            return 1.0;
        }
        let seen = self
            .observable
            .iter()
            .filter(|&&i| map.classify_index(i as usize) != VoxelState::Unknown)
            .count();
        seen as f64 / self.observable.len() as f64
    }
}
