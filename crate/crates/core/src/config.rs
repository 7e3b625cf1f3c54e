//! Configuration for every stage of the pipeline. All defaults reproduce the
//! benchmark platform: a 0.752 kg quadrotor with a forward-facing depth
//! camera (1.0 rad horizontal FoV, 0.5–5.0 m range, 30 Hz), a 0.1 m voxel
//! map, 5 m/s / 4 m/s² kinodynamic limits, a 300 Hz tracking controller and
//! 0.02 s energy integration.
//!
//! Any subset of fields can be overridden from a TOML file (see
//! [`MissionConfig::from_toml`]); unspecified fields keep their defaults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Forward-facing depth camera model. Rays are spaced on an equiangular
/// azimuth/elevation grid spanning the two FoV angles, endpoints included,
/// so the outermost columns deviate from the optical axis by exactly
/// `fov_horizontal / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub rays_horizontal: usize,
    pub rays_vertical: usize,
    /// Horizontal field of view, radians.
    pub fov_horizontal: f64,
    /// Vertical field of view, radians.
    pub fov_vertical: f64,
    /// Minimum usable depth, m. Closer returns are dropped.
    pub d_min: f64,
    /// Maximum usable depth, m.
    pub d_max: f64,
    /// Scan rate during flight, Hz.
    pub rate_hz: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            rays_horizontal: 64,
            rays_vertical: 48,
            fov_horizontal: 1.0,
            fov_vertical: 0.75,
            d_min: 0.5,
            d_max: 5.0,
            rate_hz: 30.0,
        }
    }
}

/// Occupancy-grid update model (log-odds with clamping).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// Voxel edge length, m.
    pub resolution: f64,
    /// Inverse sensor model: P(occupied | hit).
    pub p_hit: f64,
    /// Inverse sensor model: P(occupied | pass-through).
    pub p_miss: f64,
    /// Probability clamp floor.
    pub p_min: f64,
    /// Probability clamp ceiling.
    pub p_max: f64,
    /// Classification threshold: p >= p_occ reads as occupied.
    pub p_occ: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            p_hit: 0.7,
            p_miss: 0.4,
            p_min: 0.12,
            p_max: 0.97,
            p_occ: 0.5,
        }
    }
}

/// Frontier clustering and viewpoint sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontierConfig {
    /// Number of top-gain clusters the energy-aware policy evaluates.
    pub k_top: usize,
    /// Viewpoint ring radius around a cluster centroid, m.
    pub d_view: f64,
    /// Number of evenly spaced ring positions sampled per cluster.
    pub n_azimuth: usize,
    /// Flight-band limits for viewpoint altitudes, m.
    pub viewpoint_z_min: f64,
    pub viewpoint_z_max: f64,
    /// How many ring viewpoints a policy may try per cluster before giving
    /// up on it.
    pub viewpoints_per_cluster: usize,
    /// Required distance from occupied voxels for feasible centroids and
    /// viewpoints, m.
    pub clearance: f64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            k_top: 3,
            d_view: 2.5,
            n_azimuth: 8,
            viewpoint_z_min: 0.5,
            viewpoint_z_max: 2.0,
            viewpoints_per_cluster: 1,
            clearance: 0.4,
        }
    }
}

/// Path planning and time parameterization limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Acceleration limit (vector norm), m/s².
    pub a_max: f64,
    /// Yaw rate limit, rad/s.
    pub yaw_rate_max: f64,
    /// Obstacle clearance kept by planned paths, m.
    pub clearance: f64,
    /// Unknown space tolerated within this distance of the trajectory end, m.
    pub d_grace: f64,
    /// Escape ball around the replanning start: known-free voxels whose
    /// centers lie within this radius stay traversable even inside
    /// clearance inflation, and collision checks skip the proximity and
    /// unknown tests there (flying into an occupied voxel is always a
    /// collision). Lets the vehicle depart a parking spot beside a freshly
    /// discovered surface, m.
    pub d_escape: f64,
    /// Trajectory sample spacing, s.
    pub sample_dt: f64,
    /// Largest corner-rounding radius, m.
    pub corner_radius_max: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            v_max: 5.0,
            a_max: 4.0,
            yaw_rate_max: 1.5,
            clearance: 0.4,
            d_grace: 0.3,
            d_escape: 0.5,
            sample_dt: 0.02,
            corner_radius_max: 0.5,
        }
    }
}

/// Quadrotor rigid body, rotor layout and controller gains.
///
/// `c_t` is calibrated so that hovering draws exactly 120 W through the
/// rotor power model: solving 4·P(ω) = 120 gives ω_hover ≈ 1075.606 rad/s,
/// and c_t = m·g / (4·ω_hover²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleConfig {
    /// Total mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Body-frame diagonal inertia, kg·m².
    pub inertia: [f64; 3],
    /// Center-to-rotor arm length, m (X configuration).
    pub arm_length: f64,
    /// Thrust coefficient: T = c_t · ω², N/(rad/s)².
    pub c_t: f64,
    /// Rotor drag-to-thrust moment ratio, m.
    pub c_q_over_c_t: f64,
    /// Rotor speed limits, rad/s.
    pub omega_min: f64,
    pub omega_max: f64,
    /// Controller rate, Hz.
    pub control_rate_hz: f64,
    /// Dynamics sub-steps per control period (1200 Hz integration at the
    /// 300 Hz default controller rate).
    pub substeps_per_control: usize,
    /// Trace recording period, s.
    pub record_dt: f64,
    /// Position / velocity / attitude / body-rate gains.
    pub kp: f64,
    pub kv: f64,
    pub kr: f64,
    pub komega: f64,
    /// Post-trajectory settling window, s, and the position error that ends
    /// it early, m.
    pub settle_max_s: f64,
    pub settle_pos_tol: f64,
    /// Position error that declares the rollout diverged, m.
    pub diverge_pos_err: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            mass: 0.752,
            gravity: 9.81,
            inertia: [2.5e-3, 2.1e-3, 4.3e-3],
            arm_length: 0.125,
            c_t: 1.5941181384886294e-6,
            c_q_over_c_t: 0.016,
            omega_min: 150.0,
            omega_max: 3000.0,
            control_rate_hz: 300.0,
            substeps_per_control: 4,
            record_dt: 0.02,
            kp: 15.0,
            kv: 8.5,
            kr: 2.4,
            komega: 0.3,
            settle_max_s: 0.5,
            settle_pos_tol: 0.1,
            diverge_pos_err: 2.0,
        }
    }
}

impl VehicleConfig {
    /// Steady-state rotor speed in hover, rad/s.
    pub fn hover_omega(&self) -> f64 {
        (self.mass * self.gravity / (4.0 * self.c_t)).sqrt()
    }

    pub fn dynamics_dt(&self) -> f64 {
        1.0 / (self.control_rate_hz * self.substeps_per_control as f64)
    }
}

/// Per-rotor electrical power as a polynomial in rotor speed ω (rad/s):
/// P(ω) = c1·ω + c3·ω³ + c6·ω⁶, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    pub c1: f64,
    pub c3: f64,
    pub c6: f64,
    /// Energy integration step, s.
    pub dt: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            c1: 6.088e-3,
            c3: 1.875e-8,
            c6: 7.700e-20,
            dt: 0.02,
        }
    }
}

/// Mission stop conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerminationConfig {
    /// Stop once this fraction of the scene's observable free volume is
    /// known.
    pub coverage_target: f64,
    /// Simulated-time budget, s.
    pub max_sim_time_s: f64,
    /// Decision-cycle budget.
    pub max_cycles: usize,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        Self {
            coverage_target: 0.98,
            max_sim_time_s: 1200.0,
            max_cycles: 400,
        }
    }
}

/// Everything a mission needs besides the scenario, the policy and the seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    pub sensor: SensorConfig,
    pub mapping: MappingConfig,
    pub frontier: FrontierConfig,
    pub planner: PlannerConfig,
    pub vehicle: VehicleConfig,
    pub power: PowerConfig,
    pub termination: TerminationConfig,
    pub execution: ExecutionConfig,
}

/// In-flight execution details.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutionConfig {
    /// Hover pause charged after a collision-triggered abort, s.
    pub replan_hover_s: f64,
    /// How far ahead of the vehicle the remaining trajectory is re-checked
    /// after each in-flight scan, s.
    pub collision_lookahead_s: f64,
    /// Consecutive failed target selections tolerated before the mission
    /// concludes that no reachable frontier remains. Each retry redraws the
    /// viewpoint ring phase, so a transient miss (every ring sample landing
    /// in space not yet observed) recovers on a later draw; genuine
    /// exhaustion fails every retry and terminates.
    pub no_target_retries: usize,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        Self {
            replan_hover_s: 0.5,
            collision_lookahead_s: 2.0,
            no_target_retries: 25,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl MissionConfig {
    /// Parse a (possibly partial) TOML override; missing fields keep their
    /// defaults.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: MissionConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid(what.into()))
            }
        };
        check(self.sensor.rays_horizontal >= 2 && self.sensor.rays_vertical >= 2, "sensor needs at least a 2x2 ray grid")?;
        check(self.sensor.d_min > 0.0 && self.sensor.d_max > self.sensor.d_min, "sensor range must satisfy 0 < d_min < d_max")?;
        check(self.sensor.fov_horizontal > 0.0 && self.sensor.fov_horizontal < std::f64::consts::PI, "fov_horizontal out of range")?;
        check(self.mapping.resolution > 0.0, "mapping.resolution must be positive")?;
        check(
            0.0 < self.mapping.p_min
                && self.mapping.p_min < 0.5
                && 0.5 < self.mapping.p_max
                && self.mapping.p_max < 1.0,
            "mapping probability clamps must straddle 0.5",
        )?;
        check(self.mapping.p_miss < 0.5 && self.mapping.p_hit > 0.5, "mapping.p_hit/p_miss must straddle 0.5")?;
        check(self.planner.v_max > 0.0 && self.planner.a_max > 0.0 && self.planner.yaw_rate_max > 0.0, "planner limits must be positive")?;
        check(self.planner.sample_dt > 0.0, "planner.sample_dt must be positive")?;
        check(self.planner.d_grace >= 0.0 && self.planner.d_escape >= 0.0, "planner distances must be non-negative")?;
        check(self.vehicle.mass > 0.0 && self.vehicle.c_t > 0.0, "vehicle mass and c_t must be positive")?;
        check(self.vehicle.omega_min >= 0.0 && self.vehicle.omega_max > self.vehicle.omega_min, "rotor speed limits out of order")?;
        check(self.vehicle.hover_omega() < self.vehicle.omega_max, "hover rotor speed exceeds omega_max")?;
        check(self.frontier.k_top >= 1 && self.frontier.n_azimuth >= 1 && self.frontier.viewpoints_per_cluster >= 1, "frontier counts must be >= 1")?;
        check(self.frontier.viewpoint_z_min < self.frontier.viewpoint_z_max, "viewpoint flight band out of order")?;
        check(self.power.dt > 0.0, "power.dt must be positive")?;
        check(self.termination.coverage_target > 0.0 && self.termination.coverage_target <= 1.0, "coverage_target out of (0,1]")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pin_platform_parameters() {
        let cfg = MissionConfig::default();
        assert_eq!(cfg.vehicle.mass, 0.752);
        assert_eq!(cfg.planner.v_max, 5.0);
        assert_eq!(cfg.planner.a_max, 4.0);
        assert_eq!(cfg.sensor.d_min, 0.5);
        assert_eq!(cfg.sensor.d_max, 5.0);
        assert_eq!(cfg.sensor.fov_horizontal, 1.0);
        assert_eq!(cfg.sensor.rate_hz, 30.0);
        assert_eq!(cfg.mapping.resolution, 0.1);
        assert_eq!(cfg.vehicle.control_rate_hz, 300.0);
        assert_eq!(cfg.power.dt, 0.02);
        cfg.validate().unwrap();
    }

    #[test]
    fn hover_calibration_is_consistent() {
        let v = VehicleConfig::default();
        let w = v.hover_omega();
        // thrust balance at the calibrated speed
        assert!((4.0 * v.c_t * w * w - v.mass * v.gravity).abs() < 1e-12);
        assert!((w - 1075.6059020988228).abs() < 1e-9);
        // integration runs at >= 1 kHz
        assert!(1.0 / v.dynamics_dt() >= 1000.0);
    }

    #[test]
    fn partial_toml_overrides_only_named_fields() {
        let cfg = MissionConfig::from_toml("[planner]\nv_max = 3.0\n").unwrap();
        assert_eq!(cfg.planner.v_max, 3.0);
        assert_eq!(cfg.planner.a_max, 4.0);
        assert_eq!(cfg.vehicle.mass, 0.752);

        assert!(MissionConfig::from_toml("[planner]\nv_max = -1.0\n").is_err());
        assert!(MissionConfig::from_toml("[planner\n").is_err());
    }
}
