//! Simulation core for benchmarking energy-aware frontier exploration of
//! unknown indoor volumes with a multirotor.
//!
//! The pipeline, bottom to top:
//!
//! * [`world`] — ground-truth scenes (axis-aligned boxes in a closed room) and
//!   exact ray casting against them.
//! * [`mapping`] — a dense log-odds voxel map fed by simulated depth scans.
//! * [`frontier`] — frontier voxel detection, divisive 2-means clustering and
//!   viewpoint sampling around cluster centroids.
//! * [`planning`] — A* over known-free voxels, shortcut smoothing and
//!   limit-respecting time parameterization.
//! * [`vehicle`] — quadrotor rigid-body simulation under a geometric tracking
//!   controller, down to per-rotor speeds.
//! * [`energy`] — rotor-speed power model and trajectory energy integration.
//! * [`policy`] — target selection: energy-aware ranking plus the nearest-
//!   frontier and classic largest-frontier baselines.
//! * [`mission`] / [`output`] — the closed exploration loop, benchmark
//!   aggregation and CSV/JSON emission.
//!
//! Everything is deterministic for a fixed `(scenario, config, seed)`
//! triple, and mission runs never share mutable state, so benchmark batches
//! parallelize freely.

pub mod config;
pub mod coverage;
pub mod energy;
pub mod frontier;
pub mod mapping;
pub mod mission;
pub mod output;
pub mod planning;
pub mod policy;
pub mod vehicle;
pub mod world;

pub use config::MissionConfig;
pub use mapping::{VoxelKey, VoxelMap, VoxelState};
pub use mission::{run_benchmark, run_mission, BenchmarkReport, MissionLog, MissionSummary};
pub use policy::PolicyKind;
pub use world::Scenario;

/// Shared 3-vector / point aliases; `f64` everywhere, SI units, radians.
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point3 = nalgebra::Point3<f64>;
