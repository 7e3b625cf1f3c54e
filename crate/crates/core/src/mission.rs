//! The closed exploration loop and multi-run benchmark orchestration.
//!
//! One mission cycle: scan at the hover pose and fold the depth image into
//! the map; log a time-series point; check termination (coverage of the
//! observable volume, sim-time budget, cycle budget); detect, cluster and
//! filter frontiers; let the policy pick a target; fly the committed
//! trajectory closed-loop, scanning at the sensor rate along the flown
//! states and accumulating rotor energy. If a scan taken mid-flight reveals
//! a conflict on the remaining reference (within a bounded look-ahead), the
//! vehicle halts, hovers briefly while "replanning" (charged at hover
//! power), and the loop re-enters. Deciding takes zero simulated time;
//! flying and replanning hovers are the only clock consumers.
//!
//! Benchmarks fan missions out with rayon — the map is single-writer per
//! mission and the coverage oracle is shared read-only per scenario — and
//! aggregate median/mean/min/max statistics per (scenario, policy).

use crate::config::MissionConfig;
use crate::coverage::CoverageOracle;
use crate::energy::record_power;
use crate::frontier::{cluster_cutoff, cluster_frontiers, detect_frontiers, filter_feasible};
use crate::mapping::{render_depth_scan, PartitionCounts, ScanPose, VoxelMap};
use crate::planning::{first_collision_in, TraversabilityGrid};
use crate::policy::{select_target, CandidateEval, Decision, PolicyKind, SelectionOutcome};
use crate::vehicle::{rollout, state_from_record, RigidState};
use crate::world::Scenario;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// explored fraction of the observable volume reached the target
    Coverage,
    /// no feasible frontier cluster remained
    NoTarget,
    /// simulated-time budget exhausted
    TimeLimit,
    /// decision-cycle budget exhausted
    CycleLimit,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Coverage => "coverage",
            TerminationReason::NoTarget => "no_target",
            TerminationReason::TimeLimit => "time_limit",
            TerminationReason::CycleLimit => "cycle_limit",
        }
    }
}

impl std::str::FromStr for TerminationReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" => Ok(Self::Coverage),
            "no_target" => Ok(Self::NoTarget),
            "time_limit" => Ok(Self::TimeLimit),
            "cycle_limit" => Ok(Self::CycleLimit),
            other => Err(format!("unknown termination reason '{other}'")),
        }
    }
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wall-clock cost of the computation stages of one cycle.
#[derive(Debug, Clone, Copy, Default)]
pub struct CycleTimings {
    /// frontier detection + clustering + feasibility filter
    pub clustering_s: f64,
    /// traversability grid + path planning + time parameterization
    pub trajectory_s: f64,
    /// closed-loop previews + power integration (decision time only)
    pub energy_s: f64,
}

/// Everything recorded about one decision cycle.
#[derive(Debug, Clone)]
pub struct CycleLog {
    pub cycle: usize,
    /// sim time at the decision instant
    pub t_s: f64,
    pub explored_fraction: f64,
    pub entropy_bits: f64,
    pub counts: PartitionCounts,
    pub frontier_voxels: usize,
    pub clusters: usize,
    /// largest member-to-centroid radius among emitted clusters
    pub max_cluster_radius: f64,
    pub candidates: Vec<CandidateEval>,
    pub selected_cluster: Option<usize>,
    /// energy charged while executing this cycle's decision (flight +
    /// replanning hover), J
    pub executed_energy_j: f64,
    /// leg halted early because the look-ahead collision check fired
    pub aborted: bool,
    pub timings: CycleTimings,
}

/// One point of the exploration progress series (logged every cycle).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t_s: f64,
    pub explored_fraction: f64,
    pub cum_energy_j: f64,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionSummary {
    pub scenario: String,
    pub policy: PolicyKind,
    pub seed: u64,
    pub completion_s: f64,
    pub energy_j: f64,
    pub mean_power_w: f64,
    pub entropy_bits: f64,
    pub explored_fraction: f64,
    pub distance_m: f64,
    pub cycles: usize,
    pub replans: usize,
    pub termination: TerminationReason,
}

#[derive(Debug)]
pub struct MissionLog {
    pub summary: MissionSummary,
    pub cycles: Vec<CycleLog>,
    pub series: Vec<SeriesPoint>,
    pub final_map: VoxelMap,
}

/// Run one mission, building the scenario's observability oracle first.
/// Benchmarks share one oracle per scenario via [`run_mission_with_oracle`].
pub fn run_mission(
    scenario: &Scenario,
    cfg: &MissionConfig,
    policy: PolicyKind,
    seed: u64,
) -> MissionLog {
    let oracle = CoverageOracle::build(scenario, cfg);
    run_mission_with_oracle(scenario, cfg, policy, seed, &oracle)
}

pub fn run_mission_with_oracle(
    scenario: &Scenario,
    cfg: &MissionConfig,
    policy: PolicyKind,
    seed: u64,
    oracle: &CoverageOracle,
) -> MissionLog {
    let mut state = RigidState::hovering(scenario.start_position(), scenario.start.yaw);
    let mut map = VoxelMap::from_bounds(&scenario.bounds, &cfg.mapping);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_max = cluster_cutoff(&cfg.sensor);
    let ring_slot = std::f64::consts::TAU / cfg.frontier.n_azimuth.max(1) as f64;

    let mut t = 0.0f64;
    let mut energy = 0.0f64;
    let mut distance = 0.0f64;
    let mut replans = 0usize;
    let mut no_target_streak = 0usize;
    let mut cycles: Vec<CycleLog> = Vec::new();
    let mut series: Vec<SeriesPoint> = Vec::new();

    let termination = loop {
        let cycle_idx = cycles.len();

        // decision-time scan at the hover pose
        let pose = ScanPose { position: state.pos, orientation: state.att };
        let scan = render_depth_scan(scenario, &pose, &cfg.sensor);
        map.integrate_scan(&scan);

        let explored_fraction = oracle.explored_fraction(&map);
        let entropy_bits = map.entropy_bits_per_voxel();
        let counts = map.partition_counts();
        series.push(SeriesPoint {
            t_s: t,
            explored_fraction,
            cum_energy_j: energy,
            entropy_bits,
        });

        if explored_fraction >= cfg.termination.coverage_target {
            break TerminationReason::Coverage;
        }
        if t >= cfg.termination.max_sim_time_s {
            break TerminationReason::TimeLimit;
        }
        if cycle_idx >= cfg.termination.max_cycles {
            break TerminationReason::CycleLimit;
        }

        // the per-cycle seed draw happens unconditionally so the random
        // stream does not depend on what the policy did with it
        let ring_phase = rng.gen::<f64>() * ring_slot;

        let t0 = Instant::now();
        let frontiers = detect_frontiers(&map);
        let clusters = filter_feasible(
            &map,
            cluster_frontiers(&map, &frontiers, r_max),
            cfg.frontier.clearance,
        );
        let clustering_s = t0.elapsed().as_secs_f64();
        let max_cluster_radius = clusters.iter().map(|c| c.radius).fold(0.0, f64::max);

        let mut log = CycleLog {
            cycle: cycle_idx,
            t_s: t,
            explored_fraction,
            entropy_bits,
            counts,
            frontier_voxels: frontiers.len(),
            clusters: clusters.len(),
            max_cluster_radius,
            candidates: Vec::new(),
            selected_cluster: None,
            executed_energy_j: 0.0,
            aborted: false,
            timings: CycleTimings { clustering_s, ..Default::default() },
        };

        if clusters.is_empty() {
            cycles.push(log);
            break TerminationReason::NoTarget;
        }

        let t0 = Instant::now();
        let grid = match TraversabilityGrid::build(&map, &state.pos, &cfg.planner) {
            Ok(g) => g,
            Err(_) => {
                cycles.push(log);
                break TerminationReason::NoTarget;
            }
        };
        let grid_s = t0.elapsed().as_secs_f64();

        let sel = select_target(policy, &map, &grid, &clusters, &state, cfg, ring_phase);
        log.candidates = sel.candidates;
        log.timings.trajectory_s = grid_s + sel.trajectory_wall_s;
        log.timings.energy_s = sel.energy_wall_s;

        let decision = match sel.outcome {
            SelectionOutcome::Target(d) => d,
            SelectionOutcome::NoTarget => {
                // selection failure can be an artifact of this cycle's ring
                // phase (all samples in not-yet-observed space); phases are
                // redrawn each cycle, so retry before concluding nothing
                // reachable remains
                cycles.push(log);
                no_target_streak += 1;
                if no_target_streak > cfg.execution.no_target_retries {
                    break TerminationReason::NoTarget;
                }
                continue;
            }
        };
        no_target_streak = 0;
        log.selected_cluster = Some(decision.cluster_id);

        let leg = execute_leg(scenario, cfg, &mut map, &mut state, &decision);
        t += leg.sim_time_s;
        energy += leg.energy_j;
        distance += leg.distance_m;
        if leg.aborted {
            replans += 1;
        }
        log.executed_energy_j = leg.energy_j;
        log.aborted = leg.aborted;
        cycles.push(log);
    };

    let summary = MissionSummary {
        scenario: scenario.name.clone(),
        policy,
        seed,
        completion_s: t,
        energy_j: energy,
        mean_power_w: if t > 0.0 { energy / t } else { 0.0 },
        entropy_bits: map.entropy_bits_per_voxel(),
        explored_fraction: oracle.explored_fraction(&map),
        distance_m: distance,
        cycles: cycles.len(),
        replans,
        termination,
    };
    MissionLog { summary, cycles, series, final_map: map }
}

struct LegResult {
    sim_time_s: f64,
    energy_j: f64,
    distance_m: f64,
    aborted: bool,
}

/// Fly one committed decision: replay the closed-loop trace, scanning at
/// the sensor rate and watching the remaining reference for conflicts with
/// newly observed occupancy.
fn execute_leg(
    scenario: &Scenario,
    cfg: &MissionConfig,
    map: &mut VoxelMap,
    state: &mut RigidState,
    decision: &Decision,
) -> LegResult {
    // the energy-aware policy already flew this leg in preview; reuse it
    let trace = match &decision.predicted {
        Some((trace, _)) => trace.clone(),
        None => rollout(&decision.trajectory, state, &cfg.vehicle),
    };

    let scan_period = 1.0 / cfg.sensor.rate_hz;
    let lookahead =
        (cfg.execution.collision_lookahead_s / cfg.vehicle.record_dt).round() as usize;
    let power_cfg = &cfg.power;

    let mut energy = 0.0f64;
    let mut dist = 0.0f64;
    let mut aborted = false;
    let mut next_scan = scan_period;
    let mut end_idx = trace.samples.len() - 1;

    for i in 1..trace.samples.len() {
        let prev = &trace.samples[i - 1];
        let rec = &trace.samples[i];
        energy += 0.5 * (record_power(&prev.rotor, power_cfg) + record_power(&rec.rotor, power_cfg))
            * trace.dt;
        dist += (rec.pos - prev.pos).norm();

        if rec.t + 1e-9 >= next_scan {
            next_scan += scan_period;
            let pose = ScanPose { position: rec.pos, orientation: rec.att };
            let scan = render_depth_scan(scenario, &pose, &cfg.sensor);
            map.integrate_scan(&scan);

            // the map changed: look a bounded horizon ahead on the reference
            let from = i.min(decision.trajectory.samples.len() - 1);
            if first_collision_in(&decision.trajectory, map, &cfg.planner, from, from + lookahead)
                .is_some()
            {
                aborted = true;
                end_idx = i;
                break;
            }
        }
    }

    let endr = &trace.samples[end_idx];
    let mut sim_time = endr.t;
    if aborted {
        // halt and hover while the next cycle replans; station-keeping is
        // charged at the calibrated hover power
        let hover_power = 4.0 * crate::energy::rotor_power(cfg.vehicle.hover_omega(), power_cfg);
        energy += hover_power * cfg.execution.replan_hover_s;
        sim_time += cfg.execution.replan_hover_s;
        *state = RigidState::hovering(endr.pos, endr.yaw);
    } else {
        *state = state_from_record(endr);
    }

    LegResult { sim_time_s: sim_time, energy_j: energy, distance_m: dist, aborted }
}

// ---------------------------------------------------------------------------
// Benchmarks

/// median/mean/min/max of one metric over a benchmark's runs
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "stats need at least one value");
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Stats {
            median,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            max: v[n - 1],
        }
    }
}

/// Aggregates for one (scenario, policy) cell of a benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyStats {
    pub scenario: String,
    pub policy: PolicyKind,
    pub runs: usize,
    pub completion_s: Stats,
    pub energy_j: Stats,
    pub mean_power_w: Stats,
    pub entropy_bits: Stats,
    pub explored_fraction: Stats,
    pub distance_m: Stats,
}

#[derive(Debug)]
pub struct BenchmarkReport {
    pub runs: usize,
    pub base_seed: u64,
    /// missions ordered scenario-major, then policy, then run index
    pub missions: Vec<MissionLog>,
    /// one row per (scenario, policy), same ordering
    pub stats: Vec<PolicyStats>,
}

/// Run `runs` seeded missions for every scenario × policy combination.
/// Run `i` of every combination uses seed `base_seed + i`, so policies face
/// identical stochastic conditions.
pub fn run_benchmark(
    scenarios: &[Scenario],
    cfg: &MissionConfig,
    policies: &[PolicyKind],
    runs: usize,
    base_seed: u64,
) -> BenchmarkReport {
    assert!(runs >= 1, "benchmark needs at least one run");
    let oracles: Vec<CoverageOracle> = scenarios
        .par_iter()
        .map(|sc| CoverageOracle::build(sc, cfg))
        .collect();

    let jobs: Vec<(usize, usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(si, _)| {
            policies
                .iter()
                .enumerate()
                .flat_map(move |(pi, _)| (0..runs).map(move |r| (si, pi, r)))
        })
        .collect();

    let missions: Vec<MissionLog> = jobs
        .par_iter()
        .map(|&(si, pi, r)| {
            run_mission_with_oracle(
                &scenarios[si],
                cfg,
                policies[pi],
                base_seed + r as u64,
                &oracles[si],
            )
        })
        .collect();

    let stats = scenarios
        .iter()
        .enumerate()
        .flat_map(|(si, sc)| {
            let missions = &missions;
            policies.iter().enumerate().map(move |(pi, &policy)| {
                let group: Vec<&MissionSummary> = (0..runs)
                    .map(|r| &missions[(si * policies.len() + pi) * runs + r].summary)
                    .collect();
                let pick = |f: fn(&MissionSummary) -> f64| {
                    Stats::of(&group.iter().map(|s| f(s)).collect::<Vec<_>>())
                };
                PolicyStats {
                    scenario: sc.name.clone(),
                    policy,
                    runs,
                    completion_s: pick(|s| s.completion_s),
                    energy_j: pick(|s| s.energy_j),
                    mean_power_w: pick(|s| s.mean_power_w),
                    entropy_bits: pick(|s| s.entropy_bits),
                    explored_fraction: pick(|s| s.explored_fraction),
                    distance_m: pick(|s| s.distance_m),
                }
            })
        })
        .collect();

    BenchmarkReport { runs, base_seed, missions, stats }
}
