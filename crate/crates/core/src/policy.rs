//! Target selection: which frontier cluster to fly to next.
//!
//! Three policies share one candidate pipeline (viewpoint sampling → path
//! planning → time parameterization → collision validation → closed-loop
//! rollout → energy):
//!
//! * `EnergyAware` ranks clusters by information gain, evaluates the top K
//!   through the full pipeline, and commits to the cheapest predicted
//!   energy; if a whole batch is infeasible it falls through to the next K
//!   before giving up.
//! * `Nearest` flies to the cluster with the closest centroid that it can
//!   plan to (no rollout at decision time).
//! * `Classic` flies to the largest-gain cluster it can plan to (again
//!   plan-only), the classic frontier heuristic.
//!
//! All orderings break ties toward the smaller cluster id, so selection is
//! deterministic for identical inputs.

use crate::config::{MissionConfig, PlannerConfig};
use crate::energy::trace_energy;
use crate::frontier::{sample_viewpoints, FrontierCluster, Viewpoint};
use crate::mapping::VoxelMap;
use crate::planning::{
    first_collision, plan_path_on, time_parameterize, TimedTrajectory, TraversabilityGrid,
};
use crate::vehicle::{rollout, RigidState, RolloutOutcome, RolloutTrace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[serde(rename = "eaae")]
    EnergyAware,
    Nearest,
    Classic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::EnergyAware, PolicyKind::Nearest, PolicyKind::Classic];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::EnergyAware => "eaae",
            PolicyKind::Nearest => "nearest",
            PolicyKind::Classic => "classic",
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eaae" => Ok(PolicyKind::EnergyAware),
            "nearest" => Ok(PolicyKind::Nearest),
            "classic" => Ok(PolicyKind::Classic),
            other => Err(format!("unknown policy '{other}' (expected eaae, nearest or classic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    /// evaluated and chosen
    Selected,
    /// evaluated successfully but beaten by another candidate
    Feasible,
    /// no free, clear viewpoint on the sampling ring
    NoViewpoint,
    /// no executable path: planning failed, or the parameterized
    /// trajectory violates the collision predicate the executor enforces
    Unreachable,
    /// closed-loop preview left the tracking envelope
    Diverged,
}

/// Evaluation record for one cluster considered during a decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEval {
    pub cluster_id: usize,
    pub gain: usize,
    pub centroid_distance: f64,
    pub status: CandidateStatus,
    pub predicted_energy: Option<f64>,
    pub predicted_duration: Option<f64>,
}

/// A committed decision: where to fly and on what reference.
#[derive(Debug, Clone)]
pub struct Decision {
    pub cluster_id: usize,
    pub gain: usize,
    pub viewpoint: Viewpoint,
    pub trajectory: TimedTrajectory,
    /// closed-loop preview and its energy (energy-aware policy only; the
    /// baselines decide plan-only and fly the rollout at execution time)
    pub predicted: Option<(RolloutTrace, f64)>,
}

#[derive(Debug, Clone)]
pub enum SelectionOutcome {
    Target(Box<Decision>),
    NoTarget,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub outcome: SelectionOutcome,
    /// every cluster that was looked at, in evaluation order
    pub candidates: Vec<CandidateEval>,
    pub plans_attempted: usize,
    pub rollouts_run: usize,
    /// wall time spent planning + parameterizing trajectories
    pub trajectory_wall_s: f64,
    /// wall time spent on closed-loop previews + energy integration
    pub energy_wall_s: f64,
}

struct EvalCtx<'a> {
    map: &'a VoxelMap,
    grid: &'a TraversabilityGrid,
    state: &'a RigidState,
    cfg: &'a MissionConfig,
    ring_phase: f64,
    plans: usize,
    rollouts: usize,
    trajectory_wall: std::time::Duration,
    energy_wall: std::time::Duration,
}

enum EvalOutcome {
    Ok {
        viewpoint: Viewpoint,
        trajectory: TimedTrajectory,
        trace: Option<(RolloutTrace, f64)>,
    },
    Fail(CandidateStatus),
}

impl EvalCtx<'_> {
    /// Viewpoint → plan → parameterize (→ rollout/energy when `preview`).
    fn evaluate(&mut self, cluster: &FrontierCluster, preview: bool) -> EvalOutcome {
        let vps = sample_viewpoints(self.map, cluster, &self.cfg.frontier, self.ring_phase);
        if vps.is_empty() {
            return EvalOutcome::Fail(CandidateStatus::NoViewpoint);
        }
        let mut last_fail = CandidateStatus::NoViewpoint;
        for vp in vps.into_iter().take(self.cfg.frontier.viewpoints_per_cluster.max(1)) {
            self.plans += 1;
            let t0 = std::time::Instant::now();
            // the executor aborts any reference that violates the collision
            // predicate, and committing one would stall the mission in an
            // abort-replan loop, so validate before accepting. A* paths stay
            // inside traversable cells but corner fillets may graze carved
            // ones; the sharp-cornered profile (corners taken at rest) stays
            // on the checked polyline and is the guaranteed-clean fallback.
            let pc = &self.cfg.planner;
            let traj = plan_path_on(self.grid, self.map, &self.state.pos, &vp.position)
                .ok()
                .and_then(|path| {
                    let blended = time_parameterize(&path, self.state.yaw(), vp.yaw, pc);
                    if first_collision(&blended, self.map, pc).is_none() {
                        return Some(blended);
                    }
                    let sharp_cfg = PlannerConfig { corner_radius_max: 0.0, ..*pc };
                    let sharp = time_parameterize(&path, self.state.yaw(), vp.yaw, &sharp_cfg);
                    first_collision(&sharp, self.map, pc).is_none().then_some(sharp)
                });
            self.trajectory_wall += t0.elapsed();
            let traj = match traj {
                Some(t) => t,
                None => {
                    last_fail = CandidateStatus::Unreachable;
                    continue;
                }
            };
            if !preview {
                return EvalOutcome::Ok { viewpoint: vp, trajectory: traj, trace: None };
            }
            self.rollouts += 1;
            let t0 = std::time::Instant::now();
            let trace = rollout(&traj, self.state, &self.cfg.vehicle);
            let energy = trace_energy(&trace, &self.cfg.power).energy_j;
            self.energy_wall += t0.elapsed();
            match trace.outcome {
                RolloutOutcome::Completed { .. } => {
                    return EvalOutcome::Ok {
                        viewpoint: vp,
                        trajectory: traj,
                        trace: Some((trace, energy)),
                    };
                }
                RolloutOutcome::Diverged { .. } => {
                    last_fail = CandidateStatus::Diverged;
                }
            }
        }
        EvalOutcome::Fail(last_fail)
    }
}

/// Pick the next exploration target among feasibility-filtered clusters.
#[allow(clippy::too_many_arguments)]
pub fn select_target(
    policy: PolicyKind,
    map: &VoxelMap,
    grid: &TraversabilityGrid,
    clusters: &[FrontierCluster],
    state: &RigidState,
    cfg: &MissionConfig,
    ring_phase: f64,
) -> SelectionResult {
    let mut ctx = EvalCtx {
        map,
        grid,
        state,
        cfg,
        ring_phase,
        plans: 0,
        rollouts: 0,
        trajectory_wall: std::time::Duration::ZERO,
        energy_wall: std::time::Duration::ZERO,
    };
    let mut candidates = Vec::new();

    let dist = |c: &FrontierCluster| (c.centroid - state.pos).norm();
    let mut order: Vec<&FrontierCluster> = clusters.iter().collect();
    match policy {
        PolicyKind::Nearest => {
            order.sort_by(|a, b| dist(a).total_cmp(&dist(b)).then(a.id.cmp(&b.id)));
        }
        PolicyKind::EnergyAware | PolicyKind::Classic => {
            order.sort_by(|a, b| b.gain().cmp(&a.gain()).then(a.id.cmp(&b.id)));
        }
    }

    let outcome = match policy {
        PolicyKind::EnergyAware => {
            let mut picked: Option<Decision> = None;
            'batches: for batch in order.chunks(cfg.frontier.k_top.max(1)) {
                let mut best: Option<(f64, Decision)> = None;
                let batch_start = candidates.len();
                for cluster in batch {
                    match ctx.evaluate(cluster, true) {
                        EvalOutcome::Ok { viewpoint, trajectory, trace } => {
                            let (trace, energy) = trace.expect("preview evaluation returns a trace");
                            let dur = trace.duration();
                            candidates.push(CandidateEval {
                                cluster_id: cluster.id,
                                gain: cluster.gain(),
                                centroid_distance: dist(cluster),
                                status: CandidateStatus::Feasible,
                                predicted_energy: Some(energy),
                                predicted_duration: Some(dur),
                            });
                            let better = match &best {
                                None => true,
                                Some((e, d)) => {
                                    energy.total_cmp(e).then(cluster.id.cmp(&d.cluster_id))
                                        == std::cmp::Ordering::Less
                                }
                            };
                            if better {
                                best = Some((
                                    energy,
                                    Decision {
                                        cluster_id: cluster.id,
                                        gain: cluster.gain(),
                                        viewpoint,
                                        trajectory,
                                        predicted: Some((trace, energy)),
                                    },
                                ));
                            }
                        }
                        EvalOutcome::Fail(status) => candidates.push(CandidateEval {
                            cluster_id: cluster.id,
                            gain: cluster.gain(),
                            centroid_distance: dist(cluster),
                            status,
                            predicted_energy: None,
                            predicted_duration: None,
                        }),
                    }
                }
                if let Some((_, decision)) = best {
                    for c in &mut candidates[batch_start..] {
                        if c.cluster_id == decision.cluster_id {
                            c.status = CandidateStatus::Selected;
                        }
                    }
                    picked = Some(decision);
                    break 'batches;
                }
            }
            picked
        }
        PolicyKind::Nearest | PolicyKind::Classic => {
            let mut picked = None;
            for cluster in &order {
                match ctx.evaluate(cluster, false) {
                    EvalOutcome::Ok { viewpoint, trajectory, .. } => {
                        candidates.push(CandidateEval {
                            cluster_id: cluster.id,
                            gain: cluster.gain(),
                            centroid_distance: dist(cluster),
                            status: CandidateStatus::Selected,
                            predicted_energy: None,
                            predicted_duration: None,
                        });
                        picked = Some(Decision {
                            cluster_id: cluster.id,
                            gain: cluster.gain(),
                            viewpoint,
                            trajectory,
                            predicted: None,
                        });
                        break;
                    }
                    EvalOutcome::Fail(status) => candidates.push(CandidateEval {
                        cluster_id: cluster.id,
                        gain: cluster.gain(),
                        centroid_distance: dist(cluster),
                        status,
                        predicted_energy: None,
                        predicted_duration: None,
                    }),
                }
            }
            picked
        }
    };

    SelectionResult {
        outcome: match outcome {
            Some(d) => SelectionOutcome::Target(Box::new(d)),
            None => SelectionOutcome::NoTarget,
        },
        candidates,
        plans_attempted: ctx.plans,
        rollouts_run: ctx.rollouts,
        trajectory_wall_s: ctx.trajectory_wall.as_secs_f64(),
        energy_wall_s: ctx.energy_wall.as_secs_f64(),
    }
}
