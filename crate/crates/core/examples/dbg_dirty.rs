//! Scratch probe: count born-dirty planned trajectories on a mid-mission map.

use explore_core::config::MissionConfig;
use explore_core::frontier::{cluster_cutoff, cluster_frontiers, detect_frontiers, filter_feasible, sample_viewpoints};
use explore_core::mission::run_mission;
use explore_core::planning::{first_collision, plan_path_on, time_parameterize, TraversabilityGrid};
use explore_core::policy::PolicyKind;
use explore_core::vehicle::RigidState;
use explore_core::world::Scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = Scenario::builtin(&args[1]).unwrap();
    let seed: u64 = args[2].parse().unwrap();
    let max_cycles: usize = args[3].parse().unwrap();
    let mut cfg = MissionConfig::default();
    cfg.termination.max_cycles = max_cycles;

    let log = run_mission(&scenario, &cfg, PolicyKind::Nearest, seed);
    let map = &log.final_map;
    println!(
        "mission: {} cycles, explored {:.3}, term {}",
        log.summary.cycles,
        log.summary.explored_fraction,
        log.summary.termination.as_str()
    );

    let cfg = MissionConfig::default();
    let state = RigidState::hovering(scenario.start_position(), scenario.start.yaw);
    let frontiers = detect_frontiers(map);
    let clusters = filter_feasible(map, cluster_frontiers(map, &frontiers, cluster_cutoff(&cfg.sensor)), cfg.frontier.clearance);
    let grid = TraversabilityGrid::build(map, &state.pos, &cfg.planner).unwrap();
    println!("{} frontier voxels, {} clusters", frontiers.len(), clusters.len());

    let (mut planned, mut dirty) = (0usize, 0usize);
    for phase_i in 0..8 {
        let phase = phase_i as f64 * 0.098;
        for c in &clusters {
            for vp in sample_viewpoints(map, c, &cfg.frontier, phase) {
                let Ok(path) = plan_path_on(&grid, map, &state.pos, &vp.position) else {
                    continue;
                };
                planned += 1;
                let traj = time_parameterize(&path, 0.0, vp.yaw, &cfg.planner);
                if let Some((idx, _)) = first_collision(&traj, map, &cfg.planner) {
                    dirty += 1;
                    if dirty <= 3 {
                        println!(
                            "dirty: cluster {} phase {:.3} vp ({:.2},{:.2},{:.2}) hit sample {} at {:?}",
                            c.id, phase, vp.position[0], vp.position[1], vp.position[2], idx, traj.samples[idx].pos
                        );
                    }
                }
            }
        }
    }
    println!("planned {planned}, dirty {dirty}");
}
