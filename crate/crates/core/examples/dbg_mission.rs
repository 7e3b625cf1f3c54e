//! Scratch probe: run one mission and print per-cycle diagnostics.

use explore_core::config::MissionConfig;
use explore_core::mission::run_mission;
use explore_core::policy::PolicyKind;
use explore_core::world::Scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = Scenario::builtin(&args[1]).unwrap();
    let policy: PolicyKind = args[2].parse().unwrap();
    let seed: u64 = args[3].parse().unwrap();
    let cfg = MissionConfig::default();

    let log = run_mission(&scenario, &cfg, policy, seed);
    for c in &log.cycles {
        let cands: Vec<String> = c
            .candidates
            .iter()
            .map(|e| format!("c{}(g{},{:.1}m,{:?})", e.cluster_id, e.gain, e.centroid_distance, e.status))
            .collect();
        println!(
            "cyc {:>3} t {:>7.2} exp {:.4} fr {:>5} cl {:>3} rmax {:.2} sel {:?} E {:>8.1} ab {} | {}",
            c.cycle,
            c.t_s,
            c.explored_fraction,
            c.frontier_voxels,
            c.clusters,
            c.max_cluster_radius,
            c.selected_cluster,
            c.executed_energy_j,
            c.aborted as u8,
            cands.join(" ")
        );
    }
    let s = &log.summary;
    println!(
        "SUMMARY {}/{} seed {}: t {:.2} E {:.1} explored {:.4} cycles {} replans {} term {}",
        s.scenario,
        s.policy.as_str(),
        s.seed,
        s.completion_s,
        s.energy_j,
        s.explored_fraction,
        s.cycles,
        s.replans,
        s.termination.as_str()
    );
}
