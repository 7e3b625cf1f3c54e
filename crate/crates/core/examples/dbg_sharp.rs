use explore_core::config::{MissionConfig, PlannerConfig};
use explore_core::mapping::{VoxelMap, VoxelState};
use explore_core::planning::{first_collision, plan_path, time_parameterize};
use explore_core::world::{Aabb, Scenario, StartPose};
use explore_core::config::MappingConfig;
use explore_core::Point3;

fn main() {
    let sc = Scenario {
        name: "walled".into(),
        wall_thickness: 0.2,
        bounds: Aabb::new([0.0, 0.0, 0.0], [10.0, 10.0, 3.0]),
        start: StartPose { position: [2.0, 5.0, 1.5], yaw: 0.0 },
        obstacles: vec![Aabb::new([4.8, 0.0, 0.0], [5.2, 8.0, 3.0])],
    };
    let map = VoxelMap::from_ground_truth(&sc, &MappingConfig::default(), |_| true);
    let start = Point3::new(2.0, 5.0, 1.5);
    let goal = Point3::new(8.0, 5.0, 1.5);
    let cfg = MissionConfig::default().planner;
    let path = plan_path(&map, &start, &goal, &cfg).unwrap();
    println!("waypoints:");
    for w in &path.waypoints {
        let k = map.key_at(w).unwrap();
        let c = map.center(k);
        println!(
            "  ({:6.3},{:6.3},{:6.3}) cell ({},{},{}) center ({:5.2},{:5.2},{:5.2}) carved {}",
            w[0], w[1], w[2], k.x, k.y, k.z, c[0], c[1], c[2],
            map.occupied_within(&c, cfg.clearance)
        );
    }
    for (label, pcfg) in [
        ("blended", cfg.clone()),
        ("sharp", PlannerConfig { corner_radius_max: 0.0, ..cfg.clone() }),
    ] {
        let traj = time_parameterize(&path, 0.0, 0.0, &pcfg);
        match first_collision(&traj, &map, &cfg) {
            None => println!("{label}: clean ({} samples)", traj.samples.len()),
            Some((idx, t)) => {
                let s = &traj.samples[idx];
                let k = map.key_at(&s.pos);
                println!(
                    "{label}: HIT idx {idx} t {t:.3} pos ({:6.3},{:6.3},{:6.3}) cell {:?} state {:?}",
                    s.pos[0], s.pos[1], s.pos[2], k,
                    map.state_at(&s.pos)
                );
                if let Some(k) = k {
                    let c = map.center(k);
                    println!(
                        "  center ({:5.2},{:5.2},{:5.2}) carved {} dist_start {:.3}",
                        c[0], c[1], c[2],
                        map.occupied_within(&c, cfg.clearance),
                        (c - start).norm()
                    );
                    // which occupied voxel is close?
                    for dz in -5..=5i32 {
                        for dy in -5..=5i32 {
                            for dx in -5..=5i32 {
                                let nk = explore_core::mapping::VoxelKey::new(k.x + dx, k.y + dy, k.z + dz);
                                if map.classify(nk) == VoxelState::Occupied {
                                    let d = (map.center(nk) - c).norm();
                                    if d <= cfg.clearance {
                                        println!("    occ ({},{},{}) d {:.4}", nk.x, nk.y, nk.z, d);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
