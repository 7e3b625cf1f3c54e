//! Scratch probe: dissect the wall-adjacent departure scene.

use explore_core::config::{MappingConfig, MissionConfig};
use explore_core::frontier::{sample_viewpoints, FrontierCluster};
use explore_core::mapping::VoxelMap;
use explore_core::planning::{first_collision, plan_path_on, time_parameterize, TraversabilityGrid};
use explore_core::vehicle::{rollout, RigidState};
use explore_core::world::{Aabb, Scenario, StartPose};
use explore_core::Point3;

fn main() {
    let sc = Scenario {
        name: "half".into(),
        wall_thickness: 0.2,
        bounds: Aabb::new([0.0, 0.0, 0.0], [24.0, 4.0, 2.2]),
        start: StartPose { position: [2.0, 2.0, 1.1], yaw: 0.0 },
        obstacles: vec![],
    };
    let map = VoxelMap::from_ground_truth(&sc, &MappingConfig::default(), |c| c[0] < 20.0);
    let cfg = MissionConfig::default();
    let state = RigidState::hovering(Point3::new(2.0, 0.3, 1.1), 0.0);
    println!("occupied_within(start, 0.4) = {}", map.occupied_within(&state.pos, cfg.planner.clearance));

    let grid = match TraversabilityGrid::build(&map, &state.pos, &cfg.planner) {
        Ok(g) => g,
        Err(e) => {
            println!("grid build failed: {e}");
            return;
        }
    };

    for p in [
        Point3::new(2.0, 0.3, 1.1),
        Point3::new(2.0, 0.5, 1.1),
        Point3::new(2.0, 1.0, 1.1),
        Point3::new(3.0, 2.0, 1.1),
        Point3::new(7.5, 2.0, 1.1),
        Point3::new(2.5, 2.0, 1.1),
    ] {
        let k = map.key_at(&p).unwrap();
        println!(
            "({:4.1},{:4.1},{:4.1}) key ({:3},{:3},{:3}) state {:?} trav {} reach {}",
            p[0], p[1], p[2], k.x, k.y, k.z,
            map.classify(k),
            grid.is_traversable(k),
            grid.is_reachable(k)
        );
    }

    let cluster = FrontierCluster {
        id: 0,
        members: vec![map.key_at(&Point3::new(5.0, 2.0, 1.1)).unwrap(); 40],
        centroid: Point3::new(5.0, 2.0, 1.1),
        radius: 0.5,
    };
    let vps = sample_viewpoints(&map, &cluster, &cfg.frontier, 0.0);
    println!("{} viewpoints", vps.len());
    for (i, vp) in vps.iter().enumerate() {
        let planned = plan_path_on(&grid, &map, &state.pos, &vp.position);
        match planned {
            Err(e) => println!("vp{i} ({:.2},{:.2},{:.2}): plan err {e}", vp.position[0], vp.position[1], vp.position[2]),
            Ok(path) => {
                let traj = time_parameterize(&path, state.yaw(), vp.yaw, &cfg.planner);
                let col = first_collision(&traj, &map, &cfg.planner);
                let trace = rollout(&traj, &state, &cfg.vehicle);
                println!(
                    "vp{i} ({:.2},{:.2},{:.2}): waypoints {} len {:.2} collision {:?} rollout {:?}",
                    vp.position[0], vp.position[1], vp.position[2],
                    path.waypoints.len(),
                    path.length(),
                    col.map(|(idx, t)| (idx, t, traj.samples[idx].pos)),
                    trace.outcome
                );
            }
        }
    }
}
