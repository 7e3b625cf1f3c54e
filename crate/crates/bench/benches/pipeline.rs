//! Wall-clock micro-benchmarks of the per-cycle computation stages:
//! frontier clustering, trajectory generation, and closed-loop energy
//! estimation, each on a mid-mission map of the pillars scene.

use criterion::{criterion_group, criterion_main, Criterion};
use explore_core::config::MissionConfig;
use explore_core::energy::trace_energy;
use explore_core::frontier::{
    cluster_cutoff, cluster_frontiers, detect_frontiers, filter_feasible, sample_viewpoints,
};
use explore_core::mapping::{render_depth_scan, ScanPose, VoxelMap};
use explore_core::planning::{plan_path_on, time_parameterize, TimedTrajectory, TraversabilityGrid};
use explore_core::vehicle::{rollout, RigidState};
use explore_core::world::Scenario;
use nalgebra::{Point3, UnitQuaternion, Vector3};
use std::hint::black_box;

struct Fixture {
    cfg: MissionConfig,
    map: VoxelMap,
    state: RigidState,
    trajectory: TimedTrajectory,
}

/// Build a partially explored pillars map by scanning from a fixed tour of
/// poses, then plan one representative leg through it.
fn fixture() -> Fixture {
    let scenario = Scenario::builtin("pillars").expect("builtin");
    let cfg = MissionConfig::default();
    let mut map = VoxelMap::from_bounds(&scenario.bounds, &cfg.mapping);

    let poses = [
        ([-8.0, -8.0, 1.0], 0.0),
        ([-8.0, -8.0, 1.0], 1.2),
        ([-4.0, -6.0, 1.2], 0.6),
        ([0.0, -4.0, 1.0], 1.6),
        ([2.0, 0.0, 1.4], 2.4),
        ([-2.0, 2.0, 1.0], -2.0),
        ([4.0, 4.0, 1.2], -0.8),
    ];
    for (p, yaw) in poses {
        let pose = ScanPose {
            position: Point3::new(p[0], p[1], p[2]),
            orientation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        };
        let scan = render_depth_scan(&scenario, &pose, &cfg.sensor);
        map.integrate_scan(&scan);
    }

    let state = RigidState::hovering(Point3::new(-8.0, -8.0, 1.0), 0.0);
    let r_max = cluster_cutoff(&cfg.sensor);
    let clusters = filter_feasible(
        &map,
        cluster_frontiers(&map, &detect_frontiers(&map), r_max),
        cfg.frontier.clearance,
    );
    let grid = TraversabilityGrid::build(&map, &state.pos, &cfg.planner)
        .expect("start must be traversable");
    let (viewpoint, path) = clusters
        .iter()
        .flat_map(|c| sample_viewpoints(&map, c, &cfg.frontier, 0.4))
        .find_map(|vp| {
            plan_path_on(&grid, &map, &state.pos, &vp.position)
                .ok()
                .map(|path| (vp, path))
        })
        .expect("some viewpoint must be reachable in the fixture map");
    let trajectory = time_parameterize(&path, state.yaw(), viewpoint.yaw, &cfg.planner);
    Fixture { cfg, map, state, trajectory }
}

fn benches(c: &mut Criterion) {
    let fx = fixture();
    let r_max = cluster_cutoff(&fx.cfg.sensor);

    c.bench_function("clustering", |b| {
        b.iter(|| {
            let frontiers = detect_frontiers(black_box(&fx.map));
            let clusters = filter_feasible(
                &fx.map,
                cluster_frontiers(&fx.map, &frontiers, r_max),
                fx.cfg.frontier.clearance,
            );
            black_box(clusters)
        })
    });

    let grid = TraversabilityGrid::build(&fx.map, &fx.state.pos, &fx.cfg.planner)
        .expect("traversable start");
    let goal = fx.trajectory.end().pos;
    let goal_yaw = fx.trajectory.end().yaw;
    c.bench_function("trajectory_generation", |b| {
        b.iter(|| {
            let path = plan_path_on(black_box(&grid), &fx.map, &fx.state.pos, &goal)
                .expect("fixture goal is reachable");
            black_box(time_parameterize(&path, fx.state.yaw(), goal_yaw, &fx.cfg.planner))
        })
    });

    c.bench_function("energy_estimation", |b| {
        b.iter(|| {
            let trace = rollout(black_box(&fx.trajectory), &fx.state, &fx.cfg.vehicle);
            black_box(trace_energy(&trace, &fx.cfg.power))
        })
    });
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
