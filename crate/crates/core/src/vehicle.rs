//! Quadrotor closed-loop simulation down to individual rotor speeds.
//!
//! A geometric tracking controller (thrust along the desired force
//! direction, torque from the SO(3) attitude error) runs at a fixed control
//! rate; an X-configuration mixer converts collective thrust and body torque
//! into per-rotor thrusts with a closed-form inverse; rigid-body dynamics
//! integrate at an integer multiple of the control rate with semi-implicit
//! Euler and exponential-map attitude updates. Rotor speeds are recorded on
//! a uniform grid for downstream energy integration.

use crate::config::VehicleConfig;
use crate::planning::TimedTrajectory;
use crate::{Point3, Vec3};
use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use std::io::{self, Write};

/// Rigid-body state; attitude maps body to world.
#[derive(Debug, Clone, Copy)]
pub struct RigidState {
    pub pos: Point3,
    pub vel: Vec3,
    pub att: UnitQuaternion<f64>,
    /// body angular rate
    pub omega: Vec3,
}

impl RigidState {
    /// At rest, level, facing `yaw`.
    pub fn hovering(pos: Point3, yaw: f64) -> Self {
        Self {
            pos,
            vel: Vec3::zeros(),
            att: UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw),
            omega: Vec3::zeros(),
        }
    }

    pub fn yaw(&self) -> f64 {
        let b1 = self.att * Vec3::x();
        b1.y.atan2(b1.x)
    }
}

/// One record on the uniform rollout grid.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub t: f64,
    pub pos: Point3,
    pub vel: Vec3,
    pub att: UnitQuaternion<f64>,
    pub yaw: f64,
    /// realized rotor speeds, rad/s
    pub rotor: [f64; 4],
    /// distance to the reference position at this instant
    pub pos_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RolloutOutcome {
    /// Reached the end of the reference (optionally after the settle
    /// window); `settled` reports whether the final position error was
    /// inside the tolerance.
    Completed { settled: bool },
    /// Position error exceeded the divergence threshold.
    Diverged { t: f64, pos_err: f64 },
}

/// Closed-loop flight record on a uniform `dt` grid.
#[derive(Debug, Clone)]
pub struct RolloutTrace {
    pub dt: f64,
    pub samples: Vec<TraceRecord>,
    pub outcome: RolloutOutcome,
    /// largest position error seen at any control step
    pub max_pos_err: f64,
}

impl RolloutTrace {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn last_record(&self) -> &TraceRecord {
        self.samples.last().expect("rollout records at least t=0")
    }
}

/// Controller output for one period: collective thrust (N) and body torque
/// (N·m), before mixing.
#[derive(Debug, Clone, Copy)]
pub struct ControlCommand {
    pub thrust: f64,
    pub torque: Vec3,
}

/// Geometric tracking control for one reference state.
pub fn geometric_control(
    state: &RigidState,
    r: &crate::planning::RefState,
    cfg: &VehicleConfig,
) -> ControlCommand {
    let g = Vec3::new(0.0, 0.0, cfg.gravity);
    let e_p = r.pos - state.pos;
    let e_v = r.vel - state.vel;
    let f_des = cfg.mass * (r.acc + g) + cfg.kp * e_p + cfg.kv * e_v;

    let rot = state.att.to_rotation_matrix();
    let b3 = rot * Vec3::z();
    let thrust = f_des.dot(&b3).max(0.0);

    // desired attitude: thrust axis from f_des, heading from reference yaw
    let b3d = if f_des.norm() > 1e-9 { f_des.normalize() } else { b3 };
    let c1 = Vec3::new(r.yaw.cos(), r.yaw.sin(), 0.0);
    let mut b2d = b3d.cross(&c1);
    if b2d.norm() < 1e-6 {
        // thrust axis ~parallel to the heading vector; use its normal
        b2d = b3d.cross(&Vec3::new(-r.yaw.sin(), r.yaw.cos(), 0.0));
    }
    let b2d = b2d.normalize();
    let b1d = b2d.cross(&b3d);
    let r_des = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[b1d, b2d, b3d]));

    // SO(3) attitude error ½(R_dᵀR − RᵀR_d)ᵛ and rate error against the
    // yaw-rate feedforward
    let rd_t_r = r_des.matrix().transpose() * rot.matrix();
    let skew = rd_t_r - rd_t_r.transpose();
    let e_r = 0.5 * Vec3::new(skew[(2, 1)], skew[(0, 2)], skew[(1, 0)]);
    let omega_ref = rot.matrix().transpose() * (r_des.matrix() * Vec3::new(0.0, 0.0, r.yaw_rate));
    let e_w = state.omega - omega_ref;

    let j = Matrix3::from_diagonal(&Vec3::new(cfg.inertia[0], cfg.inertia[1], cfg.inertia[2]));
    let torque = -cfg.kr * e_r - cfg.komega * e_w + state.omega.cross(&(j * state.omega));
    ControlCommand { thrust, torque }
}

/// Rotor geometry: X configuration, arms on the ±45° diagonals.
/// `x[i]`, `y[i]` in units of the diagonal half-span `l = arm/√2`;
/// `spin[i]` is the sign of the reaction torque about +z.
const ROTOR_X: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
const ROTOR_Y: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
const ROTOR_SPIN: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];

/// Per-rotor thrusts realizing a command, with saturation that preserves
/// collective thrust first, roll/pitch torque second, yaw torque last.
pub fn allocate_rotor_thrusts(cmd: &ControlCommand, cfg: &VehicleConfig) -> [f64; 4] {
    let l = cfg.arm_length / std::f64::consts::SQRT_2;
    let k = cfg.c_q_over_c_t;
    let t_min = cfg.c_t * cfg.omega_min * cfg.omega_min;
    let t_max = cfg.c_t * cfg.omega_max * cfg.omega_max;

    let base = (cmd.thrust / 4.0).clamp(t_min, t_max);
    let mut a = cmd.torque[0] / (4.0 * l); // roll share
    let mut b = cmd.torque[1] / (4.0 * l); // pitch share
    let mut c = cmd.torque[2] / (4.0 * k); // yaw share

    // room left on the tightest side of the rotor envelope
    let head = (base - t_min).min(t_max - base).max(0.0);
    let rp = a.abs() + b.abs();
    if rp + c.abs() > head {
        if rp >= head {
            let s = if rp > 0.0 { head / rp } else { 0.0 };
            a *= s;
            b *= s;
            c = 0.0;
        } else {
            c = c.signum() * (head - rp);
        }
    }

    let mut t = [0.0; 4];
    for i in 0..4 {
        t[i] = base + ROTOR_Y[i] * a - ROTOR_X[i] * b + ROTOR_SPIN[i] * c;
        t[i] = t[i].clamp(t_min, t_max);
    }
    t
}

/// Wrench actually produced by a set of rotor thrusts.
pub fn wrench_of(thrusts: &[f64; 4], cfg: &VehicleConfig) -> ControlCommand {
    let l = cfg.arm_length / std::f64::consts::SQRT_2;
    let k = cfg.c_q_over_c_t;
    let mut f = 0.0;
    let mut tau = Vec3::zeros();
    for i in 0..4 {
        f += thrusts[i];
        tau[0] += ROTOR_Y[i] * l * thrusts[i];
        tau[1] += -ROTOR_X[i] * l * thrusts[i];
        tau[2] += ROTOR_SPIN[i] * k * thrusts[i];
    }
    ControlCommand { thrust: f, torque: tau }
}

pub fn rotor_speed(thrust: f64, cfg: &VehicleConfig) -> f64 {
    (thrust / cfg.c_t).sqrt().clamp(cfg.omega_min, cfg.omega_max)
}

/// One semi-implicit Euler step under fixed rotor thrusts.
pub fn step_dynamics(state: &mut RigidState, thrusts: &[f64; 4], dt: f64, cfg: &VehicleConfig) {
    let w = wrench_of(thrusts, cfg);
    let rot = state.att.to_rotation_matrix();
    let acc = rot * Vec3::new(0.0, 0.0, w.thrust / cfg.mass) - Vec3::new(0.0, 0.0, cfg.gravity);
    state.vel += acc * dt;
    state.pos += state.vel * dt;

    let j = Vec3::new(cfg.inertia[0], cfg.inertia[1], cfg.inertia[2]);
    let jw = Vec3::new(j[0] * state.omega[0], j[1] * state.omega[1], j[2] * state.omega[2]);
    let wdot = (w.torque - state.omega.cross(&jw)).component_div(&j);
    state.omega += wdot * dt;
    state.att *= UnitQuaternion::from_scaled_axis(state.omega * dt);
}

/// Fly a reference trajectory closed-loop from `start`. Records land every
/// `record_dt` (an exact multiple of the control period); after the
/// reference ends the vehicle keeps station until the position error drops
/// inside the settle tolerance or the settle window runs out. Exceeding the
/// divergence threshold aborts immediately.
pub fn rollout(traj: &TimedTrajectory, start: &RigidState, cfg: &VehicleConfig) -> RolloutTrace {
    let ctrl_dt = 1.0 / cfg.control_rate_hz;
    let sub_dt = cfg.dynamics_dt();
    let steps_per_record = (cfg.record_dt / ctrl_dt).round() as usize;
    debug_assert!((steps_per_record as f64 * ctrl_dt - cfg.record_dt).abs() < 1e-12);

    let traj_records = traj.samples.len().saturating_sub(1);
    let traj_steps = traj_records * steps_per_record;
    let settle_records = (cfg.settle_max_s / cfg.record_dt).round() as usize;
    let max_steps = traj_steps + settle_records * steps_per_record;

    let mut state = *start;
    let mut samples = Vec::with_capacity(traj_records + settle_records + 1);
    let mut max_pos_err = 0.0f64;

    let mut k = 0usize;
    let outcome = loop {
        let t = k as f64 * ctrl_dt;
        let r = traj.reference_at(t);
        let cmd = geometric_control(&state, &r, cfg);
        let thrusts = allocate_rotor_thrusts(&cmd, cfg);
        let pos_err = (r.pos - state.pos).norm();
        max_pos_err = max_pos_err.max(pos_err);

        if k % steps_per_record == 0 {
            let rotor = [
                rotor_speed(thrusts[0], cfg),
                rotor_speed(thrusts[1], cfg),
                rotor_speed(thrusts[2], cfg),
                rotor_speed(thrusts[3], cfg),
            ];
            samples.push(TraceRecord {
                t,
                pos: state.pos,
                vel: state.vel,
                att: state.att,
                yaw: state.yaw(),
                rotor,
                pos_err,
            });
            if k >= traj_steps && (pos_err <= cfg.settle_pos_tol || k >= max_steps) {
                break RolloutOutcome::Completed { settled: pos_err <= cfg.settle_pos_tol };
            }
        }

        if pos_err > cfg.diverge_pos_err {
            break RolloutOutcome::Diverged { t, pos_err };
        }

        for _ in 0..cfg.substeps_per_control {
            step_dynamics(&mut state, &thrusts, sub_dt, cfg);
        }
        k += 1;
    };

    RolloutTrace {
        dt: cfg.record_dt,
        samples,
        outcome,
        max_pos_err,
    }
}

/// Vehicle state consistent with a trace record (used to seed the next
/// mission leg). Body rates are not recorded; they are ~zero at settle.
pub fn state_from_record(rec: &TraceRecord) -> RigidState {
    RigidState {
        pos: rec.pos,
        vel: rec.vel,
        att: rec.att,
        omega: Vec3::zeros(),
    }
}

/// Tabular trace export: `t,x,y,z,vx,vy,vz,yaw,w0,w1,w2,w3` per record.
pub fn write_trace_csv<W: Write>(trace: &RolloutTrace, w: &mut W) -> io::Result<()> {
    use crate::planning::fmt;
    writeln!(w, "t,x,y,z,vx,vy,vz,yaw,w0,w1,w2,w3")?;
    for s in &trace.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(s.t),
            fmt(s.pos[0]),
            fmt(s.pos[1]),
            fmt(s.pos[2]),
            fmt(s.vel[0]),
            fmt(s.vel[1]),
            fmt(s.vel[2]),
            fmt(s.yaw),
            fmt(s.rotor[0]),
            fmt(s.rotor[1]),
            fmt(s.rotor[2]),
            fmt(s.rotor[3])
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MissionConfig;
    use crate::planning::{time_parameterize, wrap_angle, PathPolyline};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> VehicleConfig {
        MissionConfig::default().vehicle
    }

    #[test]
    fn mixer_round_trips_unsaturated_commands() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let cmd = ControlCommand {
                thrust: rng.gen_range(4.0..12.0),
                torque: Vec3::new(
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.05..0.05),
                    rng.gen_range(-0.005..0.005),
                ),
            };
            let t = allocate_rotor_thrusts(&cmd, &cfg);
            let back = wrench_of(&t, &cfg);
            assert!((back.thrust - cmd.thrust).abs() < 1e-12, "thrust {back:?}");
            assert!((back.torque - cmd.torque).norm() < 1e-12, "torque {back:?}");
        }
    }

    #[test]
    fn mixer_saturation_prefers_collective_then_attitude() {
        let cfg = cfg();
        // absurd yaw torque request: realized yaw torque shrinks, thrust and
        // roll/pitch survive
        let cmd = ControlCommand { thrust: 8.0, torque: Vec3::new(0.02, -0.01, 50.0) };
        let t = allocate_rotor_thrusts(&cmd, &cfg);
        let back = wrench_of(&t, &cfg);
        assert!((back.thrust - 8.0).abs() < 1e-9);
        assert!((back.torque[0] - 0.02).abs() < 1e-9);
        assert!((back.torque[1] + 0.01).abs() < 1e-9);
        assert!(back.torque[2].abs() < 50.0 * 0.05);
        let t_min = cfg.c_t * cfg.omega_min * cfg.omega_min;
        let t_max = cfg.c_t * cfg.omega_max * cfg.omega_max;
        for ti in t {
            assert!((t_min - 1e-12..=t_max + 1e-12).contains(&ti));
        }
    }

    #[test]
    fn hover_rollout_holds_position_at_hover_speed() {
        let cfg = cfg();
        let pos = Point3::new(1.0, 2.0, 1.5);
        let traj = TimedTrajectory::hover(pos, 0.3, 10.0, 0.02);
        let start = RigidState::hovering(pos, 0.3);
        let trace = rollout(&traj, &start, &cfg);
        assert_eq!(trace.outcome, RolloutOutcome::Completed { settled: true });
        // 10 s on a 0.02 s grid: 501 records
        assert_eq!(trace.samples.len(), 501);
        assert!(trace.max_pos_err < 1e-6, "hover drift {}", trace.max_pos_err);
        let wh = cfg.hover_omega();
        for s in &trace.samples {
            for w in s.rotor {
                assert!((w - wh).abs() < 1e-6, "rotor speed {w} vs hover {wh}");
            }
        }
    }

    #[test]
    fn tracks_a_straight_line_within_tolerance() {
        let mc = MissionConfig::default();
        let path = PathPolyline {
            waypoints: vec![Point3::new(0.0, 0.0, 1.0), Point3::new(10.0, 0.0, 1.0)],
        };
        let traj = time_parameterize(&path, 0.0, 0.0, &mc.planner);
        let start = RigidState::hovering(Point3::new(0.0, 0.0, 1.0), 0.0);
        let trace = rollout(&traj, &start, &mc.vehicle);
        assert!(matches!(trace.outcome, RolloutOutcome::Completed { settled: true }));
        assert!(trace.max_pos_err < 0.5, "tracking error {}", trace.max_pos_err);
        let end = trace.samples.last().unwrap();
        assert!((end.pos - Point3::new(10.0, 0.0, 1.0)).norm() < mc.vehicle.settle_pos_tol);
        assert!(end.vel.norm() < 0.2);
        // grid stays uniform through the settle extension
        for (i, s) in trace.samples.iter().enumerate() {
            assert!((s.t - i as f64 * 0.02).abs() < 1e-12);
        }
        for s in &trace.samples {
            for w in s.rotor {
                assert!((mc.vehicle.omega_min..=mc.vehicle.omega_max).contains(&w));
            }
        }
    }

    #[test]
    fn yaw_turn_in_place_reaches_heading() {
        let mc = MissionConfig::default();
        let p = Point3::new(0.0, 0.0, 1.0);
        let path = PathPolyline { waypoints: vec![p, p] };
        let traj = time_parameterize(&path, 0.0, 2.0, &mc.planner);
        let trace = rollout(&traj, &RigidState::hovering(p, 0.0), &mc.vehicle);
        assert!(matches!(trace.outcome, RolloutOutcome::Completed { .. }));
        let end = trace.samples.last().unwrap();
        assert!(wrap_angle(end.yaw - 2.0).abs() < 0.05, "final yaw {}", end.yaw);
        assert!(trace.max_pos_err < 0.05);
    }

    #[test]
    fn unreasonable_reference_diverges() {
        let mc = MissionConfig::default();
        // teleporting reference: jumps 10 m instantly and stays
        let mut samples = Vec::new();
        for k in 0..=100 {
            samples.push(crate::planning::TrajSample {
                t: k as f64 * 0.02,
                pos: Point3::new(50.0, 0.0, 1.0),
                vel: Vec3::zeros(),
                acc: Vec3::zeros(),
                yaw: 0.0,
                yaw_rate: 0.0,
            });
        }
        let traj = TimedTrajectory { dt: 0.02, samples };
        let trace = rollout(&traj, &RigidState::hovering(Point3::new(0.0, 0.0, 1.0), 0.0), &mc.vehicle);
        assert!(matches!(trace.outcome, RolloutOutcome::Diverged { .. }));
    }

    #[test]
    fn semi_implicit_euler_matches_rk4_oracle_near_hover() {
        // same ZOH rotor commands, finer RK4 integration as ground truth
        let cfg = cfg();
        let mc = MissionConfig::default();
        let path = PathPolyline {
            waypoints: vec![Point3::new(0.0, 0.0, 1.0), Point3::new(2.0, 0.5, 1.2)],
        };
        let traj = time_parameterize(&path, 0.0, 0.5, &mc.planner);
        let start = RigidState::hovering(Point3::new(0.0, 0.0, 1.0), 0.0);

        // product integrator
        let trace = rollout(&traj, &start, &cfg);

        // oracle: identical control cadence, dynamics via RK4 at dt/4 on the
        // flat (position, velocity, rotation-vector) state
        let mut s = start;
        let ctrl_dt = 1.0 / cfg.control_rate_hz;
        let n_steps = ((traj.duration() / ctrl_dt).round() as usize).min(600);
        let mut worst = 0.0f64;
        for k in 0..n_steps {
            let t = k as f64 * ctrl_dt;
            let r = traj.reference_at(t);
            let cmd = geometric_control(&s, &r, &cfg);
            let thrusts = allocate_rotor_thrusts(&cmd, &cfg);
            let h = cfg.dynamics_dt() / 4.0;
            for _ in 0..cfg.substeps_per_control * 4 {
                s = rk4_step(&s, &thrusts, h, &cfg);
            }
            // compare against the product trace at record instants
            if (k + 1) % 6 == 0 {
                let rec_idx = (k + 1) / 6;
                if rec_idx < trace.samples.len() {
                    let d = (trace.samples[rec_idx].pos - s.pos).norm();
                    worst = worst.max(d);
                }
            }
        }
        assert!(worst < 5e-3, "integrator drift vs RK4 oracle: {worst}");
    }

    fn deriv(s: &RigidState, thrusts: &[f64; 4], cfg: &VehicleConfig) -> (Vec3, Vec3, Vec3, Vec3) {
        let w = wrench_of(thrusts, cfg);
        let rot = s.att.to_rotation_matrix();
        let acc = rot * Vec3::new(0.0, 0.0, w.thrust / cfg.mass) - Vec3::new(0.0, 0.0, cfg.gravity);
        let j = Vec3::new(cfg.inertia[0], cfg.inertia[1], cfg.inertia[2]);
        let jw = Vec3::new(j[0] * s.omega[0], j[1] * s.omega[1], j[2] * s.omega[2]);
        let wdot = (w.torque - s.omega.cross(&jw)).component_div(&j);
        (s.vel, acc, s.omega, wdot)
    }

    fn rk4_step(s0: &RigidState, thrusts: &[f64; 4], h: f64, cfg: &VehicleConfig) -> RigidState {
        // integrate attitude in a local rotation-vector chart around s0.att
        let advance = |dp: Vec3, dv: Vec3, dr: Vec3, dw: Vec3, dt: f64| RigidState {
            pos: s0.pos + dp * dt,
            vel: s0.vel + dv * dt,
            att: s0.att * UnitQuaternion::from_scaled_axis(dr * dt),
            omega: s0.omega + dw * dt,
        };
        let k1 = deriv(s0, thrusts, cfg);
        let s1 = advance(k1.0, k1.1, k1.2, k1.3, h / 2.0);
        let k2 = deriv(&s1, thrusts, cfg);
        let s2 = advance(k2.0, k2.1, k2.2, k2.3, h / 2.0);
        let k3 = deriv(&s2, thrusts, cfg);
        let s3 = advance(k3.0, k3.1, k3.2, k3.3, h);
        let k4 = deriv(&s3, thrusts, cfg);
        let dp = (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) / 6.0;
        let dv = (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) / 6.0;
        let dr = (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2) / 6.0;
        let dw = (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3) / 6.0;
        RigidState {
            pos: s0.pos + dp * h,
            vel: s0.vel + dv * h,
            att: s0.att * UnitQuaternion::from_scaled_axis(dr * h),
            omega: s0.omega + dw * h,
        }
    }

    #[test]
    fn trace_csv_has_expected_shape() {
        let cfg = cfg();
        let traj = TimedTrajectory::hover(Point3::new(0.0, 0.0, 1.0), 0.0, 0.2, 0.02);
        let trace = rollout(&traj, &RigidState::hovering(Point3::new(0.0, 0.0, 1.0), 0.0), &cfg);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z,vx,vy,vz,yaw,w0,w1,w2,w3");
        assert_eq!(lines.len(), 1 + trace.samples.len());
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first.len(), 12);
        assert_eq!(first[0], 0.0);
    }
}
