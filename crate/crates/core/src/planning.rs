//! Kinodynamic-aware planning over the known map.
//!
//! `plan_path` runs 26-connected A* over known-free voxels kept `clearance`
//! away from occupied ones (unknown space is not traversable), then
//! shortcuts the grid path with greedy line-of-sight jumps.
//! `time_parameterize` turns the polyline into a uniformly sampled
//! trajectory: corners are rounded with circular blends, speed follows a
//! forward/backward-pass profile that respects `v_max`/`a_max` (full
//! tangential authority on straights, a 0.5·a_max lateral budget on blends,
//! so the sampled acceleration norm never exceeds `a_max`), and yaw
//! interpolates start→goal within the yaw-rate limit.
//!
//! The planner deliberately keeps known-free voxels near the start (centers
//! within `d_escape` of it) traversable even where clearance inflation would
//! carve them: the vehicle parks with tracking offsets beside surfaces its
//! arrival scan has only just revealed, and a re-plan from inside an
//! inflation band must not strand it. [`first_collision`] grants the same
//! escape ball, so a departure the planner accepts is not read as a
//! collision in flight.

use crate::config::PlannerConfig;
use crate::mapping::{VoxelKey, VoxelMap, VoxelState};
use crate::{Point3, Vec3};
use std::collections::BinaryHeap;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal is not reachable through known free space")]
    Unreachable,
}

/// Waypoint polyline from start to goal (both endpoints exact).
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    pub waypoints: Vec<Point3>,
}

impl PathPolyline {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// One trajectory sample on the uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajSample {
    pub t: f64,
    pub pos: Point3,
    pub vel: Vec3,
    pub acc: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
}

/// Uniformly sampled reference trajectory; starts and ends at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrajectory {
    pub dt: f64,
    pub samples: Vec<TrajSample>,
}

/// Interpolated reference state (between samples).
#[derive(Debug, Clone, Copy)]
pub struct RefState {
    pub pos: Point3,
    pub vel: Vec3,
    pub acc: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
}

impl TimedTrajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn end(&self) -> &TrajSample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Arc length of the sampled path.
    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].pos - w[0].pos).norm()).sum()
    }

    /// All-rest trajectory holding a pose (used for hover legs).
    pub fn hover(pos: Point3, yaw: f64, duration: f64, dt: f64) -> Self {
        let n = (duration / dt).round().max(1.0) as usize;
        let samples = (0..=n)
            .map(|k| TrajSample {
                t: k as f64 * dt,
                pos,
                vel: Vec3::zeros(),
                acc: Vec3::zeros(),
                yaw,
                yaw_rate: 0.0,
            })
            .collect();
        Self { dt, samples }
    }

    /// Linear interpolation between samples; clamps beyond either end.
    pub fn reference_at(&self, t: f64) -> RefState {
        let last = self.end();
        if t <= 0.0 {
            let s = &self.samples[0];
            return RefState { pos: s.pos, vel: s.vel, acc: s.acc, yaw: s.yaw, yaw_rate: s.yaw_rate };
        }
        if t >= last.t {
            return RefState { pos: last.pos, vel: Vec3::zeros(), acc: Vec3::zeros(), yaw: last.yaw, yaw_rate: 0.0 };
        }
        let i = ((t / self.dt).floor() as usize).min(self.samples.len() - 2);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let u = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        RefState {
            pos: a.pos + (b.pos - a.pos) * u,
            vel: a.vel + (b.vel - a.vel) * u,
            acc: a.acc,
            yaw: a.yaw + wrap_angle(b.yaw - a.yaw) * u,
            yaw_rate: a.yaw_rate,
        }
    }
}

/// Normalize an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

// ---------------------------------------------------------------------------
// Traversability grid

/// Snapshot of which voxels a path may cross: known free, at least
/// `clearance` from any occupied voxel (start-cell ring exempt from the
/// clearance part), plus a reachability mask flood-filled from the start.
pub struct TraversabilityGrid {
    dims: [usize; 3],
    traversable: Vec<bool>,
    reachable: Vec<bool>,
    start_cell: VoxelKey,
}

const NEIGHBORS26: [(i32, i32, i32); 26] = {
    let mut out = [(0, 0, 0); 26];
    let mut n = 0;
    let mut dx = -1;
    while dx <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dz = -1;
            while dz <= 1 {
                if dx != 0 || dy != 0 || dz != 0 {
                    out[n] = (dx, dy, dz);
                    n += 1;
                }
                dz += 1;
            }
            dy += 1;
        }
        dx += 1;
    }
    out
};

impl TraversabilityGrid {
    /// Build the mask set for one map snapshot. `start` must lie in a
    /// known-free voxel.
    pub fn build(map: &VoxelMap, start: &Point3, cfg: &PlannerConfig) -> Result<Self, PlanError> {
        let clearance = cfg.clearance;
        let dims = map.dims();
        let n = map.len();
        let res = map.resolution();
        let start_cell = map.key_at(start).ok_or(PlanError::Unreachable)?;

        // free mask, then carve out the inflation ball around occupied cells
        let mut traversable: Vec<bool> =
            (0..n).map(|i| map.classify_index(i) == VoxelState::Free).collect();
        let r_cells = (clearance / res).ceil() as i32;
        let mut ball = Vec::new();
        for dx in -r_cells..=r_cells {
            for dy in -r_cells..=r_cells {
                for dz in -r_cells..=r_cells {
                    let d2 = (dx * dx + dy * dy + dz * dz) as f64 * res * res;
                    if d2 <= clearance * clearance {
                        ball.push((dx, dy, dz));
                    }
                }
            }
        }
        for i in 0..n {
            if map.classify_index(i) != VoxelState::Occupied {
                continue;
            }
            let k = map.key_of_index(i);
            for &(dx, dy, dz) in &ball {
                let nk = VoxelKey::new(k.x + dx, k.y + dy, k.z + dz);
                if let Some(j) = map.index(nk) {
                    traversable[j] = false;
                }
            }
        }

        // escape ball: the parked vehicle may sit deep inside an inflation
        // band (it stops with tracking offsets beside surfaces its arrival
        // scan has only just revealed), and a too-small exemption strands it
        // on an island the flood fill cannot leave. Known-free cells whose
        // centers lie within d_escape of the start stay traversable; the
        // collision check exempts the same ball.
        let e_cells = (cfg.d_escape / res).ceil() as i32 + 1;
        for dx in -e_cells..=e_cells {
            for dy in -e_cells..=e_cells {
                for dz in -e_cells..=e_cells {
                    let k = VoxelKey::new(start_cell.x + dx, start_cell.y + dy, start_cell.z + dz);
                    if let Some(j) = map.index(k) {
                        if map.classify_index(j) == VoxelState::Free
                            && (map.center(k) - start).norm() <= cfg.d_escape
                        {
                            traversable[j] = true;
                        }
                    }
                }
            }
        }

        let start_idx = map.index(start_cell).ok_or(PlanError::Unreachable)?;
        if !traversable[start_idx] {
            return Err(PlanError::Unreachable); // start not in known free space
        }

        // flood fill reachability (26-connected)
        let mut reachable = vec![false; n];
        let mut stack = vec![start_idx];
        reachable[start_idx] = true;
        while let Some(i) = stack.pop() {
            let k = map.key_of_index(i);
            for &(dx, dy, dz) in &NEIGHBORS26 {
                let nk = VoxelKey::new(k.x + dx, k.y + dy, k.z + dz);
                if let Some(j) = map.index(nk) {
                    if traversable[j] && !reachable[j] {
                        reachable[j] = true;
                        stack.push(j);
                    }
                }
            }
        }

        Ok(Self {
            dims,
            traversable,
            reachable,
            start_cell,
        })
    }

    #[inline]
    fn idx(&self, k: VoxelKey) -> Option<usize> {
        (k.x >= 0
            && k.y >= 0
            && k.z >= 0
            && (k.x as usize) < self.dims[0]
            && (k.y as usize) < self.dims[1]
            && (k.z as usize) < self.dims[2])
            .then(|| (k.z as usize * self.dims[1] + k.y as usize) * self.dims[0] + k.x as usize)
    }

    pub fn is_traversable(&self, k: VoxelKey) -> bool {
        self.idx(k).is_some_and(|i| self.traversable[i])
    }

    pub fn is_reachable(&self, k: VoxelKey) -> bool {
        self.idx(k).is_some_and(|i| self.reachable[i])
    }
}

// ---------------------------------------------------------------------------
// A* + shortcut smoothing

#[derive(PartialEq)]
struct OpenNode {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for OpenNode {}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap by f, deterministic tie-break on g then index
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.idx.cmp(&self.idx))
    }
}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Plan a collision-free polyline from `start` to `goal` through known free
/// space, keeping `cfg.clearance` from occupied voxels. Convenience wrapper
/// that builds the traversability grid for a single query; batch callers
/// should build [`TraversabilityGrid`] once per map snapshot and use
/// [`plan_path_on`].
pub fn plan_path(
    map: &VoxelMap,
    start: &Point3,
    goal: &Point3,
    cfg: &PlannerConfig,
) -> Result<PathPolyline, PlanError> {
    let grid = TraversabilityGrid::build(map, start, cfg)?;
    plan_path_on(&grid, map, start, goal)
}

/// A* + shortcut smoothing over a prebuilt traversability grid. `start`
/// must be the position the grid was built for.
pub fn plan_path_on(
    grid: &TraversabilityGrid,
    map: &VoxelMap,
    start: &Point3,
    goal: &Point3,
) -> Result<PathPolyline, PlanError> {
    let start_cell = map.key_at(start).ok_or(PlanError::Unreachable)?;
    debug_assert_eq!(start_cell, grid.start_cell, "grid built for a different start");
    let goal_cell = map.key_at(goal).ok_or(PlanError::Unreachable)?;
    if !grid.is_reachable(goal_cell) {
        return Err(PlanError::Unreachable);
    }
    if start_cell == goal_cell {
        return Ok(PathPolyline { waypoints: vec![*start, *goal] });
    }

    let res = map.resolution();
    let n = map.len();
    let goal_idx = map.index(goal_cell).unwrap();
    let start_idx = map.index(start_cell).unwrap();
    let goal_center = map.center(goal_cell);

    let step_cost: Vec<f64> = NEIGHBORS26
        .iter()
        .map(|&(dx, dy, dz)| (((dx * dx + dy * dy + dz * dz) as f64).sqrt()) * res)
        .collect();

    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start_idx] = 0.0;
    open.push(OpenNode {
        f: (map.center(start_cell) - goal_center).norm(),
        g: 0.0,
        idx: start_idx,
    });

    while let Some(node) = open.pop() {
        if closed[node.idx] {
            continue;
        }
        closed[node.idx] = true;
        if node.idx == goal_idx {
            break;
        }
        let k = map.key_of_index(node.idx);
        for (off_i, &(dx, dy, dz)) in NEIGHBORS26.iter().enumerate() {
            let nk = VoxelKey::new(k.x + dx, k.y + dy, k.z + dz);
            let j = match map.index(nk) {
                Some(j) if grid.traversable[j] && !closed[j] => j,
                _ => continue,
            };
            let cand = g[node.idx] + step_cost[off_i];
            if cand < g[j] {
                g[j] = cand;
                parent[j] = node.idx;
                open.push(OpenNode {
                    f: cand + (map.center(nk) - goal_center).norm(),
                    g: cand,
                    idx: j,
                });
            }
        }
    }

    if !closed[goal_idx] {
        // reachability mask said yes, so this is impossible; be defensive
        return Err(PlanError::Unreachable);
    }

    let mut cells = vec![goal_idx];
    while *cells.last().unwrap() != start_idx {
        cells.push(parent[*cells.last().unwrap()]);
    }
    cells.reverse();

    // grid centers, exact endpoints
    let mut pts: Vec<Point3> = cells.iter().map(|&i| map.center(map.key_of_index(i))).collect();
    pts[0] = *start;
    *pts.last_mut().unwrap() = *goal;

    // greedy line-of-sight shortcutting
    let mut waypoints = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = pts.len() - 1;
        while j > i + 1 && !segment_traversable(grid, map, &pts[i], &pts[j]) {
            j -= 1;
        }
        waypoints.push(pts[j]);
        i = j;
    }

    Ok(PathPolyline { waypoints })
}

/// Exact line-of-sight on the traversability mask: a supercover 3-D voxel
/// walk visits every cell the segment touches, and a crossing within `eps`
/// of an edge or corner conservatively requires the grazed neighbor cells
/// too. Points on an approved segment therefore only ever quantize into
/// traversable cells — the property the collision predicate leans on.
fn segment_traversable(grid: &TraversabilityGrid, map: &VoxelMap, a: &Point3, b: &Point3) -> bool {
    let (Some(ka), Some(kb)) = (map.key_at(a), map.key_at(b)) else {
        return false;
    };
    if !grid.is_traversable(ka) || !grid.is_traversable(kb) {
        return false;
    }
    let d = b - a;
    let res = map.resolution();
    let origin = map.origin();
    let trav = |k: [i32; 3]| grid.is_traversable(VoxelKey::new(k[0], k[1], k[2]));

    let mut k = [ka.x, ka.y, ka.z];
    let kb = [kb.x, kb.y, kb.z];
    let mut step = [0i32; 3];
    let mut t_max = [f64::INFINITY; 3]; // segment fraction of next boundary
    let mut t_delta = [f64::INFINITY; 3];
    for ax in 0..3 {
        if d[ax].abs() < 1e-15 {
            continue;
        }
        step[ax] = if d[ax] > 0.0 { 1 } else { -1 };
        let lo = origin[ax] + k[ax] as f64 * res;
        let bound = if d[ax] > 0.0 { lo + res } else { lo };
        t_max[ax] = (bound - a[ax]) / d[ax];
        t_delta[ax] = res / d[ax].abs();
    }

    let eps = 1e-9;
    let mut guard =
        3 * ((kb[0] - k[0]).abs() + (kb[1] - k[1]).abs() + (kb[2] - k[2]).abs()) + 6;
    while k != kb {
        guard -= 1;
        if guard < 0 {
            return false; // numeric stall: treat as blocked
        }
        let m = t_max[0].min(t_max[1]).min(t_max[2]);
        if m > 1.0 + eps {
            break; // past the segment end; both endpoints already checked
        }
        let crossed: Vec<usize> = (0..3).filter(|&ax| t_max[ax] <= m + eps).collect();
        // a crossing shared by several axes grazes an edge/corner: every
        // cell adjacent to that crossing must be traversable
        for subset in 1..(1u8 << crossed.len()) {
            let mut kk = k;
            for (bit, &ax) in crossed.iter().enumerate() {
                if subset & (1 << bit) != 0 {
                    kk[ax] += step[ax];
                }
            }
            if !trav(kk) {
                return false;
            }
        }
        for &ax in &crossed {
            k[ax] += step[ax];
            t_max[ax] += t_delta[ax];
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Time parameterization

/// Piecewise line/arc curve parameterized by arc length.
struct Piece {
    s0: f64,
    len: f64,
    kind: PieceKind,
}

enum PieceKind {
    Line {
        a: Point3,
        dir: Vec3,
    },
    Arc {
        center: Point3,
        radius: f64,
        /// radial unit vector at the arc start
        e0: Vec3,
        /// tangent unit vector at the arc start
        f0: Vec3,
    },
}

impl Piece {
    fn curvature(&self) -> f64 {
        match &self.kind {
            PieceKind::Line { .. } => 0.0,
            PieceKind::Arc { radius, .. } => 1.0 / radius,
        }
    }

    /// Position, tangent and inward normal at local arc length `u`.
    fn eval(&self, u: f64) -> (Point3, Vec3, Vec3) {
        match &self.kind {
            PieceKind::Line { a, dir } => (a + dir * u, *dir, Vec3::zeros()),
            PieceKind::Arc { center, radius, e0, f0 } => {
                let phi = u / radius;
                let (s, c) = phi.sin_cos();
                let radial = e0 * c + f0 * s;
                let tangent = f0 * c - e0 * s;
                (center + radial * *radius, tangent, -radial)
            }
        }
    }
}

fn build_curve(path: &PathPolyline, r_blend_max: f64, clearance: f64) -> Vec<Piece> {
    let w = &path.waypoints;
    let mut keep: Vec<Point3> = vec![w[0]];
    for p in &w[1..] {
        if (p - keep.last().unwrap()).norm() > 1e-9 {
            keep.push(*p);
        }
    }
    if keep.len() < 2 {
        return Vec::new();
    }

    // per-corner blend radii; trim = r·tan(θ/2) must leave room on both
    // adjacent segments (each segment feeds at most two corners).
    let nseg = keep.len() - 1;
    let seg_len: Vec<f64> = (0..nseg).map(|i| (keep[i + 1] - keep[i]).norm()).collect();
    let mut trim = vec![0.0; keep.len()];
    let mut blend_r = vec![0.0; keep.len()];
    for k in 1..keep.len() - 1 {
        let u = (keep[k] - keep[k - 1]).normalize();
        let v = (keep[k + 1] - keep[k]).normalize();
        let cosang = u.dot(&v).clamp(-1.0, 1.0);
        let theta = cosang.acos();
        if theta < 1e-6 || theta > std::f64::consts::PI - 1e-3 {
            continue; // straight-through or full reversal: keep the sharp corner
        }
        let tan_half = (theta * 0.5).tan();
        // three caps: configured max, room on the adjacent segments, and a
        // bound on how far the arc may deviate from the checked polyline
        // (sagitta r·(1 − cos(θ/2)) kept within a quarter of the clearance)
        let r_len = 0.45 * seg_len[k - 1].min(seg_len[k]) / tan_half;
        let r_dev = 0.25 * clearance / (1.0 - (theta * 0.5).cos());
        let r = r_blend_max.min(r_len).min(r_dev);
        if r > 1e-4 {
            blend_r[k] = r;
            trim[k] = r * tan_half;
        }
    }

    let mut pieces: Vec<Piece> = Vec::new();
    let mut s0 = 0.0;
    let mut push = |kind: PieceKind, len: f64, s0: &mut f64| {
        if len > 1e-12 {
            pieces.push(Piece { s0: *s0, len, kind });
            *s0 += len;
        }
    };
    for i in 0..nseg {
        let dir = (keep[i + 1] - keep[i]) / seg_len[i];
        let a = keep[i] + dir * trim[i];
        let line_len = seg_len[i] - trim[i] - trim[i + 1];
        push(PieceKind::Line { a, dir }, line_len, &mut s0);
        // blend at the far corner of this segment
        let k = i + 1;
        if k < keep.len() - 1 && blend_r[k] > 0.0 {
            let u = dir;
            let v = (keep[k + 1] - keep[k]).normalize();
            let theta = u.dot(&v).clamp(-1.0, 1.0).acos();
            let r = blend_r[k];
            // fillet center sits on the interior bisector, r/cos(θ/2) out
            let center = keep[k] + (v - u).normalize() * (r / (theta * 0.5).cos());
            let p_in = keep[k] - u * trim[k];
            let e0 = (p_in - center).normalize();
            push(
                PieceKind::Arc { center, radius: r, e0, f0: u },
                r * theta,
                &mut s0,
            );
        }
    }
    pieces
}

/// Time-parameterize a polyline under the configured limits. The result
/// starts and ends at rest on a uniform `sample_dt` grid; yaw interpolates
/// from `start_yaw` to `end_yaw` over the whole duration, which is the
/// larger of the translation and yaw times. Corners are rounded with
/// fillets where `corner_radius_max` allows; any corner left sharp is
/// passed at rest.
pub fn time_parameterize(
    path: &PathPolyline,
    start_yaw: f64,
    end_yaw: f64,
    cfg: &PlannerConfig,
) -> TimedTrajectory {
    let pieces = build_curve(path, cfg.corner_radius_max, cfg.clearance);
    let total_len: f64 = pieces.iter().map(|p| p.len).sum();
    let dyaw = wrap_angle(end_yaw - start_yaw);
    let t_yaw = dyaw.abs() / cfg.yaw_rate_max;

    if total_len < 1e-9 {
        // yaw-only (or completely degenerate) move
        let p = path.waypoints[0];
        let n = (t_yaw / cfg.sample_dt).ceil().max(0.0) as usize;
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 * cfg.sample_dt;
                let done = if t_yaw <= 0.0 { 1.0 } else { (t / t_yaw).min(1.0) };
                TrajSample {
                    t,
                    pos: p,
                    vel: Vec3::zeros(),
                    acc: Vec3::zeros(),
                    yaw: if k == n { wrap_angle(start_yaw + dyaw) } else { wrap_angle(start_yaw + dyaw * done) },
                    yaw_rate: if t < t_yaw { dyaw.signum() * cfg.yaw_rate_max } else { 0.0 },
                }
            })
            .collect();
        return TimedTrajectory { dt: cfg.sample_dt, samples };
    }

    // knot grid along s, cut at piece boundaries, cells <= 5 cm, >= 2 per piece
    let mut knots: Vec<(f64, usize)> = Vec::new(); // (s, piece index)
    for (pi, piece) in pieces.iter().enumerate() {
        let cells = ((piece.len / 0.05).ceil() as usize).max(2);
        for c in 0..cells {
            knots.push((piece.s0 + piece.len * c as f64 / cells as f64, pi));
        }
    }
    knots.push((total_len, pieces.len() - 1));
    let m = knots.len();

    // speed caps and per-cell tangential budgets; a knot on a piece
    // boundary takes the stricter cap of both adjacent cells so arc cells
    // never ramp past their lateral budget
    let lat_budget = 0.5 * cfg.a_max;
    let piece_cap = |pi: usize| {
        let kappa = pieces[pi].curvature();
        if kappa > 0.0 {
            cfg.v_max.min((lat_budget / kappa).sqrt())
        } else {
            cfg.v_max
        }
    };
    let cap: Vec<f64> = (0..m)
        .map(|i| {
            let pi = knots[i].1;
            if i == 0 {
                return piece_cap(pi);
            }
            let prev = knots[i - 1].1;
            if pi != prev {
                // sharp (tangent-discontinuous) junction: the direction can
                // only change at rest; fillets are tangent-continuous and
                // keep their arc cap
                let (_, t_in, _) = pieces[prev].eval(pieces[prev].len);
                let (_, t_out, _) = pieces[pi].eval(0.0);
                if t_in.dot(&t_out) < 1.0 - 1e-6 {
                    return 0.0;
                }
            }
            piece_cap(pi).min(piece_cap(prev))
        })
        .collect();
    let a_tan = |pi: usize| {
        if pieces[pi].curvature() > 0.0 {
            cfg.a_max * (3.0f64).sqrt() * 0.5
        } else {
            cfg.a_max
        }
    };

    // forward/backward passes over v²
    let mut v2 = vec![0.0f64; m];
    for i in 1..m {
        let ds = knots[i].0 - knots[i - 1].0;
        let a = a_tan(knots[i - 1].1);
        v2[i] = (cap[i] * cap[i]).min(v2[i - 1] + 2.0 * a * ds);
    }
    v2[m - 1] = 0.0;
    for i in (0..m - 1).rev() {
        let ds = knots[i + 1].0 - knots[i].0;
        let a = a_tan(knots[i].1);
        v2[i] = v2[i].min(v2[i + 1] + 2.0 * a * ds);
    }

    // per-cell time integration (v² linear in s within a cell)
    let mut cell_t = vec![0.0f64; m]; // cumulative time at knot i
    for i in 1..m {
        let ds = knots[i].0 - knots[i - 1].0;
        let (va, vb) = (v2[i - 1].sqrt(), v2[i].sqrt());
        let dt = if (va + vb) > 1e-9 {
            2.0 * ds / (va + vb)
        } else {
            debug_assert!(ds < 1e-9, "profile stalled mid-path");
            0.0
        };
        cell_t[i] = cell_t[i - 1] + dt;
    }
    let t_trans = cell_t[m - 1];
    let total_t = t_trans.max(t_yaw);
    let n = (total_t / cfg.sample_dt - 1e-9).ceil().max(1.0) as usize;

    let eval_at = |s: f64| -> (Point3, Vec3, Vec3, f64) {
        let pi = pieces
            .iter()
            .position(|p| s <= p.s0 + p.len + 1e-9)
            .unwrap_or(pieces.len() - 1);
        let p = &pieces[pi];
        let (pos, tan, normal) = p.eval((s - p.s0).clamp(0.0, p.len));
        (pos, tan, normal, p.curvature())
    };

    let mut samples = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * cfg.sample_dt;
        let (pos, vel, acc) = if t >= t_trans || k == n {
            let (pos, _, _, _) = eval_at(total_len);
            (pos, Vec3::zeros(), Vec3::zeros())
        } else {
            // locate the profile cell containing t
            let i = match cell_t.binary_search_by(|x| x.total_cmp(&t)) {
                Ok(i) => i.min(m - 2),
                Err(i) => i.saturating_sub(1).min(m - 2),
            };
            let ds = knots[i + 1].0 - knots[i].0;
            let va = v2[i].sqrt();
            let a_cell = (v2[i + 1] - v2[i]) / (2.0 * ds).max(1e-12);
            let tau = t - cell_t[i];
            let v = va + a_cell * tau;
            let s = knots[i].0 + va * tau + 0.5 * a_cell * tau * tau;
            let (pos, tan, normal, kappa) = eval_at(s.min(total_len));
            let acc = tan * a_cell + normal * (v * v * kappa);
            (pos, tan * v, acc)
        };
        let yaw_done = if total_t <= 0.0 { 1.0 } else { (t / total_t).min(1.0) };
        samples.push(TrajSample {
            t,
            pos,
            vel,
            acc,
            yaw: wrap_angle(start_yaw + dyaw * yaw_done),
            yaw_rate: if t < total_t { dyaw / total_t } else { 0.0 },
        });
    }
    TimedTrajectory { dt: cfg.sample_dt, samples }
}

// ---------------------------------------------------------------------------
// Collision checking

/// First trajectory sample that conflicts with the (current) map: inside an
/// occupied voxel, inside a voxel that clearance inflation would carve (an
/// occupied voxel center within `cfg.clearance` of the sample's voxel
/// center — exactly the rule [`TraversabilityGrid`] plans with, so a path
/// through traversable cells is also clean here), or inside unknown space
/// while more than `cfg.d_grace` of path remains ahead of it. Samples whose
/// voxel center lies within `cfg.d_escape` of the trajectory start are
/// exempt from the proximity and unknown tests (never from the
/// occupied-voxel test): the vehicle parks with tracking offsets beside
/// surfaces it has only just discovered, and departing such a spot must not
/// read as a collision. Returns the sample index and its time.
pub fn first_collision(
    traj: &TimedTrajectory,
    map: &VoxelMap,
    cfg: &PlannerConfig,
) -> Option<(usize, f64)> {
    first_collision_in(traj, map, cfg, 0, traj.samples.len())
}

/// Windowed variant of [`first_collision`] scanning sample indices
/// `[from, to)`. The escape ball stays anchored at sample 0, so a window
/// over a partially flown trajectory judges each sample exactly as the
/// full-trajectory check did.
pub fn first_collision_in(
    traj: &TimedTrajectory,
    map: &VoxelMap,
    cfg: &PlannerConfig,
    from: usize,
    to: usize,
) -> Option<(usize, f64)> {
    let n = traj.samples.len();
    let to = to.min(n);
    if from >= to {
        return None;
    }
    // remaining path length at each sample, for the end-of-path grace rule
    let mut remaining = vec![0.0; n];
    for i in (0..n - 1).rev() {
        remaining[i] = remaining[i + 1] + (traj.samples[i + 1].pos - traj.samples[i].pos).norm();
    }
    let start = traj.samples[0].pos;
    for i in from..to {
        let s = &traj.samples[i];
        let Some(cell) = map.key_at(&s.pos) else {
            // outside the workspace counts as unknown space
            if (s.pos - start).norm() > cfg.d_escape && remaining[i] > cfg.d_grace {
                return Some((i, s.t));
            }
            continue;
        };
        let center = map.center(cell);
        let escaping = (center - start).norm() <= cfg.d_escape;
        match map.classify(cell) {
            VoxelState::Occupied => return Some((i, s.t)),
            VoxelState::Unknown if !escaping && remaining[i] > cfg.d_grace => {
                return Some((i, s.t));
            }
            _ => {}
        }
        if !escaping && map.occupied_within(&center, cfg.clearance) {
            return Some((i, s.t));
        }
    }
    None
}

/// Tabular trajectory export: `t,x,y,z,vx,vy,vz,ax,ay,az,yaw` per sample.
pub fn write_trajectory_csv<W: Write>(traj: &TimedTrajectory, w: &mut W) -> io::Result<()> {
    writeln!(w, "t,x,y,z,vx,vy,vz,ax,ay,az,yaw")?;
    for s in &traj.samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt(s.t),
            fmt(s.pos[0]),
            fmt(s.pos[1]),
            fmt(s.pos[2]),
            fmt(s.vel[0]),
            fmt(s.vel[1]),
            fmt(s.vel[2]),
            fmt(s.acc[0]),
            fmt(s.acc[1]),
            fmt(s.acc[2]),
            fmt(s.yaw)
        )?;
    }
    Ok(())
}

/// Float formatting used across all text outputs: 17 significant digits,
/// enough for exact f64 round-trips.
pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}
