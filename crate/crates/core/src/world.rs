//! Ground-truth scenes: a closed rectangular room populated with axis-aligned
//! box obstacles, plus exact ray casting against that geometry.
//!
//! Everything outside `bounds` is solid wall, so a ray fired from inside the
//! room always terminates (on an obstacle or on a wall) — "no hit" can only
//! mean "nothing within the query range".

use crate::{Point3, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Axis-aligned box, `min` strictly below `max` on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Strict interior test (boundary points excluded).
    pub fn contains_interior(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] > self.min[i] && p[i] < self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        Vec3::new(
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        )
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] < other.max[i] && self.max[i] > other.min[i])
    }

    /// Euclidean distance from `p` to the box surface; 0 inside.
    pub fn distance(&self, p: &Point3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let d = (self.min[i] - p[i]).max(p[i] - self.max[i]).max(0.0);
            d2 += d * d;
        }
        d2.sqrt()
    }
}

/// Start pose of the vehicle: hover position plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub position: [f64; 3],
    pub yaw: f64,
}

/// A benchmark scene. Parsed from / dumped to a TOML scenario file; see the
/// README for the schema and `Scenario::builtin` for the embedded scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Nominal thickness of the room shell; geometry treats everything
    /// outside `bounds` as solid regardless of this value.
    #[serde(default = "default_wall_thickness")]
    pub wall_thickness: f64,
    pub bounds: Aabb,
    pub start: StartPose,
    #[serde(default)]
    pub obstacles: Vec<Aabb>,
}

fn default_wall_thickness() -> f64 {
    0.2
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("unknown built-in scenario `{0}` (available: simple, pillars)")]
    UnknownBuiltin(String),
}

impl Scenario {
    /// Parse and validate a scenario from TOML text. Parse errors carry the
    /// offending line/column in their message.
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ScenarioError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Embedded scenes: `simple` (empty 20x20x2.5 m room) and `pillars`
    /// (22x22x2.5 m room with nine 0.6x0.6 m full-height pillars on a 6 m
    /// grid, offset so the start pose keeps clearance to the center pillar).
    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "simple" => Ok(Self {
                name: "simple".into(),
                wall_thickness: 0.2,
                bounds: Aabb::new([-10.0, -10.0, 0.0], [10.0, 10.0, 2.5]),
                start: StartPose {
                    position: [0.0, 0.0, 1.0],
                    yaw: 0.0,
                },
                obstacles: Vec::new(),
            }),
            "pillars" => {
                let mut obstacles = Vec::new();
                for &cx in &[-7.0, -1.0, 5.0] {
                    for &cy in &[-7.0, -1.0, 5.0] {
                        obstacles.push(Aabb::new([cx - 0.3, cy - 0.3, 0.0], [cx + 0.3, cy + 0.3, 2.5]));
                    }
                }
                Ok(Self {
                    name: "pillars".into(),
                    wall_thickness: 0.2,
                    bounds: Aabb::new([-11.0, -11.0, 0.0], [11.0, 11.0, 2.5]),
                    start: StartPose {
                        position: [0.0, 0.0, 1.0],
                        yaw: 0.0,
                    },
                    obstacles,
                })
            }
            other => Err(ScenarioError::UnknownBuiltin(other.into())),
        }
    }

    /// Resolve a CLI-style scenario argument: a built-in name or a file path.
    pub fn resolve(arg: &str) -> Result<Self, ScenarioError> {
        match Self::builtin(arg) {
            Ok(s) => Ok(s),
            Err(ScenarioError::UnknownBuiltin(_)) if std::path::Path::new(arg).exists() => {
                Self::from_file(std::path::Path::new(arg))
            }
            Err(e) => Err(e),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |reason: String| {
            Err(ScenarioError::Invalid {
                name: self.name.clone(),
                reason,
            })
        };
        for i in 0..3 {
            if !(self.bounds.min[i] < self.bounds.max[i]) {
                return fail(format!("bounds degenerate on axis {i}"));
            }
        }
        if !(self.wall_thickness > 0.0) {
            return fail("wall_thickness must be > 0".into());
        }
        for (idx, ob) in self.obstacles.iter().enumerate() {
            for i in 0..3 {
                if !(ob.min[i] < ob.max[i]) {
                    return fail(format!("obstacles[{idx}] degenerate on axis {i}"));
                }
            }
            if !ob.intersects(&self.bounds) {
                return fail(format!("obstacles[{idx}] lies outside bounds"));
            }
        }
        let start = Point3::new(self.start.position[0], self.start.position[1], self.start.position[2]);
        if !self.bounds.contains_interior(&start) {
            return fail("start.position not strictly inside bounds".into());
        }
        for (idx, ob) in self.obstacles.iter().enumerate() {
            if ob.contains(&start) {
                return fail(format!("start.position inside obstacles[{idx}]"));
            }
        }
        Ok(())
    }

    pub fn start_position(&self) -> Point3 {
        Point3::new(self.start.position[0], self.start.position[1], self.start.position[2])
    }

    /// True if `p` lies in solid material: inside an obstacle box or outside
    /// the room interior (i.e. in the wall shell).
    pub fn point_in_solid(&self, p: &Point3) -> bool {
        if !self.bounds.contains(p) {
            return true;
        }
        self.obstacles.iter().any(|ob| ob.contains(p))
    }

    /// Distance from an interior point to the nearest solid surface
    /// (obstacle faces and room walls). 0 if `p` is already in solid.
    pub fn clearance(&self, p: &Point3) -> f64 {
        if self.point_in_solid(p) {
            return 0.0;
        }
        let mut d = f64::INFINITY;
        for i in 0..3 {
            d = d.min(p[i] - self.bounds.min[i]).min(self.bounds.max[i] - p[i]);
        }
        for ob in &self.obstacles {
            d = d.min(ob.distance(p));
        }
        d.max(0.0)
    }

    /// Exact distance along `origin + t*dir` (unit `dir`) to the first solid
    /// surface, or `None` when nothing lies within `max_dist`. Origins inside
    /// solid return `Some(0.0)`.
    pub fn raycast(&self, origin: &Point3, dir: &Vec3, max_dist: f64) -> Option<f64> {
        debug_assert!((dir.norm() - 1.0).abs() < 1e-9, "raycast expects a unit direction");
        if self.point_in_solid(origin) {
            return Some(0.0);
        }
        // Walls: distance at which the ray exits the room interior.
        let mut t_hit = f64::INFINITY;
        for i in 0..3 {
            if dir[i] > 0.0 {
                t_hit = t_hit.min((self.bounds.max[i] - origin[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                t_hit = t_hit.min((self.bounds.min[i] - origin[i]) / dir[i]);
            }
        }
        // Obstacles: slab-method entry distance.
        for ob in &self.obstacles {
            let (mut t_near, mut t_far) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut miss = false;
            for i in 0..3 {
                if dir[i] == 0.0 {
                    if origin[i] < ob.min[i] || origin[i] > ob.max[i] {
                        miss = true;
                        break;
                    }
                } else {
                    let t1 = (ob.min[i] - origin[i]) / dir[i];
                    let t2 = (ob.max[i] - origin[i]) / dir[i];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
            }
            if !miss && t_near <= t_far && t_far >= 0.0 {
                t_hit = t_hit.min(t_near.max(0.0));
            }
        }
        (t_hit <= max_dist).then_some(t_hit)
    }
}
