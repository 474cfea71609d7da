//! State spaces, metrics, interpolation and steering.
//!
//! Four state spaces are supported: a 2D point, a planar rigid body
//! (x, y, heading), a 3D point, and a planar three-link snake with five
//! degrees of freedom (base x, y, base heading, two joint angles).
//!
//! All functions here are pure over immutable values and safe to call from
//! any number of threads.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Weight applied to angular coordinates in the metric, in workspace units
/// per radian.
pub const DEFAULT_ANGULAR_WEIGHT: f64 = 1.0;

/// Snake joint limit: ±45 degrees.
pub const SNAKE_JOINT_LIMIT: f64 = PI / 4.0;

/// Which of the four supported state spaces a scenario lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// 2D point robot (d = 2).
    Point2D,
    /// Planar rigid body: x, y, heading (d = 3).
    RigidBody2D,
    /// 3D point robot (d = 3).
    Point3D,
    /// Planar 3-link snake: x, y, base heading, two joints (d = 5).
    Snake5Dof,
}

impl SpaceTag {
    /// Configuration-space dimension.
    pub fn dim(&self) -> usize {
        match self {
            SpaceTag::Point2D => 2,
            SpaceTag::RigidBody2D | SpaceTag::Point3D => 3,
            SpaceTag::Snake5Dof => 5,
        }
    }

    /// Dimension of the ambient workspace (2 or 3).
    pub fn ambient_dim(&self) -> usize {
        match self {
            SpaceTag::Point3D => 3,
            _ => 2,
        }
    }

    /// Short name used in files and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            SpaceTag::Point2D => "2d",
            SpaceTag::RigidBody2D => "rigid",
            SpaceTag::Point3D => "3d",
            SpaceTag::Snake5Dof => "snake",
        }
    }

    /// Parses the short name.
    pub fn parse(name: &str) -> Option<SpaceTag> {
        match name {
            "2d" => Some(SpaceTag::Point2D),
            "rigid" => Some(SpaceTag::RigidBody2D),
            "3d" => Some(SpaceTag::Point3D),
            "snake" => Some(SpaceTag::Snake5Dof),
            _ => None,
        }
    }
}

/// How a coordinate behaves under the metric, interpolation and steering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordKind {
    /// Plain Euclidean coordinate, clamped to bounds when steering.
    Translational,
    /// Angle on the circle, wrapped to [-pi, pi); distances use the
    /// shortest arc.
    AngleWrap,
    /// Angle restricted to a hard interval (snake joints); clamped, never
    /// wrapped.
    AngleClamp,
}

/// A configuration in one of the supported state spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State {
    pub coords: Vec<f64>,
}

impl State {
    pub fn new(coords: Vec<f64>) -> Self {
        State { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Translational prefix of the configuration (the workspace position).
    pub fn position(&self, ambient_dim: usize) -> &[f64] {
        &self.coords[..ambient_dim]
    }
}

impl From<Vec<f64>> for State {
    fn from(coords: Vec<f64>) -> Self {
        State { coords }
    }
}

/// Wraps an angle into [-pi, pi).
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on +pi for inputs like -pi - eps
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Signed shortest-arc difference a - b, in (-pi, pi].
pub fn shortest_arc(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// A state space: tag, per-coordinate bounds, and the angular metric weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    tag: SpaceTag,
    bounds: Vec<[f64; 2]>,
    angular_weight: f64,
}

impl StateSpace {
    /// Builds the state space for `tag` over the given ambient workspace
    /// bounds (one `[lo, hi]` pair per ambient dimension). Angular bounds
    /// are implied by the tag.
    ///
    /// Panics if the bounds are malformed (`lo >= hi`, wrong count).
    pub fn new(tag: SpaceTag, ambient_bounds: &[[f64; 2]]) -> Self {
        Self::with_angular_weight(tag, ambient_bounds, DEFAULT_ANGULAR_WEIGHT)
    }

    /// Same as [`StateSpace::new`] with an explicit angular metric weight.
    pub fn with_angular_weight(tag: SpaceTag, ambient_bounds: &[[f64; 2]], w_ang: f64) -> Self {
        assert_eq!(
            ambient_bounds.len(),
            tag.ambient_dim(),
            "expected {} ambient bounds for {:?}",
            tag.ambient_dim(),
            tag
        );
        for b in ambient_bounds {
            assert!(b[0] < b[1], "bound lo must be < hi, got {b:?}");
        }
        assert!(w_ang > 0.0, "angular weight must be positive");
        let mut bounds: Vec<[f64; 2]> = ambient_bounds.to_vec();
        match tag {
            SpaceTag::Point2D | SpaceTag::Point3D => {}
            SpaceTag::RigidBody2D => bounds.push([-PI, PI]),
            SpaceTag::Snake5Dof => {
                bounds.push([-PI, PI]);
                bounds.push([-SNAKE_JOINT_LIMIT, SNAKE_JOINT_LIMIT]);
                bounds.push([-SNAKE_JOINT_LIMIT, SNAKE_JOINT_LIMIT]);
            }
        }
        StateSpace {
            tag,
            bounds,
            angular_weight: w_ang,
        }
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.tag.ambient_dim()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    /// Ambient bounds only (the workspace box).
    pub fn ambient_bounds(&self) -> &[[f64; 2]] {
        &self.bounds[..self.tag.ambient_dim()]
    }

    pub fn angular_weight(&self) -> f64 {
        self.angular_weight
    }

    pub fn coord_kind(&self, i: usize) -> CoordKind {
        let amb = self.tag.ambient_dim();
        if i < amb {
            CoordKind::Translational
        } else if i == amb {
            // heading / base rotation
            CoordKind::AngleWrap
        } else {
            CoordKind::AngleClamp
        }
    }

    /// Diagonal length of the translational bounding box.
    pub fn translational_diagonal(&self) -> f64 {
        self.ambient_bounds()
            .iter()
            .map(|b| (b[1] - b[0]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// True iff every coordinate lies inside its bounds (angles in
    /// [-pi, pi)).
    pub fn contains(&self, s: &State) -> bool {
        if s.dim() != self.dim() {
            return false;
        }
        s.coords.iter().enumerate().all(|(i, &x)| {
            let [lo, hi] = self.bounds[i];
            match self.coord_kind(i) {
                CoordKind::AngleWrap => (lo..hi).contains(&x),
                _ => (lo..=hi).contains(&x),
            }
        })
    }

    fn assert_dims(&self, s: &State) {
        assert_eq!(
            s.dim(),
            self.dim(),
            "state dimension {} does not match space dimension {}",
            s.dim(),
            self.dim()
        );
    }

    /// Metric distance: Euclidean over translational coordinates, weighted
    /// shortest-arc over angular ones.
    pub fn distance(&self, a: &State, b: &State) -> f64 {
        self.assert_dims(a);
        self.assert_dims(b);
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = match self.coord_kind(i) {
                CoordKind::Translational => a.coords[i] - b.coords[i],
                CoordKind::AngleWrap | CoordKind::AngleClamp => {
                    self.angular_weight * shortest_arc(a.coords[i], b.coords[i])
                }
            };
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Linear interpolation on translational coordinates, shortest-arc on
    /// angular ones. Endpoints are returned exactly.
    pub fn interpolate(&self, a: &State, b: &State, t: f64) -> State {
        self.assert_dims(a);
        self.assert_dims(b);
        assert!((0.0..=1.0).contains(&t), "interpolation t={t} outside [0,1]");
        if t == 0.0 {
            return a.clone();
        }
        if t == 1.0 {
            return b.clone();
        }
        let coords = (0..self.dim())
            .map(|i| match self.coord_kind(i) {
                CoordKind::Translational | CoordKind::AngleClamp => {
                    a.coords[i] + (b.coords[i] - a.coords[i]) * t
                }
                CoordKind::AngleWrap => {
                    normalize_angle(a.coords[i] + shortest_arc(b.coords[i], a.coords[i]) * t)
                }
            })
            .collect();
        State::new(coords)
    }

    /// Moves from `from` toward `to` by at most `step` under the metric.
    /// The result is clamped/wrapped into bounds.
    pub fn steer(&self, from: &State, to: &State, step: f64) -> State {
        assert!(step > 0.0, "steer step must be positive");
        let d = self.distance(from, to);
        let mut out = if d <= step {
            to.clone()
        } else {
            self.interpolate(from, to, step / d)
        };
        self.clamp_into_bounds(&mut out);
        out
    }

    /// Clamps translational and joint coordinates to bounds and wraps the
    /// heading into [-pi, pi).
    pub fn clamp_into_bounds(&self, s: &mut State) {
        self.assert_dims(s);
        for i in 0..self.dim() {
            let [lo, hi] = self.bounds[i];
            match self.coord_kind(i) {
                CoordKind::Translational | CoordKind::AngleClamp => {
                    s.coords[i] = s.coords[i].clamp(lo, hi);
                }
                CoordKind::AngleWrap => {
                    s.coords[i] = normalize_angle(s.coords[i]);
                }
            }
        }
    }

    /// Affine map of each coordinate to [-1, 1] using the space bounds.
    ///
    /// Panics if the state is out of bounds.
    pub fn normalize_for_model(&self, s: &State) -> Vec<f64> {
        self.assert_dims(s);
        (0..self.dim())
            .map(|i| {
                let [lo, hi] = self.bounds[i];
                let x = s.coords[i];
                assert!(
                    x >= lo && x <= hi,
                    "coordinate {i}={x} outside bounds [{lo}, {hi}]"
                );
                2.0 * (x - lo) / (hi - lo) - 1.0
            })
            .collect()
    }

    /// Inverse of [`StateSpace::normalize_for_model`]; out-of-range inputs
    /// are clamped/wrapped back into bounds.
    pub fn denormalize_from_model(&self, v: &[f64]) -> State {
        assert_eq!(v.len(), self.dim(), "normalized vector has wrong length");
        let coords = (0..self.dim())
            .map(|i| {
                let [lo, hi] = self.bounds[i];
                lo + (v[i] + 1.0) * 0.5 * (hi - lo)
            })
            .collect();
        let mut s = State::new(coords);
        self.clamp_into_bounds(&mut s);
        s
    }

    /// Uniform random state within bounds.
    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> State {
        let coords = self
            .bounds
            .iter()
            .map(|&[lo, hi]| rng.random_range(lo..hi))
            .collect();
        State::new(coords)
    }
}
