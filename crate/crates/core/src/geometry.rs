//! Planar geometry shared by the motion model, guidance and the MPC path.

use nalgebra::{Point2, Vector2};

/// Below this turn angle an arc is treated as a straight segment.
pub const STRAIGHT_TURN_EPS: f64 = 1e-9;

/// Advances along a constant-curvature arc.
///
/// `turn` is the total heading change over the arc and `length` its arc
/// length. Returns the end point and end heading. Exact for any turn, so
/// splitting an arc in two and composing gives the same end state.
pub fn arc_advance(p: Point2<f64>, heading: f64, turn: f64, length: f64) -> (Point2<f64>, f64) {
    let half = 0.5 * turn;
    let chord = if half.abs() < STRAIGHT_TURN_EPS {
        length
    } else {
        length * half.sin() / half
    };
    let dir = heading + half;
    (
        p + Vector2::new(dir.cos(), dir.sin()) * chord,
        heading + turn,
    )
}

/// Left-pointing unit normal of a heading.
pub fn left_normal(heading: f64) -> Vector2<f64> {
    Vector2::new(-heading.sin(), heading.cos())
}

pub fn heading_vector(heading: f64) -> Vector2<f64> {
    Vector2::new(heading.cos(), heading.sin())
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

pub fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn point_segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point2<f64>,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Point2<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Boundary-to-boundary gap; negative when the disks overlap.
    pub fn gap(&self, other: &Circle) -> f64 {
        (self.center - other.center).norm() - self.radius - other.radius
    }

    pub fn contains_circle(&self, inner: &Circle, tol: f64) -> bool {
        (self.center - inner.center).norm() + inner.radius <= self.radius + tol
    }
}

/// Turn side. `Left` is counterclockwise (positive yaw rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Side matching the sign of a yaw rate; zero resolves to `Left`.
    pub fn of_rate(omega: f64) -> Side {
        if omega < 0.0 {
            Side::Right
        } else {
            Side::Left
        }
    }
}
