//! Detector settings and setting grids.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

const ZERO_NORM: f64 = 1e-12;

/// A unit vector in R³: the direction along which a station measures spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    pub const X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `v` to unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < ZERO_NORM {
            return Err(Error::ZeroVector { norm });
        }
        Ok(Direction {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Unit vector in the x-y plane at `degrees` from the x axis.
    pub fn planar(degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        Direction { x: c, y: s, z: 0.0 }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Dot product with the componentwise absolute value of `other`.
    pub fn dot_abs(&self, other: &AbsVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn abs(&self) -> AbsVector {
        AbsVector {
            x: self.x.abs(),
            y: self.y.abs(),
            z: self.z.abs(),
        }
    }

    pub fn neg(&self) -> Direction {
        Direction {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Builds a direction from an arbitrary nonzero 3-vector.
pub fn make_direction(v: [f64; 3]) -> Result<Direction> {
    Direction::new(v[0], v[1], v[2])
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.z)
    }
}

/// Componentwise absolute value of a [`Direction`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl AbsVector {
    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &AbsVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// How a [`SettingGrid`] was built. Carried into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridDescriptor {
    Explicit,
    FibonacciSphere { count: usize },
    Axes,
    /// Signed axes, witness directions, then a Fibonacci sphere.
    Default { fibonacci: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingGrid {
    pub directions: Vec<Direction>,
    pub descriptor: GridDescriptor,
}

impl SettingGrid {
    pub fn explicit(directions: Vec<Direction>) -> Result<Self> {
        Self::with_descriptor(directions, GridDescriptor::Explicit)
    }

    fn with_descriptor(directions: Vec<Direction>, descriptor: GridDescriptor) -> Result<Self> {
        if directions.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 settings, got {}",
                directions.len()
            )));
        }
        for d in &directions {
            let norm2 = d.dot(d);
            if (norm2 - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidGrid(format!("{d} is not a unit vector")));
            }
        }
        Ok(SettingGrid {
            directions,
            descriptor,
        })
    }

    /// The six signed coordinate axes.
    pub fn axes() -> Self {
        Self::with_descriptor(signed_axes().to_vec(), GridDescriptor::Axes)
            .expect("axes are valid")
    }

    /// `count` points spread over the sphere along a golden-angle spiral.
    pub fn fibonacci(count: usize) -> Result<Self> {
        Self::with_descriptor(fibonacci_sphere(count), GridDescriptor::FibonacciSphere { count })
    }

    /// Signed axes, the four witness directions and a 16-point Fibonacci
    /// sphere: 26 directions in all.
    pub fn default_audit() -> Self {
        const FIB: usize = 16;
        let mut dirs = signed_axes().to_vec();
        dirs.extend(witness_directions());
        dirs.extend(fibonacci_sphere(FIB));
        Self::with_descriptor(dirs, GridDescriptor::Default { fibonacci: FIB })
            .expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Direction> {
        self.directions.iter()
    }
}

pub fn signed_axes() -> [Direction; 6] {
    [
        Direction::X,
        Direction::Y,
        Direction::Z,
        Direction::X.neg(),
        Direction::Y.neg(),
        Direction::Z.neg(),
    ]
}

/// Off-axis directions that hit the extremal CHSH and parameter-dependence
/// configurations: 45°, 135° and -45° in the x-y plane, and the body diagonal.
pub fn witness_directions() -> [Direction; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = 1.0 / 3f64.sqrt();
    [
        Direction { x: s, y: s, z: 0.0 },
        Direction { x: -s, y: s, z: 0.0 },
        Direction { x: s, y: -s, z: 0.0 },
        Direction { x: t, y: t, z: t },
    ]
}

/// A direction uniform on the sphere (Archimedes: z uniform, azimuth uniform).
pub fn uniform_direction(rng: &mut RngStream) -> Direction {
    let z = 2.0 * rng.uniform() - 1.0;
    let phi = std::f64::consts::TAU * rng.uniform();
    let r = (1.0 - z * z).max(0.0).sqrt();
    Direction {
        x: r * phi.cos(),
        y: r * phi.sin(),
        z,
    }
}

pub fn fibonacci_sphere(count: usize) -> Vec<Direction> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Direction::new(r * c, r * s, z).expect("spiral points are nonzero")
        })
        .collect()
}
