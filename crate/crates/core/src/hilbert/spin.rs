use serde::{Deserialize, Serialize};

use super::projector::Projector;
use crate::{tolerance, Error, Result, C64};

/// Unit vector in three dimensions, a spin-measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction([f64; 3]);

impl Direction {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance::GEO {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(Self([x, y, z]))
    }

    /// Rescales any nonzero vector to unit length.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(Self([x / norm, y / norm, z / norm]))
    }

    /// Direction at `theta` radians from `z` in the x–z plane.
    pub fn in_xz_plane(theta: f64) -> Self {
        Self([theta.sin(), 0.0, theta.cos()])
    }

    pub const fn x() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub const fn y() -> Self {
        Self([0.0, 1.0, 0.0])
    }

    pub const fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Angle to `other` in radians.
    pub fn angle(&self, other: &Direction) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Direction::new(v[0], v[1], v[2])
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// A ±1 measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Row/column index in outcome tables: `+1 → 0`, `−1 → 1`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(Error::InvalidArgument(format!(
                "outcome must be ±1, got {v}"
            ))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Plus => f.write_str("+1"),
            Outcome::Minus => f.write_str("-1"),
        }
    }
}

/// Rank-1 projector `½(I + s a·σ)` on a spin-½ factor.
pub fn spin_projector(direction: &Direction, s: Outcome) -> Result<Projector> {
    let [x, y, z] = direction.0;
    Direction::new(x, y, z)?;
    let sign = s.value() as f64;
    // Columns of ½(I + s(xσx + yσy + zσz)).
    let col0 = [
        C64::new(0.5 * (1.0 + sign * z), 0.0),
        C64::new(0.5 * sign * x, 0.5 * sign * y),
    ];
    let col1 = [
        C64::new(0.5 * sign * x, -0.5 * sign * y),
        C64::new(0.5 * (1.0 - sign * z), 0.0),
    ];
    let n0: f64 = col0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let n1: f64 = col1.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let (col, n) = if n0 >= n1 { (col0, n0) } else { (col1, n1) };
    let v = vec![col[0] / n, col[1] / n];
    Projector::from_range_basis(vec![2], vec![v])
}
