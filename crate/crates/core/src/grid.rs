//! Tensor-product boxes used for residual scans and midpoint quadrature.

use crate::tensor::Vec4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("axis {axis}: upper bound {upper} must exceed lower bound {lower}")]
    EmptyAxis { axis: usize, lower: f64, upper: f64 },
    #[error("need at least 2 points per axis, got {0}")]
    TooFewPoints(usize),
}

/// Box `[lower, upper]` sampled at `points` cell midpoints per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Vec4,
    upper: Vec4,
    points: usize,
}

pub const DEFAULT_POINTS: usize = 16;

impl GridSpec {
    pub fn new(lower: Vec4, upper: Vec4, points: usize) -> Result<Self, GridError> {
        for axis in 0..4 {
            if !(upper[axis] > lower[axis]) {
                return Err(GridError::EmptyAxis { axis, lower: lower[axis], upper: upper[axis] });
            }
        }
        if points < 2 {
            return Err(GridError::TooFewPoints(points));
        }
        Ok(GridSpec { lower, upper, points })
    }

    pub fn lower(&self) -> Vec4 {
        self.lower
    }

    pub fn upper(&self) -> Vec4 {
        self.upper
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(4)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..4).map(|a| self.step(a)).product()
    }

    /// Midpoint of cell `i`, with `x3` varying fastest.
    pub fn point(&self, i: usize) -> Vec4 {
        let n = self.points;
        let idx = [i / (n * n * n), (i / (n * n)) % n, (i / n) % n, i % n];
        std::array::from_fn(|a| self.lower[a] + (idx[a] as f64 + 0.5) * self.step(a))
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec4> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Same box at a different resolution.
    pub fn with_points(&self, points: usize) -> Result<Self, GridError> {
        GridSpec::new(self.lower, self.upper, points)
    }
}
