use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `|y|` at which anything is differentiated.
pub const SLIT_GUARD: f64 = 1e-6;

/// A point `(x, y)` of the slit tangent bundle in one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl BasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<BasePoint> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        check_dimension(x.len())?;
        let p = BasePoint { x, y };
        p.check_slit()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn y_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn check_slit(&self) -> Result<()> {
        let norm = self.y_norm();
        if norm < SLIT_GUARD || !norm.is_finite() {
            return Err(Error::SlitBundle {
                norm,
                guard: SLIT_GUARD,
            });
        }
        Ok(())
    }

    /// Same base point, fiber coordinates scaled by `lambda`.
    pub fn scaled(&self, lambda: f64) -> BasePoint {
        BasePoint {
            x: self.x.clone(),
            y: self.y.iter().map(|v| v * lambda).collect(),
        }
    }
}

pub fn check_dimension(m: usize) -> Result<()> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::InvalidDimension(m));
    }
    Ok(())
}

/// Components in the natural frame `{∂/∂x^i}` of a fiber of `π*TM`.
pub type FiberVector = Vec<f64>;

/// A tangent vector to `TM₀`: `a` along `∂/∂x`, `b` along `∂/∂y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleTangentVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}
