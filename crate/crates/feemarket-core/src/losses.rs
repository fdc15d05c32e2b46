//! Loss functions with their Fenchel conjugates and conjugate maximizers —
//! the supply side of the per-block dual function.
//!
//! Two kinds are supported. `target_box` is zero on `[0, b*]` and infinite
//! outside. `quadratic_overage` charges half the squared overshoot above the
//! target and is infinite outside `[0, b]`. Both are separable per resource,
//! so conjugates and maximizers have per-coordinate closed forms.

use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domain::{check_dim, DimensionMismatch, PriceVector, ResourceVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    TargetBox,
    QuadraticOverage,
}

/// Loss descriptor: kind plus utilization target `b*` and per-block cap `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub target: ResourceVector,
    pub limit: ResourceVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    Dimension(DimensionMismatch),
    /// target and limit disagree in length, or the target exceeds the limit.
    InvalidSpec(alloc::string::String),
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dimension(d) => write!(f, "{d}"),
            Self::InvalidSpec(msg) => write!(f, "invalid loss spec: {msg}"),
        }
    }
}

impl core::error::Error for LossError {}

impl From<DimensionMismatch> for LossError {
    fn from(d: DimensionMismatch) -> Self {
        Self::Dimension(d)
    }
}

impl LossSpec {
    pub fn target_box(target: ResourceVector, limit: ResourceVector) -> Result<Self, LossError> {
        let spec = Self {
            kind: LossKind::TargetBox,
            target,
            limit,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quadratic_overage(
        target: ResourceVector,
        limit: ResourceVector,
    ) -> Result<Self, LossError> {
        let spec = Self {
            kind: LossKind::QuadraticOverage,
            target,
            limit,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks `0 <= b* <= b` elementwise and matching dimensions.
    pub fn validate(&self) -> Result<(), LossError> {
        if self.target.len() != self.limit.len() {
            return Err(LossError::Dimension(DimensionMismatch {
                expected: self.limit.len(),
                got: self.target.len(),
            }));
        }
        for i in 0..self.target.len() {
            if self.target[i] > self.limit[i] {
                return Err(LossError::InvalidSpec(alloc::format!(
                    "target[{i}] = {} exceeds limit[{i}] = {}",
                    self.target[i],
                    self.limit[i]
                )));
            }
        }
        Ok(())
    }

    pub fn resources(&self) -> usize {
        self.target.len()
    }
}

/// Loss value at usage `y`; `+inf` encodes infeasible usage.
pub fn loss_eval(spec: &LossSpec, y: &ResourceVector) -> Result<f64, LossError> {
    check_dim(spec.resources(), y.len())?;
    match spec.kind {
        LossKind::TargetBox => {
            for i in 0..y.len() {
                if y[i] > spec.target[i] {
                    return Ok(f64::INFINITY);
                }
            }
            Ok(0.0)
        }
        LossKind::QuadraticOverage => {
            let mut total = 0.0;
            for i in 0..y.len() {
                if y[i] > spec.limit[i] {
                    return Ok(f64::INFINITY);
                }
                let over = (y[i] - spec.target[i]).max(0.0);
                total += 0.5 * over * over;
            }
            Ok(total)
        }
    }
}

/// Conjugate value `sup_y (p.y - loss(y))`, in closed form per coordinate.
pub fn conjugate_eval(spec: &LossSpec, p: &PriceVector) -> Result<f64, LossError> {
    check_dim(spec.resources(), p.len())?;
    let mut total = 0.0;
    for i in 0..p.len() {
        total += conjugate_coordinate(spec, i, p[i]).0;
    }
    Ok(total)
}

/// A maximizer of `p.y - loss(y)` with `0 <= y <= b`.
///
/// Tie-breaks: at `p_i = 0` the maximizer is the target `b*_i` (so zero-price
/// coordinates still supply the target, and the supply response is
/// right-continuous from above in price); at `p_i < 0` for the box loss the
/// unique maximizer is 0.
pub fn conjugate_argmax(spec: &LossSpec, p: &PriceVector) -> Result<ResourceVector, LossError> {
    check_dim(spec.resources(), p.len())?;
    let values: Vec<f64> = (0..p.len())
        .map(|i| conjugate_coordinate(spec, i, p[i]).1)
        .collect();
    Ok(ResourceVector::new(values).expect("argmax is within [0, b]"))
}

/// Per-coordinate (value, argmax) of the conjugate.
fn conjugate_coordinate(spec: &LossSpec, i: usize, p: f64) -> (f64, f64) {
    let target = spec.target[i];
    let limit = spec.limit[i];
    match spec.kind {
        LossKind::TargetBox => {
            if p > 0.0 {
                (p * target, target)
            } else if p == 0.0 {
                (0.0, target)
            } else {
                (0.0, 0.0)
            }
        }
        LossKind::QuadraticOverage => {
            if p > 0.0 {
                let headroom = limit - target;
                if p <= headroom {
                    // interior maximizer y = b* + p
                    (p * target + 0.5 * p * p, target + p)
                } else {
                    // clipped at the cap
                    (p * limit - 0.5 * headroom * headroom, limit)
                }
            } else if p == 0.0 {
                (0.0, target)
            } else {
                (0.0, 0.0)
            }
        }
    }
}
