//! Affine change of variable from `[x₀, x_N]` to `[0, 1]`.
//!
//! With `x = m·x̃ + x₀` (and `t` mapped the same way) a first-order problem
//! becomes `ỹ′ = m·f(x, ỹ) + ∫₀^x̃ m²·K(x, ỹ, t) dt̃` with `ỹ(0) = y(x₀)`.
//! Kernels that read `y′` see `ỹ′/m`.

use thiserror::Error;

use crate::problem::{Args, Evaluator, ExactSolution, KernelForm, ProblemSpec};
use crate::solver::Solution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("interval transformation supports first-order problems only (order {0})")]
    UnsupportedOrder(usize),
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("x = {x} lies outside [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

/// `x = scale·x̃ + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalMap {
    pub scale: f64,
    pub offset: f64,
}

impl IntervalMap {
    pub fn new(interval: (f64, f64)) -> Result<Self, TransformError> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(TransformError::BadInterval(a, b));
        }
        Ok(Self {
            scale: b - a,
            offset: a,
        })
    }

    #[inline]
    pub fn forward(&self, unit: f64) -> f64 {
        self.scale * unit + self.offset
    }

    #[inline]
    pub fn inverse(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.offset == 0.0
    }
}

fn wrap(e: &Evaluator, map: IntervalMap, factor: f64) -> Evaluator {
    let inner = e.clone();
    let m = map.scale;
    let reads_dy = e.uses_derivative();
    let out = Evaluator::from_fn(move |a: &Args<'_>| {
        let x = map.forward(a.x);
        let t = map.forward(a.t);
        let v = if reads_dy {
            let dy: Vec<f64> = a.dy.iter().map(|v| v / m).collect();
            inner.eval(&Args {
                x,
                t,
                y: a.y,
                dy: &dy,
            })?
        } else {
            inner.eval(&Args {
                x,
                t,
                y: a.y,
                dy: a.dy,
            })?
        };
        Ok(factor * v)
    });
    if reads_dy {
        out.reading_derivative()
    } else {
        out
    }
}

/// Restates a first-order problem on `[0, 1]`. Evaluators are wrapped, not
/// rewritten, so programmatic problems work too; initial values are copied
/// unchanged. An identity map returns the problem as is.
pub fn to_unit(spec: &ProblemSpec) -> Result<(ProblemSpec, IntervalMap), TransformError> {
    if spec.order != 1 {
        return Err(TransformError::UnsupportedOrder(spec.order));
    }
    let map = IntervalMap::new(spec.interval)?;
    if map.is_identity() {
        return Ok((spec.clone(), map));
    }
    let m = map.scale;
    let f = spec.f.iter().map(|e| wrap(e, map, m)).collect();
    let kernel = spec
        .kernel
        .iter()
        .map(|k| match k {
            KernelForm::Xt(e) => KernelForm::Xt(wrap(e, map, m * m)),
            KernelForm::Yt(e) => KernelForm::Yt(wrap(e, map, m * m)),
            KernelForm::Dyt(e) => KernelForm::Dyt(wrap(e, map, m * m)),
            KernelForm::System(e) => KernelForm::System(wrap(e, map, m * m)),
            KernelForm::Separable { k1, k2 } => KernelForm::Separable {
                k1: wrap(k1, map, m),
                k2: wrap(k2, map, m),
            },
        })
        .collect();
    let exact = spec.exact.as_ref().map(|ex| ExactSolution {
        components: ex.components.iter().map(|e| wrap(e, map, 1.0)).collect(),
        kind: ex.kind,
    });
    let unit = ProblemSpec {
        order: 1,
        dim: spec.dim,
        f,
        kernel,
        interval: (0.0, 1.0),
        initial: spec.initial.clone(),
        exact,
    };
    Ok((unit, map))
}

/// A unit-interval solution viewed in the original variable.
#[derive(Debug, Clone)]
pub struct MappedSolution {
    pub map: IntervalMap,
    pub unit: Solution,
}

/// Wraps `unit` so it can be queried at physical `x`.
pub fn map_back(unit: Solution, map: IntervalMap) -> MappedSolution {
    MappedSolution { map, unit }
}

impl MappedSolution {
    /// Physical node positions.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.unit.grid.nodes().map(|u| self.map.forward(u))
    }

    /// Solution at physical `x`; linear interpolation between nodes.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>, TransformError> {
        let lo = self.map.offset;
        let hi = self.map.forward(1.0);
        let slack = 1e-12 * self.map.scale;
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(TransformError::OutOfRange { x, lo, hi });
        }
        let grid = &self.unit.grid;
        let pos = ((self.map.inverse(x) - grid.x0) / grid.h).clamp(0.0, grid.steps as f64);
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return Ok(self.unit.state(nearest as usize));
        }
        let i = (pos.floor() as usize).min(grid.steps - 1);
        let w = pos - i as f64;
        Ok(self
            .unit
            .values
            .iter()
            .map(|row| (1.0 - w) * row[i] + w * row[i + 1])
            .collect())
    }
}
