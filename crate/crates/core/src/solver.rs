//! Explicit Euler stepping with composite-trapezium kernel quadrature.
//!
//! For `n = 1` each step is
//!
//! ```text
//! y[i+1] = y[i] + h·f(x[i], y[i]) + h·I[i],
//! I[i]   = (h/2)·(2·Σ_{j=0..i} K[j] − K[0] − K[i])
//! ```
//!
//! where `I[i]` approximates the integral over `[x₀, x[i]]` using the solution
//! nodes themselves as quadrature nodes (`I[0] = 0`). Orders 2 and 3 are
//! reduced to first-order systems in `(y, w)` or `(y, w, z)`; only the highest
//! row carries `f` and the integral. Kernels that do not depend on `x` are
//! integrated with an O(1) running sum per step; separable kernels hoist
//! `K₁(x)` out of the sum. Generic `K(x, t)` kernels are resummed every step.

use std::fmt;

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{Args, KernelForm, ProblemSpec};
use crate::sum::CompensatedSum;

/// Equispaced nodes `x[i] = x0 + i·h`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub h: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(interval: (f64, f64), steps: usize) -> Result<Grid, SolveError> {
        if steps == 0 {
            return Err(SolveError::NoSteps);
        }
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SolveError::Invalid(vec![format!(
                "empty interval [{a}, {b}]"
            )]));
        }
        Ok(Grid {
            x0: a,
            h: (b - a) / steps as f64,
            steps,
        })
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.node(self.steps)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.node(i))
    }

    /// Grid with `2^k` times as many steps. Node `2^k·i` of the result is
    /// bit-identical to node `i` of `self`.
    pub fn refined(&self, k: u32) -> Grid {
        let factor = 1usize << k;
        Grid {
            x0: self.x0,
            h: self.h / factor as f64,
            steps: self.steps * factor,
        }
    }
}

/// Which evaluator failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    F(usize),
    Kernel(usize),
    K1(usize),
    K2(usize),
    State(usize),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::F(c) => write!(f, "f.{}", c + 1),
            Role::Kernel(c) => write!(f, "kernel.{}.K", c + 1),
            Role::K1(c) => write!(f, "kernel.{}.K1", c + 1),
            Role::K2(c) => write!(f, "kernel.{}.K2", c + 1),
            Role::State(c) => write!(f, "solution component {}", c + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("number of steps must be at least 1")]
    NoSteps,
    #[error("invalid problem: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{role} failed at node {node} (x = {x}): {source}")]
    Domain {
        node: usize,
        x: f64,
        role: Role,
        source: EvalError,
    },
    #[error("non-finite value from {role} at node {node} (x = {x})")]
    NonFinite { node: usize, x: f64, role: Role },
}

/// Node values produced by [`solve_grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    /// One row per solution component, `steps + 1` entries each.
    pub y: Vec<Vec<f64>>,
    /// Reduced-system rows: `w` for every component, then `z` (order 3).
    pub aux: Vec<Vec<f64>>,
    /// Discrete derivatives, kept only when some kernel reads them.
    pub dy: Option<Vec<Vec<f64>>>,
    /// Quadrature value `I[i]` used at every node, one row per equation.
    pub integrals: Vec<Vec<f64>>,
    dy0: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// State vector at node `i`.
    pub fn state(&self, i: usize) -> Vec<f64> {
        self.y.iter().map(|row| row[i]).collect()
    }

    pub fn to_solution(&self) -> Solution {
        Solution {
            grid: self.grid,
            values: self.y.clone(),
        }
    }
}

/// Solution values on a grid, one row per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub grid: Grid,
    pub values: Vec<Vec<f64>>,
}

impl Solution {
    pub fn state(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }
}

/// `(y[j] − y[j−1])/h` for `j ≥ 1`. At `j = 0` this is `f(x₀, y₀)` for
/// first-order problems and the supplied `y′(x₀)` otherwise.
pub fn discrete_derivative(trajectory: &Trajectory, j: usize, component: usize) -> Option<f64> {
    let row = trajectory.y.get(component)?;
    match j {
        0 => trajectory.dy0.get(component).copied(),
        _ if j < row.len() => Some((row[j] - row[j - 1]) / trajectory.grid.h),
        _ => None,
    }
}

/// Running sum of kernel samples `K[0..=i]`.
#[derive(Debug, Clone, Default)]
pub struct RunningTrapezium {
    sum: CompensatedSum,
    first: f64,
    last: f64,
    count: usize,
}

impl RunningTrapezium {
    pub fn push(&mut self, sample: f64) {
        if self.count == 0 {
            self.first = sample;
        }
        self.last = sample;
        self.sum.add(sample);
        self.count += 1;
    }

    /// Composite trapezium value over the samples pushed so far.
    pub fn value(&self, h: f64) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        0.5 * h * (2.0 * self.sum.value() - self.first - self.last)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPart {
    K,
    K1,
    K2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureError {
    /// Node at which the kernel was being evaluated.
    pub node: usize,
    pub part: KernelPart,
    pub source: EvalError,
}

/// Integral state for one equation of a problem.
#[derive(Debug, Clone)]
pub struct KernelQuadrature<'k> {
    kernel: &'k KernelForm,
    running: RunningTrapezium,
    next: usize,
}

impl<'k> KernelQuadrature<'k> {
    pub fn new(kernel: &'k KernelForm) -> Self {
        Self {
            kernel,
            running: RunningTrapezium::default(),
            next: 0,
        }
    }

    /// Trapezium approximation of `∫_{x₀}^{x[i]} K dt`. Must be called for
    /// `i = 0, 1, 2, …` in order; `args` carries node `i`'s state.
    pub fn advance(
        &mut self,
        grid: &Grid,
        i: usize,
        args: &Args<'_>,
    ) -> Result<f64, QuadratureError> {
        assert_eq!(i, self.next, "quadrature nodes must be visited in order");
        self.next += 1;
        let err = |node, part| move |source| QuadratureError { node, part, source };
        match self.kernel {
            KernelForm::Xt(k) => {
                if i == 0 {
                    return Ok(0.0);
                }
                let x = grid.node(i);
                let mut run = RunningTrapezium::default();
                for j in 0..=i {
                    let at = Args {
                        x,
                        t: grid.node(j),
                        y: &[],
                        dy: &[],
                    };
                    run.push(k.eval(&at).map_err(err(j, KernelPart::K))?);
                }
                Ok(run.value(grid.h))
            }
            KernelForm::Yt(k) | KernelForm::Dyt(k) | KernelForm::System(k) => {
                self.running
                    .push(k.eval(args).map_err(err(i, KernelPart::K))?);
                Ok(self.running.value(grid.h))
            }
            KernelForm::Separable { k1, k2 } => {
                self.running
                    .push(k2.eval(args).map_err(err(i, KernelPart::K2))?);
                if i == 0 {
                    return Ok(0.0);
                }
                let outer = k1.eval(args).map_err(err(i, KernelPart::K1))?;
                Ok(outer * self.running.value(grid.h))
            }
        }
    }
}

/// Integrates `spec` over its interval with `steps` equal steps.
pub fn solve_grid(spec: &ProblemSpec, steps: usize) -> Result<Trajectory, SolveError> {
    let report = spec.validate();
    if !report.is_ok() {
        return Err(SolveError::Invalid(report.errors));
    }
    let grid = Grid::new(spec.interval, steps)?;
    let h = grid.h;
    let d = spec.dim;
    let n = spec.order;
    let len = steps + 1;
    let need_dy = spec.uses_derivative();

    let rows = |count: usize| vec![Vec::with_capacity(len); count];
    let mut y = rows(d);
    let mut aux = rows((n - 1) * d);
    let mut dy_rows = need_dy.then(|| rows(d));
    let mut integrals = rows(d);

    let mut acc: Vec<CompensatedSum> = spec
        .initial
        .iter()
        .map(|&v| CompensatedSum::new(v))
        .collect();
    let mut quads: Vec<KernelQuadrature<'_>> =
        spec.kernel.iter().map(KernelQuadrature::new).collect();
    let mut cur = vec![0.0; n * d];
    let mut prev = vec![0.0; d];
    let mut dy = vec![0.0; d];
    let mut dy0 = vec![0.0; d];
    let mut fvals = vec![0.0; d];
    let mut ivals = vec![0.0; d];

    for i in 0..=steps {
        let x = grid.node(i);
        for (r, a) in acc.iter().enumerate() {
            let v = a.value();
            if !v.is_finite() {
                return Err(SolveError::NonFinite {
                    node: i,
                    x,
                    role: Role::State(r % d),
                });
            }
            cur[r] = v;
        }
        for c in 0..d {
            y[c].push(cur[c]);
        }
        for (r, row) in aux.iter_mut().enumerate() {
            row.push(cur[d + r]);
        }
        let state = &cur[..d];

        if i < steps {
            let args = Args {
                x,
                t: x,
                y: state,
                dy: &[],
            };
            for (c, f) in spec.f.iter().enumerate() {
                let v = f.eval(&args).map_err(|source| SolveError::Domain {
                    node: i,
                    x,
                    role: Role::F(c),
                    source,
                })?;
                if !v.is_finite() {
                    return Err(SolveError::NonFinite {
                        node: i,
                        x,
                        role: Role::F(c),
                    });
                }
                fvals[c] = v;
            }
        }
        if i == 0 {
            dy0.copy_from_slice(if n == 1 { &fvals } else { &cur[d..2 * d] });
        }
        if let Some(rows) = dy_rows.as_mut() {
            for c in 0..d {
                dy[c] = if i == 0 {
                    dy0[c]
                } else {
                    (state[c] - prev[c]) / h
                };
                rows[c].push(dy[c]);
            }
        }

        let args = Args {
            x,
            t: x,
            y: state,
            dy: &dy,
        };
        for (c, q) in quads.iter_mut().enumerate() {
            let v = q.advance(&grid, i, &args).map_err(|e| SolveError::Domain {
                node: e.node,
                x: grid.node(e.node),
                role: match e.part {
                    KernelPart::K => Role::Kernel(c),
                    KernelPart::K1 => Role::K1(c),
                    KernelPart::K2 => Role::K2(c),
                },
                source: e.source,
            })?;
            if !v.is_finite() {
                return Err(SolveError::NonFinite {
                    node: i,
                    x,
                    role: Role::Kernel(c),
                });
            }
            ivals[c] = v;
            integrals[c].push(v);
        }

        if i == steps {
            break;
        }
        for r in 0..(n - 1) * d {
            acc[r].add(h * cur[r + d]);
        }
        let top = (n - 1) * d;
        for c in 0..d {
            acc[top + c].add(h * fvals[c]);
            acc[top + c].add(h * ivals[c]);
        }
        prev.copy_from_slice(&cur[..d]);
    }

    Ok(Trajectory {
        grid,
        y,
        aux,
        dy: dy_rows,
        integrals,
        dy0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, Evaluator, Scope};

    fn scalar(f: &str, kernel: KernelForm, initial: Vec<f64>, order: usize) -> ProblemSpec {
        ProblemSpec {
            order,
            dim: 1,
            f: vec![Evaluator::parse(f, Scope::Rhs, 1).unwrap()],
            kernel: vec![kernel],
            interval: (0.0, 1.0),
            initial,
            exact: None,
        }
    }

    #[test]
    fn constant_rhs_is_exact() {
        let spec = scalar("1", KernelForm::zero(), vec![0.0], 1);
        let traj = solve_grid(&spec, 10).unwrap();
        for (i, x) in traj.grid.nodes().enumerate() {
            assert!((traj.y[0][i] - x).abs() <= 1e-15, "node {i}");
        }
    }

    #[test]
    fn first_step_of_example_8() {
        let traj = solve_grid(&builtin(8).unwrap(), 10).unwrap();
        assert_eq!(traj.y[0][1], 1.1);
    }

    #[test]
    fn two_steps_of_example_7() {
        // Direct transcription of the recurrence with h = 1/2.
        let h = 0.5_f64;
        let f = |x: f64| 3.0 * x * x - x.powi(4) / 3.0;
        let y1 = 0.0 + h * f(0.0);
        let k = |x: f64, t: f64| x * t * t;
        let y2 = y1 + h * f(h) + h * (h / 2.0) * (k(h, 0.0) + k(h, h));
        assert!((y2 - 0.380_208_333_333_333_3).abs() < 1e-15);

        let traj = solve_grid(&builtin(7).unwrap(), 2).unwrap();
        assert_eq!(traj.y[0][1], 0.0);
        assert!((traj.y[0][2] - y2).abs() < 1e-15);
    }

    #[test]
    fn example_13_first_step_stays_at_origin() {
        let traj = solve_grid(&builtin(13).unwrap(), 1).unwrap();
        assert_eq!(traj.state(1), vec![0.0, 0.0]);
    }

    #[test]
    fn quadrature_on_three_nodes() {
        let grid = Grid::new((0.0, 1.0), 2).unwrap();
        for (src, expected) in [("t", 0.5), ("t^2", 0.375)] {
            let kernel = KernelForm::Yt(Evaluator::parse(src, Scope::Yt, 1).unwrap());
            let mut q = KernelQuadrature::new(&kernel);
            let mut last = f64::NAN;
            for i in 0..=2 {
                let x = grid.node(i);
                let args = Args {
                    x,
                    t: x,
                    y: &[0.0],
                    dy: &[],
                };
                last = q.advance(&grid, i, &args).unwrap();
                if i == 0 {
                    assert_eq!(last, 0.0);
                }
            }
            assert_eq!(last, expected, "K = {src}");
        }
    }

    #[test]
    fn xt_quadrature_at_first_node_is_zero() {
        let grid = Grid::new((0.0, 1.0), 4).unwrap();
        let kernel = KernelForm::Xt(Evaluator::parse("1/(x - t)", Scope::Xt, 1).unwrap());
        let mut q = KernelQuadrature::new(&kernel);
        let args = Args {
            x: 0.0,
            t: 0.0,
            y: &[],
            dy: &[],
        };
        assert_eq!(q.advance(&grid, 0, &args), Ok(0.0));
    }

    #[test]
    fn discrete_derivative_examples() {
        let spec = scalar("1", KernelForm::zero(), vec![0.0], 1);
        let traj = solve_grid(&spec, 2).unwrap();
        assert_eq!(traj.y[0], vec![0.0, 0.5, 1.0]);
        assert_eq!(discrete_derivative(&traj, 2, 0), Some(1.0));
        assert_eq!(discrete_derivative(&traj, 3, 0), None);

        let ex3 = solve_grid(&builtin(3).unwrap(), 8).unwrap();
        assert_eq!(discrete_derivative(&ex3, 0, 0), Some(1.0));
        assert_eq!(ex3.dy.as_ref().unwrap()[0][0], 1.0);

        let flat = scalar("0", KernelForm::zero(), vec![2.5], 1);
        let traj = solve_grid(&flat, 5).unwrap();
        for j in 1..=5 {
            assert_eq!(discrete_derivative(&traj, j, 0), Some(0.0));
        }
    }

    #[test]
    fn derivative_rows_match_differences() {
        let traj = solve_grid(&builtin(2).unwrap(), 16).unwrap();
        let dy = traj.dy.as_ref().unwrap();
        for j in 1..=16 {
            assert_eq!(dy[0][j], (traj.y[0][j] - traj.y[0][j - 1]) / traj.grid.h);
        }
        assert!(solve_grid(&builtin(7).unwrap(), 4).unwrap().dy.is_none());
    }

    #[test]
    fn domain_error_reports_node_and_role() {
        let k = Evaluator::parse("1/(y - 0.25)", Scope::Yt, 1).unwrap();
        let spec = scalar("1", KernelForm::Yt(k), vec![0.0], 1);
        match solve_grid(&spec, 4) {
            Err(SolveError::Domain { node, role, .. }) => {
                assert_eq!(node, 1);
                assert_eq!(role, Role::Kernel(0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overflow_is_reported() {
        let spec = scalar("exp(exp(y))", KernelForm::zero(), vec![5.0], 1);
        assert!(matches!(
            solve_grid(&spec, 4),
            Err(SolveError::NonFinite { .. })
        ));
    }

    #[test]
    fn zero_steps_rejected() {
        assert_eq!(
            solve_grid(&builtin(7).unwrap(), 0),
            Err(SolveError::NoSteps)
        );
    }

    #[test]
    fn refined_grids_share_nodes() {
        let g = Grid::new((0.0, 1.0), 26).unwrap();
        for k in 1..=4 {
            let r = g.refined(k);
            for i in 0..=g.steps {
                assert_eq!(r.node(i << k).to_bits(), g.node(i).to_bits());
            }
        }
    }
}
