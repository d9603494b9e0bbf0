//! Richardson extrapolation over five nested grids and tolerance-driven
//! stepsize selection.
//!
//! A tower holds Euler trajectories at `h, h/2, h/4, h/8, h/16`. Fixed
//! rational combinations of the coarse-node values cancel the leading error
//! terms and give solutions of order 2 through 5. The order-3 solution is the
//! one returned; `Y³ − Y⁵ ≈ K₃·h³` estimates its error coefficient, and
//! `h = σ·(ε/|K₃|)^{1/3}` picks the stepsize for a rerun.

use std::thread;

use thiserror::Error;

use crate::problem::ProblemSpec;
use crate::solver::{solve_grid, Grid, Solution, SolveError, Trajectory};

/// Number of refinement levels in a tower.
pub const LEVELS: usize = 5;

/// Extrapolation weights as exact fractions `(numerator, denominator)`,
/// indexed by order − 2. Row `p` uses levels `0..p`.
pub const COEFFICIENTS: [&[(i64, i64)]; 4] = [
    &[(-1, 1), (2, 1)],
    &[(1, 3), (-2, 1), (8, 3)],
    &[(-1, 21), (2, 3), (-8, 3), (64, 21)],
    &[(1, 315), (-2, 21), (8, 9), (-64, 21), (1024, 315)],
];

/// Safety factor applied to the predicted stepsize.
pub const DEFAULT_SIGMA: f64 = 0.85;

#[derive(Debug, Error)]
pub enum ToleranceError {
    #[error("number of steps must be at least 1")]
    NoSteps,
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("safety factor must lie in (0, 1), got {0}")]
    BadSigma(f64),
    #[error("level {level} (h/{}): {source}", 1usize << .level)]
    Solver { level: usize, source: SolveError },
    #[error(
        "tolerance {epsilon:e} not reached: best estimate {best_estimate:e} with {steps} steps \
         after {reruns} reruns"
    )]
    Unattainable {
        epsilon: f64,
        best_estimate: f64,
        steps: usize,
        reruns: usize,
    },
}

/// Order-2..5 solutions at the coarse nodes, `[component][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolants {
    pub y2: Vec<Vec<f64>>,
    pub y3: Vec<Vec<f64>>,
    pub y4: Vec<Vec<f64>>,
    pub y5: Vec<Vec<f64>>,
}

impl Extrapolants {
    /// Extrapolant of the given order (2..=5).
    pub fn order(&self, order: usize) -> Option<&Vec<Vec<f64>>> {
        match order {
            2 => Some(&self.y2),
            3 => Some(&self.y3),
            4 => Some(&self.y4),
            5 => Some(&self.y5),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RichardsonTower {
    pub base: Grid,
    /// Trajectories at `h/2^k`, `k = 0..5`.
    pub levels: Vec<Trajectory>,
    pub extrapolants: Option<Extrapolants>,
}

impl RichardsonTower {
    /// Value of `component` at coarse node `i` on level `k`.
    #[inline]
    pub fn coarse_value(&self, k: usize, component: usize, i: usize) -> f64 {
        self.levels[k].y[component][i << k]
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    /// Populates [`RichardsonTower::extrapolants`].
    pub fn extrapolated(mut self) -> Self {
        self.extrapolants = Some(extrapolate(&self));
        self
    }
}

/// Runs the solver at `steps, 2·steps, …, 16·steps`. Levels are independent
/// and are solved on separate threads.
pub fn build_tower(spec: &ProblemSpec, steps: usize) -> Result<RichardsonTower, ToleranceError> {
    if steps == 0 {
        return Err(ToleranceError::NoSteps);
    }
    let results: Vec<Result<Trajectory, SolveError>> = thread::scope(|s| {
        let handles: Vec<_> = (0..LEVELS)
            .map(|k| s.spawn(move || solve_grid(spec, steps << k)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut levels = Vec::with_capacity(LEVELS);
    for (level, r) in results.into_iter().enumerate() {
        levels.push(r.map_err(|source| ToleranceError::Solver { level, source })?);
    }
    Ok(RichardsonTower {
        base: levels[0].grid,
        levels,
        extrapolants: None,
    })
}

/// `Σ c_k·v_k` written as `v_last + Σ c_k·(v_k − v_last)`, which is equal
/// because the weights sum to one and is exact when all values agree.
fn combine(weights: &[(i64, i64)], values: &[f64]) -> f64 {
    let last = values[weights.len() - 1];
    let mut acc = 0.0;
    for (&(num, den), &v) in weights.iter().zip(values).take(weights.len() - 1) {
        acc += num as f64 * (v - last) / den as f64;
    }
    last + acc
}

/// Forms `Y²..Y⁵` at every coarse node.
pub fn extrapolate(tower: &RichardsonTower) -> Extrapolants {
    let d = tower.dim();
    let nodes = tower.base.steps + 1;
    let mut out = [(); 4].map(|_| vec![vec![0.0; nodes]; d]);
    let mut values = [0.0; LEVELS];
    for c in 0..d {
        for i in 0..nodes {
            for (k, v) in values.iter_mut().enumerate() {
                *v = tower.coarse_value(k, c, i);
            }
            for (p, weights) in COEFFICIENTS.iter().enumerate() {
                out[p][c][i] = combine(weights, &values);
            }
        }
    }
    let [y2, y3, y4, y5] = out;
    Extrapolants { y2, y3, y4, y5 }
}

/// Per-node `K₃ = (Y³ − Y⁵)/h³`; for systems the component of largest
/// magnitude is kept.
pub fn estimate_k3(extrapolants: &Extrapolants, h: f64) -> Vec<f64> {
    let h3 = h * h * h;
    let nodes = extrapolants.y3[0].len();
    (0..nodes)
        .map(|i| {
            extrapolants
                .y3
                .iter()
                .zip(&extrapolants.y5)
                .map(|(a, b)| (a[i] - b[i]) / h3)
                .fold(
                    0.0_f64,
                    |best, v| if v.abs() > best.abs() { v } else { best },
                )
        })
        .collect()
}

/// Largest `|Y³ − Y⁵|` over nodes and components, scaled per `mode`.
pub fn error_estimate(extrapolants: &Extrapolants, mode: ErrorMode) -> f64 {
    let mut worst = 0.0_f64;
    for (a, b) in extrapolants.y3.iter().zip(&extrapolants.y5) {
        for (u, v) in a.iter().zip(b) {
            worst = worst.max((u - v).abs() / mode.scale(*u));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    #[default]
    Absolute,
    /// Error measured against `max{1, |y|}`.
    Relative,
}

impl ErrorMode {
    #[inline]
    fn scale(self, y: f64) -> f64 {
        match self {
            ErrorMode::Absolute => 1.0,
            ErrorMode::Relative => y.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceOptions {
    pub sigma: f64,
    /// Coarse steps of the pilot tower. Below about 20 the `K₃` estimate for
    /// kernels in `y′` is low enough that the first rerun can miss `ε`.
    pub pilot_steps: usize,
    /// Fewest coarse steps ever selected; also bounds `h` when every `K₃`
    /// estimate vanishes.
    pub min_steps: usize,
    /// Most steps allowed on any single level (the finest level has 16× the
    /// coarse count).
    pub max_level_steps: usize,
    pub max_reruns: usize,
}

impl Default for ToleranceOptions {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            pilot_steps: 20,
            min_steps: 4,
            max_level_steps: 10_000_000,
            max_reruns: 3,
        }
    }
}

/// `|K₃|` below this is treated as zero.
const K3_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChoice {
    pub h: f64,
    pub steps: usize,
}

/// Smallest per-node stepsize `σ·(ε·s_i/|K₃ⁱ|)^{1/3}` (with `s_i = 1` or
/// `max{1, |y_i|}`), rounded to a whole number of steps over `length`.
pub fn select_stepsize(
    k3: &[f64],
    epsilon: f64,
    sigma: f64,
    mode: ErrorMode,
    yvals: &[f64],
    length: f64,
    options: &ToleranceOptions,
) -> StepChoice {
    let h_max = length / options.min_steps as f64;
    let h_min = k3
        .iter()
        .enumerate()
        .filter(|(_, k)| k.abs() >= K3_FLOOR)
        .map(|(i, k)| {
            let scale = yvals.get(i).map_or(1.0, |&y| mode.scale(y));
            sigma * (epsilon * scale / k.abs()).cbrt()
        })
        .fold(h_max, f64::min);
    let max_steps = (options.max_level_steps >> (LEVELS - 1)).max(options.min_steps);
    let steps = ((length / h_min).ceil() as usize).clamp(options.min_steps, max_steps);
    StepChoice {
        h: length / steps as f64,
        steps,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceReport {
    pub epsilon: f64,
    pub mode: ErrorMode,
    pub sigma: f64,
    pub pilot_steps: usize,
    /// Per-node error coefficients from the pilot tower.
    pub k3: Vec<f64>,
    pub h_selected: f64,
    pub steps_selected: usize,
    /// Max-node `|Y³ − Y⁵|` of the final tower (relative in relative mode).
    pub error_estimate: f64,
    /// Halvings of `h` needed after the first rerun.
    pub reruns: usize,
}

/// Pilot tower, stepsize selection, rerun; returns the final `Y³`.
pub fn solve_tolerance(
    spec: &ProblemSpec,
    epsilon: f64,
    mode: ErrorMode,
    options: &ToleranceOptions,
) -> Result<(Solution, ToleranceReport), ToleranceError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ToleranceError::BadTolerance(epsilon));
    }
    if !(options.sigma > 0.0 && options.sigma < 1.0) {
        return Err(ToleranceError::BadSigma(options.sigma));
    }
    let length = spec.length();

    let pilot = build_tower(spec, options.pilot_steps)?;
    let ex = extrapolate(&pilot);
    let k3 = estimate_k3(&ex, pilot.base.h);
    let yvals = node_magnitudes(&ex.y3);
    let choice = select_stepsize(&k3, epsilon, options.sigma, mode, &yvals, length, options);

    let mut steps = choice.steps;
    let mut reruns = 0;
    loop {
        let tower = build_tower(spec, steps)?;
        let ex = extrapolate(&tower);
        let estimate = error_estimate(&ex, mode);
        if estimate <= epsilon {
            let report = ToleranceReport {
                epsilon,
                mode,
                sigma: options.sigma,
                pilot_steps: options.pilot_steps,
                k3,
                h_selected: tower.base.h,
                steps_selected: steps,
                error_estimate: estimate,
                reruns,
            };
            let solution = Solution {
                grid: tower.base,
                values: ex.y3,
            };
            return Ok((solution, report));
        }
        if reruns == options.max_reruns || (steps * 2) << (LEVELS - 1) > options.max_level_steps {
            return Err(ToleranceError::Unattainable {
                epsilon,
                best_estimate: estimate,
                steps,
                reruns,
            });
        }
        steps *= 2;
        reruns += 1;
    }
}

/// Smallest component magnitude per node, the conservative choice for the
/// relative-error scale.
fn node_magnitudes(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows[0].len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
