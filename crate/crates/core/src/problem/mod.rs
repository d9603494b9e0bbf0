//! Problem model: `y⁽ⁿ⁾(x) = f(x, y) + ∫_{x₀}^{x} K dt` with one of the
//! supported kernel structures, plus validation, file loading and the
//! built-in example catalog.

mod catalog;
mod file;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError};

pub use catalog::{builtin, catalog, CatalogEntry, CATALOG_SIZE};
pub use file::{load, to_text};

/// Arguments handed to every evaluator. Which fields are meaningful depends
/// on the evaluator's role: `f` sees `x` and `y`, kernels see `t` (and `x`
/// for the x-dependent forms), exact solutions see `x` only.
#[derive(Debug, Clone, Copy)]
pub struct Args<'a> {
    pub x: f64,
    pub t: f64,
    pub y: &'a [f64],
    pub dy: &'a [f64],
}

impl<'a> Args<'a> {
    pub fn at(x: f64) -> Args<'static> {
        Args {
            x,
            t: x,
            y: &[],
            dy: &[],
        }
    }
}

type EvalFn = dyn Fn(&Args<'_>) -> Result<f64, EvalError> + Send + Sync;

/// A real-valued function of [`Args`], either backed by a parsed expression
/// (printable) or by an arbitrary closure.
#[derive(Clone)]
pub struct Evaluator {
    func: Arc<EvalFn>,
    expr: Option<Arc<Expr>>,
    uses_dy: bool,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            Some(e) => write!(f, "Evaluator({e})"),
            None => f.write_str("Evaluator(<closure>)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    X,
    T,
    Y(usize),
    Dy(usize),
}

/// Which variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Right-hand side `f`: `x` and the state.
    Rhs,
    /// Form (a): `x`, `t`.
    Xt,
    /// Form (b): state and `t`.
    Yt,
    /// Form (c): discrete derivative, state and `t`.
    Dyt,
    /// Outer factor of a separable kernel: `x`.
    K1,
    /// Inner factor of a separable kernel: state, derivative and `t`.
    K2,
    /// Componentwise kernel of a system: state vector, derivatives and `t`.
    System,
    /// Exact solution: `x`.
    Exact,
}

impl Scope {
    fn slots(self, dim: usize) -> Vec<(String, Slot)> {
        let mut out = Vec::new();
        let state = |out: &mut Vec<(String, Slot)>, prefix: &str, deriv: bool| {
            for k in 0..dim {
                let name = if dim == 1 {
                    prefix.to_string()
                } else {
                    format!("{prefix}{}", k + 1)
                };
                out.push((name, if deriv { Slot::Dy(k) } else { Slot::Y(k) }));
            }
        };
        match self {
            Scope::Rhs => {
                out.push(("x".into(), Slot::X));
                state(&mut out, "y", false);
            }
            Scope::Xt => {
                out.push(("x".into(), Slot::X));
                out.push(("t".into(), Slot::T));
            }
            Scope::Yt => {
                out.push(("t".into(), Slot::T));
                state(&mut out, "y", false);
            }
            Scope::Dyt | Scope::K2 | Scope::System => {
                out.push(("t".into(), Slot::T));
                state(&mut out, "y", false);
                state(&mut out, "dy", true);
            }
            Scope::K1 | Scope::Exact => out.push(("x".into(), Slot::X)),
        }
        out
    }
}

impl Evaluator {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(&Args<'_>) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        Self {
            func: Arc::new(f),
            expr: None,
            uses_dy: false,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(move |_| Ok(c))
    }

    /// Marks a closure evaluator as reading `Args::dy`, so the solver keeps
    /// discrete derivatives up to date.
    pub fn reading_derivative(mut self) -> Self {
        self.uses_dy = true;
        self
    }

    /// Parses `source` with the variable set of `scope` for a problem of
    /// dimension `dim`.
    pub fn parse(source: &str, scope: Scope, dim: usize) -> Result<Self, ParseError> {
        let table = scope.slots(dim);
        let names: Vec<&str> = table.iter().map(|(n, _)| n.as_str()).collect();
        let expr = Expr::parse(source, &names)?;
        let slots: Vec<Slot> = table.into_iter().map(|(_, s)| s).collect();
        let uses_dy = expr
            .slots()
            .into_iter()
            .any(|s| matches!(slots[s], Slot::Dy(_)));
        let expr = Arc::new(expr);
        let captured = Arc::clone(&expr);
        let func = move |a: &Args<'_>| {
            captured.eval_in(&|name: &str, slot: usize| {
                let v = match slots[slot] {
                    Slot::X => Some(a.x),
                    Slot::T => Some(a.t),
                    Slot::Y(k) => a.y.get(k).copied(),
                    Slot::Dy(k) => a.dy.get(k).copied(),
                };
                v.ok_or_else(|| EvalError::MissingBinding(name.to_string()))
            })
        };
        Ok(Self {
            func: Arc::new(func),
            expr: Some(expr),
            uses_dy,
        })
    }

    #[inline]
    pub fn eval(&self, args: &Args<'_>) -> Result<f64, EvalError> {
        (self.func)(args)
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_deref()
    }

    pub fn uses_derivative(&self) -> bool {
        self.uses_dy
    }
}

/// Structure of the integrand.
#[derive(Debug, Clone)]
pub enum KernelForm {
    /// `K(x, t)`.
    Xt(Evaluator),
    /// `K(y(t), t)`.
    Yt(Evaluator),
    /// `K(y′(t), t)`; may also read `y(t)`.
    Dyt(Evaluator),
    /// `K₁(x)·K₂(y(t), t)`.
    Separable { k1: Evaluator, k2: Evaluator },
    /// `K(y⃗(t), t)` for one equation of a system.
    System(Evaluator),
}

impl KernelForm {
    pub fn zero() -> Self {
        KernelForm::Yt(Evaluator::constant(0.0))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            KernelForm::Xt(_) => "xt",
            KernelForm::Yt(_) => "yt",
            KernelForm::Dyt(_) => "dyt",
            KernelForm::Separable { .. } => "separable",
            KernelForm::System(_) => "system",
        }
    }

    /// True when the integrand needs discrete derivatives of the state.
    pub fn uses_derivative(&self) -> bool {
        match self {
            KernelForm::Xt(_) => false,
            KernelForm::Dyt(_) => true,
            KernelForm::Yt(k) | KernelForm::System(k) => k.uses_derivative(),
            KernelForm::Separable { k2, .. } => k2.uses_derivative(),
        }
    }

    /// Evaluates the full integrand `K` at outer point `x`, node `t`.
    pub fn eval(&self, args: &Args<'_>) -> Result<f64, EvalError> {
        match self {
            KernelForm::Xt(k) | KernelForm::Yt(k) | KernelForm::Dyt(k) | KernelForm::System(k) => {
                k.eval(args)
            }
            KernelForm::Separable { k1, k2 } => Ok(k1.eval(args)? * k2.eval(args)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKind {
    Exact,
    /// Reference curve only; not accurate enough to measure solver error.
    Approximate,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub components: Vec<Evaluator>,
    pub kind: ExactKind,
}

impl ExactSolution {
    pub fn is_exact(&self) -> bool {
        self.kind == ExactKind::Exact
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>, EvalError> {
        self.components
            .iter()
            .map(|c| c.eval(&Args::at(x)))
            .collect()
    }
}

/// One integro-differential problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    /// Derivative order `n` (1, 2 or 3).
    pub order: usize,
    /// Number of equations `d`.
    pub dim: usize,
    pub f: Vec<Evaluator>,
    pub kernel: Vec<KernelForm>,
    pub interval: (f64, f64),
    /// `y(x₀)` for every component, then `y′(x₀)`, then `y″(x₀)` as the
    /// order requires.
    pub initial: Vec<f64>,
    pub exact: Option<ExactSolution>,
}

impl ProblemSpec {
    pub fn length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn uses_derivative(&self) -> bool {
        self.kernel.iter().any(KernelForm::uses_derivative)
    }

    /// Exact solution, if one is attached and flagged exact.
    pub fn exact_solution(&self) -> Option<&ExactSolution> {
        self.exact.as_ref().filter(|e| e.is_exact())
    }

    /// Checks structural invariants, then probes every evaluator.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown example {0} (catalog ids are 1..={CATALOG_SIZE})")]
    UnknownExample(usize),
    #[error("{}`{key}`: {source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Expression {
        key: String,
        line: Option<usize>,
        source: ParseError,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid problem: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("cannot print problem: {0}")]
    NotPrintable(String),
}

const PROBE_POINTS: usize = 5;

/// Checks every [`ProblemSpec`] invariant and probes each evaluator at five
/// equispaced points with the state frozen at its initial value. Structural
/// problems are errors; evaluator failures at probe points are warnings.
pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let err = |r: &mut ValidationReport, m: String| r.errors.push(m);
    if !(1..=3).contains(&spec.order) {
        err(
            &mut report,
            format!("order must be 1, 2 or 3, got {}", spec.order),
        );
    }
    if spec.dim == 0 {
        err(&mut report, "dimension must be at least 1".into());
    }
    if spec.order >= 2 && spec.dim > 1 {
        err(
            &mut report,
            format!(
                "higher order requires a scalar equation (order {}, dim {})",
                spec.order, spec.dim
            ),
        );
    }
    if spec.f.len() != spec.dim {
        err(
            &mut report,
            format!("f: expected {} components, got {}", spec.dim, spec.f.len()),
        );
    }
    if spec.kernel.len() != spec.dim {
        err(
            &mut report,
            format!(
                "kernel: expected {} components, got {}",
                spec.dim,
                spec.kernel.len()
            ),
        );
    }
    let expected = spec.order * spec.dim;
    if spec.initial.len() != expected {
        err(
            &mut report,
            format!(
                "initial values: expected {expected}, got {}",
                spec.initial.len()
            ),
        );
    }
    if spec.initial.iter().any(|v| !v.is_finite()) {
        err(&mut report, "initial values must be finite".into());
    }
    let (a, b) = spec.interval;
    if !a.is_finite() || !b.is_finite() {
        err(&mut report, "interval endpoints must be finite".into());
    } else if a >= b {
        err(&mut report, format!("empty interval [{a}, {b}]"));
    }
    if let Some(exact) = &spec.exact {
        if exact.components.len() != spec.dim {
            err(
                &mut report,
                format!(
                    "exact solution: expected {} components, got {}",
                    spec.dim,
                    exact.components.len()
                ),
            );
        }
    }
    if report.is_ok() {
        probe(spec, &mut report);
    }
    report
}

fn probe(spec: &ProblemSpec, report: &mut ValidationReport) {
    let d = spec.dim;
    let (a, b) = spec.interval;
    let y = &spec.initial[..d];
    let mut warn = |what: String, x: f64, e: String| {
        report.warnings.push(format!("{what} at x = {x}: {e}"));
    };
    let check = |r: Result<f64, EvalError>| -> Result<(), String> {
        match r {
            Ok(v) if v.is_finite() => Ok(()),
            Ok(v) => Err(format!("non-finite value {v}")),
            Err(e) => Err(e.to_string()),
        }
    };

    // Derivative seen by kernels at the first node.
    let dy0: Vec<f64> = if spec.order >= 2 {
        spec.initial[d..2 * d].to_vec()
    } else {
        spec.f
            .iter()
            .map(|f| {
                f.eval(&Args {
                    x: a,
                    t: a,
                    y,
                    dy: &[],
                })
                .unwrap_or(0.0)
            })
            .collect()
    };

    for k in 0..PROBE_POINTS {
        let x = a + (b - a) * k as f64 / (PROBE_POINTS - 1) as f64;
        let args = Args {
            x,
            t: x,
            y,
            dy: &dy0,
        };
        for (c, f) in spec.f.iter().enumerate() {
            if let Err(e) = check(f.eval(&args)) {
                warn(format!("f.{}", c + 1), x, e);
            }
        }
        for (c, kernel) in spec.kernel.iter().enumerate() {
            match kernel {
                KernelForm::Separable { k1, k2 } => {
                    // K₁ multiplies an empty integral at x₀ and is never
                    // evaluated there by the solver.
                    if k > 0 {
                        if let Err(e) = check(k1.eval(&args)) {
                            warn(format!("kernel.{}.K1", c + 1), x, e);
                        }
                    }
                    if let Err(e) = check(k2.eval(&args)) {
                        warn(format!("kernel.{}.K2", c + 1), x, e);
                    }
                }
                other => {
                    if let Err(e) = check(other.eval(&args)) {
                        warn(format!("kernel.{}.K", c + 1), x, e);
                    }
                }
            }
        }
        if let Some(exact) = &spec.exact {
            for (c, g) in exact.components.iter().enumerate() {
                if let Err(e) = check(g.eval(&Args::at(x))) {
                    warn(format!("exact.{}", c + 1), x, e);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn initial_length_violation() {
        let spec = scalar("x", KernelForm::zero(), vec![0.0], 2);
        let report = validate(&spec);
        assert!(report
            .errors
            .iter()
            .any(|e| e == "initial values: expected 2, got 1"));
    }

    #[test]
    fn division_by_zero_probe_is_a_warning() {
        let k = Evaluator::parse("1/y", Scope::Yt, 1).unwrap();
        let spec = scalar("1", KernelForm::Yt(k), vec![0.0], 1);
        let report = validate(&spec);
        assert!(report.is_ok());
        assert!(report.warnings[0].starts_with("kernel.1.K at x = 0"));
    }

    #[test]
    fn empty_interval_and_vector_higher_order() {
        let mut spec = scalar("1", KernelForm::zero(), vec![0.0], 1);
        spec.interval = (1.0, 1.0);
        assert!(validate(&spec).errors[0].contains("empty interval"));
        spec.interval = (0.0, 1.0);
        spec.order = 2;
        spec.dim = 2;
        let errors = validate(&spec).errors;
        assert!(errors.iter().any(|e| e.contains("scalar")));
    }

    #[test]
    fn scope_restricts_variables() {
        assert!(Evaluator::parse("x*y", Scope::Yt, 1).is_err());
        assert!(Evaluator::parse("y*dy", Scope::Yt, 1).is_err());
        assert!(Evaluator::parse("y*dy", Scope::Dyt, 1).is_ok());
        assert!(Evaluator::parse("y1 - dy2", Scope::System, 2).is_ok());
        assert!(Evaluator::parse("y", Scope::System, 2).is_err());
        let k = Evaluator::parse("t*y", Scope::K2, 1).unwrap();
        assert!(!k.uses_derivative());
        let k = Evaluator::parse("t*dy^3", Scope::K2, 1).unwrap();
        assert!(k.uses_derivative());
    }

    #[test]
    fn separable_eval_is_product() {
        let k = KernelForm::Separable {
            k1: Evaluator::parse("x", Scope::K1, 1).unwrap(),
            k2: Evaluator::parse("t^2", Scope::K2, 1).unwrap(),
        };
        let v = k
            .eval(&Args {
                x: 2.0,
                t: 3.0,
                y: &[0.0],
                dy: &[0.0],
            })
            .unwrap();
        assert_eq!(v, 18.0);
    }
}
