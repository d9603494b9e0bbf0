#![allow(dead_code)]

use vide::problem::{Args, ProblemSpec};
use vide::solver::{discrete_derivative, Solution, Trajectory};

/// Adaptive Simpson quadrature of `g` over `[a, b]` to absolute tolerance `tol`.
pub fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        g: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (g(lm), g(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (g(a), g(b), g(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(g, a, b, fa, fm, fb, whole, tol, 50)
}

/// Derivatives `y, y′, …, y⁽ᵒʳᵈᵉʳ⁾` of the stated solution of catalog
/// example `id`, worked out by hand. Row `k` holds the k-th derivative of
/// every component.
pub fn exact_derivatives(id: usize, x: f64) -> Vec<Vec<f64>> {
    let r2 = std::f64::consts::SQRT_2;
    match id {
        1 => unreachable!("example 1 has no closed-form solution"),
        2 => {
            let t = (x / r2).tan();
            vec![vec![r2 * t], vec![1.0 + t * t]]
        }
        3 => vec![vec![x.sin()], vec![x.cos()]],
        4 => vec![vec![x.cos()], vec![-x.sin()]],
        5 => vec![vec![(-x).exp()], vec![-(-x).exp()]],
        6 => vec![vec![(1.0 + x).ln()], vec![1.0 / (1.0 + x)]],
        7 => vec![vec![x.powi(3)], vec![3.0 * x * x]],
        8 => vec![vec![x.exp()], vec![x.exp()]],
        9 => vec![vec![x * x], vec![2.0 * x]],
        10 => vec![vec![x.sinh()], vec![x.cosh()], vec![x.sinh()]],
        11 => vec![vec![2.0 * x + 1.0], vec![2.0], vec![0.0]],
        12 => vec![vec![x.exp()]; 4],
        13 => vec![vec![x * x, x.powi(3)], vec![2.0 * x, 3.0 * x * x]],
        14 => vec![
            vec![x + x.exp(), x - x.exp()],
            vec![1.0 + x.exp(), 1.0 - x.exp()],
        ],
        _ => panic!("unknown example {id}"),
    }
}

/// Freshly recomputed composite trapezium `(h/2)(K₀ + 2K₁ + … + 2K_{i−1} + K_i)`
/// for equation `c` at node `i`, from the trajectory's stored states. Also
/// returns `h·Σ|K_j|`, the natural scale for a relative comparison.
pub fn full_trapezium(spec: &ProblemSpec, traj: &Trajectory, c: usize, i: usize) -> (f64, f64) {
    if i == 0 {
        return (0.0, 0.0);
    }
    let h = traj.grid.h;
    let x = traj.grid.node(i);
    let d = traj.dim();
    let mut total = 0.0;
    let mut scale = 0.0;
    for j in 0..=i {
        let y: Vec<f64> = (0..d).map(|k| traj.y[k][j]).collect();
        let dy: Vec<f64> = (0..d)
            .map(|k| discrete_derivative(traj, j, k).unwrap())
            .collect();
        let args = Args {
            x,
            t: traj.grid.node(j),
            y: &y,
            dy: &dy,
        };
        let k = spec.kernel[c].eval(&args).unwrap();
        let w = if j == 0 || j == i { 0.5 } else { 1.0 };
        total += w * k;
        scale += w * k.abs();
    }
    (h * total, h * scale)
}

/// Max-node, max-component error of `sol` against example `id`'s solution.
pub fn max_error(id: usize, sol: &Solution) -> f64 {
    sol.grid
        .nodes()
        .enumerate()
        .flat_map(|(i, x)| {
            let exact = exact_derivatives(id, x).swap_remove(0);
            (0..exact.len())
                .map(move |c| (exact[c] - sol.values[c][i]).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log2(err)` against `log2(N)`, sign flipped so a
/// method of order p gives ≈ p.
pub fn slope(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -num / den
}

/// IDE residual `y⁽ⁿ⁾ − f − ∫K dt` of example `id` at `x`, with the integral
/// from adaptive quadrature.
pub fn residual(id: usize, spec: &ProblemSpec, x: f64) -> f64 {
    let n = spec.order;
    let d = spec.dim;
    let at = exact_derivatives(id, x);
    let args = Args {
        x,
        t: x,
        y: &at[0],
        dy: &at[1],
    };
    let mut worst = 0.0_f64;
    for c in 0..d {
        let f = spec.f[c].eval(&args).unwrap();
        let integral = if x == spec.interval.0 {
            0.0
        } else {
            let g = |t: f64| {
                let row = exact_derivatives(id, t);
                let a = Args {
                    x,
                    t,
                    y: &row[0],
                    dy: &row[1],
                };
                spec.kernel[c].eval(&a).unwrap()
            };
            simpson(&g, spec.interval.0, x, 1e-13)
        };
        worst = worst.max((at[n][c] - f - integral).abs());
    }
    worst
}
