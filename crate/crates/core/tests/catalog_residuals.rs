mod common;

use vide::problem::{builtin, catalog};

#[test]
fn quadrature_helper_is_accurate() {
    let v = common::simpson(&|t: f64| t.exp() * t.sin(), 0.0, 2.0, 1e-13);
    let exact = 0.5 * (1.0 + 2f64.exp() * (2f64.sin() - 2f64.cos()));
    assert!((v - exact).abs() < 1e-12);
}

#[test]
fn stated_solutions_satisfy_their_equations() {
    for entry in catalog() {
        let spec = builtin(entry.id).unwrap();
        let exact = spec.exact.as_ref().unwrap();
        if !exact.is_exact() {
            continue;
        }
        for k in 0..=10 {
            let x = k as f64 / 10.0;
            let r = common::residual(entry.id, &spec, x);
            assert!(r < 1e-9, "example {} at x = {x}: residual {r:e}", entry.id);
        }
    }
}

#[test]
fn hand_derivatives_match_stated_solutions() {
    // Guards the hand-written derivative table used by the residual audit.
    for entry in catalog().iter().filter(|e| e.id != 1) {
        let exact = builtin(entry.id).unwrap().exact.unwrap();
        for k in 1..10 {
            let x = k as f64 / 10.0;
            let table = common::exact_derivatives(entry.id, x);
            assert_eq!(exact.eval(x).unwrap(), table[0], "example {}", entry.id);
            let h = 1e-6;
            let (lo, hi) = (exact.eval(x - h).unwrap(), exact.eval(x + h).unwrap());
            for c in 0..lo.len() {
                let fd = (hi[c] - lo[c]) / (2.0 * h);
                assert!(
                    (fd - table[1][c]).abs() < 1e-7,
                    "example {} y' at {x}",
                    entry.id
                );
            }
        }
    }
}
