//! Problem-definition files.
//!
//! Text form, one `key = value` per line, `#` starts a comment:
//!
//! ```text
//! order = 1
//! dim = 1
//! interval = [0, 1]
//! initial = [0]
//! f.1 = 3*x^2 - x^4/3
//! kernel.1.form = xt
//! kernel.1.K = x*t^2
//! exact.1 = x^3
//! exact_kind = exact
//! ```
//!
//! A JSON object with the same (flat, dotted) keys is accepted as well.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    validate, Evaluator, ExactKind, ExactSolution, KernelForm, ProblemError, ProblemSpec, Scope,
};

struct Entry {
    value: String,
    line: Option<usize>,
}

type Entries = BTreeMap<String, Entry>;

/// Loads a problem from text or JSON and validates it.
pub fn load(source: &str) -> Result<ProblemSpec, ProblemError> {
    let entries = if source.trim_start().starts_with('{') {
        json_entries(source)?
    } else {
        text_entries(source)?
    };
    let spec = build(entries)?;
    let report = validate(&spec);
    if !report.is_ok() {
        return Err(ProblemError::Invalid(report.errors));
    }
    Ok(spec)
}

fn text_entries(source: &str) -> Result<Entries, ProblemError> {
    let mut out = Entries::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ProblemError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
        let key = key.trim().to_string();
        let value = unquote(value.trim()).to_string();
        if out.contains_key(&key) {
            return Err(ProblemError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        out.insert(
            key,
            Entry {
                value,
                line: Some(line),
            },
        );
    }
    Ok(out)
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(s)
}

fn json_entries(source: &str) -> Result<Entries, ProblemError> {
    let value: serde_json::Value =
        serde_json::from_str(source).map_err(|e| ProblemError::Syntax {
            line: e.line(),
            message: e.to_string(),
        })?;
    let obj = value
        .as_object()
        .ok_or_else(|| ProblemError::Schema("top-level JSON value must be an object".into()))?;
    let mut out = Entries::new();
    for (key, v) in obj {
        let text = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => {
                let parts: Result<Vec<String>, ProblemError> = items
                    .iter()
                    .map(|item| match item {
                        serde_json::Value::Number(n) => Ok(n.to_string()),
                        serde_json::Value::String(s) => Ok(s.clone()),
                        _ => Err(ProblemError::Schema(format!(
                            "`{key}`: array items must be numbers"
                        ))),
                    })
                    .collect();
                format!("[{}]", parts?.join(", "))
            }
            _ => {
                return Err(ProblemError::Schema(format!(
                    "`{key}`: expected a string, number or array"
                )))
            }
        };
        out.insert(
            key.clone(),
            Entry {
                value: text,
                line: None,
            },
        );
    }
    Ok(out)
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Entry, ProblemError> {
        self.take(key)
            .ok_or_else(|| ProblemError::Schema(format!("missing key `{key}`")))
    }

    fn integer(&mut self, key: &str, default: Option<usize>) -> Result<usize, ProblemError> {
        let entry = match (self.take(key), default) {
            (Some(e), _) => e,
            (None, Some(d)) => return Ok(d),
            (None, None) => return Err(ProblemError::Schema(format!("missing key `{key}`"))),
        };
        entry.value.trim().parse().map_err(|_| {
            ProblemError::Schema(format!(
                "{}`{key}`: expected a non-negative integer, got `{}`",
                at(entry.line),
                entry.value
            ))
        })
    }

    fn reals(&mut self, key: &str) -> Result<Vec<f64>, ProblemError> {
        let entry = self.require(key)?;
        let inner = entry.value.trim();
        let inner = inner
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .unwrap_or(inner);
        inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    ProblemError::Schema(format!(
                        "{}`{key}`: `{s}` is not a real number",
                        at(entry.line)
                    ))
                })
            })
            .collect()
    }

    fn expression(
        &mut self,
        key: &str,
        scope: Scope,
        dim: usize,
    ) -> Result<Evaluator, ProblemError> {
        let entry = self.require(key)?;
        Evaluator::parse(&entry.value, scope, dim).map_err(|source| ProblemError::Expression {
            key: key.to_string(),
            line: entry.line,
            source,
        })
    }
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

fn build(entries: Entries) -> Result<ProblemSpec, ProblemError> {
    let mut r = Reader { entries };
    let order = r.integer("order", None)?;
    let dim = r.integer("dim", Some(1))?;
    if !(1..=3).contains(&order) {
        return Err(ProblemError::Schema(format!(
            "order must be 1, 2 or 3, got {order}"
        )));
    }
    if dim == 0 {
        return Err(ProblemError::Schema("dim must be at least 1".into()));
    }
    if order >= 2 && dim > 1 {
        return Err(ProblemError::Schema(format!(
            "higher order requires a scalar equation (order {order}, dim {dim})"
        )));
    }
    let interval = r.reals("interval")?;
    if interval.len() != 2 {
        return Err(ProblemError::Schema(format!(
            "`interval`: expected two reals, got {}",
            interval.len()
        )));
    }
    let initial = r.reals("initial")?;

    let mut f = Vec::with_capacity(dim);
    let mut kernel = Vec::with_capacity(dim);
    for c in 1..=dim {
        f.push(r.expression(&format!("f.{c}"), Scope::Rhs, dim)?);
        let form_key = format!("kernel.{c}.form");
        let form = r.require(&form_key)?;
        let k = |r: &mut Reader, scope| r.expression(&format!("kernel.{c}.K"), scope, dim);
        kernel.push(match form.value.trim() {
            "xt" => KernelForm::Xt(k(&mut r, Scope::Xt)?),
            "yt" => KernelForm::Yt(k(&mut r, Scope::Yt)?),
            "dyt" => KernelForm::Dyt(k(&mut r, Scope::Dyt)?),
            "system" => KernelForm::System(k(&mut r, Scope::System)?),
            "separable" => KernelForm::Separable {
                k1: r.expression(&format!("kernel.{c}.K1"), Scope::K1, dim)?,
                k2: r.expression(&format!("kernel.{c}.K2"), Scope::K2, dim)?,
            },
            other => {
                return Err(ProblemError::Schema(format!(
                    "{}`{form_key}`: unknown kernel form `{other}` \
                     (expected xt, yt, dyt, separable or system)",
                    at(form.line)
                )))
            }
        });
    }

    let exact = if r.entries.contains_key("exact.1") {
        let components = (1..=dim)
            .map(|c| r.expression(&format!("exact.{c}"), Scope::Exact, dim))
            .collect::<Result<Vec<_>, _>>()?;
        let kind = match r.take("exact_kind").map(|e| e.value) {
            None => ExactKind::Exact,
            Some(v) if v.trim() == "exact" => ExactKind::Exact,
            Some(v) if v.trim() == "approximate" => ExactKind::Approximate,
            Some(v) => {
                return Err(ProblemError::Schema(format!(
                    "`exact_kind`: expected exact or approximate, got `{v}`"
                )))
            }
        };
        Some(ExactSolution { components, kind })
    } else {
        None
    };

    if let Some(key) = r.entries.keys().next() {
        return Err(ProblemError::Schema(format!("unexpected key `{key}`")));
    }

    Ok(ProblemSpec {
        order,
        dim,
        f,
        kernel,
        interval: (interval[0], interval[1]),
        initial,
        exact,
    })
}

/// Prints a problem in the text file format. Every evaluator must be
/// expression-backed.
pub fn to_text(spec: &ProblemSpec) -> Result<String, ProblemError> {
    fn src(e: &Evaluator, key: &str) -> Result<String, ProblemError> {
        e.expr()
            .map(|x| x.to_string())
            .ok_or_else(|| ProblemError::NotPrintable(format!("`{key}` is not expression-backed")))
    }
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut out = String::new();
    let _ = writeln!(out, "order = {}", spec.order);
    let _ = writeln!(out, "dim = {}", spec.dim);
    let _ = writeln!(
        out,
        "interval = [{}]",
        list(&[spec.interval.0, spec.interval.1])
    );
    let _ = writeln!(out, "initial = [{}]", list(&spec.initial));
    for (c, f) in spec.f.iter().enumerate() {
        let key = format!("f.{}", c + 1);
        let _ = writeln!(out, "{key} = {}", src(f, &key)?);
    }
    for (c, k) in spec.kernel.iter().enumerate() {
        let base = format!("kernel.{}", c + 1);
        let _ = writeln!(out, "{base}.form = {}", k.tag());
        match k {
            KernelForm::Separable { k1, k2 } => {
                let _ = writeln!(out, "{base}.K1 = {}", src(k1, &base)?);
                let _ = writeln!(out, "{base}.K2 = {}", src(k2, &base)?);
            }
            KernelForm::Xt(e) | KernelForm::Yt(e) | KernelForm::Dyt(e) | KernelForm::System(e) => {
                let _ = writeln!(out, "{base}.K = {}", src(e, &base)?);
            }
        }
    }
    if let Some(exact) = &spec.exact {
        for (c, e) in exact.components.iter().enumerate() {
            let key = format!("exact.{}", c + 1);
            let _ = writeln!(out, "{key} = {}", src(e, &key)?);
        }
        let kind = match exact.kind {
            ExactKind::Exact => "exact",
            ExactKind::Approximate => "approximate",
        };
        let _ = writeln!(out, "exact_kind = {kind}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, Args};

    const EXAMPLE_7: &str = "\
# y' = 3x^2 - x^4/3 + int_0^x x t^2 dt
order = 1
interval = [0, 1]
initial = [0]
f.1 = \"3*x^2 - x^4/3\"
kernel.1.form = xt
kernel.1.K = x*t^2
exact.1 = x^3
";

    fn same_kernel(a: &KernelForm, b: &KernelForm, args: &Args<'_>) -> bool {
        a.eval(args).unwrap().to_bits() == b.eval(args).unwrap().to_bits()
    }

    #[test]
    fn text_file_matches_catalog_entry() {
        let spec = load(EXAMPLE_7).unwrap();
        let reference = builtin(7).unwrap();
        assert_eq!(spec.order, 1);
        assert_eq!(spec.initial, vec![0.0]);
        assert_eq!(spec.kernel[0].tag(), "xt");
        for i in 0..=4 {
            let x = i as f64 / 4.0;
            let a = Args {
                x,
                t: x,
                y: &[0.5],
                dy: &[],
            };
            assert_eq!(
                spec.f[0].eval(&a).unwrap(),
                reference.f[0].eval(&a).unwrap()
            );
            let k_file = spec.kernel[0]
                .eval(&Args {
                    x,
                    t: 0.5,
                    y: &[0.0],
                    dy: &[],
                })
                .unwrap();
            let k_cat = reference.kernel[0]
                .eval(&Args {
                    x,
                    t: 0.5,
                    y: &[0.0],
                    dy: &[],
                })
                .unwrap();
            assert!((k_file - k_cat).abs() < 1e-15);
        }
    }

    #[test]
    fn json_is_equivalent() {
        let json = r#"{
            "order": 1, "interval": [0, 1], "initial": [0],
            "f.1": "3*x^2 - x^4/3", "kernel.1.form": "xt", "kernel.1.K": "x*t^2",
            "exact.1": "x^3", "exact_kind": "exact"
        }"#;
        let a = load(json).unwrap();
        let b = load(EXAMPLE_7).unwrap();
        assert_eq!(to_text(&a).unwrap(), to_text(&b).unwrap());
    }

    #[test]
    fn higher_order_vector_is_schema_error() {
        let src = "order = 2\ndim = 2\ninterval = [0, 1]\ninitial = [0, 0, 0, 0]\n";
        assert!(matches!(load(src), Err(ProblemError::Schema(m)) if m.contains("scalar")));
    }

    #[test]
    fn degenerate_interval_is_validation_error() {
        let src = EXAMPLE_7.replace("[0, 1]", "[1,1]");
        match load(&src) {
            Err(ProblemError::Invalid(errors)) => assert!(errors[0].contains("empty interval")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn expression_errors_carry_line_numbers() {
        let src = EXAMPLE_7.replace("x*t^2", "x*t^^2");
        match load(&src) {
            Err(ProblemError::Expression { line, key, .. }) => {
                assert_eq!(line, Some(7));
                assert_eq!(key, "kernel.1.K");
            }
            other => panic!("expected expression error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(load("dim = 1\n"), Err(ProblemError::Schema(_))));
        let bad_form = EXAMPLE_7.replace("form = xt", "form = xyz");
        assert!(matches!(load(&bad_form), Err(ProblemError::Schema(m)) if m.contains("xyz")));
        let extra = format!("{EXAMPLE_7}colour = blue\n");
        assert!(matches!(load(&extra), Err(ProblemError::Schema(m)) if m.contains("colour")));
        assert!(matches!(
            load("order 1"),
            Err(ProblemError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn every_catalog_entry_round_trips() {
        for id in 1..=14 {
            let spec = builtin(id).unwrap();
            let text = to_text(&spec).unwrap();
            let again = load(&text).unwrap();
            assert_eq!(text, to_text(&again).unwrap(), "example {id}");
            let d = spec.dim;
            let y: Vec<f64> = (0..d).map(|c| 0.4 + 0.1 * c as f64).collect();
            let dy: Vec<f64> = (0..d).map(|c| 0.7 - 0.2 * c as f64).collect();
            for k in 1..=4 {
                let x = k as f64 / 4.0;
                let args = Args {
                    x,
                    t: 0.5 * x,
                    y: &y,
                    dy: &dy,
                };
                for c in 0..d {
                    assert_eq!(
                        spec.f[c].eval(&args).unwrap().to_bits(),
                        again.f[c].eval(&args).unwrap().to_bits()
                    );
                    assert!(same_kernel(&spec.kernel[c], &again.kernel[c], &args));
                }
            }
        }
    }
}
