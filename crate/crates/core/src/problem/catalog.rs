//! The fourteen reference problems, posed on `[0, 1]`.
//!
//! Each entry is stored in the problem-file format and loaded on demand.
//! Initial values come from the stated solutions. Kernels that factor as
//! `K₁(x)·K₂(y, t)` are declared separable so the solver can use running sums.

use super::{load, ProblemError, ProblemSpec};

pub const CATALOG_SIZE: usize = 14;

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub id: usize,
    /// Human-readable statement of the equation.
    pub equation: &'static str,
    pub solution: &'static str,
    /// Published node counts for tolerances 1e-6 and 1e-12.
    pub reference_n1: usize,
    pub reference_n2: usize,
    source: &'static str,
}

const ENTRIES: [CatalogEntry; CATALOG_SIZE] = [
    CatalogEntry {
        id: 1,
        equation: "y' = -1 + int y^2 dt",
        solution: "y ~ (-x + x^4/28)/(1 + x^3/21)",
        reference_n1: 19,
        reference_n2: 1892,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = -1
kernel.1.form = yt
kernel.1.K = y^2
exact.1 = (-x + x^4/28)/(1 + x^3/21)
exact_kind = approximate
",
    },
    CatalogEntry {
        id: 2,
        equation: "y' = 1 + int y y' dt",
        solution: "y = sqrt(2) tan(x/sqrt(2))",
        reference_n1: 86,
        reference_n2: 8513,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = 1
kernel.1.form = dyt
kernel.1.K = y*dy
exact.1 = sqrt(2)*tan(x/sqrt(2))
",
    },
    CatalogEntry {
        id: 3,
        equation: "y' = cos x - x/2 - sin(2x)/4 + int (y')^2 dt",
        solution: "y = sin x",
        reference_n1: 124,
        reference_n2: 12322,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = cos(x) - x/2 - sin(2*x)/4
kernel.1.form = dyt
kernel.1.K = dy^2
exact.1 = sin(x)
",
    },
    CatalogEntry {
        id: 4,
        equation: "y' = g(x) y - int x^2 t^2 (y')^3 dt",
        solution: "y = cos x",
        reference_n1: 38,
        reference_n2: 3718,
        source: "\
order = 1
interval = [0, 1]
initial = [1]
f.1 = (-27*sin(x) + 27*x^4*cos(x) - 42*x^2*cos(x) + 2*x^2*cos(x)^3 - 9*x^4*cos(x)^3 - 42*x^3*sin(x) + 6*x^3*cos(x)^2*sin(x) + 40*x^2)/(27*cos(x))*y
kernel.1.form = separable
kernel.1.K1 = x^2
kernel.1.K2 = -t^2*dy^3
exact.1 = cos(x)
",
    },
    CatalogEntry {
        id: 5,
        equation: "y' = (-e^x - x^2 e^(2x)/3) y^2 + int t^2/x dt",
        solution: "y = e^(-x)",
        reference_n1: 34,
        reference_n2: 3344,
        source: "\
order = 1
interval = [0, 1]
initial = [1]
f.1 = (-exp(x) - x^2*exp(2*x)/3)*y^2
kernel.1.form = separable
kernel.1.K1 = 1/x
kernel.1.K2 = t^2
exact.1 = exp(-x)
",
    },
    CatalogEntry {
        id: 6,
        equation: "y' = (x^2+x+3)/(3(x+1)) + (2x^3-3x^2)/18 - y(x^3+1)/3 + int y t^2 dt",
        solution: "y = ln(1+x)",
        reference_n1: 17,
        reference_n2: 1642,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = (x^2 + x + 3)/(3*(x + 1)) + (2*x^3 - 3*x^2)/18 - y*(x^3 + 1)/3
kernel.1.form = yt
kernel.1.K = y*t^2
exact.1 = ln(1 + x)
",
    },
    CatalogEntry {
        id: 7,
        equation: "y' = 3x^2 - x^4/3 + int x t^2 dt",
        solution: "y = x^3",
        reference_n1: 26,
        reference_n2: 2570,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = 3*x^2 - x^4/3
kernel.1.form = separable
kernel.1.K1 = x
kernel.1.K2 = t^2
exact.1 = x^3
",
    },
    CatalogEntry {
        id: 8,
        equation: "y' = y - x^2 e^x/2 + int e^x t dt",
        solution: "y = e^x",
        reference_n1: 45,
        reference_n2: 4463,
        source: "\
order = 1
interval = [0, 1]
initial = [1]
f.1 = y - x^2*exp(x)/2
kernel.1.form = separable
kernel.1.K1 = exp(x)
kernel.1.K2 = t
exact.1 = exp(x)
",
    },
    CatalogEntry {
        id: 9,
        equation: "y' = (2x^3+2x)/(y+1) - x^5/4 + int x y t dt",
        solution: "y = x^2",
        reference_n1: 33,
        reference_n2: 3238,
        source: "\
order = 1
interval = [0, 1]
initial = [0]
f.1 = (2*x^3 + 2*x)/(y + 1) - x^5/4
kernel.1.form = separable
kernel.1.K1 = x
kernel.1.K2 = y*t
exact.1 = x^2
",
    },
    CatalogEntry {
        id: 10,
        equation: "y'' = x cosh x - int y t dt",
        solution: "y = sinh x",
        reference_n1: 30,
        reference_n2: 2937,
        source: "\
order = 2
interval = [0, 1]
initial = [0, 1]
f.1 = x*cosh(x)
kernel.1.form = yt
kernel.1.K = -y*t
exact.1 = sinh(x)
",
    },
    CatalogEntry {
        id: 11,
        equation: "y'' = [((ln(1+x)-1)(x+1)+1)/((x^2+1)(4x^2+4x+1))] y^2 - int ln(t+1)/(x^2+1) dt",
        solution: "y = 2x + 1",
        reference_n1: 13,
        reference_n2: 1235,
        source: "\
order = 2
interval = [0, 1]
initial = [1, 2]
f.1 = ((ln(1 + x) - 1)*(x + 1) + 1)/((x^2 + 1)*(4*x^2 + 4*x + 1))*y^2
kernel.1.form = separable
kernel.1.K1 = -1/(x^2 + 1)
kernel.1.K2 = ln(t + 1)
exact.1 = 2*x + 1
",
    },
    CatalogEntry {
        id: 12,
        equation: "y''' = e^x + e^(-x) - 1 + int 1/y dt",
        solution: "y = e^x",
        reference_n1: 33,
        reference_n2: 3286,
        source: "\
order = 3
interval = [0, 1]
initial = [1, 1, 1]
f.1 = exp(x) + exp(-x) - 1
kernel.1.form = yt
kernel.1.K = 1/y
exact.1 = exp(x)
",
    },
    CatalogEntry {
        id: 13,
        equation: "y1' = 2x - x^5/5 - x^10/10 + int (y1^2 + y2^3) dt; y2' = 3x^2 + int (y1^3 - y2^2) dt",
        solution: "y1 = x^2, y2 = x^3",
        reference_n1: 83,
        reference_n2: 8201,
        source: "\
order = 1
dim = 2
interval = [0, 1]
initial = [0, 0]
f.1 = 2*x - x^5/5 - x^10/10
f.2 = 3*x^2
kernel.1.form = system
kernel.1.K = y1^2 + y2^3
kernel.2.form = system
kernel.2.K = y1^3 - y2^2
exact.1 = x^2
exact.2 = x^3
",
    },
    CatalogEntry {
        id: 14,
        equation: "y1' = 1 + x + x^2 - y2 - int (y1 + y2) dt; y2' = -1 - x + y1 - int (y1 - y2) dt",
        solution: "y1 = x + e^x, y2 = x - e^x",
        reference_n1: 30,
        reference_n2: 2939,
        source: "\
order = 1
dim = 2
interval = [0, 1]
initial = [1, -1]
f.1 = 1 + x + x^2 - y2
f.2 = -1 - x + y1
kernel.1.form = system
kernel.1.K = -(y1 + y2)
kernel.2.form = system
kernel.2.K = -(y1 - y2)
exact.1 = x + exp(x)
exact.2 = x - exp(x)
",
    },
];

pub fn catalog() -> &'static [CatalogEntry] {
    &ENTRIES
}

impl CatalogEntry {
    /// Problem-file text of this entry.
    pub fn source(&self) -> &'static str {
        self.source
    }
}

/// Returns reference example `id` (1-based).
pub fn builtin(id: usize) -> Result<ProblemSpec, ProblemError> {
    let entry = id
        .checked_sub(1)
        .and_then(|i| ENTRIES.get(i))
        .ok_or(ProblemError::UnknownExample(id))?;
    Ok(load(entry.source).expect("catalog entries are well-formed"))
}
