//! Command-line front end for `vide`: solve one problem to a tolerance,
//! regenerate the N₁/N₂ tables for the catalog, or run a convergence study.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use clap::{Args as ClapArgs, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use vide::problem::{builtin, catalog, ProblemError, ProblemSpec};
use vide::richardson::{
    build_tower, extrapolate, solve_tolerance, ErrorMode, ToleranceError, ToleranceOptions,
};
use vide::solver::{Solution, SolveError};
use vide::transform::{map_back, to_unit, TransformError};

#[derive(Debug, Parser)]
#[command(
    name = "vide",
    version,
    about = "Solve Volterra integro-differential equations to a tolerance"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a catalog example or a problem file to a tolerance.
    Solve(SolveArgs),
    /// Node counts for tolerances 1e-6 and 1e-12 across the catalog.
    Tables(TablesArgs),
    /// Error and empirical order as the grid is refined.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Abs,
    Rel,
}

impl From<Mode> for ErrorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Abs => ErrorMode::Absolute,
            Mode::Rel => ErrorMode::Relative,
        }
    }
}

#[derive(Debug, ClapArgs)]
#[command(group = clap::ArgGroup::new("problem").required(true))]
pub struct SolveArgs {
    /// Catalog example (1-14).
    #[arg(long, group = "problem")]
    pub example: Option<usize>,
    /// Problem file (key = value lines, or JSON).
    #[arg(long, group = "problem")]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Mode::Abs)]
    pub mode: Mode,
    /// Solve on [A, B] instead, via the unit-interval transform.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Write every node as `x,y...` to this file.
    #[arg(long)]
    pub dump_nodes: Option<PathBuf>,
    /// Write the run record as CSV to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Coarse steps of the pilot tower.
    #[arg(long)]
    pub pilot: Option<usize>,
    /// Most steps allowed on the finest of the five grids.
    #[arg(long)]
    pub max_level_steps: Option<usize>,
}

#[derive(Debug, ClapArgs)]
pub struct TablesArgs {
    /// Comma-separated example ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Run examples on separate threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, ClapArgs)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub example: usize,
    /// Orders to report: 1 is the raw Euler trajectory, 2-5 the extrapolants.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5])]
    pub orders: Vec<usize>,
    /// Number of grid doublings.
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Coarsest step count.
    #[arg(long, default_value_t = 8)]
    pub n0: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Tolerance(#[from] ToleranceError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad record: {0}")]
    Record(String),
}

impl CliError {
    /// 1: invalid input, 2: tolerance not reached, 3: evaluation failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Tolerance(ToleranceError::Unattainable { .. }) => 2,
            CliError::Tolerance(ToleranceError::Solver {
                source: SolveError::Domain { .. } | SolveError::NonFinite { .. },
                ..
            }) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One tolerance-driven solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub epsilon: f64,
    pub mode: Mode,
    pub steps: usize,
    pub h: f64,
    pub estimate: f64,
    /// Max-node error against the stated solution; absent when the problem
    /// has none or only an approximate one.
    pub error: Option<f64>,
    pub ms: f64,
}

pub const RECORD_HEADER: [&str; 8] = [
    "problem", "epsilon", "mode", "N", "h", "estimate", "error", "ms",
];

/// 17 significant digits, enough to reproduce any `f64`.
pub fn exact_digits(v: f64) -> String {
    format!("{v:.16e}")
}

/// 6 significant digits for console tables.
pub fn short(v: f64) -> String {
    format!("{v:.5e}")
}

impl RunRecord {
    pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RECORD_HEADER)?;
        for r in records {
            let mode = match r.mode {
                Mode::Abs => "abs",
                Mode::Rel => "rel",
            };
            w.write_record([
                r.problem.clone(),
                exact_digits(r.epsilon),
                mode.to_string(),
                r.steps.to_string(),
                exact_digits(r.h),
                exact_digits(r.estimate),
                r.error.map(exact_digits).unwrap_or_default(),
                exact_digits(r.ms),
            ])?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: "csv output".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, CliError> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(RECORD_HEADER) {
            return Err(CliError::Record("unexpected header".into()));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| CliError::Record(format!("{s:?}: {e}")))
        };
        let mut out = Vec::new();
        for row in r.records() {
            let row = row?;
            if row.len() != RECORD_HEADER.len() {
                return Err(CliError::Record(format!("{} fields", row.len())));
            }
            let mode = Mode::from_str(&row[2], false).map_err(CliError::Record)?;
            out.push(RunRecord {
                problem: row[0].to_string(),
                epsilon: num(&row[1])?,
                mode,
                steps: row[3]
                    .parse()
                    .map_err(|e| CliError::Record(format!("N: {e}")))?,
                h: num(&row[4])?,
                estimate: num(&row[5])?,
                error: if row[6].is_empty() {
                    None
                } else {
                    Some(num(&row[6])?)
                },
                ms: num(&row[7])?,
            });
        }
        Ok(out)
    }

    fn console(&self) -> String {
        let mut s = String::new();
        let mode = if self.mode == Mode::Abs {
            "absolute"
        } else {
            "relative"
        };
        let _ = writeln!(s, "problem    {}", self.problem);
        let _ = writeln!(s, "tolerance  {} ({mode})", short(self.epsilon));
        let _ = writeln!(s, "N          {}", self.steps);
        let _ = writeln!(s, "h          {}", short(self.h));
        let _ = writeln!(s, "estimate   {}", short(self.estimate));
        match self.error {
            Some(e) => {
                let _ = writeln!(s, "error      {}", short(e));
            }
            None => {
                let _ = writeln!(s, "error      n/a (no exact solution)");
            }
        }
        let _ = writeln!(s, "time       {:.3} ms", self.ms);
        s
    }
}

/// `(x, state)` at every node.
pub type Nodes = Vec<(f64, Vec<f64>)>;

/// Max-node error against the problem's stated solution, if it is exact.
fn error_vs_exact(spec: &ProblemSpec, nodes: &[(f64, Vec<f64>)]) -> Option<f64> {
    let exact = spec.exact_solution()?;
    let mut worst = 0.0_f64;
    for (x, y) in nodes {
        let want = exact.eval(*x).ok()?;
        for (a, b) in want.iter().zip(y) {
            worst = worst.max((a - b).abs());
        }
    }
    Some(worst)
}

fn solution_nodes(sol: &Solution) -> Nodes {
    sol.grid
        .nodes()
        .enumerate()
        .map(|(i, x)| (x, sol.state(i)))
        .collect()
}

/// Solves `spec` to `epsilon`, on `interval` through the unit transform when given.
pub fn solve_record(
    spec: &ProblemSpec,
    label: &str,
    epsilon: f64,
    mode: Mode,
    interval: Option<(f64, f64)>,
    options: &ToleranceOptions,
) -> Result<(RunRecord, Nodes), CliError> {
    let start = Instant::now();
    let (record_spec, nodes, report) = match interval {
        None => {
            let (sol, report) = solve_tolerance(spec, epsilon, mode.into(), options)?;
            (spec.clone(), solution_nodes(&sol), report)
        }
        Some((a, b)) => {
            let mut moved = spec.clone();
            // The stated solution only carries over if the start point is unchanged.
            if a != spec.interval.0 {
                moved.exact = None;
            }
            moved.interval = (a, b);
            let (unit, map) = to_unit(&moved)?;
            let (sol, mut report) = solve_tolerance(&unit, epsilon, mode.into(), options)?;
            report.h_selected *= map.scale;
            let mapped = map_back(sol, map);
            let nodes = mapped
                .nodes()
                .enumerate()
                .map(|(i, x)| (x, mapped.unit.state(i)))
                .collect();
            (moved, nodes, report)
        }
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let record = RunRecord {
        problem: label.to_string(),
        epsilon,
        mode,
        steps: report.steps_selected,
        h: report.h_selected,
        estimate: report.error_estimate,
        error: error_vs_exact(&record_spec, &nodes),
        ms,
    };
    Ok((record, nodes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<RunRecord, CliError> {
    let (spec, label) = match (&args.example, &args.file) {
        (Some(id), _) => (builtin(*id)?, format!("example {id}")),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            (vide::load(&text)?, path.display().to_string())
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --example or --file is required".into(),
            ))
        }
    };
    let interval = args.interval.as_ref().map(|v| (v[0], v[1]));
    let mut options = ToleranceOptions::default();
    if let Some(p) = args.pilot {
        options.pilot_steps = p;
    }
    if let Some(m) = args.max_level_steps {
        options.max_level_steps = m;
    }
    let (record, nodes) = solve_record(&spec, &label, args.tol, args.mode, interval, &options)?;
    write!(out, "{}", record.console()).map_err(io_err(Path::new("stdout")))?;

    if let Some(path) = &args.dump_nodes {
        let mut text = String::new();
        let d = nodes.first().map_or(1, |(_, y)| y.len());
        text.push('x');
        for c in 1..=d {
            if d == 1 {
                text.push_str(",y");
            } else {
                let _ = write!(text, ",y{c}");
            }
        }
        text.push('\n');
        for (x, y) in &nodes {
            text.push_str(&exact_digits(*x));
            for v in y {
                text.push(',');
                text.push_str(&exact_digits(*v));
            }
            text.push('\n');
        }
        write_file(path, text.as_bytes())?;
    }
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        RunRecord::write_csv(std::slice::from_ref(&record), &mut buf)?;
        write_file(path, &buf)?;
    }
    Ok(record)
}

pub const TABLE_HEADER: [&str; 7] = ["example", "N1", "N2", "err1", "err2", "ms1", "ms2"];

/// One catalog example at both tolerances. A failed run keeps its message
/// in place of the numbers.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub example: usize,
    pub runs: [Result<RunRecord, String>; 2],
}

fn table_row(id: usize) -> TableRow {
    let run = |eps: f64| -> Result<RunRecord, String> {
        let spec = builtin(id).map_err(|e| e.to_string())?;
        solve_record(
            &spec,
            &id.to_string(),
            eps,
            Mode::Abs,
            None,
            &ToleranceOptions::default(),
        )
        .map(|(r, _)| r)
        .map_err(|e| e.to_string())
    };
    TableRow {
        example: id,
        runs: [run(1e-6), run(1e-12)],
    }
}

pub fn cmd_tables(args: &TablesArgs, out: &mut dyn Write) -> Result<Vec<TableRow>, CliError> {
    let ids: Vec<usize> = match &args.subset {
        Some(ids) => ids.clone(),
        None => catalog().iter().map(|e| e.id).collect(),
    };
    for &id in &ids {
        builtin(id)?;
    }
    let rows: Vec<TableRow> = if args.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = ids
                .iter()
                .map(|&id| s.spawn(move || table_row(id)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("table worker panicked"))
                .collect()
        })
    } else {
        ids.iter().map(|&id| table_row(id)).collect()
    };

    let mut text = format!(
        "{:>7} {:>8} {:>8} {:>8} {:>8} {:>7} {:>12} {:>12} {:>10} {:>10}\n",
        "example", "N1", "ref", "N2", "ref", "N2/N1", "err1", "err2", "ms1", "ms2"
    );
    for row in &rows {
        let entry = &catalog()[row.example - 1];
        let n = |r: &Result<RunRecord, String>| {
            r.as_ref()
                .map_or("failed".to_string(), |r| r.steps.to_string())
        };
        let err = |r: &Result<RunRecord, String>| match r {
            Ok(r) => r
                .error
                .map_or_else(|| format!("~{}", short(r.estimate)), short),
            Err(_) => "-".into(),
        };
        let ms = |r: &Result<RunRecord, String>| {
            r.as_ref().map_or("-".into(), |r| format!("{:.3}", r.ms))
        };
        let ratio = match &row.runs {
            [Ok(a), Ok(b)] => format!("{:.1}", b.steps as f64 / a.steps as f64),
            _ => "-".into(),
        };
        let _ = writeln!(
            text,
            "{:>7} {:>8} {:>8} {:>8} {:>8} {:>7} {:>12} {:>12} {:>10} {:>10}",
            row.example,
            n(&row.runs[0]),
            entry.reference_n1,
            n(&row.runs[1]),
            entry.reference_n2,
            ratio,
            err(&row.runs[0]),
            err(&row.runs[1]),
            ms(&row.runs[0]),
            ms(&row.runs[1]),
        );
        for r in row.runs.iter().filter_map(|r| r.as_ref().err()) {
            let _ = writeln!(text, "        example {}: {r}", row.example);
        }
    }
    if rows.iter().any(|r| {
        r.runs
            .iter()
            .any(|r| matches!(r, Ok(r) if r.error.is_none()))
    }) {
        text.push_str("~ internal estimate; the stated solution is approximate\n");
    }
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("stdout")))?;

    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TABLE_HEADER)?;
        for row in &rows {
            let mut cells = vec![row.example.to_string()];
            let [a, b] = &row.runs;
            for r in [a, b] {
                cells.push(r.as_ref().map_or(String::new(), |r| r.steps.to_string()));
            }
            for r in [a, b] {
                cells.push(match r {
                    Ok(r) => r.error.map(exact_digits).unwrap_or_default(),
                    Err(msg) => format!("failed: {msg}"),
                });
            }
            for r in [a, b] {
                cells.push(r.as_ref().map_or(String::new(), |r| exact_digits(r.ms)));
            }
            w.write_record(&cells)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Record(e.to_string()))?;
        write_file(path, &bytes)?;
    }
    Ok(rows)
}

/// Errors per order (rows) and level (columns) of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub steps: Vec<usize>,
    pub orders: Vec<usize>,
    pub errors: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    /// `log₂(e[k−1]/e[k])` between consecutive levels for row `r`.
    pub fn slopes(&self, r: usize) -> Vec<f64> {
        self.errors[r]
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .collect()
    }
}

pub fn cmd_convergence(
    args: &ConvergenceArgs,
    out: &mut dyn Write,
) -> Result<ConvergenceTable, CliError> {
    if let Some(bad) = args.orders.iter().find(|&&p| !(1..=5).contains(&p)) {
        return Err(CliError::Usage(format!(
            "unsupported order {bad} (expected 1-5)"
        )));
    }
    if args.orders.is_empty() || args.levels < 2 || args.n0 == 0 {
        return Err(CliError::Usage(
            "need at least one order, two levels and --n0 >= 1".into(),
        ));
    }
    let spec = builtin(args.example)?;
    if spec.exact_solution().is_none() {
        return Err(CliError::Usage(format!(
            "example {} has no exact solution to measure against",
            args.example
        )));
    }
    let steps: Vec<usize> = (0..args.levels).map(|l| args.n0 << l).collect();
    let mut errors = vec![Vec::new(); args.orders.len()];
    for &n in &steps {
        let tower = build_tower(&spec, n)?;
        let ex = extrapolate(&tower);
        for (r, &p) in args.orders.iter().enumerate() {
            let values = if p == 1 {
                tower.levels[0].y.clone()
            } else {
                ex.order(p).expect("order checked above").clone()
            };
            let sol = Solution {
                grid: tower.base,
                values,
            };
            errors[r].push(error_vs_exact(&spec, &solution_nodes(&sol)).unwrap_or(f64::NAN));
        }
    }
    let table = ConvergenceTable {
        steps,
        orders: args.orders.clone(),
        errors,
    };

    let mut text = format!(
        "example {}: max-node error and log2 slope\n{:>8}",
        args.example, "N"
    );
    for p in &table.orders {
        let _ = write!(text, " {:>13} {:>7}", format!("order {p}"), "slope");
    }
    text.push('\n');
    for (l, n) in table.steps.iter().enumerate() {
        let _ = write!(text, "{n:>8}");
        for r in 0..table.orders.len() {
            let slope = if l == 0 {
                "".to_string()
            } else {
                format!("{:.3}", table.slopes(r)[l - 1])
            };
            let _ = write!(text, " {:>13} {slope:>7}", short(table.errors[r][l]));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("stdout")))?;
    Ok(table)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, out).map(drop),
        Command::Tables(a) => cmd_tables(a, out).map(drop),
        Command::Convergence(a) => cmd_convergence(a, out).map(drop),
    }
}
