//! Run configuration in a sectioned `key = value` format.
//!
//! ```text
//! # comment
//! [model]
//! epsilon = 1
//! c = 1.4142135623730951
//! a = 1
//!
//! [initial]
//! f0 = gaussian(0, 1)
//! f1 = zero
//!
//! [rhs]
//! preset = sine-gordon
//! beta_F = 1
//!
//! [grid]
//! x_min = -6
//! x_max = 6
//! nx = 241
//! T = 1
//! nt = 40
//! ```
//!
//! Sections `model`, `initial`, `rhs` and `grid` are required; `solver`,
//! `output` and `oracle` fall back to defaults. Initial data are presets
//! (`zero`, `constant(v)`, `gaussian(center, width)`, `sine(k)`,
//! `tanh-front(center, width)`) or expressions in `x`. The right-hand side
//! is a `preset` (`zero`, `source` with `value`, `sine-gordon`, `cubic` with
//! `u_max`) or an `expression` in `x, t, u, p`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use greenwave_core::oracle::{Boundary, FdConfig, Integrator};
use greenwave_core::picard::{Problem, RhsSpec, SolverConfig};
use greenwave_core::potentials::{GridSpec, PotentialConfig, Preset, SampledFunction};
use greenwave_core::ModelParams;
use thiserror::Error;

use crate::expr::{Env, Expression, Var};

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// Every violation found, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid configuration ({} problem",
            self.violations.len()
        )?;
        if self.violations.len() != 1 {
            f.write_str("s")?;
        }
        f.write_str(")")?;
        for v in &self.violations {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    pub fn mentions(&self, text: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(text))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub epsilon: f64,
    pub c: f64,
    pub a: f64,
}

/// Initial datum: a closed-form profile or an expression in `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Preset(Preset),
    Expression(Expression),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSection {
    pub f0: DataSpec,
    pub f1: DataSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhsChoice {
    Zero,
    Source { value: f64 },
    SineGordon,
    Cubic { u_max: f64 },
    Expression(Expression),
}

impl RhsChoice {
    /// Lipschitz constant of a preset; `None` for expressions.
    pub fn intrinsic_lipschitz(&self) -> Option<f64> {
        match self {
            RhsChoice::Zero | RhsChoice::Source { .. } => Some(0.0),
            RhsChoice::SineGordon => Some(1.0),
            RhsChoice::Cubic { .. } => Some(1.125),
            RhsChoice::Expression(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsSection {
    pub choice: RhsChoice,
    pub beta_f: Option<f64>,
    pub sup_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub horizon: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub theta: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            theta: d.theta,
            tol: d.tol,
            max_iters: d.max_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: Option<String>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// Finite-difference reference settings; `dx` defaults to half the grid spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSection {
    pub dx: Option<f64>,
    pub levels: usize,
    pub boundary: Boundary,
    /// Allowance added to the certified band when comparing.
    pub slack: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            dx: None,
            levels: 3,
            boundary: Boundary::FrozenFarfield,
            slack: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub rhs: RhsSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub oracle: OracleSection,
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

struct Reader {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
    violations: Vec<Violation>,
}

const SECTIONS: &[(&str, &[&str], bool)] = &[
    ("model", &["epsilon", "c", "a"], true),
    ("initial", &["f0", "f1"], true),
    (
        "rhs",
        &[
            "preset",
            "expression",
            "value",
            "u_max",
            "beta_F",
            "sup_bound",
        ],
        true,
    ),
    ("grid", &["x_min", "x_max", "nx", "T", "nt"], true),
    ("solver", &["theta", "tol", "max_iters"], false),
    ("output", &["directory", "formats"], false),
    ("oracle", &["dx", "levels", "boundary", "slack"], false),
];

impl Reader {
    fn push(&mut self, line: Option<usize>, column: Option<usize>, message: String) {
        self.violations.push(Violation {
            line,
            column,
            message,
        });
    }

    fn lex(text: &str) -> Self {
        let mut r = Reader {
            sections: BTreeMap::new(),
            violations: Vec::new(),
        };
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("");
            let trimmed = body.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = body.len() - body.trim_start().len() + 1;
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    r.push(
                        Some(line),
                        Some(indent),
                        "section header is missing ']'".into(),
                    );
                    current = None;
                    continue;
                };
                let name = name.trim().to_string();
                if !SECTIONS.iter().any(|s| s.0 == name) {
                    r.push(
                        Some(line),
                        Some(indent + 1),
                        format!("unknown section [{name}]"),
                    );
                    current = None;
                    continue;
                }
                if r.sections.contains_key(&name) {
                    r.push(
                        Some(line),
                        Some(indent),
                        format!("section [{name}] appears twice"),
                    );
                }
                r.sections
                    .entry(name.clone())
                    .or_insert_with(|| (line, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let Some(eq) = body.find('=') else {
                r.push(
                    Some(line),
                    Some(indent),
                    "expected 'key = value' or '[section]'".into(),
                );
                continue;
            };
            let key = body[..eq].trim().to_string();
            let value_raw = &body[eq + 1..];
            let value = value_raw.trim().to_string();
            let column = eq + 2 + (value_raw.len() - value_raw.trim_start().len());
            let Some(section) = current.clone() else {
                r.push(
                    Some(line),
                    Some(indent),
                    format!("key '{key}' appears outside any section"),
                );
                continue;
            };
            let allowed = SECTIONS
                .iter()
                .find(|s| s.0 == section)
                .map(|s| s.1)
                .unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                r.push(
                    Some(line),
                    Some(indent),
                    format!("unknown key '{key}' in [{section}]"),
                );
                continue;
            }
            if value.is_empty() {
                r.push(
                    Some(line),
                    Some(eq + 2),
                    format!("key '{key}' has no value"),
                );
                continue;
            }
            let entries = &mut r.sections.get_mut(&section).expect("section registered").1;
            if entries.contains_key(&key) {
                r.push(
                    Some(line),
                    Some(indent),
                    format!("key '{key}' appears twice in [{section}]"),
                );
                continue;
            }
            entries.insert(
                key,
                Entry {
                    value,
                    line,
                    column,
                },
            );
        }
        for (name, _, required) in SECTIONS {
            if *required && !r.sections.contains_key(*name) {
                r.push(None, None, format!("missing required section [{name}]"));
            }
        }
        r
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.1.get(key))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn parse_with<T>(
        &mut self,
        section: &str,
        key: &str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        let e = self.entry(section, key)?;
        let (line, column) = (e.line, e.column);
        match f(&e.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.push(Some(line), Some(column), format!("{section}.{key}: {msg}"));
                None
            }
        }
    }

    fn required<T>(
        &mut self,
        section: &str,
        key: &str,
        f: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        if !self.has_section(section) {
            return None;
        }
        if self.entry(section, key).is_none() {
            let line = self.sections.get(section).map(|s| s.0);
            self.push(
                line,
                None,
                format!("missing required key '{key}' in [{section}]"),
            );
            return None;
        }
        self.parse_with(section, key, f)
    }

    fn located(&self, section: &str, key: &str) -> (Option<usize>, Option<usize>) {
        match self.entry(section, key) {
            Some(e) => (Some(e.line), Some(e.column)),
            None => (self.sections.get(section).map(|s| s.0), None),
        }
    }

    fn check(&mut self, ok: bool, section: &str, key: &str, message: String) {
        if !ok {
            let (l, c) = self.located(section, key);
            self.push(l, c, message);
        }
    }
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

fn count(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("'{s}' is not a nonnegative integer"))
}

fn call_args(s: &str, name: &str) -> Option<Result<Vec<f64>, String>> {
    let rest = s.strip_prefix(name)?.trim_start();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(|a| real(a.trim())).collect())
}

fn data_spec(s: &str) -> Result<DataSpec, String> {
    let arity =
        |args: Result<Vec<f64>, String>, n: usize, what: &str| -> Result<Vec<f64>, String> {
            let args = args?;
            if args.len() != n {
                return Err(format!("{what} takes {n} argument(s), got {}", args.len()));
            }
            Ok(args)
        };
    let preset = if s == "zero" {
        Some(Preset::Zero)
    } else if let Some(a) = call_args(s, "constant") {
        let a = arity(a, 1, "constant")?;
        Some(Preset::Constant { value: a[0] })
    } else if let Some(a) = call_args(s, "gaussian") {
        let a = arity(a, 2, "gaussian")?;
        Some(Preset::Gaussian {
            center: a[0],
            width: a[1],
        })
    } else if let Some(a) = call_args(s, "sine") {
        let a = arity(a, 1, "sine")?;
        Some(Preset::Sine { wavenumber: a[0] })
    } else if let Some(a) = call_args(s, "tanh-front") {
        let a = arity(a, 2, "tanh-front")?;
        Some(Preset::TanhFront {
            center: a[0],
            width: a[1],
        })
    } else {
        None
    };
    if let Some(p) = preset {
        SampledFunction::preset(p).map_err(|e| e.to_string())?;
        return Ok(DataSpec::Preset(p));
    }
    let e = Expression::parse(s).map_err(|e| format!("column {}: {}", e.column, e.message))?;
    if let Some(v) = e.variables().into_iter().find(|v| *v != Var::X) {
        return Err(format!(
            "initial data may depend on x only (found '{}')",
            v.name()
        ));
    }
    Ok(DataSpec::Expression(e))
}

fn boundary(s: &str) -> Result<Boundary, String> {
    match s {
        "frozen-farfield" => Ok(Boundary::FrozenFarfield),
        "homogeneous-neumann" => Ok(Boundary::HomogeneousNeumann),
        _ => Err(format!(
            "unknown boundary '{s}' (frozen-farfield or homogeneous-neumann)"
        )),
    }
}

fn formats(s: &str) -> Result<Vec<Format>, String> {
    let mut out = Vec::new();
    for f in s.split(',').map(str::trim) {
        let fmt = match f {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => return Err(format!("unknown format '{f}' (csv or json)")),
        };
        if !out.contains(&fmt) {
            out.push(fmt);
        }
    }
    out.sort();
    Ok(out)
}

/// Parses and validates a configuration, reporting every violation.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut r = Reader::lex(text);

    let epsilon = r.required("model", "epsilon", real);
    let c = r.required("model", "c", real);
    let a = r.required("model", "a", real);
    if let Some(e) = epsilon {
        r.check(
            e > 0.0 && e.is_finite(),
            "model",
            "epsilon",
            format!("epsilon > 0 required (got {e})"),
        );
    }
    if let Some(c) = c {
        r.check(
            c > 0.0 && c.is_finite(),
            "model",
            "c",
            format!("c > 0 required (got {c})"),
        );
    }
    if let Some(a) = a {
        r.check(
            a > 0.0 && a.is_finite(),
            "model",
            "a",
            format!("a > 0 required (got {a})"),
        );
    }
    if let (Some(e), Some(c), Some(a)) = (epsilon, c, a) {
        if e > 0.0 && c > 0.0 && a > 0.0 {
            let b = c * c / e;
            r.check(
                a < b,
                "model",
                "a",
                format!("a < b required (a = {a}, b = c^2/epsilon = {b})"),
            );
        }
    }

    let f0 = r.required("initial", "f0", data_spec);
    let f1 = r.required("initial", "f1", data_spec);

    let mut choice = None;
    if r.has_section("rhs") {
        let preset = r.parse_with("rhs", "preset", |s| Ok(s.to_string()));
        let expression = r.parse_with("rhs", "expression", |s| {
            Expression::parse(s).map_err(|e| format!("column {}: {}", e.column, e.message))
        });
        let has_expression = r.entry("rhs", "expression").is_some();
        match (&preset, has_expression) {
            (Some(_), true) => r.check(
                false,
                "rhs",
                "expression",
                "give either rhs.preset or rhs.expression, not both".into(),
            ),
            (None, false) if r.entry("rhs", "preset").is_none() => r.check(
                false,
                "rhs",
                "preset",
                "rhs needs a preset or an expression".into(),
            ),
            _ => {}
        }
        if let Some(e) = expression {
            choice = Some(RhsChoice::Expression(e));
        } else if let Some(p) = preset {
            choice = match p.as_str() {
                "zero" => Some(RhsChoice::Zero),
                "sine-gordon" => Some(RhsChoice::SineGordon),
                "source" => r
                    .required("rhs", "value", real)
                    .map(|value| RhsChoice::Source { value }),
                "cubic" => r
                    .required("rhs", "u_max", real)
                    .map(|u_max| RhsChoice::Cubic { u_max }),
                other => {
                    r.check(
                        false,
                        "rhs",
                        "preset",
                        format!(
                            "unknown rhs preset '{other}' (zero, source, sine-gordon or cubic)"
                        ),
                    );
                    None
                }
            };
        }
        let uses = |key: &str| {
            matches!(
                (&choice, key),
                (Some(RhsChoice::Source { .. }), "value")
                    | (Some(RhsChoice::Cubic { .. }), "u_max")
            )
        };
        for key in ["value", "u_max"] {
            if r.entry("rhs", key).is_some() && choice.is_some() && !uses(key) {
                r.check(
                    false,
                    "rhs",
                    key,
                    format!("rhs.{key} does not apply to this right-hand side"),
                );
            }
        }
        if let Some(RhsChoice::Source { value }) = &choice {
            r.check(
                value.is_finite(),
                "rhs",
                "value",
                "rhs.value must be finite".into(),
            );
        }
        if let Some(RhsChoice::Cubic { u_max }) = &choice {
            r.check(
                *u_max > 0.0 && u_max.is_finite(),
                "rhs",
                "u_max",
                "rhs.u_max > 0 required".into(),
            );
        }
    }
    let beta_f = r.parse_with("rhs", "beta_F", real);
    let sup_bound = r.parse_with("rhs", "sup_bound", real);
    if let Some(ch) = &choice {
        if *ch != RhsChoice::Zero && r.entry("rhs", "beta_F").is_none() {
            r.check(
                false,
                "rhs",
                "beta_F",
                "beta_F is required when the right-hand side is not zero".into(),
            );
        }
        if let Some(beta) = beta_f {
            r.check(
                beta >= 0.0 && beta.is_finite(),
                "rhs",
                "beta_F",
                format!("beta_F must be finite and >= 0 (got {beta})"),
            );
            if let Some(own) = ch.intrinsic_lipschitz() {
                r.check(
                    beta >= own,
                    "rhs",
                    "beta_F",
                    format!("beta_F = {beta} understates the preset's Lipschitz constant {own}"),
                );
            }
        }
    }
    if let Some(s) = sup_bound {
        r.check(
            s >= 0.0,
            "rhs",
            "sup_bound",
            format!("sup_bound >= 0 required (got {s})"),
        );
    }

    let x_min = r.required("grid", "x_min", real);
    let x_max = r.required("grid", "x_max", real);
    let nx = r.required("grid", "nx", count);
    let horizon = r.required("grid", "T", real);
    let nt = r.required("grid", "nt", count);
    if let (Some(lo), Some(hi)) = (x_min, x_max) {
        r.check(
            lo.is_finite() && hi.is_finite() && hi > lo,
            "grid",
            "x_max",
            format!("x_max > x_min required (got [{lo}, {hi}])"),
        );
    }
    if let Some(n) = nx {
        r.check(n >= 2, "grid", "nx", format!("nx >= 2 required (got {n})"));
    }
    if let Some(t) = horizon {
        r.check(
            t > 0.0 && t.is_finite(),
            "grid",
            "T",
            format!("T > 0 required (got {t})"),
        );
    }
    if let Some(n) = nt {
        r.check(n >= 1, "grid", "nt", format!("nt >= 1 required (got {n})"));
    }

    let mut solver = SolverSection::default();
    if let Some(v) = r.parse_with("solver", "theta", real) {
        r.check(
            v > 0.0 && v < 1.0,
            "solver",
            "theta",
            format!("0 < theta < 1 required (got {v})"),
        );
        solver.theta = v;
    }
    if let Some(v) = r.parse_with("solver", "tol", real) {
        r.check(
            v > 0.0,
            "solver",
            "tol",
            format!("tol > 0 required (got {v})"),
        );
        solver.tol = v;
    }
    if let Some(v) = r.parse_with("solver", "max_iters", count) {
        r.check(
            v >= 1,
            "solver",
            "max_iters",
            "max_iters >= 1 required".into(),
        );
        solver.max_iters = v;
    }

    let mut output = OutputSection::default();
    if let Some(d) = r.parse_with("output", "directory", |s| Ok(s.to_string())) {
        output.directory = Some(d);
    }
    if let Some(f) = r.parse_with("output", "formats", formats) {
        output.formats = f;
    }

    let mut oracle = OracleSection::default();
    if let Some(v) = r.parse_with("oracle", "dx", real) {
        r.check(
            v > 0.0 && v.is_finite(),
            "oracle",
            "dx",
            format!("oracle.dx > 0 required (got {v})"),
        );
        oracle.dx = Some(v);
    }
    if let Some(v) = r.parse_with("oracle", "levels", count) {
        r.check(
            v >= 2,
            "oracle",
            "levels",
            format!("oracle.levels >= 2 required (got {v})"),
        );
        oracle.levels = v;
    }
    if let Some(b) = r.parse_with("oracle", "boundary", boundary) {
        oracle.boundary = b;
    }
    if let Some(v) = r.parse_with("oracle", "slack", real) {
        r.check(
            v >= 0.0,
            "oracle",
            "slack",
            format!("oracle.slack >= 0 required (got {v})"),
        );
        oracle.slack = v;
    }

    if !r.violations.is_empty() {
        let mut v = r.violations;
        v.sort_by_key(|v| (v.line.unwrap_or(usize::MAX), v.column.unwrap_or(0)));
        return Err(ConfigError { violations: v });
    }
    Ok(RunConfig {
        model: ModelSection {
            epsilon: epsilon.expect("validated above"),
            c: c.expect("validated above"),
            a: a.expect("validated above"),
        },
        initial: InitialSection {
            f0: f0.expect("validated above"),
            f1: f1.expect("validated above"),
        },
        rhs: RhsSection {
            choice: choice.expect("validated above"),
            beta_f,
            sup_bound,
        },
        grid: GridSection {
            x_min: x_min.expect("validated above"),
            x_max: x_max.expect("validated above"),
            nx: nx.expect("validated above"),
            horizon: horizon.expect("validated above"),
            nt: nt.expect("validated above"),
        },
        solver,
        output,
        oracle,
    })
}

fn print_data(d: &DataSpec) -> String {
    match d {
        DataSpec::Preset(p) => match *p {
            Preset::Zero => "zero".into(),
            Preset::Constant { value } => format!("constant({value:?})"),
            Preset::Gaussian { center, width } => format!("gaussian({center:?}, {width:?})"),
            Preset::Sine { wavenumber } => format!("sine({wavenumber:?})"),
            Preset::TanhFront { center, width } => format!("tanh-front({center:?}, {width:?})"),
        },
        DataSpec::Expression(e) => e.source().to_string(),
    }
}

/// Canonical text of a configuration; `parse_config` inverts it.
pub fn print_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "[model]\nepsilon = {:?}\nc = {:?}\na = {:?}\n",
        c.model.epsilon, c.model.c, c.model.a
    );
    let _ = writeln!(
        s,
        "[initial]\nf0 = {}\nf1 = {}\n",
        print_data(&c.initial.f0),
        print_data(&c.initial.f1)
    );
    s.push_str("[rhs]\n");
    match &c.rhs.choice {
        RhsChoice::Zero => s.push_str("preset = zero\n"),
        RhsChoice::Source { value } => {
            let _ = writeln!(s, "preset = source\nvalue = {value:?}");
        }
        RhsChoice::SineGordon => s.push_str("preset = sine-gordon\n"),
        RhsChoice::Cubic { u_max } => {
            let _ = writeln!(s, "preset = cubic\nu_max = {u_max:?}");
        }
        RhsChoice::Expression(e) => {
            let _ = writeln!(s, "expression = {}", e.source());
        }
    }
    if let Some(b) = c.rhs.beta_f {
        let _ = writeln!(s, "beta_F = {b:?}");
    }
    if let Some(b) = c.rhs.sup_bound {
        let _ = writeln!(s, "sup_bound = {b:?}");
    }
    let g = &c.grid;
    let _ = writeln!(
        s,
        "\n[grid]\nx_min = {:?}\nx_max = {:?}\nnx = {}\nT = {:?}\nnt = {}\n",
        g.x_min, g.x_max, g.nx, g.horizon, g.nt
    );
    let _ = writeln!(
        s,
        "[solver]\ntheta = {:?}\ntol = {:?}\nmax_iters = {}\n",
        c.solver.theta, c.solver.tol, c.solver.max_iters
    );
    s.push_str("[output]\n");
    if let Some(d) = &c.output.directory {
        let _ = writeln!(s, "directory = {d}");
    }
    let fmts: Vec<&str> = c.output.formats.iter().map(|f| f.name()).collect();
    let _ = writeln!(s, "formats = {}\n", fmts.join(", "));
    s.push_str("[oracle]\n");
    if let Some(dx) = c.oracle.dx {
        let _ = writeln!(s, "dx = {dx:?}");
    }
    let b = match c.oracle.boundary {
        Boundary::FrozenFarfield => "frozen-farfield",
        Boundary::HomogeneousNeumann => "homogeneous-neumann",
    };
    let _ = writeln!(
        s,
        "levels = {}\nboundary = {b}\nslack = {:?}",
        c.oracle.levels, c.oracle.slack
    );
    s
}

/// Failure to turn a validated configuration into solver inputs.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct BuildError(#[from] pub greenwave_core::Error);

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams, BuildError> {
        Ok(ModelParams::new(
            self.model.epsilon,
            self.model.c,
            self.model.a,
        )?)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, BuildError> {
        let g = &self.grid;
        Ok(GridSpec::new(g.x_min, g.x_max, g.nx, g.horizon, g.nt)?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            theta: self.solver.theta,
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            potentials: PotentialConfig::default(),
        }
    }

    fn sampled(&self, d: &DataSpec) -> Result<SampledFunction, BuildError> {
        match d {
            DataSpec::Preset(p) => Ok(SampledFunction::preset(*p)?),
            DataSpec::Expression(e) => {
                let params = self.params()?;
                let g = &self.grid;
                let half = PotentialConfig::default()
                    .cutoff_half_width(&params, g.x_min, g.x_max, g.horizon);
                let spacing = (g.x_max - g.x_min) / (g.nx - 1) as f64 / 4.0;
                let n = (2.0 * half / spacing).ceil() as usize + 1;
                let expr = e.clone();
                let f = move |x: f64| {
                    expr.eval(&Env {
                        x,
                        ..Default::default()
                    })
                    .map_err(|err| greenwave_core::Error::Evaluation {
                        x,
                        t: 0.0,
                        message: err.message,
                    })
                };
                Ok(SampledFunction::from_expression(
                    e.source(),
                    f,
                    -half,
                    half,
                    n,
                )?)
            }
        }
    }

    pub fn rhs_spec(&self) -> Result<RhsSpec, BuildError> {
        let r = &self.rhs;
        let mut spec = match &r.choice {
            RhsChoice::Zero => RhsSpec::zero(),
            RhsChoice::Source { value } => RhsSpec::source(*value)?,
            RhsChoice::SineGordon => RhsSpec::sine_gordon(),
            RhsChoice::Cubic { u_max } => RhsSpec::cubic(*u_max)?,
            RhsChoice::Expression(e) => {
                let expr = e.clone();
                let f = move |x, t, u, p| {
                    expr.eval(&Env { x, t, u, p }).map_err(|err| {
                        greenwave_core::Error::Evaluation {
                            x,
                            t,
                            message: err.message,
                        }
                    })
                };
                let vars = e.variables();
                let spec = RhsSpec::new(e.source(), f, r.beta_f.unwrap_or(0.0), f64::INFINITY)?;
                if vars.contains(&Var::U) || vars.contains(&Var::P) {
                    spec
                } else {
                    spec.state_free()
                }
            }
        };
        if let Some(beta) = r.beta_f {
            spec = spec.with_lipschitz(beta)?;
        }
        if let Some(sup) = r.sup_bound {
            spec = spec.with_sup_bound(sup)?;
        }
        Ok(spec)
    }

    pub fn problem(&self) -> Result<Problem, BuildError> {
        Ok(Problem::new(
            self.params()?,
            self.sampled(&self.initial.f0)?,
            self.sampled(&self.initial.f1)?,
            self.rhs_spec()?,
            self.grid_spec()?,
        )?)
    }

    /// Oracle settings at the configured (or default) spacing.
    pub fn fd_config(&self, problem: &Problem) -> FdConfig {
        let dx = self.oracle.dx.unwrap_or_else(|| problem.grid.dx() / 2.0);
        FdConfig {
            boundary: self.oracle.boundary,
            integrator: Integrator::Rk4,
            ..FdConfig::for_problem(problem, dx)
        }
    }
}
