//! Library behind the `qfrac` binary: config loading, the four commands and
//! output rendering.

pub mod config;
pub mod verify;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use qfrac_core::expr::Expr;
use qfrac_core::{
    mittag_leffler_partial_sum, solve, CauchyProblem, Fallible, FracOperators, OperatorContext, QError, QLattice,
    SeriesControl,
};

pub use config::{to_config_text, Command, Operator, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_TERMS_ENV: &str = "QFRAC_MAX_TERMS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    TrustRegion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::TrustRegion(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    VerifyFailed(Vec<String>),
    NotConverged { iterations: usize },
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::VerifyFailed(_) => 1,
            Status::NotConverged { .. } => 4,
        }
    }
}

/// Rendered results of one run, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub primary: String,
    /// Separate JSON report (solve with CSV output).
    pub report: Option<String>,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
    pub format: Option<Format>,
    pub max_terms: Option<usize>,
    pub inject_fault: Option<String>,
}

/// Reads `QFRAC_MAX_TERMS` as given (`None` when unset).
pub fn parse_max_terms(raw: Option<&str>) -> Result<Option<usize>, CliError> {
    match raw {
        None => Ok(None),
        Some(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{MAX_TERMS_ENV}: expected a positive integer, got '{text}'"))),
        },
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

impl Invocation {
    fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Command::Verify => Format::Json,
            _ => Format::Csv,
        })
    }

    fn controls(&self) -> (SeriesControl, SeriesControl) {
        let (mut ctrl, mut products) = (SeriesControl::integration(), SeriesControl::products());
        if let Some(n) = self.max_terms {
            ctrl = ctrl.with_max_terms(n);
            products = products.with_max_terms(n);
        }
        (ctrl, products)
    }

    fn header(&self) -> serde_json::Map<String, Value> {
        let mut map = serde_json::Map::new();
        map.insert("schema".into(), json!(SCHEMA_VERSION));
        map.insert("command".into(), json!(self.command.name()));
        map.insert("config".into(), json!(self.config.resolved(self.command)));
        map.insert("max_terms".into(), json!(self.controls().0.max_terms));
        map
    }

    pub fn execute(&self) -> Result<RunOutput, CliError> {
        self.config.validate(self.command)?;
        match self.command {
            Command::Eval => self.eval(),
            Command::Solve => self.solve(),
            Command::Verify => self.verify(),
            Command::Ml => self.ml(),
        }
    }

    fn lattice(&self) -> Result<QLattice, CliError> {
        let c = &self.config;
        QLattice::new(c.b(), c.q(), c.lattice_depth(), c.a()).map_err(|e| CliError::Config(format!("lattice: {e}")))
    }

    fn table(&self, header: &str, rows: &[(f64, f64)]) -> Result<String, CliError> {
        let (x_key, v_key) = header.split_once(',').unwrap_or(("x", "value"));
        Ok(match self.format() {
            Format::Csv => csv_table(header, rows),
            Format::Json => {
                let mut map = self.header();
                map.insert("table".into(), table_json(x_key, v_key, rows));
                pretty(&Value::Object(map))?
            }
        })
    }

    fn eval(&self) -> Result<RunOutput, CliError> {
        let c = &self.config;
        let expr = parse(c, c.function(), &["x"], "function")?;
        let f = Fallible(|x: f64| eval_expr(&expr, &[("x", x)], x));
        let (ctrl, products) = self.controls();
        let ctx = OperatorContext::new(c.params()?, c.a())
            .and_then(|ctx| ctx.with_controls(ctrl, products))
            .map_err(|e| CliError::Config(e.to_string()))?;
        let ops = FracOperators::new(ctx);
        let order = c.order()?;
        let op = c.operator();
        let mut rows = Vec::new();
        for x in self.lattice()?.nodes() {
            if op != Operator::J && c.q() * x < c.a() * (1.0 - 1e-12) {
                continue;
            }
            let value = match op {
                Operator::J => ops.integral(&f, x, order),
                Operator::D => ops.rl_derivative(&f, x, order),
                Operator::Caputo => ops.caputo(&f, x, order),
            }
            .map_err(|e| CliError::Numerical(format!("operator {op} at x={x}: {e}")))?;
            rows.push((x, value));
        }
        Ok(RunOutput {
            primary: self.table("x,value", &rows)?,
            report: None,
            status: Status::Ok,
        })
    }

    fn ml(&self) -> Result<RunOutput, CliError> {
        let c = &self.config;
        let params = c.params()?;
        let (_, products) = self.controls();
        let lattice = QLattice::new(c.b(), c.q(), c.lattice_depth(), 0.0).map_err(|e| CliError::Config(e.to_string()))?;
        let rows = lattice
            .nodes()
            .into_iter()
            .map(|x| {
                mittag_leffler_partial_sum(x, c.m_terms(), c.alpha(), &params, &products)
                    .map(|v| (x, v))
                    .map_err(|e| CliError::Numerical(format!("series at x={x}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RunOutput {
            primary: self.table("x,value", &rows)?,
            report: None,
            status: Status::Ok,
        })
    }

    fn solve(&self) -> Result<RunOutput, CliError> {
        let c = &self.config;
        let source = c.rhs.as_deref().unwrap_or_default();
        let expr = parse(c, source, &["t", "u"], "rhs")?;
        let rhs = |t: f64, u: f64| eval_expr(&expr, &[("t", t), ("u", u)], t);
        let mut problem = CauchyProblem::new(rhs, c.a(), c.b(), c.zeta(), c.order()?, c.params()?, c.r())
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(l) = c.lipschitz_a {
            problem = problem.with_lipschitz(l).map_err(|e| CliError::Config(format!("lipschitz_a: {e}")))?;
        }
        let (ctrl, _) = self.controls();
        let report = solve(&problem, &self.lattice()?, c.tol(), c.max_iter(), &ctrl).map_err(|e| match e {
            QError::TrustRegion { .. } => CliError::TrustRegion(e.to_string()),
            other => CliError::Numerical(format!("solver: {other}")),
        })?;

        let mut rows: Vec<(f64, f64)> = report.nodes.iter().copied().zip(report.solution().iter().copied()).collect();
        rows.push((c.a(), c.zeta()));

        let mut map = self.header();
        map.insert("residuals".into(), json!(report.residuals));
        map.insert("apriori_bounds".into(), json!(report.apriori_bounds));
        map.insert("converged".into(), json!(report.converged));
        map.insert("iterations_used".into(), json!(report.iterations_used));
        map.insert("k_estimate".into(), json!(report.k_estimate));
        map.insert("lipschitz_a_used".into(), json!(report.lipschitz_a));
        map.insert("lipschitz_estimated".into(), json!(report.lipschitz_estimated));
        map.insert("bound_slack".into(), json!(report.bound_slack));
        map.insert("fixed_point_defect".into(), json!(report.fixed_point_defect));
        map.insert("table".into(), table_json("x", "u", &rows));
        let report_text = pretty(&Value::Object(map))?;

        let status = if report.converged {
            Status::Ok
        } else {
            Status::NotConverged {
                iterations: report.iterations_used,
            }
        };
        Ok(match self.format() {
            Format::Csv => RunOutput {
                primary: csv_table("x,u", &rows),
                report: Some(report_text),
                status,
            },
            Format::Json => RunOutput {
                primary: report_text,
                report: None,
                status,
            },
        })
    }

    fn verify(&self) -> Result<RunOutput, CliError> {
        let c = &self.config;
        if let Some(name) = &self.inject_fault {
            if !verify::identity_names().contains(&name.as_str()) {
                return Err(CliError::Config(format!(
                    "--inject-fault: unknown identity '{name}' (known: {})",
                    verify::identity_names().join(", ")
                )));
            }
        }
        let (ctrl, products) = self.controls();
        let mut grid = verify::Grid {
            ctrl,
            products,
            ..verify::Grid::default()
        }
        .restrict(c.q, c.p, c.alpha);
        if let Some(depth) = c.lattice_depth {
            grid.depth = depth;
        }
        let results = verify::run_all(&grid, self.inject_fault.as_deref())
            .map_err(|e| CliError::Numerical(format!("verify: {e}")))?;
        let failing: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.name.to_string()).collect();
        let primary = match self.format() {
            Format::Json => {
                let mut map = self.header();
                map.insert("identity_results".into(), json!(results));
                map.insert("all_passed".into(), json!(failing.is_empty()));
                pretty(&Value::Object(map))?
            }
            Format::Csv => {
                let mut out = String::from("identity,max_error,tolerance,cases,passed\n");
                for r in &results {
                    let _ = writeln!(out, "{},{:.16e},{:.16e},{},{}", r.name, r.max_error, r.tolerance, r.cases, r.passed);
                }
                out
            }
        };
        Ok(RunOutput {
            primary,
            report: None,
            status: if failing.is_empty() {
                Status::Ok
            } else {
                Status::VerifyFailed(failing)
            },
        })
    }
}

fn parse(config: &RunConfig, source: &str, vars: &[&str], key: &str) -> Result<Expr, CliError> {
    config
        .parse_env(vars)
        .parse(source)
        .map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn eval_expr(expr: &Expr, bindings: &[(&str, f64)], at: f64) -> qfrac_core::Result<f64> {
    expr.evaluate(bindings).map_err(|e| QError::Evaluation {
        at,
        message: e.to_string(),
    })
}

pub fn csv_table(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (x, v) in rows {
        let _ = writeln!(out, "{x:.16e},{v:.16e}");
    }
    out
}

fn table_json(x_key: &str, v_key: &str, rows: &[(f64, f64)]) -> Value {
    Value::Array(rows.iter().map(|(x, v)| json!({ x_key: x, v_key: v })).collect())
}

fn pretty(value: &Value) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(format!("serialising report: {e}")))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Path of the JSON report written next to a CSV solution table.
pub fn report_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}
