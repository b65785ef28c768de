//! Front end for the verification suites: argument and config handling,
//! dispatch, and versioned reports written atomically.

pub mod config;

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use geosimplex::chains::{chi_bound, AbstractSimplex, SingularChain};
use geosimplex::gaussbonnet::{angle_defect_2d, theorem_budget, verify_identity, TheoremBudget, BUDGET_EPS};
use geosimplex::oracle::{closed_form_oracle, OracleOptions};
use geosimplex::simplices::GeodesicSimplex;
use geosimplex::GeomError;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{Format, RunConfig};

pub const SCHEMA: u32 = 1;

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const TOLERANCE: i32 = 4;
    pub const BUDGET: i32 = 5;
}

/// Default `verify` tolerance floor on the identity residual, widened to 3σ.
pub const VERIFY_TOL: f64 = 1e-3;
/// Default `2d` tolerance on the angle-defect residual.
pub const DEFECT_TOL: f64 = 1e-6;
const VERIFY_ORDER: usize = 8;
const DEFECT_ORDER: usize = 48;

#[derive(Debug, Parser)]
#[command(name = "geosimplex", version, about = "Simplicial Gauss–Bonnet verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the face contributions of one simplex sum to one.
    Verify(CommonArgs),
    /// Vertex, edge and 2-face budget per simplex, and the chain-level χ bound.
    Budget(CommonArgs),
    /// Permutation engine against the explicit four-dimensional integrands.
    Oracle(OracleArgs),
    /// Angle-defect table for geodesic triangles.
    #[command(name = "2d")]
    TwoD(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Model descriptor, e.g. `hyperbolic:4:-1` or `hyperbolic:2*hyperbolic:2`.
    #[arg(long)]
    pub model: Option<String>,
    /// Vertex coordinates, one vertex per line (or a JSON array).
    #[arg(long)]
    pub vertices_file: Option<PathBuf>,
    /// Named vertex set; repeat for several triangles in `2d`.
    #[arg(long)]
    pub preset: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Gauss–Legendre points per collapsed coordinate.
    #[arg(long)]
    pub order: Option<usize>,
    /// Residual tolerance; for `verify` a hard bound replacing the default max(1e-3, 3σ).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Flip the engine's Ψ_3 sign (checks that the suite can fail).
    #[arg(long, hide = true)]
    pub mutate_psi3: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Budget(_) => "budget",
            Command::Oracle(_) => "oracle",
            Command::TwoD(_) => "2d",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Verify(c) | Command::Budget(c) | Command::TwoD(c) => c,
            Command::Oracle(o) => &o.common,
        }
    }
}

/// A failed run: exit code plus a machine-readable cause.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: exit::CONFIG, kind: "Config".into(), message: message.into() }
    }
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        let code = match &e {
            GeomError::DegenerateSimplex(_)
            | GeomError::DegenerateAt(_)
            | GeomError::CutLocus
            | GeomError::LeftChartDomain { .. } => exit::DEGENERATE,
            GeomError::NumericalBreakdown { .. } | GeomError::NoConvergence { .. } => exit::TOLERANCE,
            _ => exit::CONFIG,
        };
        let dbg = format!("{e:?}");
        let kind = dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
        Self { code, kind, message: e.to_string() }
    }
}

/// The outcome of a command before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub status: &'static str,
    pub payload: Value,
    /// Rows for the CSV form: header then records.
    pub table: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub status: String,
    pub exit_code: i32,
    pub inputs: Value,
    pub payload: Value,
    pub error: Option<Failure>,
    pub wall_time_s: f64,
}

/// Merge the config file (if any) with the flags.
pub fn effective_config(cmd: &Command) -> Result<RunConfig, Failure> {
    let c = cmd.common();
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &c.model {
        cfg.model = Some(m.clone());
    }
    if let Some(p) = &c.vertices_file {
        cfg.vertices = Some(config::read_vertices(p)?);
        cfg.presets.clear();
    }
    if !c.preset.is_empty() {
        cfg.presets = c.preset.clone();
        if c.vertices_file.is_none() {
            cfg.vertices = None;
        }
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.mc_samples {
        cfg.budgets.mc_samples = n;
    }
    if let Some(o) = c.order {
        cfg.budgets.simplex_order = Some(o);
    }
    if let Some(t) = c.tol {
        cfg.tol = Some(t);
    }
    if let Some(o) = &c.out {
        cfg.output.path = Some(o.clone());
    }
    if let Some(f) = c.format {
        cfg.output.format = f;
    }
    if let Command::Oracle(o) = cmd {
        if let Some(t) = o.trials {
            cfg.trials = t;
        }
    }
    if cfg.budgets.mc_samples == 0 {
        return Err(Failure::config("mc_samples must be positive"));
    }
    if cfg.budgets.simplex_order == Some(0) {
        return Err(Failure::config("order must be positive"));
    }
    if let Some(t) = cfg.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Failure::config("tol must be a finite nonnegative number"));
        }
    }
    Ok(cfg)
}

fn build(spec: &config::SimplexSpec) -> Result<GeodesicSimplex, Failure> {
    Ok(GeodesicSimplex::build(&spec.model, spec.vertices.clone())?)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let spec = cfg.simplex()?;
    let s = build(&spec)?;
    let budgets = cfg.budgets.budgets(VERIFY_ORDER);
    let rep = verify_identity(&s, &budgets, cfg.seed)?;
    // an explicit tolerance is a hard bound; the default also admits 3σ of MC noise
    let (tol, allowed) = match cfg.tol {
        Some(t) => (t, t),
        None => (VERIFY_TOL, VERIFY_TOL.max(3.0 * rep.std_error)),
    };
    let pass = rep.residual.abs() <= allowed;
    let mut table = vec![vec!["stratum".into(), "value".into(), "std_error".into()]];
    for (r, (v, e)) in rep.strata.iter().zip(&rep.strata_std_error).enumerate() {
        table.push(vec![format!("G(M[{r}])"), fmt_f(*v), fmt_f(*e)]);
    }
    table.push(vec!["total".into(), fmt_f(rep.total), fmt_f(rep.std_error)]);
    table.push(vec!["residual".into(), fmt_f(rep.residual), fmt_f(allowed)]);
    let payload = json!({
        "simplex": spec.label,
        "model": spec.model.to_string(),
        "vertices": spec.vertices,
        "budgets": budgets,
        "report": rep,
        "budget_terms": rep.budget(),
        "tolerance": tol,
        "allowed": allowed,
        "pass": pass,
    });
    Ok(Outcome {
        code: if pass { exit::OK } else { exit::TOLERANCE },
        status: if pass { "ok" } else { "fail" },
        payload,
        table,
    })
}

fn cmd_budget(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let budgets = cfg.budgets.budgets(VERIFY_ORDER);
    let entries = cfg.chain_entries()?;
    let mut terms = Vec::new();
    let mut per: HashMap<String, TheoremBudget> = HashMap::new();
    let mut rows = Vec::new();
    let mut table = vec![vec![
        "id".into(),
        "vertex_term".into(),
        "edge_term".into(),
        "two_face_term".into(),
        "bound_constant".into(),
        "violations".into(),
    ]];
    let mut any_violation = false;
    for (id, coeff, spec) in &entries {
        let s = build(spec)?;
        let b = theorem_budget(&s, &budgets, cfg.seed)?;
        let v = b.violations(BUDGET_EPS);
        any_violation |= !v.is_empty();
        table.push(vec![
            id.clone(),
            fmt_f(b.vertex_term),
            fmt_f(b.edge_term),
            fmt_f(b.two_face_term),
            fmt_f(b.bound_constant),
            v.join("; "),
        ]);
        rows.push(
            json!({ "id": id, "coefficient": coeff.to_string(), "simplex": spec.label, "budget": b, "violations": v }),
        );
        let labels: Vec<String> = (0..spec.vertices.len()).map(|i| format!("{id}:{i}")).collect();
        terms.push((coeff.clone(), AbstractSimplex::new(id.clone(), labels)?));
        per.insert(id.clone(), b);
    }
    let chain = SingularChain::new(terms);
    let bound = chi_bound(&chain, &per)?;
    let fail = any_violation || !bound.within;
    let payload =
        json!({ "budgets": budgets, "epsilon": BUDGET_EPS, "simplices": rows, "chi_bound": bound, "pass": !fail });
    Ok(Outcome {
        code: if fail { exit::BUDGET } else { exit::OK },
        status: if fail { "fail" } else { "ok" },
        payload,
        table,
    })
}

fn cmd_oracle(cfg: &RunConfig, mutate: bool) -> Result<Outcome, Failure> {
    if cfg.trials == 0 {
        return Err(Failure::config("trials must be positive"));
    }
    let rep = closed_form_oracle(&OracleOptions { trials: cfg.trials, seed: cfg.seed, mutate_psi3: mutate })?;
    let mut table = vec![vec!["r".into(), "max_abs_error".into(), "max_abs_value".into()]];
    for row in &rep.rows {
        table.push(vec![row.r.to_string(), fmt_f(row.max_abs_error), fmt_f(row.max_abs_value)]);
    }
    let pass = rep.pass;
    let payload = json!({ "oracle": rep, "mutated": mutate });
    Ok(Outcome {
        code: if pass { exit::OK } else { exit::TOLERANCE },
        status: if pass { "ok" } else { "fail" },
        payload,
        table,
    })
}

fn cmd_2d(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let order = cfg.budgets.simplex_order.unwrap_or(DEFECT_ORDER);
    let tol = cfg.tol.unwrap_or(DEFECT_TOL);
    let mut table =
        vec![vec!["model".into(), "vertices".into(), "curv_integral".into(), "sum_alpha".into(), "residual".into()]];
    let mut rows = Vec::new();
    let mut pass = true;
    for spec in cfg.triangles()? {
        let s = build(&spec)?;
        let d = angle_defect_2d(&s, order)?;
        let sum_alpha: f64 = d.exterior_angles.iter().sum();
        let ok = d.residual.abs() <= tol;
        pass &= ok;
        let verts = spec
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; ");
        table.push(vec![spec.model.to_string(), verts, fmt_f(d.curv_integral), fmt_f(sum_alpha), fmt_f(d.residual)]);
        rows.push(json!({
            "triangle": spec.label,
            "model": spec.model.to_string(),
            "vertices": spec.vertices,
            "curv_integral": d.curv_integral,
            "exterior_angles": d.exterior_angles,
            "sum_alpha": sum_alpha,
            "residual": d.residual,
            "quad_error": d.quad_error,
            "pass": ok,
        }));
    }
    let payload = json!({ "order": order, "tolerance": tol, "triangles": rows, "pass": pass });
    Ok(Outcome {
        code: if pass { exit::OK } else { exit::TOLERANCE },
        status: if pass { "ok" } else { "fail" },
        payload,
        table,
    })
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn render(report: &Report, table: &[Vec<String>], format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
            if let Some(err) = &report.error {
                w.write_record(["status", "kind", "message"]).expect("in-memory write");
                w.write_record([report.status.as_str(), err.kind.as_str(), err.message.as_str()])
                    .expect("in-memory write");
            } else {
                for row in table {
                    w.write_record(row).expect("in-memory write");
                }
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

/// Run one parsed command; returns the exit code and the report.
pub fn execute(cli: &Cli) -> (i32, Report) {
    let start = Instant::now();
    let command = cli.command.name().to_string();
    let cfg = effective_config(&cli.command);
    let inputs = match &cfg {
        Ok(c) => serde_json::to_value(c).expect("config serializes"),
        Err(_) => Value::Null,
    };
    let result = cfg.as_ref().map_err(Clone::clone).and_then(|c| match &cli.command {
        Command::Verify(_) => cmd_verify(c),
        Command::Budget(_) => cmd_budget(c),
        Command::Oracle(o) => cmd_oracle(c, o.mutate_psi3),
        Command::TwoD(_) => cmd_2d(c),
    });
    let (code, report, table) = match result {
        Ok(o) => (
            o.code,
            Report {
                schema: SCHEMA,
                command,
                status: o.status.into(),
                exit_code: o.code,
                inputs,
                payload: o.payload,
                error: None,
                wall_time_s: 0.0,
            },
            o.table,
        ),
        Err(f) => (
            f.code,
            Report {
                schema: SCHEMA,
                command,
                status: "error".into(),
                exit_code: f.code,
                inputs,
                payload: Value::Null,
                error: Some(f),
                wall_time_s: 0.0,
            },
            Vec::new(),
        ),
    };
    let mut report = report;
    report.wall_time_s = start.elapsed().as_secs_f64();
    let format = cfg.as_ref().map(|c| c.output.format).unwrap_or_default();
    let out = cfg.as_ref().ok().and_then(|c| c.output.path.clone()).or_else(|| cli.command.common().out.clone());
    let bytes = render(&report, &table, format);
    let mut code = code;
    match out {
        Some(p) => {
            if let Err(e) = write_atomic(&p, &bytes) {
                let f = Failure::config(format!("cannot write report {}: {e}", p.display()));
                eprintln!("{}", json!({ "schema": SCHEMA, "status": "error", "error": f }));
                code = exit::CONFIG;
            }
        }
        None => {
            let _ = std::io::stdout().write_all(&bytes);
        }
    }
    if let Some(err) = &report.error {
        eprintln!(
            "{}",
            json!({ "schema": SCHEMA, "command": report.command, "status": "error", "exit_code": code, "error": err })
        );
    }
    (code, report)
}

/// Parse arguments and run; help and version requests exit 0.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli).0,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return exit::OK;
            }
            let f = Failure::config(e.to_string().trim().to_string());
            eprintln!("{}", json!({ "schema": SCHEMA, "status": "error", "exit_code": exit::CONFIG, "error": f }));
            exit::CONFIG
        }
    }
}
