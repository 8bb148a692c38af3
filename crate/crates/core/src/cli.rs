//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the `bounds` command finds a violated
//! inequality, 2 on any input error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    check_jensen_denom, check_lemma1, check_mills, check_score_bound, check_tail_condition,
    default_mills_grid, default_x_grid, BoundReport,
};
use crate::error::Error;
use crate::priors::{default_s_grid, Prior, TailCondition};
use crate::risk::{risk_monte_carlo, risk_quadrature, QuadratureSpec, RiskReport};
use crate::search::{maximize_risk, sweep_sigma, SearchConfig, SearchResult};

/// Smallest noise scale accepted on the command line.
pub const MIN_SIGMA: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Parser)]
#[command(name = "eb-risk", version, about = "Bayes risk of posterior-mean rules under prior disagreement")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Risk of the G1 posterior mean when θ ~ G0.
    Risk(RiskArgs),
    /// Check every inequality on the given priors.
    Bounds(BoundsArgs),
    /// Quadrature risk over a grid of σ.
    Sweep(SweepArgs),
    /// Search for prior pairs with large risk.
    Search(SearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Quad,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Gauss-Hermite nodes for the expectation over X.
    #[arg(long, default_value_t = 121)]
    pub nodes: usize,
    /// Gauss-Hermite nodes per component for a Gaussian-mixture G0.
    #[arg(long, default_value_t = 61)]
    pub theta_nodes: usize,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SpecArgs {
    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            gh_nodes: self.nodes,
            mc_samples: self.samples,
            seed: self.seed,
            theta_nodes: self.theta_nodes,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    #[arg(long)]
    pub g0: PathBuf,
    #[arg(long)]
    pub g1: PathBuf,
    /// Noise scale; a comma-separated list gives one report per value.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Quad)]
    pub method: MethodArg,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Prior scored against; defaults to G1.
    #[arg(long)]
    pub g0: Option<PathBuf>,
    #[arg(long)]
    pub g1: PathBuf,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    /// Tail exponent k > 2; enables the polynomial tail check.
    #[arg(long, allow_negative_numbers = true)]
    pub tail_k: Option<f64>,
    /// Tail constant; defaults to the smallest certified constant for G1.
    #[arg(long, requires = "tail_k", allow_negative_numbers = true)]
    pub tail_c: Option<f64>,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub g0: PathBuf,
    #[arg(long)]
    pub g1: PathBuf,
    /// σ grid; defaults to 2^j for j = -3..=10.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 3)]
    pub n_atoms_g0: usize,
    #[arg(long, default_value_t = 3)]
    pub n_atoms_g1: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub var_cap: f64,
    /// σ grid; defaults to 2^j for j = -3..=10.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 40)]
    pub iters: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub tail_k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tail_c: Option<f64>,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// An input problem, tagged with the offending field.
#[derive(Debug)]
pub struct InputError {
    pub field: String,
    pub message: String,
}

impl InputError {
    fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {}", self.field, self.message)
    }
}

/// Provenance written at the top of every report.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub gh_nodes: usize,
    pub theta_nodes: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Header {
    fn new(command: &'static str, spec: &QuadratureSpec) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            gh_nodes: spec.gh_nodes,
            theta_nodes: spec.theta_nodes,
            mc_samples: spec.mc_samples,
            seed: spec.seed,
        }
    }

    fn csv_comment(&self) -> String {
        format!(
            "# {} {} command={} gh_nodes={} theta_nodes={} mc_samples={} seed={}\n",
            self.tool,
            self.version,
            self.command,
            self.gh_nodes,
            self.theta_nodes,
            self.mc_samples,
            self.seed
        )
    }
}

#[derive(Serialize)]
struct RiskDocument<'a> {
    header: &'a Header,
    reports: &'a [RiskReport],
}

#[derive(Serialize)]
struct BoundsDocument<'a> {
    header: &'a Header,
    all_satisfied: bool,
    reports: &'a [BoundsEntry],
}

#[derive(Serialize)]
struct SearchDocument<'a> {
    header: &'a Header,
    config: &'a SearchConfig,
    result: &'a SearchResult,
    sweep: &'a [RiskReport],
}

/// A bound report together with the σ it was evaluated at (absent for
/// σ-free checks).
#[derive(Debug, Clone, Serialize)]
pub struct BoundsEntry {
    pub sigma: Option<f64>,
    #[serde(flatten)]
    pub report: BoundReport,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

/// Runs one command and returns the process exit code.
pub fn run(config: &RunConfig) -> i32 {
    match execute(config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("eb-risk: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(config: &RunConfig) -> Result<i32, InputError> {
    match &config.command {
        Command::Risk(a) => run_risk(a),
        Command::Bounds(a) => run_bounds(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Search(a) => run_search(a),
    }
}

pub fn read_prior(path: &Path, field: &str) -> Result<Prior, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError::new(field, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| InputError::new(field, format!("{}: {e}", path.display())))
}

fn check_sigmas(sigmas: &[f64]) -> Result<(), InputError> {
    if sigmas.is_empty() {
        return Err(InputError::new("--sigma", "no values given"));
    }
    for &s in sigmas {
        if !(s.is_finite() && s >= MIN_SIGMA) {
            return Err(InputError::new(
                "--sigma",
                format!("{} (must be at least {MIN_SIGMA})", Error::InvalidSigma(s)),
            ));
        }
    }
    Ok(())
}

fn check_spec(spec: &QuadratureSpec) -> Result<(), InputError> {
    spec.validate().map_err(|e| {
        let field = match &e {
            Error::InvalidQuadratureSpec(m) if m.starts_with("gh_nodes") => "--nodes",
            Error::InvalidQuadratureSpec(m) if m.starts_with("mc_samples") => "--samples",
            _ => "--theta-nodes",
        };
        InputError::new(field, e)
    })
}

/// 2^j for j = -3..=10
pub fn default_sigma_grid() -> Vec<f64> {
    (-3..=10).map(|j| 2f64.powi(j)).collect()
}

fn emit(out: &OutputArgs, body: &str) -> Result<(), InputError> {
    match &out.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| InputError::new("--output", format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| InputError::new("--output", e))
        }
    }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("reports serialize");
    s.push('\n');
    s
}

fn risk_csv(header: &Header, reports: &[RiskReport]) -> String {
    let mut s = header.csv_comment();
    s.push_str(RiskReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn lib_err(field: &str) -> impl Fn(Error) -> InputError + '_ {
    move |e| InputError::new(field, e)
}

fn run_risk(a: &RiskArgs) -> Result<i32, InputError> {
    let g0 = read_prior(&a.g0, "--g0")?;
    let g1 = read_prior(&a.g1, "--g1")?;
    check_sigmas(&a.sigma)?;
    let spec = a.spec.spec();
    check_spec(&spec)?;
    let reports = a
        .sigma
        .iter()
        .map(|&s| match a.method {
            MethodArg::Quad => risk_quadrature(&g0, &g1, s, &spec),
            MethodArg::Mc => risk_monte_carlo(&g0, &g1, s, &spec),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(lib_err("--sigma"))?;
    let header = Header::new("risk", &spec);
    let body = match a.out.format {
        Format::Json => to_json(&RiskDocument {
            header: &header,
            reports: &reports,
        }),
        Format::Csv => risk_csv(&header, &reports),
    };
    emit(&a.out, &body)?;
    Ok(EXIT_OK)
}

fn run_sweep(a: &SweepArgs) -> Result<i32, InputError> {
    let g0 = read_prior(&a.g0, "--g0")?;
    let g1 = read_prior(&a.g1, "--g1")?;
    let grid = if a.sigma.is_empty() {
        default_sigma_grid()
    } else {
        a.sigma.clone()
    };
    check_sigmas(&grid)?;
    let spec = a.spec.spec();
    check_spec(&spec)?;
    let reports = sweep_sigma(&g0, &g1, &grid, &spec).map_err(lib_err("--sigma"))?;
    let header = Header::new("sweep", &spec);
    let body = match a.out.format {
        Format::Json => to_json(&RiskDocument {
            header: &header,
            reports: &reports,
        }),
        Format::Csv => risk_csv(&header, &reports),
    };
    emit(&a.out, &body)?;
    Ok(EXIT_OK)
}

/// All bound reports for one pair of priors and σ grid.
pub fn bound_reports(
    g0: &Prior,
    g1: &Prior,
    sigmas: &[f64],
    spec: &QuadratureSpec,
    tail: Option<TailCondition>,
) -> crate::error::Result<Vec<BoundsEntry>> {
    let mut out = Vec::new();
    for &s in sigmas {
        let xs = default_x_grid(s);
        for report in [
            check_lemma1(g0, g1, s, spec)?,
            check_jensen_denom(g1, s, &xs)?,
            check_score_bound(g1, s, &xs)?,
        ] {
            out.push(BoundsEntry {
                sigma: Some(s),
                report,
            });
        }
    }
    out.push(BoundsEntry {
        sigma: None,
        report: check_mills(&default_mills_grid())?,
    });
    if let Some(tc) = tail {
        out.push(BoundsEntry {
            sigma: None,
            report: check_tail_condition(g1, &tc, &default_s_grid(g1))?,
        });
    }
    Ok(out)
}

fn run_bounds(a: &BoundsArgs) -> Result<i32, InputError> {
    let g1 = read_prior(&a.g1, "--g1")?;
    let g0 = match &a.g0 {
        Some(p) => read_prior(p, "--g0")?,
        None => g1.clone(),
    };
    check_sigmas(&a.sigma)?;
    let spec = a.spec.spec();
    check_spec(&spec)?;
    let tail = match (a.tail_k, a.tail_c) {
        (Some(k), Some(c)) => Some(TailCondition::new(k, c).map_err(lib_err("--tail-c"))?),
        (Some(k), None) => Some(TailCondition::certify(&g1, k, 1e-9).map_err(lib_err("--tail-k"))?),
        _ => None,
    };
    let entries = bound_reports(&g0, &g1, &a.sigma, &spec, tail).map_err(|e| {
        let field = match e {
            Error::NonCenteredPrior { .. } if g0.mean().abs() > crate::bounds::CENTER_TOL => "--g0",
            Error::NonCenteredPrior { .. } => "--g1",
            _ => "--sigma",
        };
        InputError::new(field, e)
    })?;
    let all_satisfied = entries.iter().all(|e| e.report.satisfied);
    let header = Header::new("bounds", &spec);
    let body = match a.out.format {
        Format::Json => to_json(&BoundsDocument {
            header: &header,
            all_satisfied,
            reports: &entries,
        }),
        Format::Csv => {
            let mut s = header.csv_comment();
            s.push_str("name,sigma,lhs,rhs,margin,satisfied,witness\n");
            for e in &entries {
                let r = &e.report;
                s.push_str(&format!(
                    "{},{},{:?},{:?},{:?},{},{}\n",
                    r.name,
                    e.sigma.map(|v| format!("{v:?}")).unwrap_or_default(),
                    r.lhs,
                    r.rhs,
                    r.margin,
                    r.satisfied,
                    r.witness.map(|v| format!("{v:?}")).unwrap_or_default()
                ));
            }
            s
        }
    };
    emit(&a.out, &body)?;
    Ok(if all_satisfied { EXIT_OK } else { EXIT_VIOLATED })
}

fn run_search(a: &SearchArgs) -> Result<i32, InputError> {
    let grid = if a.sigma.is_empty() {
        default_sigma_grid()
    } else {
        a.sigma.clone()
    };
    check_sigmas(&grid)?;
    let spec = a.spec.spec();
    check_spec(&spec)?;
    let config = SearchConfig {
        n_atoms_g0: a.n_atoms_g0,
        n_atoms_g1: a.n_atoms_g1,
        var_cap: a.var_cap,
        sigma_grid: grid.clone(),
        restarts: a.restarts,
        iters: a.iters,
        seed: a.spec.seed,
        tail_k: a.tail_k,
        tail_c: a.tail_c,
    };
    let result = maximize_risk(&config, &spec).map_err(lib_err("search config"))?;
    let sweep = sweep_sigma(
        &Prior::Discrete(result.best_g0.clone()),
        &Prior::Discrete(result.best_g1.clone()),
        &grid,
        &spec,
    )
    .map_err(lib_err("--sigma"))?;
    let header = Header::new("search", &spec);
    let body = match a.out.format {
        Format::Json => to_json(&SearchDocument {
            header: &header,
            config: &config,
            result: &result,
            sweep: &sweep,
        }),
        Format::Csv => risk_csv(&header, &sweep),
    };
    emit(&a.out, &body)?;
    Ok(EXIT_OK)
}
