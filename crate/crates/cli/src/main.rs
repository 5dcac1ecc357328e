//! `cpcox`: fit Cox models with change-points, select the number of
//! change-points, run simulation recipes and check the bias oracle.
//!
//! Exit codes: 0 success, 2 data or configuration error, 3 infeasible or
//! singular model, 4 contract violation, 5 oracle mismatch.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cpcox::criteria::{self, c_from_forms, c_printed, CriterionKind, CriterionReport};
use cpcox::linalg::{Matrix, Vector};
use cpcox::oracle::{self, BmSimConfig, DriftedBmSpec};
use cpcox::simulation::{self, ExperimentConfig};
use cpcox::survival::{kaplan_meier, CsvTable, SurvivalDataset};
use cpcox::{CandidateRule, Error, SearchConfig};

use report::{Envelope, Format};

#[derive(Parser, Debug)]
#[command(name = "cpcox", version, about = "Cox regression with change-points in the coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model with a fixed number of change-points.
    Fit(FitArgs),
    /// Fit m = 0..=max-m and compare information criteria.
    Select(SelectArgs),
    /// Run a simulation recipe.
    Simulate(SimulateArgs),
    /// Compare the bias constant with the Brownian-motion oracle.
    VerifyBias(VerifyArgs),
    /// Kaplan-Meier curves per group.
    Km(KmArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Input CSV with header `time,event,z1,...,zp[,weight]`.
    csv: PathBuf,
    /// Ridge weight.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    /// Minimum weighted events per segment (default p + 1).
    #[arg(long)]
    min_events: Option<usize>,
    #[arg(long, value_enum, default_value_t = Grid::EventTimes)]
    grid: Grid,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Grid {
    EventTimes,
    Midpoints,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Number of change-points.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// aic, naive, xi or tic (default aic, or xi when --xi > 0).
    #[arg(long)]
    criterion: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct SelectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 3)]
    max_m: usize,
    /// Comma-separated list of aic, naive, xi, tic.
    #[arg(long, default_value = "aic,naive", value_delimiter = ',')]
    criteria: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// TOML recipe.
    config: PathBuf,
    /// Overrides the recipe seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the recipe replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Writes `<prefix>.json` and `<prefix>.csv` instead of JSON on stdout.
    #[arg(long)]
    output_prefix: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum CForm {
    /// `1/c1 + 1/c2 − 1/(c1 + c2)`.
    Corrected,
    /// The rational function with its second numerator term read literally.
    Printed,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    /// `tau1,tau2,sigma1,sigma2`.
    #[arg(long, value_delimiter = ',', conflicts_with = "from_matrices", required_unless_present = "from_matrices")]
    spec: Option<Vec<f64>>,
    /// JSON file with `a_j`, `a_j1`, `b_j`, `b_j1` (row lists) and `delta`.
    #[arg(long)]
    from_matrices: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Grid step in natural time units.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Simulated half-width in natural time units.
    #[arg(long, default_value_t = 60.0)]
    horizon: f64,
    /// Agreement band in Monte Carlo standard errors.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
    #[arg(long, value_enum, default_value_t = CForm::Corrected)]
    c_form: CForm,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct KmArgs {
    csv: PathBuf,
    /// Integer group column; all subjects form one group when absent.
    #[arg(long)]
    group_col: Option<String>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Errors carry the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidData { .. } | Error::Dataset(_) | Error::Config(_) | Error::Io(_) | Error::Domain(_) => 2,
            Error::Infeasible(_) | Error::Singular(_) | Error::Numerical(_) => 3,
            Error::Contract(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

fn data_error(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::VerifyBias(a) => cmd_verify_bias(&a),
        Command::Km(a) => cmd_km(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_table(path: &Path) -> CliResult<CsvTable> {
    let file = fs::File::open(path).map_err(|e| data_error(format!("{}: {e}", path.display())))?;
    Ok(CsvTable::read(file)?)
}

fn load(args: &ModelArgs) -> CliResult<(SurvivalDataset, SearchConfig)> {
    let ds = read_table(&args.csv)?.to_dataset(None)?;
    let mut cfg = SearchConfig::new(ds.p()).with_xi(args.xi);
    if let Some(k) = args.min_events {
        cfg = cfg.with_min_events(k);
    }
    cfg.candidate_rule = match args.grid {
        Grid::EventTimes => CandidateRule::EventTimes,
        Grid::Midpoints => CandidateRule::Midpoints,
    };
    cfg.validate(ds.p())?;
    Ok((ds, cfg))
}

fn default_criterion(xi: f64) -> CriterionKind {
    if xi > 0.0 {
        CriterionKind::AicXi
    } else {
        CriterionKind::Aic
    }
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let (ds, cfg) = load(&args.model)?;
    let kind = match &args.criterion {
        Some(s) => CriterionKind::parse(s)?,
        None => default_criterion(args.model.xi),
    };
    let fit = cpcox::search(&ds, args.m, &cfg)?;
    let penalty = criteria::penalty(&ds, &fit, kind)?;
    let report = CriterionReport::new(&fit, kind, penalty);
    let result = json!({
        "n": ds.len(),
        "p": ds.p(),
        "events": ds.weighted_events(),
        "horizon": ds.horizon(),
        "fit": fit,
        "report": report,
    });
    let env = Envelope::new("fit", args, None, result);
    let csv = || {
        let mut out = String::from("segment,start,end,events,converged,");
        out.push_str(&(1..=ds.p()).map(|r| format!("beta{r}")).collect::<Vec<_>>().join(","));
        out.push('\n');
        for (j, s) in fit.segments.iter().enumerate() {
            let (lo, hi) = fit.partition.bounds(j);
            let betas = s.beta.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
            out.push_str(&format!("{},{lo},{hi},{},{},{betas}\n", j + 1, s.events, s.converged));
        }
        out.push_str(&format!(
            "# log_pl={} {}={} penalty_changepoint={} penalty_regression={}\n",
            fit.log_pl,
            kind.name(),
            report.criterion,
            report.penalty_changepoint,
            report.penalty_regression
        ));
        out
    };
    env.emit(args.model.format, csv, args.model.output.as_deref())
}

fn cmd_select(args: &SelectArgs) -> CliResult<()> {
    let (ds, cfg) = load(&args.model)?;
    let kinds = args.criteria.iter().map(|s| CriterionKind::parse(s)).collect::<Result<Vec<_>, _>>()?;
    for k in &kinds {
        if args.model.xi != 0.0 && *k != CriterionKind::AicXi {
            return Err(Error::Contract(format!("{} is defined for xi = 0 only; use xi", k.name())).into());
        }
    }
    let fits = criteria::fit_models(&ds, args.max_m, &cfg)?;
    let mut reports: Vec<(CriterionKind, Vec<CriterionReport>)> = Vec::new();
    for &kind in &kinds {
        let rows = fits
            .iter()
            .map(|f| Ok(CriterionReport::new(f, kind, criteria::penalty(&ds, f, kind)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        reports.push((kind, rows));
    }
    let selected: Vec<(CriterionKind, usize)> = reports
        .iter()
        .map(|(k, rows)| {
            let mut sorted = rows.clone();
            criteria::sort_reports(&mut sorted);
            (*k, sorted[0].m)
        })
        .collect();
    let result = json!({
        "n": ds.len(),
        "p": ds.p(),
        "events": ds.weighted_events(),
        "reports": reports.iter().map(|(k, r)| (k.name().to_string(), json!(r))).collect::<serde_json::Map<_, _>>(),
        "selected": selected.iter().map(|(k, m)| (k.name().to_string(), json!(m))).collect::<serde_json::Map<_, _>>(),
    });
    let env = Envelope::new("select", args, None, result);
    let csv = || {
        let mut out = String::from("m,k_hat,log_pl");
        for (k, _) in &reports {
            out.push_str(&format!(",{0},{0}_selected", k.name()));
        }
        out.push('\n');
        for (i, fit) in fits.iter().enumerate() {
            let k_hat = fit.k_hat().iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
            out.push_str(&format!("{},{k_hat},{}", fit.m, fit.log_pl));
            for ((_, rows), (_, m)) in reports.iter().zip(&selected) {
                out.push_str(&format!(",{},{}", rows[i].criterion, u8::from(*m == fit.m)));
            }
            out.push('\n');
        }
        out
    };
    env.emit(args.model.format, csv, args.model.output.as_deref())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.config).map_err(|e| data_error(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| data_error(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    let report = simulation::run_experiment(&config)?;
    let env = Envelope::new("simulate", &config, Some(config.seed), json!(report));
    match &args.output_prefix {
        None => env.emit(Format::Json, || report.to_csv(), None),
        Some(prefix) => {
            env.emit(Format::Json, String::new, Some(&prefix.with_extension("json")))?;
            env.emit(Format::Csv, || report.to_csv(), Some(&prefix.with_extension("csv")))
        }
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixInput {
    a_j: Vec<Vec<f64>>,
    a_j1: Vec<Vec<f64>>,
    b_j: Vec<Vec<f64>>,
    b_j1: Vec<Vec<f64>>,
    delta: Vec<f64>,
}

fn to_matrix(rows: &[Vec<f64>], p: usize, name: &str) -> CliResult<Matrix> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(data_error(format!("{name} must be {p} x {p}")));
    }
    Ok(Matrix::from_fn(p, p, |r, c| rows[r][c]))
}

#[derive(Serialize)]
struct Check {
    quantity: &'static str,
    value: f64,
    se: Option<f64>,
    reference: f64,
    reference_name: &'static str,
    ok: bool,
}

fn cmd_verify_bias(args: &VerifyArgs) -> CliResult<()> {
    // the bias constant enters through its four quadratic forms: q† = σ², q‡ = 2τ
    let (spec, forms) = match (&args.spec, &args.from_matrices) {
        (Some(v), _) => {
            if v.len() != 4 {
                return Err(data_error(format!("--spec needs 4 values tau1,tau2,sigma1,sigma2, got {}", v.len())));
            }
            let spec = DriftedBmSpec::new(v[0], v[1], v[2], v[3])?;
            (spec, [v[2] * v[2], v[3] * v[3], 2.0 * v[0], 2.0 * v[1]])
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| data_error(format!("{}: {e}", path.display())))?;
            let m: MatrixInput =
                serde_json::from_str(&text).map_err(|e| data_error(format!("{}: {e}", path.display())))?;
            let p = m.delta.len();
            let a_j = to_matrix(&m.a_j, p, "a_j")?;
            let a_j1 = to_matrix(&m.a_j1, p, "a_j1")?;
            let b_j = to_matrix(&m.b_j, p, "b_j")?;
            let b_j1 = to_matrix(&m.b_j1, p, "b_j1")?;
            let d = Vector::from_vec(m.delta);
            let spec = oracle::spec_from_matrices(&a_j, &a_j1, &b_j, &b_j1, &d)?;
            let q = |x: &Matrix| cpcox::linalg::quad_form(x, &d);
            (spec, [q(&a_j), q(&a_j1), q(&b_j), q(&b_j1)])
        }
        (None, None) => return Err(data_error("one of --spec or --from-matrices is required")),
    };
    let c = match args.c_form {
        CForm::Corrected => c_from_forms(forms[0], forms[1], forms[2], forms[3]).value,
        CForm::Printed => c_printed(forms[0], forms[1], forms[2], forms[3]),
    };
    let sup = oracle::e_sup_v(&spec)?;
    let at_copy = oracle::e_v_at_argsup_copy(&spec)?;
    let sim_cfg = BmSimConfig { horizon: args.horizon, step: args.step, paths: args.paths, seed: args.seed };
    let mc = oracle::simulate_sup_and_argsup(&spec, &sim_cfg)?;
    let band = |v: f64, se: f64, r: f64| (v - r).abs() <= args.sigmas * se;
    let exact = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b.abs().max(1.0);
    let checks = vec![
        Check { quantity: "closed_form_e_sup_v", value: sup, se: None, reference: c, reference_name: "c_hat", ok: exact(sup, c) },
        Check {
            quantity: "quadrature_e_v_at_argsup_copy",
            value: at_copy,
            se: None,
            reference: c,
            reference_name: "c_hat",
            ok: exact(at_copy, c),
        },
        Check {
            quantity: "mc_sup",
            value: mc.sup.mean,
            se: Some(mc.sup.se),
            reference: sup,
            reference_name: "closed_form_e_sup_v",
            ok: band(mc.sup.mean, mc.sup.se, sup),
        },
        Check {
            quantity: "mc_v_at_copy_argsup",
            value: mc.v_at_copy_argsup.mean,
            se: Some(mc.v_at_copy_argsup.se),
            reference: at_copy,
            reference_name: "quadrature_e_v_at_argsup_copy",
            ok: band(mc.v_at_copy_argsup.mean, mc.v_at_copy_argsup.se, at_copy),
        },
        Check {
            quantity: "mc_total",
            value: mc.total.mean,
            se: Some(mc.total.se),
            reference: 2.0 * c,
            reference_name: "two_c_hat",
            ok: band(mc.total.mean, mc.total.se, 2.0 * c),
        },
    ];
    let agree = checks.iter().all(|c| c.ok);
    let result = json!({
        "spec": spec,
        "quadratic_forms": { "dagger_j": forms[0], "dagger_j1": forms[1], "ddagger_j": forms[2], "ddagger_j1": forms[3] },
        "c_hat": c,
        "two_c_hat": 2.0 * c,
        "checks": checks,
        "agree": agree,
    });
    let env = Envelope::new("verify-bias", args, Some(args.seed), result);
    let csv = || {
        let mut out = String::from("quantity,value,se,reference_name,reference,ok\n");
        for c in &checks {
            let se = c.se.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{se},{},{},{}\n", c.quantity, c.value, c.reference_name, c.reference, c.ok));
        }
        out
    };
    env.emit(args.format, csv, args.output.as_deref())?;
    if agree {
        Ok(())
    } else {
        Err(Failure { code: 5, message: "oracle disagreement beyond the agreement band".into() })
    }
}

fn cmd_km(args: &KmArgs) -> CliResult<()> {
    let table = read_table(&args.csv)?;
    let ds = table.to_dataset(args.group_col.as_deref())?;
    let labels = match &args.group_col {
        Some(name) => table.labels_sorted(name)?,
        None => vec![0; ds.len()],
    };
    let curves = kaplan_meier(&ds, &labels)?;
    let env = Envelope::new("km", args, None, Value::Null);
    let csv = || {
        let mut out = String::from("group,time,survival\n");
        for (g, curve) in &curves {
            for (t, s) in curve {
                out.push_str(&format!("{g},{t},{s}\n"));
            }
        }
        out
    };
    env.emit(Format::Csv, csv, args.output.as_deref())
}
