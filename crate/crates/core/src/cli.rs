//! Command-line front end: argument model, command execution and table
//! rendering. Commands return a [`Outcome`] so they can be tested without a
//! process boundary.

use std::fs::File;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::analysis::{
    crosscheck_empirical, crosscheck_usernet, relative_deviation, CoupledModel, EmpiricalInputs,
    Grid, Metric, UserNetInputs,
};
use crate::dataset::{load_series, reference_anchors, reference_table1, AnchorSet, AnnualSeries, SeriesFormat};
use crate::error::{Error, Result};
use crate::fitting::{backcast, fit_with, FitOptions, FitResult};
use crate::solver::SolverOptions;
use crate::models::{DemographicParams, Family, GrowthCurve, VolumeModel};
use crate::units::{EB_PER_ZB, ONE_BIT_EB, T0};

pub const BUILTIN_TABLE1: &str = "builtin:table1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Clone, Parser)]
#[command(name = "datagrowth", version, about = "Fit and forecast growth curves of annual digital data production")]
pub struct RunConfig {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exponential,
    Logistic,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Exponential => Family::Exponential,
            FamilyArg::Logistic => Family::Logistic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Observation series: a CSV/JSON path or `builtin:table1`.
    #[arg(long, global = true, default_value = BUILTIN_TABLE1)]
    pub input: String,
    /// Format of `--input`; inferred from the file extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub input_format: Option<OutputFormat>,
    #[arg(long, global = true, value_enum, default_value = "logistic")]
    pub family: FamilyArg,
    /// Reference year of the volume model.
    #[arg(long, global = true, default_value_t = T0)]
    pub t0: f64,
    /// Use the published coefficients instead of fitting `--input`.
    #[arg(long, global = true)]
    pub paper_params: bool,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Significant digits of numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub digits: u32,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Population model constant c_H, person-years.
    #[arg(long, global = true, default_value_t = 186e9)]
    pub c_h: f64,
    /// Population model time scale tau_H, years.
    #[arg(long, global = true, default_value_t = 42.0)]
    pub tau_h: f64,
    /// Population model reference year T0_H.
    #[arg(long, global = true, default_value_t = 2007.0)]
    pub t0_h: f64,
    /// Override the integration offset (default: solved from the growth rate).
    #[arg(long, global = true)]
    pub delta_tb: Option<f64>,
    /// Iteration cap of the least-squares fit.
    #[arg(long, global = true, default_value_t = 500)]
    pub max_iterations: usize,
}

impl CommonArgs {
    fn fit_options(&self) -> FitOptions {
        FitOptions {
            solver: SolverOptions { max_iterations: self.max_iterations, ..Default::default() },
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RangeArgs {
    #[arg(long, default_value_t = 1900.0)]
    pub from: f64,
    #[arg(long, default_value_t = 2100.0)]
    pub to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Fit the model family to the input series.
    Fit,
    /// Date the one-bit-per-year epoch and score it against historical anchors.
    Backcast {
        /// `YEAR:WEIGHT,...`; defaults to 1883 and 1900 with equal weight.
        #[arg(long)]
        anchors: Option<String>,
        /// Annual volume, EB, that marks the start of the digital era.
        #[arg(long, default_value_t = ONE_BIT_EB)]
        bit_volume: f64,
    },
    /// Annual volume and its first two derivatives on a time grid.
    Forecast {
        #[command(flatten)]
        range: RangeArgs,
        /// Report volumes in ZB instead of EB.
        #[arg(long)]
        zb: bool,
    },
    /// Derived metrics on a time grid.
    Metrics {
        #[command(flatten)]
        range: RangeArgs,
        /// Comma-separated subset of V,dV,d2V,I,K_I,N,R,Q_I,tau_I.
        #[arg(long, value_delimiter = ',', default_value = "I,K_I,N,R,Q_I,tau_I")]
        metrics: Vec<String>,
        /// Append a row of limits as t -> infinity.
        #[arg(long)]
        asymptotes: bool,
    },
    /// Compare the model's per-user internet rate with an empirical estimate.
    Crosscheck {
        #[arg(long, default_value_t = 388.332)]
        traffic_eb: f64,
        #[arg(long, default_value_t = 0.046)]
        broadband_share: f64,
        #[arg(long, default_value_t = 6.776e12)]
        total_seconds_month: f64,
        #[arg(long, default_value_t = 4.86)]
        mb_per_min: f64,
        #[arg(long, default_value_t = 2013.0)]
        year: f64,
    },
    /// Saturation milestones of a logistic model.
    Milestones,
}

/// Rendered output plus the process exit code and diagnostics for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
}

enum Report {
    Record(Vec<(String, Cell)>),
    Table { columns: Vec<String>, rows: Vec<Vec<Cell>> },
}

/// `%g`-style formatting with `digits` significant digits.
pub fn format_sig(x: f64, digits: u32) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let p = digits.max(1) as usize;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl Cell {
    fn text(&self, digits: u32) -> String {
        match self {
            Cell::Num(x) => format_sig(*x, digits),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }

    fn json(&self, digits: u32) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => {
                let rounded: f64 = format_sig(*x, digits).parse().expect("formatted number");
                serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
            }
            Cell::Num(x) => Value::String(format_sig(*x, digits)),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Flag(b) => Value::Bool(*b),
        }
    }
}

fn render(report: &Report, format: OutputFormat, digits: u32) -> Result<String> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
            match report {
                Report::Record(fields) => {
                    w.write_record(["key", "value"]).map_err(io)?;
                    for (k, v) in fields {
                        w.write_record([k.clone(), v.text(digits)]).map_err(io)?;
                    }
                }
                Report::Table { columns, rows } => {
                    w.write_record(columns).map_err(io)?;
                    for row in rows {
                        w.write_record(row.iter().map(|c| c.text(digits))).map_err(io)?;
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => {
            let value = match report {
                Report::Record(fields) => Value::Object(
                    fields.iter().map(|(k, v)| (k.clone(), v.json(digits))).collect::<Map<_, _>>(),
                ),
                Report::Table { columns, rows } => Value::Array(
                    rows.iter()
                        .map(|row| {
                            Value::Object(
                                columns
                                    .iter()
                                    .zip(row)
                                    .map(|(k, v)| (k.clone(), v.json(digits)))
                                    .collect::<Map<_, _>>(),
                            )
                        })
                        .collect(),
                ),
            };
            let mut s = serde_json::to_string_pretty(&value).map_err(|e| Error::Io(e.into()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn resolve_input(common: &CommonArgs) -> Result<AnnualSeries> {
    if common.input == BUILTIN_TABLE1 {
        return Ok(reference_table1());
    }
    let path = Path::new(&common.input);
    let format = match common.input_format {
        Some(OutputFormat::Json) => SeriesFormat::Json,
        Some(OutputFormat::Csv) => SeriesFormat::Csv,
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => SeriesFormat::Json,
        None => SeriesFormat::Csv,
    };
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    load_series(file, format)
}

/// The volume model a command works with, and the fit it came from.
fn resolve_model(common: &CommonArgs) -> Result<(VolumeModel, Option<FitResult>)> {
    let family = Family::from(common.family);
    if common.paper_params {
        let published = VolumeModel::published(family);
        let model = VolumeModel::from_values(family, &published.values(), common.t0)?;
        return Ok((model, None));
    }
    let series = resolve_input(common)?;
    let result = fit_with(&series, family, common.t0, &common.fit_options())?;
    Ok((result.model, Some(result)))
}

fn coupled(common: &CommonArgs, model: VolumeModel) -> Result<CoupledModel> {
    let population = DemographicParams::new(common.c_h, common.tau_h, common.t0_h)?;
    let cm = CoupledModel::new(model, population)?;
    match common.delta_tb {
        Some(d) => cm.with_delta_tb(d),
        None => Ok(cm),
    }
}

fn fit_status(fit: &Option<FitResult>, notes: &mut Vec<String>) -> i32 {
    match fit {
        Some(f) if !f.converged => {
            notes.push(format!("fit did not converge after {} iterations", f.iterations));
            EXIT_NOT_CONVERGED
        }
        _ => EXIT_OK,
    }
}

fn model_fields(model: &VolumeModel) -> Vec<(String, Cell)> {
    let mut fields = vec![
        ("family".to_string(), Cell::Text(model.family().to_string())),
        ("t0".to_string(), Cell::Num(model.t0())),
    ];
    fields.extend(model.names().iter().zip(model.values()).map(|(n, v)| (n.to_string(), Cell::Num(v))));
    fields
}

/// Runs one command. Usage and data errors surface as `Err`; callers map
/// them to [`EXIT_USAGE`].
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let common = &cfg.common;
    let mut notes = Vec::new();
    let (report, exit_code) = match &cfg.command {
        Command::Fit => {
            let series = resolve_input(common)?;
            let result = fit_with(&series, common.family.into(), common.t0, &common.fit_options())?;
            let mut fields = model_fields(&result.model);
            fields.push(("sse".into(), Cell::Num(result.sse)));
            fields.push(("pearson".into(), Cell::Num(result.pearson)));
            fields.push(("iterations".into(), Cell::Text(result.iterations.to_string())));
            fields.push(("converged".into(), Cell::Flag(result.converged)));
            let code = fit_status(&Some(result), &mut notes);
            (Report::Record(fields), code)
        }
        Command::Backcast { anchors, bit_volume } => {
            let series = resolve_input(common)?;
            let (model, fitted) = resolve_model(common)?;
            let anchors = match anchors {
                Some(spec) => spec.parse::<AnchorSet>()?,
                None => reference_anchors(),
            };
            let rep = backcast(&model, &series, &anchors, *bit_volume)?;
            let mut fields = model_fields(&model);
            fields.push(("tb".into(), Cell::Num(rep.tb)));
            for e in &rep.abs_errors {
                fields.push((
                    format!("abs_error_{}", format_sig(e.year, 10)),
                    Cell::Num(e.abs_error),
                ));
            }
            fields.push(("weighted_abs_error".into(), Cell::Num(rep.weighted_abs_error)));
            fields.push(("relative_error_pct".into(), Cell::Num(rep.relative_error_pct)));
            (Report::Record(fields), fit_status(&fitted, &mut notes))
        }
        Command::Forecast { range, zb } => {
            let grid = Grid::new(range.from, range.to, range.step)?;
            let (model, fitted) = resolve_model(common)?;
            let (scale, unit) = if *zb { (1.0 / EB_PER_ZB, "zb") } else { (1.0, "eb") };
            let columns = vec![
                "year".to_string(),
                format!("volume_{unit}"),
                format!("dv_{unit}_per_yr2"),
                format!("d2v_{unit}_per_yr3"),
            ];
            let rows = grid
                .points()
                .into_iter()
                .map(|t| {
                    vec![
                        Cell::Num(t),
                        Cell::Num(model.eval(t) * scale),
                        Cell::Num(model.deriv1(t) * scale),
                        Cell::Num(model.deriv2(t) * scale),
                    ]
                })
                .collect();
            (Report::Table { columns, rows }, fit_status(&fitted, &mut notes))
        }
        Command::Metrics { range, metrics, asymptotes } => {
            let grid = Grid::new(range.from, range.to, range.step)?;
            let metrics = metrics.iter().map(|m| m.parse::<Metric>()).collect::<Result<Vec<_>>>()?;
            if metrics.is_empty() {
                return Err(Error::Validation("no metrics selected".into()));
            }
            let (model, fitted) = resolve_model(common)?;
            let cm = coupled(common, model)?;
            for m in &metrics {
                if let Some((lo, inclusive)) = cm.lower_limit(*m) {
                    let bad = if inclusive { grid.from < lo } else { grid.from <= lo };
                    if bad {
                        let op = if inclusive { ">=" } else { ">" };
                        return Err(Error::Domain(format!(
                            "metric {m} needs t {op} {lo}; range starts at {}",
                            grid.from
                        )));
                    }
                }
            }
            let mut columns = vec!["year".to_string()];
            columns.extend(metrics.iter().map(|m| m.column().to_string()));
            let mut rows = Vec::new();
            for t in grid.points() {
                let mut row = vec![Cell::Num(t)];
                for m in &metrics {
                    row.push(Cell::Num(cm.metric(*m, t)?));
                }
                rows.push(row);
            }
            if *asymptotes {
                let mut row = vec![Cell::Text("inf".into())];
                for m in &metrics {
                    row.push(Cell::Num(cm.asymptote_of(*m).unwrap_or(f64::INFINITY)));
                }
                rows.push(row);
            }
            (Report::Table { columns, rows }, fit_status(&fitted, &mut notes))
        }
        Command::Crosscheck { traffic_eb, broadband_share, total_seconds_month, mb_per_min, year } => {
            let (model, fitted) = resolve_model(common)?;
            let cm = coupled(common, model)?;
            let usernet = crosscheck_usernet(
                &cm,
                &UserNetInputs { traffic_eb: *traffic_eb, broadband_share: *broadband_share, year: *year },
            )?;
            let empirical = crosscheck_empirical(
                &cm.population,
                &EmpiricalInputs {
                    total_seconds_month: *total_seconds_month,
                    broadband_share: *broadband_share,
                    mb_per_min: *mb_per_min,
                    year: *year,
                },
            )?;
            let fields = vec![
                ("year".to_string(), Cell::Num(*year)),
                ("usernet_kbit_s".to_string(), Cell::Num(usernet)),
                ("empirical_kbit_s".to_string(), Cell::Num(empirical)),
                ("deviation_pct".to_string(), Cell::Num(100.0 * relative_deviation(usernet, empirical))),
            ];
            (Report::Record(fields), fit_status(&fitted, &mut notes))
        }
        Command::Milestones => {
            let (model, fitted) = resolve_model(common)?;
            let cm = coupled(common, model)?;
            let milestones = cm.milestones()?;
            if let VolumeModel::Logistic(p) = model {
                notes.push(format!(
                    "note: the 10% level ({} EB) is reached at t = {}; V(2011.5) = {} EB",
                    format_sig(0.1 * p.a, common.digits),
                    format_sig(milestones[0].t, common.digits),
                    format_sig(p.eval(2011.5), common.digits),
                ));
            }
            let rows = milestones
                .into_iter()
                .map(|m| vec![Cell::Text(m.label), Cell::Num(m.t)])
                .collect();
            let columns = vec!["milestone".to_string(), "year".to_string()];
            (Report::Table { columns, rows }, fit_status(&fitted, &mut notes))
        }
    };
    Ok(Outcome { output: render(&report, common.format, common.digits)?, exit_code, notes })
}

/// Parses `args`, executes and writes output. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cfg) {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            let written = match &cfg.common.out {
                Some(path) => std::fs::write(path, &outcome.output),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(outcome.output.as_bytes())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
