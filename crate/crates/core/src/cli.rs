//! Command-line surface: CSV ingestion, run configuration, the `fit` and
//! `simulate` commands, and report and trace writers.
//!
//! Input CSV files need the columns `y`, `z` and `group` (any case); an
//! optional `t` column holds the treatment flag and is checked against
//! `z >= 0`. The cutoff must already be shifted to zero.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{HgprError, Result};
use crate::inference::{summarize, test_homogeneous_null, test_sharp_null, HomogeneousNullTest, SharpNullTest};
use crate::kernels::KdeltaMode;
use crate::model::{canonicalize, Observation};
use crate::sampler::{run_chain, Chain, SamplerConfig};
use crate::simulation::{run_study, DeltaMode, DgpKind, DgpSpec, ErrorMode, MethodReport, MetricsRow, StudyReport};
use crate::windowing::{
    apply_cut, resolve_window, rule_of_thumb_half_width, SkewMode, Window, WindowPolicy,
    DEFAULT_IMBALANCE_RATIO,
};

/// A data row that could not be read.
#[derive(Clone, Debug, PartialEq)]
pub struct RowError {
    /// 1-based line in the file, header included.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub observations: Vec<Observation>,
    pub rejected: Vec<RowError>,
    /// Rows whose `t` disagreed with `z >= 0`.
    pub flag_mismatches: usize,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "t" | "yes" => Some(true),
        "0" | "0.0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("non-finite value {v}")),
        Err(_) if s.is_empty() => Err("missing value".into()),
        Err(_) => Err(format!("not a number: {s:?}")),
    }
}

/// Reads observations, keeping bad rows aside with their line numbers.
pub fn ingest_csv_detailed(path: &Path) -> Result<Ingested> {
    let csv_err = |source| HgprError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| HgprError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut seen = std::collections::HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h.to_ascii_lowercase()) {
            return Err(HgprError::DuplicateColumn {
                path: path.to_path_buf(),
                column: h.to_string(),
            });
        }
    }
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let column = |name: &'static str| {
        find(name).ok_or_else(|| HgprError::MissingColumn {
            path: path.to_path_buf(),
            column: name,
        })
    };
    let (iy, iz, ig) = (column("y")?, column("z")?, column("group")?);
    let it = find("t");

    let mut out = Ingested {
        observations: Vec::new(),
        rejected: Vec::new(),
        flag_mismatches: 0,
    };
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let parsed = (|| {
            let y = parse_finite(field(iy)).map_err(|e| format!("y: {e}"))?;
            let z = parse_finite(field(iz)).map_err(|e| format!("z: {e}"))?;
            let group = field(ig);
            if group.is_empty() {
                return Err("group: missing value".to_string());
            }
            let t = match it {
                Some(i) if !field(i).is_empty() => Some(
                    parse_flag(field(i)).ok_or_else(|| format!("t: not a flag: {:?}", field(i)))?,
                ),
                _ => None,
            };
            Ok((y, z, group.to_string(), t))
        })();
        match parsed {
            Ok((y, z, group, t)) => {
                let mut obs = Observation::sharp(y, z, group);
                if let Some(t) = t {
                    if t != obs.treated {
                        warn!("{}:{line}: t = {t} disagrees with z = {z}", path.display());
                        out.flag_mismatches += 1;
                    }
                    obs.treated = t;
                }
                out.observations.push(obs);
            }
            Err(reason) => {
                warn!("{}:{line}: row rejected: {reason}", path.display());
                out.rejected.push(RowError { line, reason });
            }
        }
    }
    if out.observations.is_empty() {
        return Err(HgprError::NoValidRows {
            path: path.to_path_buf(),
            rejected: out.rejected.len(),
        });
    }
    Ok(out)
}

/// Reads observations; rejected rows are logged and skipped.
pub fn ingest_csv(path: &Path) -> Result<Vec<Observation>> {
    ingest_csv_detailed(path).map(|i| i.observations)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HgprError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> HgprError + '_ {
    move |source| HgprError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_fail(path: &Path) -> impl Fn(std::io::Error) -> HgprError + '_ {
    move |e| HgprError::io(path, e)
}

/// Writes observations with columns `y,z,group,t`.
pub fn write_observations_csv(path: &Path, observations: &[Observation]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = csv_fail(path);
    w.write_record(["y", "z", "group", "t"]).map_err(&fail)?;
    for o in observations {
        w.write_record([
            o.y.to_string(),
            o.z.to_string(),
            o.group.clone(),
            (o.treated as u8).to_string(),
        ])
        .map_err(&fail)?;
    }
    w.flush().map_err(io_fail(path))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl ReportFormat {
    /// `csv` for a `.csv` extension, JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// Settings of the `fit` command. Every field can come from a JSON config
/// file; command-line flags override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub input: Option<PathBuf>,
    /// Half-width of the window around the cutoff. No cut when absent.
    pub window: Option<f64>,
    /// Use `1.06 · sd(z) · N^(-1/5)` when no window is given.
    pub window_rule_of_thumb: bool,
    pub skew: SkewMode,
    pub imbalance_ratio: f64,
    pub kdelta: KdeltaMode,
    pub iterations: usize,
    pub burn_in: usize,
    pub alpha: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
    pub trace: Option<PathBuf>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        FitConfig {
            input: None,
            window: None,
            window_rule_of_thumb: false,
            skew: SkewMode::None,
            imbalance_ratio: DEFAULT_IMBALANCE_RATIO,
            kdelta: s.kdelta_mode,
            iterations: s.iterations,
            burn_in: s.burn_in,
            alpha: 0.05,
            seed: s.seed,
            out: None,
            format: None,
            trace: None,
        }
    }
}

impl FitConfig {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            kdelta_mode: self.kdelta,
            ..SamplerConfig::default()
        }
    }
}

/// Settings of the `simulate` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub dgp: DgpKind,
    /// Defaults to the process's own group count when absent.
    pub groups: Option<usize>,
    pub per_group: usize,
    pub delta_mode: DeltaMode,
    pub error_mode: ErrorMode,
    pub reps: usize,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub kdelta: KdeltaMode,
    /// Also fit the windowed variant with this half-width.
    pub window: Option<f64>,
    pub skew: SkewMode,
    pub imbalance_ratio: f64,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let s = SamplerConfig::default();
        SimulateConfig {
            dgp: DgpKind::Dgp1,
            groups: None,
            per_group: 100,
            delta_mode: DeltaMode::I,
            error_mode: ErrorMode::A,
            reps: 1,
            seed: 0,
            iterations: s.iterations,
            burn_in: s.burn_in,
            kdelta: s.kdelta_mode,
            window: None,
            skew: SkewMode::None,
            imbalance_ratio: DEFAULT_IMBALANCE_RATIO,
            out: None,
            format: None,
        }
    }
}

impl SimulateConfig {
    pub fn spec(&self) -> DgpSpec {
        let base = DgpSpec::new(self.dgp);
        DgpSpec {
            n_groups: self.groups.unwrap_or(base.n_groups),
            per_group: self.per_group,
            delta_mode: self.delta_mode,
            error_mode: self.error_mode,
            ..base
        }
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            kdelta_mode: self.kdelta,
            ..SamplerConfig::default()
        }
    }

    pub fn window_policy(&self) -> Result<Option<WindowPolicy>> {
        self.window
            .map(|h| {
                let p = WindowPolicy {
                    half_width: h,
                    skew_mode: self.skew,
                    imbalance_ratio: self.imbalance_ratio,
                };
                p.validate().map(|_| p)
            })
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    pub label: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRate {
    pub coordinate: String,
    pub rate: f64,
}

/// Everything `fit` reports. Contains no timestamps, so identical inputs
/// give byte-identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub groups: Vec<GroupEstimate>,
    pub alpha: f64,
    pub r_alpha: f64,
    pub volume: f64,
    pub sharp_null: SharpNullTest,
    pub homogeneous_null: HomogeneousNullTest,
    pub acceptance_rates: Vec<AcceptanceRate>,
    pub n_rows: usize,
    pub n_rows_used: usize,
    /// Interval actually kept, when a window was applied.
    pub window: Option<Window>,
    pub config: FitConfig,
    pub seed: u64,
}

pub struct FitOutcome {
    pub report: FitReport,
    pub chain: Chain,
    pub labels: Vec<String>,
}

/// Runs `fit` without touching the filesystem except for reading input.
pub fn fit_observations(observations: &[Observation], cfg: &FitConfig) -> Result<FitOutcome> {
    let data = canonicalize(observations)?;
    let n_rows = data.len();
    let half_width = match cfg.window {
        Some(h) => Some(h),
        None if cfg.window_rule_of_thumb => {
            let h = rule_of_thumb_half_width(&data)?;
            log::info!("rule-of-thumb window half-width {h}");
            Some(h)
        }
        None => None,
    };
    let (data, window) = match half_width {
        Some(h) => {
            let policy = WindowPolicy {
                half_width: h,
                skew_mode: cfg.skew,
                imbalance_ratio: cfg.imbalance_ratio,
            };
            let w = resolve_window(&data, &policy)?;
            (apply_cut(&data, &policy)?, Some(w))
        }
        None => (data, None),
    };
    let chain = run_chain(&data, &cfg.sampler())?;
    let summary = summarize(&chain, cfg.alpha)?;
    let sharp_null = test_sharp_null(&summary)?;
    let homogeneous_null = test_homogeneous_null(&summary)?;
    let labels = data.labels().to_vec();
    let groups = labels
        .iter()
        .zip(&summary.delta_mean)
        .zip(&summary.marginal_intervals)
        .map(|((label, &mean), &(lower, upper))| GroupEstimate {
            label: label.clone(),
            mean,
            lower,
            upper,
        })
        .collect();
    let theta = &chain.samples[0].theta;
    let acceptance_rates = theta
        .coordinates()
        .zip(&chain.acceptance_rates)
        .map(|(c, &rate)| AcceptanceRate {
            coordinate: c.name(),
            rate,
        })
        .collect();
    let mut echo = cfg.clone();
    echo.window = half_width;
    let report = FitReport {
        groups,
        alpha: summary.alpha,
        r_alpha: summary.r_alpha,
        volume: summary.volume,
        sharp_null,
        homogeneous_null,
        acceptance_rates,
        n_rows,
        n_rows_used: data.len(),
        window,
        config: echo,
        seed: cfg.seed,
    };
    Ok(FitOutcome {
        report,
        chain,
        labels,
    })
}

pub fn run_fit(cfg: &FitConfig) -> Result<FitOutcome> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| HgprError::InvalidConfig("fit needs an input file".into()))?;
    let observations = ingest_csv(input)?;
    let outcome = fit_observations(&observations, cfg)?;
    if let Some(out) = &cfg.out {
        let format = cfg.format.unwrap_or_else(|| ReportFormat::from_path(out));
        write_fit_report(&outcome.report, out, format)?;
    }
    if let Some(trace) = &cfg.trace {
        write_trace_csv(&outcome.chain, &outcome.labels, trace)?;
    }
    Ok(outcome)
}

pub fn run_simulate(cfg: &SimulateConfig) -> Result<StudyReport> {
    let report = run_study(
        &cfg.spec(),
        cfg.reps,
        &cfg.sampler(),
        cfg.window_policy()?.as_ref(),
        cfg.seed,
    )?;
    if let Some(out) = &cfg.out {
        let format = cfg.format.unwrap_or_else(|| ReportFormat::from_path(out));
        write_study_report(&report, out, format)?;
    }
    Ok(report)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| HgprError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_fail(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| HgprError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| HgprError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// JSON: the full report. CSV: one row per group with the marginal
/// summary; the region and tests are only in the JSON form.
pub fn write_fit_report(report: &FitReport, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => write_json(report, path),
        ReportFormat::Csv => {
            let mut w = csv_writer(path)?;
            let fail = csv_fail(path);
            w.write_record(["group", "mean", "lower", "upper"]).map_err(&fail)?;
            for g in &report.groups {
                w.write_record([
                    g.label.clone(),
                    g.mean.to_string(),
                    g.lower.to_string(),
                    g.upper.to_string(),
                ])
                .map_err(&fail)?;
            }
            w.flush().map_err(io_fail(path))
        }
    }
}

pub fn read_fit_report(path: &Path) -> Result<FitReport> {
    read_json(path)
}

/// One row per retained iteration: the iteration number, every θ
/// coordinate, then `delta_<label>` for each group.
pub fn write_trace_csv(chain: &Chain, labels: &[String], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = csv_fail(path);
    let Some(first) = chain.samples.first() else {
        return Err(HgprError::EmptyChain);
    };
    let coords: Vec<_> = first.theta.coordinates().collect();
    let mut header = vec!["iteration".to_string()];
    header.extend(coords.iter().map(|c| c.name()));
    header.extend(labels.iter().map(|l| format!("delta_{l}")));
    w.write_record(&header).map_err(&fail)?;
    for (t, s) in chain.samples.iter().enumerate() {
        let mut row = vec![(chain.burn_in_used + t).to_string()];
        row.extend(coords.iter().map(|&c| s.theta.get(c).to_string()));
        row.extend(s.delta.iter().map(f64::to_string));
        w.write_record(&row).map_err(&fail)?;
    }
    w.flush().map_err(io_fail(path))
}

/// Path of the windowed-variant table next to a CSV study report.
pub fn cut_report_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(Default::default, |s| s.to_os_string());
    let mut name = stem;
    name.push(".cut.csv");
    path.with_file_name(name)
}

fn write_method_csv(m: &MethodReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let fail = csv_fail(path);
    let mut header = vec!["replicate"];
    header.extend(MetricsRow::FIELDS);
    w.write_record(&header).map_err(&fail)?;
    let mut write = |id: String, row: &MetricsRow| {
        let mut rec = vec![id];
        rec.extend(row.values().iter().map(f64::to_string));
        w.write_record(&rec).map_err(&fail)
    };
    for r in &m.rows {
        write(r.replicate.to_string(), &r.metrics)?;
    }
    if let Some(mean) = &m.mean {
        write("mean".into(), mean)?;
    }
    w.flush().map_err(io_fail(path))
}

/// JSON: the full report. CSV: `replicate` plus one column per metric, one
/// row per successful replicate and a final `mean` row; the windowed
/// variant goes to a sibling `<stem>.cut.csv`.
pub fn write_study_report(report: &StudyReport, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => write_json(report, path),
        ReportFormat::Csv => {
            write_method_csv(&report.hgpr, path)?;
            if let Some(cut) = &report.hgpr_cut {
                write_method_csv(cut, &cut_report_path(path))?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hgpr", version, about = "Hierarchical GP regression for grouped regression discontinuity designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a CSV dataset with columns y, z, group and optionally t.
    Fit(FitArgs),
    /// Run a replication study on a synthetic data generating process.
    Simulate(SimulateArgs),
}

fn parse_via_fromstr<T: std::str::FromStr<Err = HgprError>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: HgprError| e.to_string())
}

#[derive(Debug, Default, Args)]
pub struct FitArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Window half-width around the cutoff.
    #[arg(long)]
    pub window: Option<f64>,
    /// Derive the half-width as 1.06 sd(z) N^(-1/5) when --window is absent.
    #[arg(long)]
    pub window_rule_of_thumb: bool,
    /// none, auto, right or left.
    #[arg(long, value_parser = parse_via_fromstr::<SkewMode>)]
    pub skew: Option<SkewMode>,
    #[arg(long)]
    pub imbalance_ratio: Option<f64>,
    /// se or diag.
    #[arg(long, value_parser = parse_via_fromstr::<KdeltaMode>)]
    pub kdelta: Option<KdeltaMode>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format; inferred from the --out extension by default.
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
    /// Write the retained draws to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl FitArgs {
    pub fn resolve(&self) -> Result<FitConfig> {
        let mut c: FitConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => FitConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = &self.$flag { c.$field = v.clone().into(); })*
            };
        }
        set!(input => input, window => window, out => out, trace => trace, format => format);
        set!(skew => skew, imbalance_ratio => imbalance_ratio, kdelta => kdelta);
        set!(iters => iterations, burnin => burn_in, alpha => alpha, seed => seed);
        if self.window_rule_of_thumb {
            c.window_rule_of_thumb = true;
        }
        Ok(c)
    }
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// dgp1, dgp2 or dgp3.
    #[arg(long, value_parser = parse_via_fromstr::<DgpKind>)]
    pub dgp: Option<DgpKind>,
    /// I or II (dgp3 only).
    #[arg(long, value_parser = parse_via_fromstr::<DeltaMode>)]
    pub delta_mode: Option<DeltaMode>,
    /// A or B (dgp3 only).
    #[arg(long, value_parser = parse_via_fromstr::<ErrorMode>)]
    pub error_mode: Option<ErrorMode>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub per_group: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long, value_parser = parse_via_fromstr::<KdeltaMode>)]
    pub kdelta: Option<KdeltaMode>,
    /// Also fit the windowed variant with this half-width.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, value_parser = parse_via_fromstr::<SkewMode>)]
    pub skew: Option<SkewMode>,
    #[arg(long)]
    pub imbalance_ratio: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<SimulateConfig> {
        let mut c: SimulateConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => SimulateConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = &self.$flag { c.$field = v.clone().into(); })*
            };
        }
        set!(dgp => dgp, delta_mode => delta_mode, error_mode => error_mode);
        set!(groups => groups, per_group => per_group, reps => reps, seed => seed);
        set!(iters => iterations, burnin => burn_in, kdelta => kdelta);
        set!(window => window, skew => skew, imbalance_ratio => imbalance_ratio);
        set!(out => out, format => format);
        Ok(c)
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            let outcome = run_fit(&cfg)?;
            if cfg.out.is_none() {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                serde_json::to_writer_pretty(&mut lock, &outcome.report).map_err(|source| {
                    HgprError::Json {
                        path: "<stdout>".into(),
                        source,
                    }
                })?;
                writeln!(lock).map_err(io_fail(Path::new("<stdout>")))?;
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let report = run_simulate(&cfg)?;
            if cfg.out.is_none() {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                serde_json::to_writer_pretty(&mut lock, &report).map_err(|source| {
                    HgprError::Json {
                        path: "<stdout>".into(),
                        source,
                    }
                })?;
                writeln!(lock).map_err(io_fail(Path::new("<stdout>")))?;
            }
            Ok(())
        }
    }
}

/// Formats an error as the single line the binary prints on failure.
pub fn error_line(err: &HgprError) -> String {
    let msg = err.to_string().replace(['\n', '\r'], " ");
    format!("error[{}]: {msg}", err.category())
}

/// Entry point of the binary: parses `std::env::args`, runs the command
/// and maps failures to a one-line message and exit code 1 (2 for usage
/// errors).
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
