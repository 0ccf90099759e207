//! Command-line surface. `main` only forwards to [`run_cli`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sparse_hawkes::rng::derive_seed;
use sparse_hawkes::simulation::DEFAULT_BURN_IN;
use sparse_hawkes::{
    augmented_fit, build_group, fit_members, fit_mle, select_model, similarity_matrix,
    simulate_hawkes, simulate_hawkes_excerpt, simulate_poisson, simulate_poisson_excerpt,
    Criterion, EventSeries, FitOptions, FitResult, HawkesParams, ModelTag, PoissonParams,
    SimConfig, SimilarityDirection, DEFAULT_P_THRESHOLD,
};

use crate::config::{ExperimentName, ExperimentSpec};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, delta_criterion};
use crate::ingest::{ingest, serialize_csv, IngestOptions, InputFormat, NumericUnit};
use crate::table::{num, opt, Table};

#[derive(Parser, Debug)]
#[command(
    name = "sparse-hawkes",
    version,
    about = "Hawkes vs Poisson model selection for short event series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate Poisson or Hawkes event series.
    Simulate(SimulateArgs),
    /// Maximum-likelihood fit of one model per series (or pooled).
    Fit(FitArgs),
    /// Pairwise KS p-values of interarrival times.
    Similarity(SimilarityArgs),
    /// Pooled fits over KS-similar groups, Hawkes against Poisson.
    Augment(AugmentArgs),
    /// Per-series Hawkes against Poisson criterion difference and verdict.
    Select(SelectArgs),
    /// Convert pain reports to anchored event series.
    Ingest(IngestArgs),
    /// Run a named experiment and write CSV tables plus a manifest.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeriesFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value = "hawkes_full")]
    pub model: ModelTag,
    /// Poisson rate.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Initial intensity of the shifted model (defaults to lambda0).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Events per series.
    #[arg(long, conflicts_with = "horizon")]
    pub events: Option<usize>,
    /// Simulate up to this time instead of a fixed event count.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Keep an excerpt of `--events` events after a burn-in.
    #[arg(long, requires = "events")]
    pub excerpt: bool,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: SeriesFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SeriesInput {
    /// Event series JSON written by `simulate` or `ingest`.
    #[arg(long, required_unless_present = "reports", conflicts_with = "reports")]
    pub series: Option<PathBuf>,
    /// Raw pain reports (`subject_id,timestamp,pain_level`).
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Report format; guessed from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long)]
    pub merge_duplicates: bool,
    #[arg(long, value_enum, default_value = "seconds")]
    pub numeric_unit: NumericUnit,
}

#[derive(Args, Debug, Clone)]
pub struct FitControl {
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub fit_seed: u64,
}

impl FitControl {
    fn options(&self) -> FitOptions {
        FitOptions {
            starts: self.starts,
            seed: self.fit_seed,
            ..FitOptions::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: SeriesInput,
    #[arg(long, default_value = "hawkes_shifted")]
    pub model: ModelTag,
    /// One fit over all series at shared parameters.
    #[arg(long)]
    pub pooled: bool,
    #[command(flatten)]
    pub control: FitControl,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimilarityArgs {
    #[command(flatten)]
    pub input: SeriesInput,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub input: SeriesInput,
    /// Anchor series id; every series anchors a group when absent.
    #[arg(long)]
    pub anchor: Option<String>,
    #[arg(long, default_value_t = DEFAULT_P_THRESHOLD)]
    pub p_threshold: f64,
    /// `ge`: similar when p >= p_c; `lt`: similar when p < p_c.
    #[arg(long, default_value = "ge")]
    pub direction: SimilarityDirection,
    #[arg(long, default_value = "hawkes_shifted")]
    pub model: ModelTag,
    #[arg(long, default_value = "aic")]
    pub criterion: Criterion,
    #[command(flatten)]
    pub control: FitControl,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: SeriesInput,
    #[arg(long, default_value = "hawkes_shifted")]
    pub model: ModelTag,
    #[arg(long, default_value = "aic")]
    pub criterion: Criterion,
    #[command(flatten)]
    pub control: FitControl,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long)]
    pub merge_duplicates: bool,
    #[arg(long, value_enum, default_value = "seconds")]
    pub numeric_unit: NumericUnit,
    /// `json`: event series; `csv`: day-offset reports that re-ingest unchanged with `--numeric-unit days`.
    #[arg(long, value_enum, default_value = "json")]
    pub emit: SeriesFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: ExperimentName,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output directory (default `results/<name>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parameter override `key=value` (repeatable; values parsed as JSON when possible).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Report file for the cohort pipeline.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Group discrimination series by generator instead of KS similarity.
    #[arg(long)]
    pub group_by_label: bool,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| HarnessError::io(format!("writing {}", p.display()), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::io("writing stdout", e)),
    }
}

fn warn(messages: &[String]) {
    for m in messages {
        eprintln!("warning: {m}");
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn load_series(input: &SeriesInput) -> Result<Vec<EventSeries>> {
    if let Some(path) = &input.series {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        let series: Vec<EventSeries> = serde_json::from_str(&text)?;
        if series.is_empty() {
            return Err(HarnessError::Data(format!(
                "{} holds no series",
                path.display()
            )));
        }
        return Ok(series);
    }
    let path = input.reports.as_ref().expect("clap enforces one input");
    let format = input
        .format
        .or_else(|| InputFormat::from_path(path))
        .ok_or_else(|| {
            HarnessError::Usage(format!(
                "cannot tell the format of {}; pass --format",
                path.display()
            ))
        })?;
    let opts = IngestOptions {
        merge_duplicates: input.merge_duplicates,
        numeric_unit: input.numeric_unit,
    };
    let got = ingest(path, format, &opts)?;
    warn(&got.warnings);
    if got.series.is_empty() {
        return Err(HarnessError::Data(format!(
            "{} yields no subjects with events",
            path.display()
        )));
    }
    Ok(got.series)
}

fn series_csv(series: &[EventSeries]) -> Result<String> {
    let mut t = Table::new("series", &["series_id", "time", "window_end"]);
    for s in series {
        for time in s.times() {
            t.push(vec![s.id().to_string(), num(*time), num(s.window_end())]);
        }
    }
    t.to_csv_string()
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    if a.events.is_none() && a.horizon.is_none() {
        return Err(HarnessError::Usage("pass --events or --horizon".into()));
    }
    let series = (0..a.count as u64)
        .map(|i| {
            let seed = if a.count == 1 {
                a.seed
            } else {
                derive_seed(a.seed, i)
            };
            let config = match (a.events, a.horizon) {
                (Some(n), _) => SimConfig::events(seed, n),
                (None, Some(h)) => SimConfig::horizon(seed, h),
                (None, None) => unreachable!(),
            };
            let s = match a.model {
                ModelTag::Poisson => {
                    let p = PoissonParams::new(a.rate)?;
                    if a.excerpt {
                        simulate_poisson_excerpt(&p, a.events.expect("clap requires events"), seed)?
                    } else {
                        simulate_poisson(&p, &config)?
                    }
                }
                ModelTag::HawkesFull | ModelTag::HawkesShifted => {
                    let p = if a.model == ModelTag::HawkesFull {
                        HawkesParams::full_history(a.lambda0, a.alpha, a.delta)?
                    } else {
                        HawkesParams::shifted(
                            a.lambda0,
                            a.alpha,
                            a.delta,
                            a.gamma.unwrap_or(a.lambda0),
                        )?
                    };
                    if a.excerpt {
                        simulate_hawkes_excerpt(
                            &p,
                            a.events.expect("clap requires events"),
                            a.burn_in,
                            seed,
                        )?
                    } else {
                        simulate_hawkes(&p, &config)?
                    }
                }
            };
            let id = if a.count == 1 {
                s.id().to_string()
            } else {
                format!("series-{i}")
            };
            Ok(EventSeries::new(
                id,
                s.times().to_vec(),
                Some(s.window_end()),
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match a.format {
        SeriesFormat::Json => json(&series)?,
        SeriesFormat::Csv => series_csv(&series)?,
    };
    write_output(a.out.as_deref(), &text)
}

#[derive(Serialize)]
struct NamedFit<'a> {
    id: &'a str,
    #[serde(flatten)]
    fit: FitResult,
}

fn fit(a: &FitArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let opts = a.control.options();
    let fits: Vec<NamedFit> = if a.pooled {
        let refs: Vec<&EventSeries> = series.iter().collect();
        let r = fit_members(a.model, series[0].id(), &refs, &opts)?;
        vec![NamedFit {
            id: "pooled",
            fit: r.fit,
        }]
    } else {
        series
            .iter()
            .map(|s| {
                Ok(NamedFit {
                    id: s.id(),
                    fit: fit_mle(a.model, s, &opts)?,
                })
            })
            .collect::<Result<_>>()?
    };
    write_output(a.out.as_deref(), &json(&fits)?)
}

fn similarity(a: &SimilarityArgs) -> Result<()> {
    let series = load_series(&a.input)?;
    let m = similarity_matrix(&series);
    warn(
        &m.excluded
            .iter()
            .map(|id| format!("series '{id}' has fewer than 2 events; excluded"))
            .collect::<Vec<_>>(),
    );
    let mut t = Table::new("similarity", &["row", "col", "p_value", "statistic"]);
    for (i, a) in m.ids.iter().enumerate() {
        for (j, b) in m.ids.iter().enumerate() {
            t.push(vec![
                a.clone(),
                b.clone(),
                num(m.p[i][j]),
                num(m.stat[i][j]),
            ]);
        }
    }
    write_output(a.out.as_deref(), &t.to_csv_string()?)
}

fn verdict_cells(delta: Option<f64>) -> [String; 2] {
    match delta {
        Some(d) => {
            let v = sparse_hawkes::SelectionVerdict::from_delta(d);
            [
                serde_json::to_value(v.verdict)
                    .ok()
                    .and_then(|x| x.as_str().map(String::from))
                    .unwrap_or_default(),
                v.confidence_level.label().to_string(),
            ]
        }
        None => [String::new(), String::new()],
    }
}

fn augment(a: &AugmentArgs) -> Result<()> {
    if !a.model.is_hawkes() {
        return Err(HarnessError::Usage(
            "--model must be a Hawkes variant".into(),
        ));
    }
    let series = load_series(&a.input)?;
    let m = similarity_matrix(&series);
    warn(
        &m.excluded
            .iter()
            .map(|id| format!("series '{id}' has fewer than 2 events; excluded"))
            .collect::<Vec<_>>(),
    );
    let anchors: Vec<String> = match &a.anchor {
        Some(id) => vec![id.clone()],
        None => m.ids.clone(),
    };
    let opts = a.control.options();
    let mut t = Table::new(
        "augment",
        &[
            "anchor",
            "group_size",
            "total_events",
            "lambda0",
            "alpha",
            "delta",
            "gamma",
            "loglik_hawkes",
            "loglik_poisson",
            "delta_criterion",
            "verdict",
            "confidence_level",
            "members",
        ],
    );
    for anchor in anchors {
        let g = build_group(&m, &anchor, a.p_threshold, a.direction)?;
        let h = augmented_fit(a.model, &g, &series, &opts)?;
        let p = augmented_fit(ModelTag::Poisson, &g, &series, &opts)?;
        let d = delta_criterion(&h.fit, &p.fit, a.criterion);
        let hp = h.fit.params.hawkes().expect("hawkes fit");
        let [verdict, level] = verdict_cells(d);
        t.push(vec![
            anchor,
            g.members.len().to_string(),
            h.total_events.to_string(),
            num(hp.lambda0()),
            num(hp.alpha()),
            num(hp.delta()),
            num(hp.gamma()),
            num(h.fit.loglik),
            num(p.fit.loglik),
            opt(d),
            verdict,
            level,
            g.members.join(";"),
        ]);
    }
    write_output(a.out.as_deref(), &t.to_csv_string()?)
}

fn select(a: &SelectArgs) -> Result<()> {
    if !a.model.is_hawkes() {
        return Err(HarnessError::Usage(
            "--model must be a Hawkes variant".into(),
        ));
    }
    let series = load_series(&a.input)?;
    let opts = a.control.options();
    let mut t = Table::new(
        "select",
        &[
            "id",
            "n_events",
            "loglik_hawkes",
            "loglik_poisson",
            "delta_criterion",
            "verdict",
            "confidence_level",
            "note",
        ],
    );
    for s in &series {
        let h = fit_mle(a.model, s, &opts);
        let p = fit_mle(ModelTag::Poisson, s, &opts);
        let (h, p) = match (h, p) {
            (Ok(h), Ok(p)) => (h, p),
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("warning: series '{}': {e}", s.id());
                t.push(vec![
                    s.id().into(),
                    s.len().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ]);
                continue;
            }
        };
        let (d, note) = match select_model(&h, &p, a.criterion) {
            Ok(v) => (Some(v.delta_aic), String::new()),
            Err(e) => (None, e.to_string()),
        };
        let [verdict, level] = verdict_cells(d);
        t.push(vec![
            s.id().into(),
            s.len().to_string(),
            num(h.loglik),
            num(p.loglik),
            opt(d),
            verdict,
            level,
            note,
        ]);
    }
    write_output(a.out.as_deref(), &t.to_csv_string()?)
}

fn ingest_cmd(a: &IngestArgs) -> Result<()> {
    let format = a
        .format
        .or_else(|| InputFormat::from_path(&a.input))
        .ok_or_else(|| {
            HarnessError::Usage(format!(
                "cannot tell the format of {}; pass --format",
                a.input.display()
            ))
        })?;
    let opts = IngestOptions {
        merge_duplicates: a.merge_duplicates,
        numeric_unit: a.numeric_unit,
    };
    let got = ingest(&a.input, format, &opts)?;
    warn(&got.warnings);
    let text = match a.emit {
        SeriesFormat::Json => json(&got.series)?,
        SeriesFormat::Csv => serialize_csv(&got.series)?,
    };
    write_output(a.out.as_deref(), &text)
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(path) => {
            let s = ExperimentSpec::from_json_file(path)?;
            if s.experiment != a.name {
                return Err(HarnessError::Usage(format!(
                    "config is for {} but {} was requested",
                    s.experiment, a.name
                )));
            }
            s
        }
        None => ExperimentSpec::new(a.name),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(trials) = a.trials {
        if trials == 0 {
            return Err(HarnessError::Usage("--trials must be >= 1".into()));
        }
        spec.trials = Some(trials);
    }
    if let Some(out) = &a.out {
        spec.output = Some(out.clone());
    }
    for s in &a.set {
        spec.apply_set(s)?;
    }
    if let Some(data) = &a.data {
        if a.name != ExperimentName::CohortPipeline {
            return Err(HarnessError::Usage(
                "--data applies to cohort_pipeline only".into(),
            ));
        }
        spec.overrides
            .insert("data".into(), data.to_string_lossy().into_owned().into());
    }
    if a.group_by_label {
        if a.name != ExperimentName::Discrimination {
            return Err(HarnessError::Usage(
                "--group-by-label applies to discrimination only".into(),
            ));
        }
        spec.overrides.insert("grouping".into(), "label".into());
    }
    let dir = spec
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(a.name.as_str()));
    let out = experiments::run(&spec)?;
    warn(&out.warnings);
    let written = experiments::write_run(&spec, &out, &dir)?;
    let report = serde_json::json!({
        "experiment": a.name,
        "outputs": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": out.summary,
    });
    write_output(None, &json(&report)?)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Similarity(a) => similarity(a),
        Command::Augment(a) => augment(a),
        Command::Select(a) => select(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Experiment(a) => experiment(a),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_map_to_usage() {
        assert_eq!(run_cli(["sparse-hawkes", "bogus"]), 1);
        assert_eq!(run_cli(["sparse-hawkes", "fit"]), 1);
        assert_eq!(
            run_cli([
                "sparse-hawkes",
                "simulate",
                "--model",
                "gaussian",
                "--events",
                "3"
            ]),
            1
        );
        assert_eq!(run_cli(["sparse-hawkes", "--help"]), 0);
    }

    #[test]
    fn simulate_requires_a_stop() {
        assert_eq!(run_cli(["sparse-hawkes", "simulate"]), 1);
    }

    #[test]
    fn supercritical_simulation_is_usage_error() {
        let code = run_cli([
            "sparse-hawkes",
            "simulate",
            "--alpha",
            "2",
            "--delta",
            "1",
            "--events",
            "5",
        ]);
        assert_eq!(code, 1);
    }
}
