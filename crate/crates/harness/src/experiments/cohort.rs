//! End-to-end cohort run: single fits, KS similarity, augmented fits per
//! anchor, and verdict counts per confidence level.

use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_hawkes::rng::{derive_seed, rng_from_seed};
use sparse_hawkes::simulation::DEFAULT_BURN_IN;
use sparse_hawkes::{
    build_group, fit_members, similarity_matrix, simulate_hawkes_excerpt, simulate_poisson_excerpt,
    ConfidenceLevel, Criterion, EventSeries, FitOptions, HawkesParams, ModelTag, PoissonParams,
    SelectionVerdict, SimilarityDirection, SimilarityMatrix, Verdict, DEFAULT_P_THRESHOLD,
};

use super::{delta_criterion, RunOutput};
use crate::config::ExperimentSpec;
use crate::error::{HarnessError, Result};
use crate::ingest::{ingest, IngestOptions, InputFormat, NumericUnit};
use crate::table::{num, opt, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Report file; a synthetic cohort is simulated when absent.
    pub data: Option<PathBuf>,
    /// Guessed from the extension when absent.
    pub format: Option<InputFormat>,
    pub merge_duplicates: bool,
    pub numeric_unit: NumericUnit,
    /// Size of the synthetic cohort.
    pub subjects: usize,
    pub model: ModelTag,
    pub criterion: Criterion,
    pub p_threshold: f64,
    pub direction: SimilarityDirection,
    pub starts: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            data: None,
            format: None,
            merge_duplicates: false,
            numeric_unit: NumericUnit::Seconds,
            subjects: 39,
            model: ModelTag::HawkesShifted,
            criterion: Criterion::Aic,
            p_threshold: DEFAULT_P_THRESHOLD,
            direction: SimilarityDirection::SimilarIfPGe,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subject {
    pub id: String,
    /// Generating process for synthetic subjects.
    pub generator: Option<String>,
    pub n_events: usize,
    pub window: f64,
    pub single_delta: Option<f64>,
    pub single_error: Option<String>,
    /// Anchor first.
    pub group: Vec<String>,
    pub aug_events: usize,
    pub aug_delta: Option<f64>,
    pub aug_error: Option<String>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub series_type: &'static str,
    pub level: ConfidenceLevel,
    pub poisson: usize,
    pub hawkes: usize,
    pub inconclusive: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cohort {
    pub subjects: Vec<Subject>,
    pub counts: Vec<CountRow>,
    pub matrix: SimilarityMatrix,
    pub warnings: Vec<String>,
}

impl Cohort {
    pub fn count(&self, series_type: &str, level: ConfidenceLevel) -> &CountRow {
        self.counts
            .iter()
            .find(|r| r.series_type == series_type && r.level == level)
            .expect("all rows present")
    }
}

/// Heterogeneous subjects: a mix of Hawkes excerpts and Poisson series with
/// varied rates and lengths, time unit days.
pub fn synthetic_cohort(n: usize, seed: u64) -> Result<Vec<(EventSeries, String)>> {
    (0..n as u64)
        .map(|i| {
            let s = derive_seed(seed, i);
            let mut r = rng_from_seed(s);
            let n_events = r.random_range(6..=60);
            let id = format!("subject-{:02}", i + 1);
            let (raw, generator) = if r.random_bool(0.6) {
                let delta: f64 = r.random_range(0.3..3.0);
                let eta: f64 = r.random_range(0.3..0.85);
                let lambda0: f64 = r.random_range(0.05..0.3);
                let p = HawkesParams::full_history(lambda0, eta * delta, delta)?;
                (
                    simulate_hawkes_excerpt(&p, n_events, DEFAULT_BURN_IN, s)?,
                    "hawkes",
                )
            } else {
                let p = PoissonParams::new(r.random_range(0.1..0.6))?;
                (simulate_poisson_excerpt(&p, n_events, s)?, "poisson")
            };
            Ok((
                EventSeries::new(id, raw.times().to_vec(), Some(raw.window_end()))?,
                generator.to_string(),
            ))
        })
        .collect()
}

fn compare(
    params: &Params,
    members: &[&EventSeries],
    opts: &FitOptions,
) -> std::result::Result<(f64, usize), String> {
    let h = fit_members(params.model, members[0].id(), members, opts).map_err(|e| e.to_string())?;
    let p = fit_members(ModelTag::Poisson, members[0].id(), members, opts)
        .map_err(|e| e.to_string())?;
    let d = delta_criterion(&h.fit, &p.fit, params.criterion)
        .ok_or_else(|| "criterion undefined".to_string())?;
    Ok((d, h.total_events))
}

fn verdict_counts(series_type: &'static str, deltas: &[Option<f64>]) -> Vec<CountRow> {
    ConfidenceLevel::ALL
        .into_iter()
        .map(|level| {
            let mut row = CountRow {
                series_type,
                level,
                poisson: 0,
                hawkes: 0,
                inconclusive: 0,
                failed: 0,
            };
            for d in deltas {
                match d.map(|d| SelectionVerdict::from_delta(d).at(level)) {
                    Some(Verdict::Poisson) => row.poisson += 1,
                    Some(Verdict::Hawkes) => row.hawkes += 1,
                    Some(Verdict::Inconclusive) => row.inconclusive += 1,
                    None => row.failed += 1,
                }
            }
            row
        })
        .collect()
}

/// Runs the pipeline on given series; `generators` labels synthetic subjects.
pub fn run_on(
    params: &Params,
    series: &[EventSeries],
    generators: Option<&[String]>,
    seed: u64,
) -> Result<Cohort> {
    if series.is_empty() {
        return Err(HarnessError::Data("cohort has no subjects".into()));
    }
    let opts = FitOptions {
        starts: params.starts,
        seed,
        ..FitOptions::default()
    };
    let matrix = similarity_matrix(series);
    let mut warnings: Vec<String> = matrix
        .excluded
        .iter()
        .map(|id| format!("subject '{id}' has fewer than 2 events; left out of the similarity matrix and fitted alone"))
        .collect();

    let subjects: Vec<Subject> = series
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<Subject> {
            let single = compare(params, &[s], &opts);
            let mut flags = Vec::new();
            let group: Vec<&EventSeries> = if matrix.index_of(s.id()).is_some() {
                build_group(&matrix, s.id(), params.p_threshold, params.direction)?
                    .members
                    .iter()
                    .map(|id| {
                        series
                            .iter()
                            .find(|x| x.id() == id)
                            .expect("member in cohort")
                    })
                    .collect()
            } else {
                flags.push("not in similarity matrix; augmented fit equals single fit".into());
                vec![s]
            };
            if group.len() == 1 {
                flags.push("no similar subjects".into());
            }
            let aug = if group.len() == 1 {
                single.clone()
            } else {
                compare(params, &group, &opts)
            };
            Ok(Subject {
                id: s.id().to_string(),
                generator: generators.map(|g| g[i].clone()),
                n_events: s.len(),
                window: s.window_end(),
                single_delta: single.as_ref().ok().map(|x| x.0),
                single_error: single.err(),
                group: group.iter().map(|g| g.id().to_string()).collect(),
                aug_events: aug.as_ref().map_or(0, |x| x.1),
                aug_delta: aug.as_ref().ok().map(|x| x.0),
                aug_error: aug.err(),
                flags,
            })
        })
        .collect::<Result<_>>()?;

    for s in &subjects {
        if let Some(e) = &s.single_error {
            warnings.push(format!("subject '{}': single fit failed: {e}", s.id));
        }
        if let Some(e) = &s.aug_error {
            warnings.push(format!("subject '{}': augmented fit failed: {e}", s.id));
        }
    }
    let single: Vec<Option<f64>> = subjects.iter().map(|s| s.single_delta).collect();
    let aug: Vec<Option<f64>> = subjects.iter().map(|s| s.aug_delta).collect();
    let mut counts = verdict_counts("single", &single);
    counts.extend(verdict_counts("augmented", &aug));
    Ok(Cohort {
        subjects,
        counts,
        matrix,
        warnings,
    })
}

/// Series, generator labels (synthetic only) and ingestion warnings.
pub type Loaded = (Vec<EventSeries>, Option<Vec<String>>, Vec<String>);

pub fn load(params: &Params, seed: u64) -> Result<Loaded> {
    match &params.data {
        Some(path) => {
            let format = params
                .format
                .or_else(|| InputFormat::from_path(path))
                .ok_or_else(|| {
                    HarnessError::Usage(format!(
                        "cannot tell the format of {}; set format",
                        path.display()
                    ))
                })?;
            let opts = IngestOptions {
                merge_duplicates: params.merge_duplicates,
                numeric_unit: params.numeric_unit,
            };
            let got = ingest(path, format, &opts)?;
            Ok((got.series, None, got.warnings))
        }
        None => {
            let (series, gens): (Vec<_>, Vec<_>) =
                synthetic_cohort(params.subjects, seed)?.into_iter().unzip();
            Ok((series, Some(gens), Vec::new()))
        }
    }
}

pub fn run(params: &Params, seed: u64) -> Result<Cohort> {
    let (series, generators, mut warnings) = load(params, seed)?;
    let mut cohort = run_on(params, &series, generators.as_deref(), seed)?;
    warnings.append(&mut cohort.warnings);
    cohort.warnings = warnings;
    Ok(cohort)
}

fn verdict_label(d: Option<f64>, level: ConfidenceLevel) -> String {
    match d.map(|d| SelectionVerdict::from_delta(d).at(level)) {
        Some(Verdict::Hawkes) => "hawkes".into(),
        Some(Verdict::Poisson) => "poisson".into(),
        Some(Verdict::Inconclusive) => "inconclusive".into(),
        None => "failed".into(),
    }
}

impl Cohort {
    pub fn subjects_table(&self) -> Table {
        let mut t = Table::new(
            "cohort_subjects",
            &[
                "id",
                "generator",
                "n_events",
                "window",
                "single_delta",
                "single_basic",
                "single_05",
                "single_01",
                "group_size",
                "aug_events",
                "aug_delta",
                "aug_basic",
                "aug_05",
                "aug_01",
                "group",
                "flags",
            ],
        );
        for s in &self.subjects {
            t.push(vec![
                s.id.clone(),
                s.generator.clone().unwrap_or_default(),
                s.n_events.to_string(),
                num(s.window),
                opt(s.single_delta),
                verdict_label(s.single_delta, ConfidenceLevel::Basic),
                verdict_label(s.single_delta, ConfidenceLevel::P05),
                verdict_label(s.single_delta, ConfidenceLevel::P01),
                s.group.len().to_string(),
                s.aug_events.to_string(),
                opt(s.aug_delta),
                verdict_label(s.aug_delta, ConfidenceLevel::Basic),
                verdict_label(s.aug_delta, ConfidenceLevel::P05),
                verdict_label(s.aug_delta, ConfidenceLevel::P01),
                s.group.join(";"),
                s.flags.join("; "),
            ]);
        }
        t
    }

    /// Verdict counts per series type and confidence level.
    pub fn counts_table(&self) -> Table {
        let mut t = Table::new(
            "cohort_counts",
            &[
                "series_type",
                "confidence_level",
                "abs_delta_threshold",
                "poisson",
                "hawkes",
                "inconclusive",
                "failed",
            ],
        );
        for r in &self.counts {
            t.push(vec![
                r.series_type.into(),
                r.level.label().into(),
                r.level.display_threshold().into(),
                r.poisson.to_string(),
                r.hawkes.to_string(),
                r.inconclusive.to_string(),
                r.failed.to_string(),
            ]);
        }
        t
    }

    /// Long-format p-value matrix for heat maps.
    pub fn similarity_table(&self) -> Table {
        let mut t = Table::new("cohort_similarity", &["row", "col", "p_value", "statistic"]);
        for (i, a) in self.matrix.ids.iter().enumerate() {
            for (j, b) in self.matrix.ids.iter().enumerate() {
                t.push(vec![
                    a.clone(),
                    b.clone(),
                    num(self.matrix.p[i][j]),
                    num(self.matrix.stat[i][j]),
                ]);
            }
        }
        t
    }
}

pub fn run_spec(spec: &ExperimentSpec) -> Result<RunOutput> {
    let params: Params = spec.params()?;
    let cohort = run(&params, spec.seed)?;
    let n = cohort.subjects.len();
    let consistent = cohort
        .counts
        .iter()
        .all(|r| r.poisson + r.hawkes + r.inconclusive + r.failed == n);
    let summary = serde_json::json!({
        "subjects": n,
        "source": params.data.as_ref().map_or("synthetic".to_string(), |p| p.display().to_string()),
        "counts": cohort.counts,
        "counts_sum_to_subjects": consistent,
    });
    Ok(RunOutput {
        tables: vec![
            cohort.subjects_table(),
            cohort.counts_table(),
            cohort.similarity_table(),
        ],
        params: serde_json::to_value(&params)?,
        summary,
        decisions: vec![
            format!(
                "Hawkes model {} against Poisson, criterion {:?}",
                params.model, params.criterion
            ),
            format!(
                "groups from the anchor's row of the KS matrix, p_c = {}, direction {:?}",
                params.p_threshold, params.direction
            ),
            "shared gamma across group members; each member integrates over its own window".into(),
            "failed fits are counted in a separate column, not as inconclusive".into(),
            "missing reports are non-events; zero-pain reports are dropped".into(),
        ],
        warnings: cohort.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_cohort_is_heterogeneous_and_seeded() {
        let a = synthetic_cohort(39, 1).unwrap();
        assert_eq!(a.len(), 39);
        assert!(a.iter().any(|(_, g)| g == "hawkes") && a.iter().any(|(_, g)| g == "poisson"));
        let lens: std::collections::BTreeSet<usize> = a.iter().map(|(s, _)| s.len()).collect();
        assert!(lens.len() > 5);
        assert_eq!(a, synthetic_cohort(39, 1).unwrap());
    }

    #[test]
    fn counts_partition_subjects() {
        let params = Params {
            subjects: 8,
            starts: 2,
            ..Params::default()
        };
        let c = run(&params, 3).unwrap();
        assert_eq!(c.counts.len(), 6);
        for r in &c.counts {
            assert_eq!(r.poisson + r.hawkes + r.inconclusive + r.failed, 8);
        }
        assert_eq!(c.subjects_table().rows.len(), 8);
        assert_eq!(c.similarity_table().rows.len(), 64);
    }

    #[test]
    fn single_event_subjects_are_flagged_not_fatal() {
        let series = vec![
            EventSeries::new("one", vec![0.0], None).unwrap(),
            EventSeries::new("a", vec![0.0, 1.0, 1.5, 4.0], None).unwrap(),
            EventSeries::new("b", vec![0.0, 0.7, 2.0, 2.2, 5.0], None).unwrap(),
        ];
        let params = Params {
            starts: 2,
            ..Params::default()
        };
        let c = run_on(&params, &series, None, 1).unwrap();
        let one = &c.subjects[0];
        assert!(one.single_error.is_some());
        assert_eq!(one.group, vec!["one".to_string()]);
        assert!(!one.flags.is_empty());
        assert_eq!(c.count("single", ConfidenceLevel::Basic).failed, 1);
        assert!(c.warnings.iter().any(|w| w.contains("'one'")));
    }

    #[test]
    fn missing_format_is_usage_error() {
        let params = Params {
            data: Some(PathBuf::from("reports.txt")),
            ..Params::default()
        };
        assert_eq!(run(&params, 1).unwrap_err().exit_code(), 1);
    }
}
