//! Single-series versus augmented model selection on a mix of Hawkes and
//! Poisson series of matched mean rate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sparse_hawkes::rng::derive_seed;
use sparse_hawkes::selection::{verdict_at, DELTA_AIC_05};
use sparse_hawkes::simulation::DEFAULT_BURN_IN;
use sparse_hawkes::{
    build_group, fit_members, fit_mle, similarity_matrix, simulate_hawkes_excerpt,
    simulate_poisson_excerpt, ConfidenceLevel, Criterion, EventSeries, FitOptions, HawkesParams,
    ModelTag, PoissonParams, SimilarityDirection, Verdict, DEFAULT_P_THRESHOLD,
};

use super::{delta_criterion, RunOutput};
use crate::config::ExperimentSpec;
use crate::error::{HarnessError, Result};
use crate::table::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Every series anchors a group of KS-similar series.
    #[default]
    Ks,
    /// One group per generator.
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lambda0: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Poisson rate; the Hawkes stationary mean when absent.
    pub poisson_rate: Option<f64>,
    pub series_per_class: usize,
    pub n_events: usize,
    pub burn_in: usize,
    pub model: ModelTag,
    pub criterion: Criterion,
    pub grouping: Grouping,
    pub p_threshold: f64,
    pub direction: SimilarityDirection,
    pub starts: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            alpha: 2.0,
            delta: 3.5,
            poisson_rate: None,
            series_per_class: 10,
            n_events: 30,
            burn_in: DEFAULT_BURN_IN,
            model: ModelTag::HawkesShifted,
            criterion: Criterion::Aic,
            grouping: Grouping::Ks,
            p_threshold: DEFAULT_P_THRESHOLD,
            direction: SimilarityDirection::SimilarIfPGe,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hawkes,
    Poisson,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Hawkes => "hawkes",
            Label::Poisson => "poisson",
        }
    }

    /// Whether a difference lands outside the 0.05 band on this label's side.
    pub fn confidently_correct(&self, delta: f64) -> bool {
        matches!(
            (self, verdict_at(delta, ConfidenceLevel::P05)),
            (Label::Hawkes, Verdict::Hawkes) | (Label::Poisson, Verdict::Poisson)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub repetition: usize,
    /// Series id, or the anchor id for augmented points.
    pub id: String,
    pub label: Label,
    pub augmented: bool,
    pub group_size: usize,
    /// Group members generated by the Hawkes process.
    pub hawkes_members: usize,
    pub n_events: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repetition {
    pub points: Vec<Point>,
}

impl Repetition {
    pub fn augmented(&self, label: Label) -> impl Iterator<Item = &Point> {
        self.points
            .iter()
            .filter(move |p| p.augmented && p.label == label)
    }

    pub fn singles(&self) -> impl Iterator<Item = &Point> {
        self.points.iter().filter(|p| !p.augmented)
    }

    /// Fraction of this label's augmented points outside the 0.05 band with the right sign.
    pub fn class_success(&self, label: Label) -> f64 {
        let pts: Vec<&Point> = self.augmented(label).collect();
        if pts.is_empty() {
            return f64::NAN;
        }
        pts.iter()
            .filter(|p| label.confidently_correct(p.delta))
            .count() as f64
            / pts.len() as f64
    }
}

fn collection(params: &Params, seed: u64) -> Result<(Vec<EventSeries>, Vec<Label>)> {
    let hawkes = HawkesParams::full_history(params.lambda0, params.alpha, params.delta)?;
    let rate = match params.poisson_rate {
        Some(r) => r,
        None => hawkes.stationary_mean()?,
    };
    let poisson = PoissonParams::new(rate)?;
    let m = params.series_per_class;
    let mut series = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(2 * m);
    for i in 0..2 * m {
        let s = derive_seed(seed, i as u64);
        let (raw, label) = if i < m {
            (
                simulate_hawkes_excerpt(&hawkes, params.n_events, params.burn_in, s)?,
                Label::Hawkes,
            )
        } else {
            (
                simulate_poisson_excerpt(&poisson, params.n_events, s)?,
                Label::Poisson,
            )
        };
        let id = format!("{}-{:02}", label.as_str(), i % m);
        series.push(EventSeries::new(
            id,
            raw.times().to_vec(),
            Some(raw.window_end()),
        )?);
        labels.push(label);
    }
    Ok((series, labels))
}

fn compare(params: &Params, members: &[&EventSeries], opts: &FitOptions) -> Result<(f64, usize)> {
    let h = fit_members(params.model, members[0].id(), members, opts)?;
    let p = fit_members(ModelTag::Poisson, members[0].id(), members, opts)?;
    let d = delta_criterion(&h.fit, &p.fit, params.criterion).ok_or_else(|| {
        HarnessError::Data(format!(
            "criterion undefined for group of '{}'",
            members[0].id()
        ))
    })?;
    Ok((d, h.total_events))
}

pub fn run_repetition(params: &Params, seed: u64, repetition: usize) -> Result<Repetition> {
    if params.series_per_class == 0 || params.n_events < 2 {
        return Err(HarnessError::Usage(
            "need at least one series per class and two events per series".into(),
        ));
    }
    let (series, labels) = collection(params, seed)?;
    let opts = FitOptions {
        starts: params.starts,
        seed,
        ..FitOptions::default()
    };
    let hawkes_in = |ids: &[&EventSeries]| {
        ids.iter()
            .filter(|s| {
                labels[series
                    .iter()
                    .position(|x| x.id() == s.id())
                    .expect("member")]
                    == Label::Hawkes
            })
            .count()
    };

    let mut points: Vec<Point> = series
        .par_iter()
        .zip(labels.par_iter())
        .map(|(s, &label)| {
            let h = fit_mle(params.model, s, &opts)?;
            let p = fit_mle(ModelTag::Poisson, s, &opts)?;
            let delta = delta_criterion(&h, &p, params.criterion).unwrap_or(f64::NAN);
            Ok(Point {
                repetition,
                id: s.id().to_string(),
                label,
                augmented: false,
                group_size: 1,
                hawkes_members: usize::from(label == Label::Hawkes),
                n_events: s.len(),
                delta,
            })
        })
        .collect::<Result<_>>()?;

    let groups: Vec<(Label, Vec<&EventSeries>)> = match params.grouping {
        Grouping::Label => [Label::Hawkes, Label::Poisson]
            .into_iter()
            .map(|l| {
                (
                    l,
                    series
                        .iter()
                        .zip(&labels)
                        .filter(|(_, x)| **x == l)
                        .map(|(s, _)| s)
                        .collect(),
                )
            })
            .collect(),
        Grouping::Ks => {
            let matrix = similarity_matrix(&series);
            series
                .iter()
                .zip(&labels)
                .map(|(s, &l)| {
                    let g = build_group(&matrix, s.id(), params.p_threshold, params.direction)?;
                    let members = g
                        .members
                        .iter()
                        .map(|id| {
                            series
                                .iter()
                                .find(|x| x.id() == id)
                                .expect("member in collection")
                        })
                        .collect();
                    Ok((l, members))
                })
                .collect::<Result<_>>()?
        }
    };
    let augmented: Vec<Point> = groups
        .par_iter()
        .map(|(label, members)| {
            let (delta, n_events) = compare(params, members, &opts)?;
            Ok(Point {
                repetition,
                id: members[0].id().to_string(),
                label: *label,
                augmented: true,
                group_size: members.len(),
                hawkes_members: hawkes_in(members),
                n_events,
                delta,
            })
        })
        .collect::<Result<_>>()?;
    points.extend(augmented);
    Ok(Repetition { points })
}

pub fn run(params: &Params, seed: u64, repetitions: usize) -> Result<Vec<Repetition>> {
    (0..repetitions)
        .map(|r| run_repetition(params, derive_seed(seed, r as u64), r))
        .collect()
}

fn verdict_str(delta: f64, level: ConfidenceLevel) -> &'static str {
    match verdict_at(delta, level) {
        Verdict::Hawkes => "hawkes",
        Verdict::Poisson => "poisson",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn points_table(reps: &[Repetition]) -> Table {
    let mut t = Table::new(
        "discrimination",
        &[
            "repetition",
            "id",
            "label",
            "kind",
            "group_size",
            "hawkes_members",
            "n_events",
            "delta",
            "verdict_basic",
            "verdict_05",
            "verdict_01",
        ],
    );
    for p in reps.iter().flat_map(|r| &r.points) {
        t.push(vec![
            p.repetition.to_string(),
            p.id.clone(),
            p.label.as_str().into(),
            if p.augmented { "augmented" } else { "single" }.into(),
            p.group_size.to_string(),
            p.hawkes_members.to_string(),
            p.n_events.to_string(),
            num(p.delta),
            verdict_str(p.delta, ConfidenceLevel::Basic).into(),
            verdict_str(p.delta, ConfidenceLevel::P05).into(),
            verdict_str(p.delta, ConfidenceLevel::P01).into(),
        ]);
    }
    t
}

pub fn run_spec(spec: &ExperimentSpec) -> Result<RunOutput> {
    let params: Params = spec.params()?;
    let reps = run(&params, spec.seed, spec.trials())?;
    let both = reps
        .iter()
        .filter(|r| r.class_success(Label::Hawkes) == 1.0 && r.class_success(Label::Poisson) == 1.0)
        .count();
    let singles_inside = reps
        .iter()
        .flat_map(|r| r.singles())
        .filter(|p| p.delta.abs() <= DELTA_AIC_05)
        .count();
    let singles = reps.iter().map(|r| r.singles().count()).sum::<usize>();
    let summary = serde_json::json!({
        "repetitions": reps.len(),
        "repetitions_with_all_augmented_points_confidently_correct": both,
        "hawkes_class_success": reps.iter().map(|r| r.class_success(Label::Hawkes)).collect::<Vec<_>>(),
        "poisson_class_success": reps.iter().map(|r| r.class_success(Label::Poisson)).collect::<Vec<_>>(),
        "single_points_inside_band": singles_inside,
        "single_points": singles,
    });
    Ok(RunOutput {
        tables: vec![points_table(&reps)],
        params: serde_json::to_value(&params)?,
        summary,
        decisions: vec![
            format!(
                "Hawkes series are excerpts after a {}-event burn-in; every excerpt window ends at the next parent event",
                params.burn_in
            ),
            match params.grouping {
                Grouping::Ks => "augmented groups: one per anchor, members by KS similarity of interarrival times".into(),
                Grouping::Label => "augmented groups: one per generator (known labels)".into(),
            },
            format!(
                "similarity threshold p_c = {} with direction {:?}",
                params.p_threshold, params.direction
            ),
            "confident outcome means outside the band |delta| <= -2 ln 0.05 on the generator's side".into(),
        ],
        warnings: Vec::new(),
    })
}
