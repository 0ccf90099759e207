//! Pooling of statistically similar series.
//!
//! Series are compared pairwise by a two-sample KS test on their interarrival
//! times. For an anchor series, every series whose p-value against the anchor
//! passes the threshold joins its group, and the group is fitted with one
//! parameter vector by maximizing the summed log-likelihood. Membership is
//! read from the anchor's row only, so similarity is not transitive: two
//! anchors that share a neighbour can still end up in different groups.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_pooled, FitOptions, FitResult, FittedParams, ModelTag};
use crate::ks::{ks_two_sample, KsResult};
use crate::likelihood::{hawkes_loglik_raw, loglik_hawkes, loglik_poisson};
use crate::params::HawkesVariant;
use crate::series::{EventSeries, InterarrivalSample};

pub const DEFAULT_P_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    /// Two-sample KS p-values; symmetric with unit diagonal.
    pub p: Vec<Vec<f64>>,
    pub stat: Vec<Vec<f64>>,
    /// Series left out because they have fewer than two events.
    pub excluded: Vec<String>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

pub fn similarity_matrix(collection: &[EventSeries]) -> SimilarityMatrix {
    let mut samples: Vec<InterarrivalSample> = Vec::with_capacity(collection.len());
    let mut excluded = Vec::new();
    for s in collection {
        match s.interarrivals() {
            Ok(sample) => samples.push(sample),
            Err(_) => excluded.push(s.id().to_string()),
        }
    }
    let m = samples.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let results: Vec<KsResult> = pairs
        .par_iter()
        .map(|&(i, j)| ks_two_sample(&samples[i], &samples[j]).expect("samples are nonempty"))
        .collect();
    let mut p = vec![vec![1.0; m]; m];
    let mut stat = vec![vec![0.0; m]; m];
    for (&(i, j), r) in pairs.iter().zip(&results) {
        p[i][j] = r.p_value;
        p[j][i] = r.p_value;
        stat[i][j] = r.statistic;
        stat[j][i] = r.statistic;
    }
    SimilarityMatrix {
        ids: samples.into_iter().map(|s| s.source_id).collect(),
        p,
        stat,
        excluded,
    }
}

/// Which side of the threshold counts as "similar".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityDirection {
    /// Similar when the KS test does not reject: `p >= p_c`.
    #[default]
    SimilarIfPGe,
    /// Similar when `p < p_c`, as literally written in the collective-likelihood index set.
    SimilarIfPLt,
}

impl SimilarityDirection {
    pub fn similar(&self, p: f64, threshold: f64) -> bool {
        match self {
            SimilarityDirection::SimilarIfPGe => p >= threshold,
            SimilarityDirection::SimilarIfPLt => p < threshold,
        }
    }
}

impl std::str::FromStr for SimilarityDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ge" | "similar_if_p_ge" => Ok(SimilarityDirection::SimilarIfPGe),
            "lt" | "similar_if_p_lt" => Ok(SimilarityDirection::SimilarIfPLt),
            other => Err(Error::Usage(format!(
                "unknown similarity direction '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentGroup {
    pub anchor: String,
    /// Anchor first, then the other members in matrix order.
    pub members: Vec<String>,
    pub p_threshold: f64,
    pub direction: SimilarityDirection,
}

pub fn build_group(
    matrix: &SimilarityMatrix,
    anchor: &str,
    p_threshold: f64,
    direction: SimilarityDirection,
) -> Result<AugmentGroup> {
    let a = matrix.index_of(anchor).ok_or_else(|| {
        Error::Usage(format!("anchor '{anchor}' is not in the similarity matrix"))
    })?;
    let mut members = vec![anchor.to_string()];
    members.extend(
        (0..matrix.len())
            .filter(|&i| i != a && direction.similar(matrix.p[i][a], p_threshold))
            .map(|i| matrix.ids[i].clone()),
    );
    Ok(AugmentGroup {
        anchor: anchor.to_string(),
        members,
        p_threshold,
        direction,
    })
}

/// Sum of member log-likelihoods at shared parameters; each member keeps its own window.
pub fn collective_loglik(
    model: ModelTag,
    params: &FittedParams,
    group: &[&EventSeries],
) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::Usage(
            "collective likelihood of an empty group".into(),
        ));
    }
    let mut total = 0.0;
    for s in group {
        let ll = match (model, params) {
            (ModelTag::Poisson, FittedParams::Poisson(p)) => loglik_poisson(p, s),
            (ModelTag::HawkesFull, FittedParams::Hawkes(h))
                if h.variant() == HawkesVariant::FullHistory =>
            {
                loglik_hawkes(h, s)
            }
            (ModelTag::HawkesShifted, FittedParams::Hawkes(h))
                if h.variant() == HawkesVariant::Shifted =>
            {
                loglik_hawkes(h, s)
            }
            _ => {
                return Err(Error::Usage(format!(
                    "parameters do not match model {model}"
                )));
            }
        };
        if ll.is_nan() {
            return Err(Error::Numerical(format!(
                "log-likelihood of member '{}' is NaN",
                s.id()
            )));
        }
        total += ll;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveFitResult {
    pub anchor: String,
    pub members: Vec<String>,
    pub fit: FitResult,
    pub total_events: usize,
    /// Member log-likelihoods at the shared optimum, in `members` order.
    pub member_logliks: Vec<f64>,
}

impl CollectiveFitResult {
    pub fn collective_loglik(&self) -> f64 {
        self.fit.loglik
    }
}

fn resolve<'a>(ids: &[String], collection: &'a [EventSeries]) -> Result<Vec<&'a EventSeries>> {
    ids.iter()
        .map(|id| {
            collection
                .iter()
                .find(|s| s.id() == id)
                .ok_or_else(|| Error::Usage(format!("group member '{id}' not found in collection")))
        })
        .collect()
}

pub fn augmented_fit(
    model: ModelTag,
    group: &AugmentGroup,
    collection: &[EventSeries],
    options: &FitOptions,
) -> Result<CollectiveFitResult> {
    let members = resolve(&group.members, collection)?;
    fit_members(model, &group.anchor, &members, options)
}

/// Pooled fit over explicitly listed members; the first one is reported as the anchor.
pub fn fit_members(
    model: ModelTag,
    anchor: &str,
    members: &[&EventSeries],
    options: &FitOptions,
) -> Result<CollectiveFitResult> {
    let fit = fit_pooled(model, members, options)?;
    let member_logliks = match (&fit.params, &fit.member_gammas) {
        (FittedParams::Hawkes(h), Some(gammas)) => members
            .iter()
            .zip(gammas)
            .map(|(s, g)| {
                hawkes_loglik_raw(
                    h.lambda0(),
                    h.alpha(),
                    h.delta(),
                    g - h.lambda0(),
                    s.times(),
                    s.window_end(),
                )
            })
            .collect(),
        (params, _) => members
            .iter()
            .map(|s| collective_loglik(model, params, std::slice::from_ref(s)))
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok(CollectiveFitResult {
        anchor: anchor.to_string(),
        members: members.iter().map(|s| s.id().to_string()).collect(),
        total_events: fit.n_events,
        fit,
        member_logliks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{HawkesParams, PoissonParams};

    fn s(id: &str, times: &[f64]) -> EventSeries {
        EventSeries::new(id, times.to_vec(), None).unwrap()
    }

    #[test]
    fn singleton_matrix() {
        let m = similarity_matrix(&[s("a", &[0.0, 1.0, 1.5])]);
        assert_eq!(m.p, vec![vec![1.0]]);
    }

    #[test]
    fn duplicates_are_fully_similar_and_short_series_excluded() {
        let a = s("a", &[0.0, 1.0, 1.5, 4.0]);
        let b = s("b", &[0.0, 1.0, 1.5, 4.0]);
        let c = s("c", &[0.0]);
        let m = similarity_matrix(&[a, b, c]);
        assert_eq!(m.ids, vec!["a", "b"]);
        assert_eq!(m.excluded, vec!["c"]);
        assert_eq!(m.p[0][1], 1.0);
    }

    #[test]
    fn threshold_boundaries() {
        let coll: Vec<EventSeries> = (0..4)
            .map(|i| {
                s(
                    &format!("s{i}"),
                    &[
                        0.0,
                        1.0 + i as f64,
                        2.5 + 3.0 * i as f64,
                        9.0 + 7.0 * i as f64,
                    ],
                )
            })
            .collect();
        let m = similarity_matrix(&coll);
        let all = build_group(&m, "s0", 0.0, SimilarityDirection::SimilarIfPGe).unwrap();
        assert_eq!(all.members.len(), 4);
        let none = build_group(&m, "s0", 1.01, SimilarityDirection::SimilarIfPGe).unwrap();
        assert_eq!(none.members, vec!["s0"]);
        assert!(build_group(&m, "zzz", 0.1, SimilarityDirection::SimilarIfPGe).is_err());
    }

    #[test]
    fn collective_of_singleton_and_duplicates() {
        let a = s("a", &[0.0, 0.2, 1.1, 1.3, 3.0]);
        let h = FittedParams::Hawkes(HawkesParams::shifted(0.8, 1.0, 2.5, 1.7).unwrap());
        let single = collective_loglik(ModelTag::HawkesShifted, &h, &[&a]).unwrap();
        assert_eq!(single, loglik_hawkes(h.hawkes().unwrap(), &a));
        let double = collective_loglik(ModelTag::HawkesShifted, &h, &[&a, &a]).unwrap();
        assert_eq!(double, 2.0 * single);
        assert!(collective_loglik(ModelTag::HawkesFull, &h, &[&a]).is_err());
        let p = FittedParams::Poisson(PoissonParams::new(1.0).unwrap());
        assert_eq!(
            collective_loglik(ModelTag::Poisson, &p, &[&a]).unwrap(),
            -3.0
        );
    }

    #[test]
    fn pooled_poisson_closed_form() {
        let a = s("a", &[0.0, 0.5, 2.0]);
        let b = s("b", &[0.0, 3.0, 4.0, 7.0, 7.5]);
        let group = AugmentGroup {
            anchor: "a".into(),
            members: vec!["a".into(), "b".into()],
            p_threshold: 0.1,
            direction: SimilarityDirection::SimilarIfPGe,
        };
        let r = augmented_fit(ModelTag::Poisson, &group, &[a, b], &FitOptions::default()).unwrap();
        let rate = r.fit.params.poisson().unwrap().rate();
        assert!((rate - 8.0 / 9.5).abs() < 1e-15);
        assert_eq!(r.total_events, 8);
        let sum: f64 = r.member_logliks.iter().sum();
        assert!((sum - r.collective_loglik()).abs() < 1e-12);
    }
}
