//! Point-process tools for short event series: Poisson and exponential-kernel
//! Hawkes models, exact likelihoods, multi-start maximum-likelihood fitting,
//! AIC/AICc model selection, and pooling of similar series through a
//! collective likelihood.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod error;
pub mod fit;
pub mod intensity;
pub mod ks;
pub mod likelihood;
pub mod optimize;
pub mod params;
pub mod ridge;
pub mod rng;
pub mod selection;
pub mod series;
pub mod simulation;

pub use augment::{
    augmented_fit, build_group, collective_loglik, fit_members, similarity_matrix, AugmentGroup,
    CollectiveFitResult, SimilarityDirection, SimilarityMatrix, DEFAULT_P_THRESHOLD,
};
pub use error::{Error, Result};
pub use fit::{
    aic, aicc, fit_mle, fit_pooled, relative_likelihood, FitOptions, FitResult, FittedParams,
    GammaMode, ModelTag,
};
pub use intensity::intensity_at;
pub use ks::{ks_two_sample, KsResult};
pub use likelihood::{
    compensator, loglik_hawkes, loglik_hawkes_gradient, loglik_poisson, HawkesGradient,
};
pub use params::{branching_ratio, stationary_mean, HawkesParams, HawkesVariant, PoissonParams};
pub use ridge::{likelihood_ridge_scan, RidgeScan};
pub use selection::{select_model, ConfidenceLevel, Criterion, SelectionVerdict, Verdict};
pub use series::{interarrivals, EventSeries, InterarrivalSample};
pub use simulation::{
    extract_excerpt, simulate_hawkes, simulate_hawkes_excerpt, simulate_poisson,
    simulate_poisson_excerpt, SimConfig, Stop,
};
