//! Reference-set selection and prototype generation for nearest-neighbour
//! categorisation.
//!
//! A nearest-neighbour classifier is only as good — and only as cheap — as
//! the set of labelled reference points it compares against. This crate
//! builds such reference sets from training data in three families:
//!
//! * **Selection**: keep a subset of the training points. Condensing keeps
//!   points near category boundaries ([`cnn`]); editing removes points
//!   whose neighbours disagree with their label ([`enn`], [`hybrid_enn_cnn`]);
//!   criterion-driven search trades error against size via
//!   `J = lambda * error + (1 - lambda) * size / n` ([`random_editing`],
//!   [`exhaustive_select`], [`minimal_consistent_oracle`]).
//! * **Replacement**: synthesise new prototype points by clustering
//!   ([`kmeans`], [`cluster_pre_supervised`], [`cluster_post_supervised`],
//!   [`nearest_mean_prototypes`], [`gmm_mmc`]) or by iterative prototype
//!   adjustment ([`lvq1`]).
//! * **Category-learning models**: executable versions of classic
//!   psychology models that imply a reference set — pure exemplar and pure
//!   prototype storage, an incremental rational-style cluster learner
//!   ([`rmc`]), an attraction-based cluster recruiter ([`sustain`]), and
//!   exhaustive partition enumeration ([`vam_enumerate`], [`vam_best`],
//!   [`rex_leopold_i`]).
//!
//! The [`harness`] module evaluates any of these under resubstitution,
//! holdout, k-fold, or leave-one-out protocols and runs reproducible
//! benchmark grids; [`fit_score`] compares predicted choice proportions
//! against observed ones.
//!
//! Everything is deterministic given its seed: equal inputs produce
//! byte-identical serialised outputs, whatever the thread count. The
//! `parallel` feature (on by default) runs the heavy inner loops on rayon;
//! disabling it swaps in sequential fallbacks with identical results.

pub mod data;
mod dataset;
mod error;
mod folds;
pub mod harness;
mod metric;
pub mod nn;
mod par;
pub mod psych;
mod refset;
pub mod replacement;
pub mod selection;
mod util;

pub use dataset::{Dataset, LabeledPoint};
pub use error::{Error, Result};
pub use harness::{
    benchmark, evaluate, fit_score, metric_label, parse_bench_config, parse_metric_spec,
    valid_method_names, BenchConfig, BenchDataset, BenchMethodSpec, BenchOutcome,
    EvaluationReport, Method, Protocol, ProtocolConfig, SummaryRow,
};
pub use metric::{similarity, Metric, MetricKind, SimilarityParams};
pub use nn::{classify_1nn, classify_knn, is_consistent, predict_proportions, training_accuracy};
pub use psych::{
    pure_exemplar, pure_prototype, rex, rex_leopold_i, rmc, sustain, vam_best, vam_enumerate,
    vam_training_accuracy_score, PartitionRecord, RmcParams, SustainParams, DEFAULT_VAM_CAP,
};
pub use refset::{ProbabilityVector, Provenance, ReferenceSet};
pub use replacement::{
    cluster_post_supervised, cluster_pre_supervised, fit_gmm, gmm_mmc, gmm_mmc_detailed, kmeans,
    kmeans_detailed, lvq1, nearest_mean_prototypes, ClusteringParams, GmmFit, GmmRun, KmeansRun,
    LvqParams, SupervisionMode,
};
pub use selection::{
    cnn, criterion_j, enn, exhaustive_select, hybrid_enn_cnn, minimal_consistent_oracle,
    random_editing, random_editing_detailed, CandidateEval, EditingParams, DEFAULT_SUBSET_CAP,
};
