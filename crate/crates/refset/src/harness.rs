//! Evaluation harness: accuracy protocols, a registry of the built-in
//! methods, goodness-of-fit scoring against observed choice proportions,
//! and a batch benchmark runner with stable, re-runnable outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::ProportionsTable;
use crate::dataset::{labels_required, Dataset};
use crate::error::{Error, Result};
use crate::folds::{complement, holdout_split, make_folds};
use crate::metric::{Metric, MetricKind, SimilarityParams};
use crate::nn::{classify_1nn, predict_proportions, training_accuracy};
use crate::psych::{
    pure_exemplar, rex_leopold_i, rmc, sustain, vam_best, vam_training_accuracy_score, RmcParams,
    SustainParams, DEFAULT_VAM_CAP,
};
use crate::refset::ReferenceSet;
use crate::replacement::{
    cluster_post_supervised, cluster_pre_supervised, gmm_mmc, lvq1, nearest_mean_prototypes,
    ClusteringParams, LvqParams, SupervisionMode,
};
use crate::selection::{
    cnn, enn, exhaustive_select, hybrid_enn_cnn, random_editing, EditingParams,
    DEFAULT_SUBSET_CAP,
};
use crate::util::derive_seed;

/// How generalisation accuracy is estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Fit on everything, score on the same points. Measures memorisation;
    /// reports carry a goodness-of-fit flag instead of a generalisation
    /// claim.
    Resubstitution,
    /// One seeded split; `fraction` of the points (rounded down) are held
    /// out for scoring.
    Holdout { fraction: f64, seed: u64 },
    /// Seeded k-fold cross-validation, stratified whenever every category
    /// has at least `folds` members.
    KFold { folds: usize, seed: u64 },
    /// Leave-one-out.
    Loo,
}

impl Protocol {
    pub fn describe(&self) -> String {
        match self {
            Protocol::Resubstitution => "resubstitution".into(),
            Protocol::Holdout { fraction, .. } => format!("holdout:{fraction}"),
            Protocol::KFold { folds, .. } => format!("kfold:{folds}"),
            Protocol::Loo => "loo".into(),
        }
    }
}

/// A human-readable metric tag for reports ("euclidean", "minkowski:3",
/// with ":weighted" appended when feature weights are set).
pub fn metric_label(metric: &Metric) -> String {
    let base = match metric.kind() {
        MetricKind::Euclidean => "euclidean".to_string(),
        MetricKind::Hamming => "hamming".to_string(),
        MetricKind::Minkowski { p } => format!("minkowski:{p}"),
    };
    if metric.weights().is_some() {
        format!("{base}:weighted")
    } else {
        base
    }
}

/// Parse a metric tag: "euclidean", "hamming", or "minkowski:<p>".
pub fn parse_metric_spec(spec: &str) -> Result<Metric> {
    match spec {
        "euclidean" => Ok(Metric::euclidean()),
        "hamming" => Ok(Metric::hamming()),
        _ => {
            if let Some(p) = spec.strip_prefix("minkowski:") {
                let p: f64 = p.parse().map_err(|_| {
                    Error::Config(format!("invalid minkowski order in metric \"{spec}\""))
                })?;
                Metric::minkowski(p)
            } else {
                Err(Error::Config(format!(
                    "unknown metric \"{spec}\"; expected euclidean, hamming, or minkowski:<p>"
                )))
            }
        }
    }
}

/// One finished evaluation. `criterion_j` always equals
/// `lambda * (1 - generalisation_accuracy) + (1 - lambda) * reduction_rate`.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    /// Canonical method name.
    pub method: String,
    /// The method's resolved parameters.
    pub params: serde_json::Value,
    pub protocol: String,
    pub metric: String,
    pub lambda: f64,
    pub seed: u64,
    /// Size of the full dataset.
    pub n_points: usize,
    /// Reference points kept or generated (averaged across folds).
    pub refset_size: f64,
    /// refset size over training-set size (averaged across folds).
    pub reduction_rate: f64,
    pub training_accuracy: f64,
    pub generalisation_accuracy: f64,
    pub per_fold_accuracy: Vec<f64>,
    pub criterion_j: f64,
    /// Whether the k-fold split was stratified; absent for other protocols.
    pub stratified: Option<bool>,
    /// True when the accuracy was measured on the training points
    /// themselves (resubstitution).
    pub goodness_of_fit: bool,
    /// Similarity sharpness used for the fit scores below, when a
    /// proportions table was scored.
    pub fit_gamma: Option<f64>,
    /// Sum of squared differences between predicted and observed choice
    /// proportions, when a proportions table was scored.
    pub fit_sse: Option<f64>,
    /// Count-weighted log-likelihood of the observed choices (predicted
    /// probabilities floored at 1e-12), when a proportions table was
    /// scored.
    pub fit_loglik: Option<f64>,
    /// Wall-clock time, when timing was requested.
    pub wall_time_ms: Option<f64>,
}

fn accuracy_on(
    s: &ReferenceSet,
    d: &Dataset,
    metric: &Metric,
    indices: &[usize],
) -> Result<f64> {
    let mut correct = 0usize;
    for &i in indices {
        if classify_1nn(s, metric, d.features(i))? == d.label(i).expect("labels checked") {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Fit `method` under `protocol` and report accuracy, reduction, and the
/// combined criterion. The same `seed` drives the method on every fold;
/// split randomness comes from the protocol's own seed.
pub fn evaluate(
    method: &Method,
    d: &Dataset,
    protocol: &Protocol,
    metric: &Metric,
    lambda: f64,
    seed: u64,
) -> Result<EvaluationReport> {
    if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    labels_required(d)?;
    let n = d.len();
    match protocol {
        Protocol::KFold { folds, .. } if *folds < 2 => {
            return Err(Error::InvalidInput(format!(
                "k-fold evaluation needs at least 2 folds, got {folds}"
            )));
        }
        Protocol::Loo if n < 2 => {
            return Err(Error::InvalidInput(
                "leave-one-out evaluation needs at least 2 points".into(),
            ));
        }
        _ => {}
    }
    let started = Instant::now();

    struct FoldOutcome {
        training: f64,
        generalisation: f64,
        size: usize,
        train_size: usize,
    }

    let mut outcomes: Vec<FoldOutcome> = Vec::new();
    let mut stratified = None;
    let mut goodness_of_fit = false;

    match protocol {
        Protocol::Resubstitution => {
            let s = method.fit(d, metric, lambda, seed)?;
            let acc = training_accuracy(&s, d, metric)?;
            outcomes.push(FoldOutcome {
                training: acc,
                generalisation: acc,
                size: s.len(),
                train_size: n,
            });
            goodness_of_fit = true;
        }
        Protocol::Holdout { fraction, seed: split_seed } => {
            let (train_idx, test_idx) = holdout_split(n, *fraction, *split_seed)?;
            let train = d.subset(&train_idx)?;
            let s = method.fit(&train, metric, lambda, seed)?;
            outcomes.push(FoldOutcome {
                training: training_accuracy(&s, &train, metric)?,
                generalisation: accuracy_on(&s, d, metric, &test_idx)?,
                size: s.len(),
                train_size: train_idx.len(),
            });
        }
        Protocol::KFold { .. } | Protocol::Loo => {
            let (test_folds, strat) = match protocol {
                Protocol::KFold { folds, seed } => make_folds(d, *folds, *seed)?,
                _ => make_folds(d, n, 0)?,
            };
            if matches!(protocol, Protocol::KFold { .. }) {
                stratified = Some(strat);
            }
            for (f, fold) in test_folds.iter().enumerate() {
                let train_idx = complement(n, fold);
                let train = d.subset(&train_idx)?;
                let s = method.fit(&train, metric, lambda, seed).map_err(|e| {
                    Error::InvalidState(format!("fitting on fold {f} failed: {e}"))
                })?;
                outcomes.push(FoldOutcome {
                    training: training_accuracy(&s, &train, metric)?,
                    generalisation: accuracy_on(&s, d, metric, fold)?,
                    size: s.len(),
                    train_size: train_idx.len(),
                });
            }
        }
    }

    let count = outcomes.len() as f64;
    let training = outcomes.iter().map(|o| o.training).sum::<f64>() / count;
    let generalisation = outcomes.iter().map(|o| o.generalisation).sum::<f64>() / count;
    let refset_size = outcomes.iter().map(|o| o.size as f64).sum::<f64>() / count;
    let reduction_rate = outcomes
        .iter()
        .map(|o| o.size as f64 / o.train_size as f64)
        .sum::<f64>()
        / count;
    let criterion_j = lambda * (1.0 - generalisation) + (1.0 - lambda) * reduction_rate;

    Ok(EvaluationReport {
        method: method.name().to_string(),
        params: method.params_value(),
        protocol: protocol.describe(),
        metric: metric_label(metric),
        lambda,
        seed,
        n_points: n,
        refset_size,
        reduction_rate,
        training_accuracy: training,
        generalisation_accuracy: generalisation,
        per_fold_accuracy: outcomes.iter().map(|o| o.generalisation).collect(),
        criterion_j,
        stratified,
        goodness_of_fit,
        fit_gamma: None,
        fit_sse: None,
        fit_loglik: None,
        wall_time_ms: Some(started.elapsed().as_secs_f64() * 1e3),
    })
}

/// Goodness of fit between predicted and observed choice proportions:
/// `(sse, loglik)` where sse sums squared proportion differences over every
/// row and category, and loglik sums `count * ln(max(predicted, 1e-12))`.
pub fn fit_score(
    s: &ReferenceSet,
    metric: &Metric,
    params: &SimilarityParams,
    table: &ProportionsTable,
) -> Result<(f64, f64)> {
    if table.categories() != s.categories() {
        return Err(Error::InvalidInput(
            "the proportions table and the reference set must share one category list".into(),
        ));
    }
    if table.n_features() != s.n_features() {
        return Err(Error::InvalidInput(format!(
            "the proportions table has {} features, the reference set {}",
            table.n_features(),
            s.n_features()
        )));
    }
    let mut sse = 0.0;
    let mut loglik = 0.0;
    for row in table.rows() {
        let predicted = predict_proportions(s, metric, params, row.stimulus())?;
        for (c, &p) in predicted.probabilities().iter().enumerate() {
            let q = row.proportions()[c];
            sse += (p - q) * (p - q);
            loglik += row.counts()[c] * p.max(1e-12).ln();
        }
    }
    Ok((sse, loglik))
}

/// A built-in method with resolved parameters.
///
/// Canonical names: cnn, enn, hybrid, random, exhaustive, rex-leopold-1,
/// kmeans-pre, kmeans-post, gmm, lvq, nearest-mean, rmc, sustain, vam,
/// pure-exemplar. Accepted aliases: rex (kmeans-post) and pure-prototype
/// (nearest-mean).
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Cnn,
    Enn { k: usize },
    Hybrid { k: usize },
    RandomEditing { t: usize },
    Exhaustive { cv_folds: usize, cap: u64 },
    RexLeopold { cv_folds: usize, cap: u64 },
    KmeansPre { k_per_category: usize },
    KmeansPost { k: Option<usize> },
    Gmm { k: Option<usize>, mode: SupervisionMode },
    Lvq { prototypes_per_category: usize, alpha0: f64, epochs: usize },
    NearestMean,
    Rmc { coupling: f64, label_weight: f64, shuffle: bool },
    Sustain { learning_rate: f64, epochs: usize },
    Vam { cap: u64 },
    PureExemplar,
}

/// Every name [`Method::from_config`] accepts, canonical names first.
pub fn valid_method_names() -> Vec<&'static str> {
    vec![
        "cnn",
        "enn",
        "hybrid",
        "random",
        "exhaustive",
        "rex-leopold-1",
        "kmeans-pre",
        "kmeans-post",
        "gmm",
        "lvq",
        "nearest-mean",
        "rmc",
        "sustain",
        "vam",
        "pure-exemplar",
        "rex",
        "pure-prototype",
    ]
}

fn params_error(method: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("invalid parameters for method \"{method}\": {e}"))
}

impl Method {
    /// Build a method from its name and a JSON parameter object. Missing
    /// fields take documented defaults; unknown fields are rejected.
    pub fn from_config(name: &str, params: &serde_json::Value) -> Result<Method> {
        fn parse<T: serde::de::DeserializeOwned>(
            name: &str,
            params: &serde_json::Value,
        ) -> Result<T> {
            serde_json::from_value(params.clone()).map_err(|e| params_error(name, e))
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct NoParams {}

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct KParams {
            #[serde(default = "three")]
            k: usize,
        }
        fn three() -> usize {
            3
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RandomParams {
            #[serde(default = "hundred")]
            t: usize,
        }
        fn hundred() -> usize {
            100
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ExhaustiveParams {
            #[serde(default = "five")]
            cv_folds: usize,
            #[serde(default = "subset_cap")]
            cap: u64,
        }
        fn five() -> usize {
            5
        }
        fn subset_cap() -> u64 {
            DEFAULT_SUBSET_CAP
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct PreParams {
            #[serde(default = "one")]
            k_per_category: usize,
        }
        fn one() -> usize {
            1
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct PostParams {
            #[serde(default)]
            k: Option<usize>,
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GmmParams {
            #[serde(default)]
            k: Option<usize>,
            #[serde(default = "pre")]
            mode: String,
        }
        fn pre() -> String {
            "pre".into()
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct LvqConfig {
            #[serde(default = "one")]
            prototypes_per_category: usize,
            #[serde(default = "alpha")]
            alpha0: f64,
            #[serde(default = "five")]
            epochs: usize,
        }
        fn alpha() -> f64 {
            0.3
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RmcConfig {
            #[serde(default = "half")]
            coupling: f64,
            #[serde(default = "one_f")]
            label_weight: f64,
            #[serde(default)]
            shuffle: bool,
        }
        fn half() -> f64 {
            0.5
        }
        fn one_f() -> f64 {
            1.0
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct SustainConfig {
            #[serde(default = "tenth")]
            learning_rate: f64,
            #[serde(default = "five")]
            epochs: usize,
        }
        fn tenth() -> f64 {
            0.1
        }

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct VamParams {
            #[serde(default = "vam_cap")]
            cap: u64,
        }
        fn vam_cap() -> u64 {
            DEFAULT_VAM_CAP
        }

        match name {
            "cnn" => {
                let _: NoParams = parse(name, params)?;
                Ok(Method::Cnn)
            }
            "enn" => {
                let p: KParams = parse(name, params)?;
                Ok(Method::Enn { k: p.k })
            }
            "hybrid" => {
                let p: KParams = parse(name, params)?;
                Ok(Method::Hybrid { k: p.k })
            }
            "random" => {
                let p: RandomParams = parse(name, params)?;
                Ok(Method::RandomEditing { t: p.t })
            }
            "exhaustive" => {
                let p: ExhaustiveParams = parse(name, params)?;
                Ok(Method::Exhaustive { cv_folds: p.cv_folds, cap: p.cap })
            }
            "rex-leopold-1" => {
                let p: ExhaustiveParams = parse(name, params)?;
                Ok(Method::RexLeopold { cv_folds: p.cv_folds, cap: p.cap })
            }
            "kmeans-pre" => {
                let p: PreParams = parse(name, params)?;
                Ok(Method::KmeansPre { k_per_category: p.k_per_category })
            }
            "kmeans-post" | "rex" => {
                let p: PostParams = parse(name, params)?;
                Ok(Method::KmeansPost { k: p.k })
            }
            "gmm" => {
                let p: GmmParams = parse(name, params)?;
                let mode = match p.mode.as_str() {
                    "pre" => SupervisionMode::PreSupervised,
                    "post" => SupervisionMode::PostSupervised,
                    other => {
                        return Err(params_error(
                            name,
                            format!("mode must be \"pre\" or \"post\", got \"{other}\""),
                        ))
                    }
                };
                Ok(Method::Gmm { k: p.k, mode })
            }
            "lvq" => {
                let p: LvqConfig = parse(name, params)?;
                Ok(Method::Lvq {
                    prototypes_per_category: p.prototypes_per_category,
                    alpha0: p.alpha0,
                    epochs: p.epochs,
                })
            }
            "nearest-mean" | "pure-prototype" => {
                let _: NoParams = parse(name, params)?;
                Ok(Method::NearestMean)
            }
            "rmc" => {
                let p: RmcConfig = parse(name, params)?;
                Ok(Method::Rmc {
                    coupling: p.coupling,
                    label_weight: p.label_weight,
                    shuffle: p.shuffle,
                })
            }
            "sustain" => {
                let p: SustainConfig = parse(name, params)?;
                Ok(Method::Sustain { learning_rate: p.learning_rate, epochs: p.epochs })
            }
            "vam" => {
                let p: VamParams = parse(name, params)?;
                Ok(Method::Vam { cap: p.cap })
            }
            "pure-exemplar" => {
                let _: NoParams = parse(name, params)?;
                Ok(Method::PureExemplar)
            }
            other => Err(Error::Config(format!(
                "unknown method \"{other}\"; valid names: {}",
                valid_method_names().join(", ")
            ))),
        }
    }

    /// The canonical name of this method.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cnn => "cnn",
            Method::Enn { .. } => "enn",
            Method::Hybrid { .. } => "hybrid",
            Method::RandomEditing { .. } => "random",
            Method::Exhaustive { .. } => "exhaustive",
            Method::RexLeopold { .. } => "rex-leopold-1",
            Method::KmeansPre { .. } => "kmeans-pre",
            Method::KmeansPost { .. } => "kmeans-post",
            Method::Gmm { .. } => "gmm",
            Method::Lvq { .. } => "lvq",
            Method::NearestMean => "nearest-mean",
            Method::Rmc { .. } => "rmc",
            Method::Sustain { .. } => "sustain",
            Method::Vam { .. } => "vam",
            Method::PureExemplar => "pure-exemplar",
        }
    }

    /// The resolved parameters as a JSON object (keys sorted).
    pub fn params_value(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Method::Cnn | Method::NearestMean | Method::PureExemplar => json!({}),
            Method::Enn { k } | Method::Hybrid { k } => json!({ "k": k }),
            Method::RandomEditing { t } => json!({ "t": t }),
            Method::Exhaustive { cv_folds, cap } | Method::RexLeopold { cv_folds, cap } => {
                json!({ "cv_folds": cv_folds, "cap": cap })
            }
            Method::KmeansPre { k_per_category } => json!({ "k_per_category": k_per_category }),
            Method::KmeansPost { k } => json!({ "k": k }),
            Method::Gmm { k, mode } => json!({
                "k": k,
                "mode": match mode {
                    SupervisionMode::PreSupervised => "pre",
                    SupervisionMode::PostSupervised => "post",
                },
            }),
            Method::Lvq { prototypes_per_category, alpha0, epochs } => json!({
                "prototypes_per_category": prototypes_per_category,
                "alpha0": alpha0,
                "epochs": epochs,
            }),
            Method::Rmc { coupling, label_weight, shuffle } => json!({
                "coupling": coupling,
                "label_weight": label_weight,
                "shuffle": shuffle,
            }),
            Method::Sustain { learning_rate, epochs } => json!({
                "learning_rate": learning_rate,
                "epochs": epochs,
            }),
            Method::Vam { cap } => json!({ "cap": cap }),
        }
    }

    /// Run the method on a training set.
    ///
    /// `lambda` only affects the subset-searching methods ("random" and
    /// "exhaustive"); "rex-leopold-1" pins it to 1. `seed` drives every
    /// stochastic choice the method makes.
    pub fn fit(
        &self,
        train: &Dataset,
        metric: &Metric,
        lambda: f64,
        seed: u64,
    ) -> Result<ReferenceSet> {
        match self {
            Method::Cnn => cnn(train, metric, seed),
            Method::Enn { k } => enn(train, *k, metric),
            Method::Hybrid { k } => hybrid_enn_cnn(train, *k, metric, seed),
            Method::RandomEditing { t } => fit_random(train, metric, lambda, *t, seed),
            Method::Exhaustive { cv_folds, cap } => {
                let params = EditingParams {
                    lambda,
                    t: 1,
                    k: 1,
                    seed,
                    cv_folds: *cv_folds,
                };
                exhaustive_select(train, &params, metric, *cap)
            }
            Method::RexLeopold { cv_folds, cap } => {
                rex_leopold_i(train, metric, *cv_folds, seed, *cap)
            }
            Method::KmeansPre { k_per_category } => {
                let params = ClusteringParams {
                    k: *k_per_category,
                    seed,
                    ..ClusteringParams::default()
                };
                cluster_pre_supervised(train, *k_per_category, &params, metric)
            }
            Method::KmeansPost { k } => {
                let params = ClusteringParams {
                    k: k.unwrap_or_else(|| train.category_count()),
                    seed,
                    ..ClusteringParams::default()
                };
                cluster_post_supervised(train, &params, metric)
            }
            Method::Gmm { k, mode } => {
                let default_k = match mode {
                    SupervisionMode::PreSupervised => 1,
                    SupervisionMode::PostSupervised => train.category_count(),
                };
                let params = ClusteringParams {
                    k: k.unwrap_or(default_k),
                    seed,
                    ..ClusteringParams::default()
                };
                gmm_mmc(train, &params, *mode)
            }
            Method::Lvq { prototypes_per_category, alpha0, epochs } => {
                let init_params = ClusteringParams {
                    k: *prototypes_per_category,
                    seed: derive_seed(seed, 1),
                    ..ClusteringParams::default()
                };
                let init =
                    cluster_pre_supervised(train, *prototypes_per_category, &init_params, metric)?;
                let params = LvqParams {
                    prototypes_per_category: *prototypes_per_category,
                    alpha0: *alpha0,
                    epochs: *epochs,
                    seed,
                };
                lvq1(train, &init, &params, metric)
            }
            Method::NearestMean => nearest_mean_prototypes(train),
            Method::Rmc { coupling, label_weight, shuffle } => {
                let params = RmcParams {
                    coupling: *coupling,
                    label_weight: *label_weight,
                    seed,
                    shuffle: *shuffle,
                };
                rmc(train, &params, metric)
            }
            Method::Sustain { learning_rate, epochs } => {
                let params = SustainParams {
                    learning_rate: *learning_rate,
                    epochs: *epochs,
                    seed,
                };
                sustain(train, &params, metric)
            }
            Method::Vam { cap } => {
                vam_best(train, vam_training_accuracy_score(train, metric), *cap)
                    .map(|record| record.refset)
            }
            Method::PureExemplar => pure_exemplar(train),
        }
    }
}

/// Random-subset search needs a validation set; split the training data in
/// half with a seed derived from the method seed, search on one half, and
/// map the chosen indices back into the caller's dataset.
fn fit_random(
    train: &Dataset,
    metric: &Metric,
    lambda: f64,
    t: usize,
    seed: u64,
) -> Result<ReferenceSet> {
    let (sub_idx, val_idx) = holdout_split(train.len(), 0.5, derive_seed(seed, 1))
        .map_err(|_| {
            Error::InvalidInput(
                "the random-subset method needs at least two training points (it holds half \
                 out for validation)"
                    .into(),
            )
        })?;
    let sub = train.subset(&sub_idx)?;
    let val = train.subset(&val_idx)?;
    let params = EditingParams {
        lambda,
        t,
        k: 1,
        seed,
        cv_folds: 2,
    };
    let chosen = random_editing(&sub, &val, &params, metric)?;
    let mapped: Vec<usize> = chosen
        .source_indices()
        .expect("selection records source indices")
        .iter()
        .map(|&j| sub_idx[j])
        .collect();
    ReferenceSet::from_selection(train, &mapped)
}

/// Benchmark configuration, read from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Datasets to evaluate, named for output files.
    pub datasets: Vec<BenchDataset>,
    /// Methods to evaluate on every dataset.
    pub methods: Vec<BenchMethodSpec>,
    /// Accuracy protocol for every cell.
    pub protocol: ProtocolConfig,
    /// Metric tag, e.g. "euclidean" or "minkowski:3".
    #[serde(default = "default_metric")]
    pub metric: String,
    /// Optional per-feature metric weights.
    #[serde(default)]
    pub metric_weights: Option<Vec<f64>>,
    /// Trade-off weight for the criterion.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Base seed; each cell derives its own seed from it.
    #[serde(default)]
    pub seed: u64,
    /// Include wall-clock timing in the per-cell reports. Off by default so
    /// that repeated runs produce byte-identical outputs.
    #[serde(default)]
    pub include_timing: bool,
    /// Write each cell's reference set next to its report.
    #[serde(default = "default_true")]
    pub write_refsets: bool,
}

fn default_metric() -> String {
    "euclidean".into()
}
fn default_lambda() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchDataset {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchMethodSpec {
    pub name: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

/// Protocol as it appears in benchmark configs; split seeds come from the
/// config-level seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Resubstitution,
    Holdout { fraction: f64 },
    #[serde(rename = "kfold")]
    KFold { folds: usize },
    Loo,
}

impl ProtocolConfig {
    fn instantiate(&self, seed: u64) -> Protocol {
        match self {
            ProtocolConfig::Resubstitution => Protocol::Resubstitution,
            ProtocolConfig::Holdout { fraction } => Protocol::Holdout {
                fraction: *fraction,
                seed,
            },
            ProtocolConfig::KFold { folds } => Protocol::KFold {
                folds: *folds,
                seed,
            },
            ProtocolConfig::Loo => Protocol::Loo,
        }
    }
}

/// Parse a benchmark configuration from JSON text.
pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid benchmark config: {e}")))
}

/// One line of the benchmark summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub cell: usize,
    pub dataset: String,
    pub method: String,
    /// "ok" or "error".
    pub status: String,
    pub refset_size: Option<f64>,
    pub training_accuracy: Option<f64>,
    pub generalisation_accuracy: Option<f64>,
    pub reduction_rate: Option<f64>,
    pub criterion_j: Option<f64>,
    /// The error text for failed cells, empty otherwise.
    pub message: String,
}

/// Where a finished benchmark run put its outputs.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub summary_path: PathBuf,
    pub rows: Vec<SummaryRow>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn check_output_name(kind: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{kind} name \"{name}\" may only contain letters, digits, '-', '_', and '.' \
             (it names output files)"
        )))
    }
}

#[cfg(feature = "parallel")]
fn run_cells<R: Send>(
    count: usize,
    jobs: usize,
    run: impl Fn(usize) -> R + Sync + Send,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build a {jobs}-thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(run).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_cells<R>(count: usize, _jobs: usize, run: impl Fn(usize) -> R) -> Result<Vec<R>> {
    Ok((0..count).map(run).collect())
}

/// Run every (dataset, method) cell of `config`, writing one report (and
/// optionally one reference set) per cell plus a `summary.csv` into
/// `output_dir`, all atomically. Cells run in dataset-major order; each
/// derives its seed from the config seed and its cell index, so results do
/// not depend on `jobs` (the worker count) or on timing. A failing cell
/// becomes an error row and the run continues.
pub fn benchmark(config: &BenchConfig, output_dir: &Path, jobs: usize) -> Result<BenchOutcome> {
    if config.datasets.is_empty() || config.methods.is_empty() {
        return Err(Error::Config(
            "the benchmark needs at least one dataset and one method".into(),
        ));
    }
    if jobs == 0 {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    if !config.lambda.is_finite() || !(0.0..=1.0).contains(&config.lambda) {
        return Err(Error::Config(format!(
            "lambda must lie in [0, 1], got {}",
            config.lambda
        )));
    }
    for d in &config.datasets {
        check_output_name("dataset", &d.name)?;
    }
    for m in &config.methods {
        check_output_name("method", &m.name)?;
    }
    let mut names: Vec<&str> = config.datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("dataset names must be unique".into()));
    }
    let mut names: Vec<&str> = config.methods.iter().map(|m| m.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("method names must be unique".into()));
    }

    let mut metric = parse_metric_spec(&config.metric)?;
    if let Some(w) = &config.metric_weights {
        metric = metric.with_weights(w.clone())?;
    }
    let protocol = config.protocol.instantiate(config.seed);

    let methods: Vec<Method> = config
        .methods
        .iter()
        .map(|m| Method::from_config(&m.name, &m.params))
        .collect::<Result<_>>()?;
    let datasets: Vec<Dataset> = config
        .datasets
        .iter()
        .map(|d| {
            crate::data::load_csv(&d.path).map_err(|e| {
                Error::Config(format!(
                    "could not load dataset \"{}\" from {}: {e}",
                    d.name,
                    d.path.display()
                ))
            })
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(output_dir)?;

    let n_methods = methods.len();
    let cell_count = datasets.len() * n_methods;
    let run_one = |cell: usize| -> Result<SummaryRow> {
        let di = cell / n_methods;
        let mi = cell % n_methods;
        let dataset = &datasets[di];
        let method = &methods[mi];
        let cell_seed = derive_seed(config.seed, cell as u64);
        let stem = format!(
            "cell{cell:03}_{}__{}",
            config.datasets[di].name, config.methods[mi].name
        );

        let outcome = evaluate(method, dataset, &protocol, &metric, config.lambda, cell_seed)
            .and_then(|mut report| {
                if !config.include_timing {
                    report.wall_time_ms = None;
                }
                let refset = if config.write_refsets {
                    Some(method.fit(dataset, &metric, config.lambda, cell_seed)?)
                } else {
                    None
                };
                Ok((report, refset))
            });

        match outcome {
            Ok((report, refset)) => {
                let json = serde_json::to_string(&report)
                    .map_err(|e| Error::InvalidState(format!("report serialisation: {e}")))?;
                write_atomic(&output_dir.join(format!("{stem}.json")), json.as_bytes())?;
                if let Some(refset) = refset {
                    write_atomic(
                        &output_dir.join(format!("{stem}.refset.json")),
                        refset.to_json_string().as_bytes(),
                    )?;
                }
                Ok(SummaryRow {
                    cell,
                    dataset: config.datasets[di].name.clone(),
                    method: config.methods[mi].name.clone(),
                    status: "ok".into(),
                    refset_size: Some(report.refset_size),
                    training_accuracy: Some(report.training_accuracy),
                    generalisation_accuracy: Some(report.generalisation_accuracy),
                    reduction_rate: Some(report.reduction_rate),
                    criterion_j: Some(report.criterion_j),
                    message: String::new(),
                })
            }
            Err(e) => Ok(SummaryRow {
                cell,
                dataset: config.datasets[di].name.clone(),
                method: config.methods[mi].name.clone(),
                status: "error".into(),
                refset_size: None,
                training_accuracy: None,
                generalisation_accuracy: None,
                reduction_rate: None,
                criterion_j: None,
                message: e.to_string(),
            }),
        }
    };

    let rows: Vec<SummaryRow> = run_cells(cell_count, jobs, run_one)?
        .into_iter()
        .collect::<Result<_>>()?;

    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "cell",
        "dataset",
        "method",
        "status",
        "refset_size",
        "training_accuracy",
        "generalisation_accuracy",
        "reduction_rate",
        "criterion_j",
        "message",
    ])
    .map_err(|e| Error::InvalidState(format!("summary serialisation: {e}")))?;
    let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for row in &rows {
        csv.write_record([
            row.cell.to_string(),
            row.dataset.clone(),
            row.method.clone(),
            row.status.clone(),
            fmt(row.refset_size),
            fmt(row.training_accuracy),
            fmt(row.generalisation_accuracy),
            fmt(row.reduction_rate),
            fmt(row.criterion_j),
            row.message.clone(),
        ])
        .map_err(|e| Error::InvalidState(format!("summary serialisation: {e}")))?;
    }
    let bytes = csv
        .into_inner()
        .map_err(|e| Error::InvalidState(format!("summary serialisation: {e}")))?;
    let summary_path = output_dir.join("summary.csv");
    write_atomic(&summary_path, &bytes)?;

    Ok(BenchOutcome { summary_path, rows })
}
