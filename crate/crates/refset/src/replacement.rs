//! Prototype generation: methods that replace the training points with new
//! points (cluster centres, component means, moved prototypes).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{labels_required, Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::refset::ReferenceSet;
use crate::util::derive_seed;

/// Tuning knobs for the clustering-based generators.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringParams {
    /// Number of clusters (per category for the per-category variants).
    pub k: usize,
    /// Iteration cap for the refinement loops.
    pub max_iter: usize,
    /// Convergence threshold: stop once no centroid moves at least this far
    /// (for mixtures: once the log-likelihood improves by less than this).
    pub tol: f64,
    /// Seed for the initial centre draw.
    pub seed: u64,
    /// Lower bound applied to mixture component variances.
    pub variance_floor: f64,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        ClusteringParams {
            k: 1,
            max_iter: 100,
            tol: 1e-6,
            seed: 0,
            variance_floor: 1e-6,
        }
    }
}

impl ClusteringParams {
    /// Default parameters with the given cluster count.
    pub fn with_k(k: usize) -> Self {
        ClusteringParams {
            k,
            ..ClusteringParams::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !self.tol.is_finite() || self.tol < 0.0 {
            return Err(Error::InvalidInput(format!(
                "tolerance must be finite and non-negative, got {}",
                self.tol
            )));
        }
        if !self.variance_floor.is_finite() || self.variance_floor <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "variance floor must be finite and positive, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

/// Componentwise mean of the points at `indices`, accumulated in index
/// order so that identical member lists give bit-identical means.
pub(crate) fn mean_of(points: &[&[f64]], indices: &[usize]) -> Vec<f64> {
    let dims = points[indices[0]].len();
    let mut sum = vec![0.0; dims];
    for &i in indices {
        for (s, v) in sum.iter_mut().zip(points[i]) {
            *s += v;
        }
    }
    let n = indices.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    sum
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::InvalidInput("clustering needs at least one point".into()));
    }
    let dims = points[0].len();
    if dims == 0 {
        return Err(Error::InvalidInput("points must have at least one feature".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dims {
            return Err(Error::InvalidInput(format!(
                "point {i} has {} features, expected {dims}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite feature")));
        }
    }
    Ok(dims)
}

/// One finished clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansRun {
    /// Final cluster centres.
    pub centroids: Vec<Vec<f64>>,
    /// For each cluster, the point indices whose mean produced its final
    /// centre (every point appears in exactly one cluster).
    pub membership: Vec<Vec<usize>>,
    /// Sum of squared point-to-assigned-centre distances, recorded after
    /// every assignment phase. Non-increasing under the Euclidean metric.
    pub objective_trace: Vec<f64>,
    /// Number of assignment/update iterations performed.
    pub iterations: usize,
}

/// Batch k-means. Initial centres are `params.k` distinct points drawn with
/// `params.seed`; assignment ties go to the lower cluster index; a cluster
/// that loses all members is repaired by moving its centre onto the point
/// farthest from its assigned centre (ties to the lowest point index),
/// which never increases the objective. Stops when no centre moves at
/// least `params.tol` (and no repair happened), or after `params.max_iter`
/// iterations.
pub fn kmeans(points: &[Vec<f64>], params: &ClusteringParams, metric: &Metric) -> Result<Vec<Vec<f64>>> {
    kmeans_detailed(points, params, metric).map(|run| run.centroids)
}

/// [`kmeans`] with the full run record.
pub fn kmeans_detailed(
    points: &[Vec<f64>],
    params: &ClusteringParams,
    metric: &Metric,
) -> Result<KmeansRun> {
    params.validate()?;
    check_points(points)?;

    // Distinct coordinates in first-occurrence order; duplicates would make
    // two initial centres coincide.
    let mut distinct: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        if !distinct.iter().any(|&j| points[j] == points[i]) {
            distinct.push(i);
        }
    }
    if params.k > distinct.len() {
        return Err(Error::InvalidInput(format!(
            "k = {} exceeds the {} distinct points",
            params.k,
            distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picks = rand::seq::index::sample(&mut rng, distinct.len(), params.k).into_vec();
    picks.sort_unstable();
    let init: Vec<Vec<f64>> = picks.iter().map(|&p| points[distinct[p]].clone()).collect();

    let views: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    kmeans_with_init(&views, init, params, metric)
}

/// The refinement loop, exposed to tests so degenerate initial centres
/// (e.g. ones that empty out) can be exercised directly.
pub(crate) fn kmeans_with_init(
    points: &[&[f64]],
    init: Vec<Vec<f64>>,
    params: &ClusteringParams,
    metric: &Metric,
) -> Result<KmeansRun> {
    let k = init.len();
    let mut centroids = init;
    let mut membership: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for iter in 1..=params.max_iter {
        iterations = iter;

        // Assignment: nearest centre, ties to the lower cluster index.
        membership = vec![Vec::new(); k];
        let mut assigned_dist = vec![0.0f64; points.len()];
        let mut objective = 0.0;
        for (pi, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, usize::MAX);
            for (ci, c) in centroids.iter().enumerate() {
                let dist = metric.distance(c, p)?;
                if (dist, ci) < best {
                    best = (dist, ci);
                }
            }
            membership[best.1].push(pi);
            assigned_dist[pi] = best.0;
            objective += best.0 * best.0;
        }
        if !objective.is_finite() {
            return Err(Error::Numeric("clustering objective overflowed".into()));
        }
        trace.push(objective);

        // Update: means of the new memberships.
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(k);
        for c in 0..k {
            if membership[c].is_empty() {
                next.push(centroids[c].clone()); // repaired below
            } else {
                next.push(mean_of(points, &membership[c]));
            }
        }

        // Repair empty clusters with the points farthest from their centres.
        let mut repaired = false;
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            if !membership[c].is_empty() {
                continue;
            }
            let mut pick = (f64::NEG_INFINITY, usize::MAX);
            for (pi, &dist) in assigned_dist.iter().enumerate() {
                if taken.contains(&pi) {
                    continue;
                }
                // Highest distance wins; on equal distance keep the lowest
                // index, hence the strict comparison against a negated key.
                if dist > pick.0 {
                    pick = (dist, pi);
                }
            }
            let pi = pick.1;
            next[c] = points[pi].to_vec();
            for m in &mut membership {
                m.retain(|&x| x != pi);
            }
            membership[c] = vec![pi];
            taken.push(pi);
            repaired = true;
        }

        let mut shift = 0.0f64;
        for (old, new) in centroids.iter().zip(&next) {
            shift = shift.max(metric.distance(old, new)?);
        }
        centroids = next;
        if !repaired && shift < params.tol {
            break;
        }
    }

    Ok(KmeansRun {
        centroids,
        membership,
        objective_trace: trace,
        iterations,
    })
}

/// Majority label over `labels[members]`; ties go to the lowest category
/// index. Falls back to the dataset-wide majority when `members` is empty.
fn majority_label(labels: &[usize], members: &[usize], categories: usize) -> usize {
    let mut counts = vec![0usize; categories];
    if members.is_empty() {
        for &l in labels {
            counts[l] += 1;
        }
    } else {
        for &m in members {
            counts[labels[m]] += 1;
        }
    }
    let best = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == best).unwrap()
}

/// Cluster each category separately into `k_per_category` clusters and keep
/// the centres, labelled with their category. The per-category runs draw
/// their seeds from `params.seed` and the category index.
pub fn cluster_pre_supervised(
    d: &Dataset,
    k_per_category: usize,
    params: &ClusteringParams,
    metric: &Metric,
) -> Result<ReferenceSet> {
    labels_required(d)?;
    if k_per_category == 0 {
        return Err(Error::InvalidInput("k per category must be at least 1".into()));
    }
    let mut prototypes = Vec::new();
    for c in 0..d.category_count() {
        let indices = d.indices_of_category(c);
        if indices.is_empty() {
            return Err(Error::InvalidInput(format!(
                "category \"{}\" has no points to cluster",
                d.categories()[c]
            )));
        }
        let member_points: Vec<Vec<f64>> = indices.iter().map(|&i| d.features(i).to_vec()).collect();
        let sub_params = ClusteringParams {
            k: k_per_category,
            seed: derive_seed(params.seed, c as u64),
            ..params.clone()
        };
        let run = kmeans_detailed(&member_points, &sub_params, metric).map_err(|e| {
            Error::InvalidInput(format!(
                "clustering category \"{}\" failed: {e}",
                d.categories()[c]
            ))
        })?;
        for centroid in run.centroids {
            prototypes.push(LabeledPoint::new(centroid, Some(c))?);
        }
    }
    ReferenceSet::from_generated(prototypes, d.categories().to_vec())
}

/// Cluster the whole dataset into `params.k` clusters, ignoring labels,
/// then label each centre by the majority category of the points whose
/// mean it is (ties to the lowest category index).
pub fn cluster_post_supervised(
    d: &Dataset,
    params: &ClusteringParams,
    metric: &Metric,
) -> Result<ReferenceSet> {
    let labels = labels_required(d)?;
    let points: Vec<Vec<f64>> = (0..d.len()).map(|i| d.features(i).to_vec()).collect();
    let run = kmeans_detailed(&points, params, metric)?;
    let mut prototypes = Vec::with_capacity(run.centroids.len());
    for (c, centroid) in run.centroids.into_iter().enumerate() {
        let label = majority_label(&labels, &run.membership[c], d.category_count());
        prototypes.push(LabeledPoint::new(centroid, Some(label))?);
    }
    ReferenceSet::from_generated(prototypes, d.categories().to_vec())
}

/// One prototype per category: the category mean. Errors when a category
/// has no points.
pub fn nearest_mean_prototypes(d: &Dataset) -> Result<ReferenceSet> {
    labels_required(d)?;
    let views: Vec<&[f64]> = (0..d.len()).map(|i| d.features(i)).collect();
    let mut prototypes = Vec::with_capacity(d.category_count());
    for c in 0..d.category_count() {
        let indices = d.indices_of_category(c);
        if indices.is_empty() {
            return Err(Error::InvalidInput(format!(
                "category \"{}\" has no points to average",
                d.categories()[c]
            )));
        }
        prototypes.push(LabeledPoint::new(mean_of(&views, &indices), Some(c))?);
    }
    ReferenceSet::from_generated(prototypes, d.categories().to_vec())
}

/// Whether a mixture is fitted per category or once over everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupervisionMode {
    /// One mixture per category; components inherit the category label.
    PreSupervised,
    /// One mixture over all points; components take the majority label of
    /// the points assigned to them.
    PostSupervised,
}

/// One fitted spherical Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    /// Component means.
    pub means: Vec<Vec<f64>>,
    /// Per-component spherical variances (floored).
    pub variances: Vec<f64>,
    /// Mixing weights, summing to 1.
    pub weights: Vec<f64>,
    /// Log-likelihood after every E step; non-decreasing up to round-off.
    pub log_likelihood_trace: Vec<f64>,
    /// Most responsible component per point under the final parameters
    /// (ties to the lower component index).
    pub hard_assignments: Vec<usize>,
}

fn logsumexp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Expectation-maximisation for a spherical Gaussian mixture, initialised
/// from a k-means run under the Euclidean metric.
pub fn fit_gmm(points: &[Vec<f64>], params: &ClusteringParams) -> Result<GmmFit> {
    params.validate()?;
    let dims = check_points(points)?;
    let m = points.len();
    let k = params.k;

    // Initialise from k-means: means, member-share weights, and the
    // dimension-averaged within-cluster variance.
    let km = kmeans_detailed(points, params, &Metric::euclidean())?;
    let mut means = km.centroids;
    let mut weights: Vec<f64> = km.membership.iter().map(|mm| mm.len() as f64 / m as f64).collect();
    let mut variances: Vec<f64> = Vec::with_capacity(k);
    for (members, mean) in km.membership.iter().zip(&means) {
        let mut ss = 0.0;
        for &pi in members {
            for (v, mu) in points[pi].iter().zip(mean) {
                ss += (v - mu) * (v - mu);
            }
        }
        let denom = (dims * members.len().max(1)) as f64;
        variances.push((ss / denom).max(params.variance_floor));
    }

    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut trace: Vec<f64> = Vec::new();
    let mut responsibilities = vec![vec![0.0f64; k]; m];

    let e_step = |means: &[Vec<f64>],
                  variances: &[f64],
                  weights: &[f64],
                  responsibilities: &mut Vec<Vec<f64>>|
     -> Result<f64> {
        let mut ll = 0.0;
        for (pi, p) in points.iter().enumerate() {
            let mut logp = vec![0.0f64; k];
            for c in 0..k {
                let sq: f64 = p
                    .iter()
                    .zip(&means[c])
                    .map(|(v, mu)| (v - mu) * (v - mu))
                    .sum();
                logp[c] = weights[c].ln() - 0.5 * dims as f64 * (ln_2pi + variances[c].ln())
                    - sq / (2.0 * variances[c]);
            }
            let norm = logsumexp(&logp);
            if !norm.is_finite() {
                return Err(Error::Numeric(
                    "mixture likelihood vanished for a point; no component explains it".into(),
                ));
            }
            for c in 0..k {
                responsibilities[pi][c] = (logp[c] - norm).exp();
            }
            ll += norm;
        }
        Ok(ll)
    };

    for _ in 0..params.max_iter {
        let ll = e_step(&means, &variances, &weights, &mut responsibilities)?;
        if let Some(&prev) = trace.last() {
            debug_assert!(ll >= prev - 1e-9, "log-likelihood decreased: {prev} -> {ll}");
            trace.push(ll);
            if ll - prev < params.tol {
                break;
            }
        } else {
            trace.push(ll);
        }

        // M step.
        for c in 0..k {
            let nc: f64 = responsibilities.iter().map(|r| r[c]).sum();
            if nc <= 0.0 {
                weights[c] = 0.0; // dead component keeps its parameters
                continue;
            }
            weights[c] = nc / m as f64;
            let mut mu = vec![0.0f64; dims];
            for (pi, p) in points.iter().enumerate() {
                for (s, v) in mu.iter_mut().zip(p) {
                    *s += responsibilities[pi][c] * v;
                }
            }
            for s in &mut mu {
                *s /= nc;
            }
            let mut ss = 0.0;
            for (pi, p) in points.iter().enumerate() {
                let sq: f64 = p.iter().zip(&mu).map(|(v, m2)| (v - m2) * (v - m2)).sum();
                ss += responsibilities[pi][c] * sq;
            }
            means[c] = mu;
            variances[c] = (ss / (dims as f64 * nc)).max(params.variance_floor);
        }
    }

    // Hard assignments under the final parameters.
    e_step(&means, &variances, &weights, &mut responsibilities)?;
    let hard_assignments = responsibilities
        .iter()
        .map(|r| {
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for (c, &v) in r.iter().enumerate() {
                if v > best.0 {
                    best = (v, c);
                }
            }
            best.1
        })
        .collect();

    Ok(GmmFit {
        means,
        variances,
        weights,
        log_likelihood_trace: trace,
        hard_assignments,
    })
}

/// A mixture-model run together with the prototypes it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmRun {
    pub refset: ReferenceSet,
    /// The underlying fits: one per category in pre-supervised mode, a
    /// single fit in post-supervised mode.
    pub fits: Vec<GmmFit>,
}

/// Gaussian-mixture prototypes: fit spherical mixtures and keep the
/// component means as reference points.
pub fn gmm_mmc(
    d: &Dataset,
    params: &ClusteringParams,
    mode: SupervisionMode,
) -> Result<ReferenceSet> {
    gmm_mmc_detailed(d, params, mode).map(|run| run.refset)
}

/// [`gmm_mmc`] with the underlying fits.
pub fn gmm_mmc_detailed(
    d: &Dataset,
    params: &ClusteringParams,
    mode: SupervisionMode,
) -> Result<GmmRun> {
    let labels = labels_required(d)?;
    let mut prototypes = Vec::new();
    let mut fits = Vec::new();
    match mode {
        SupervisionMode::PreSupervised => {
            for c in 0..d.category_count() {
                let indices = d.indices_of_category(c);
                if indices.is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "category \"{}\" has no points to model",
                        d.categories()[c]
                    )));
                }
                let pts: Vec<Vec<f64>> = indices.iter().map(|&i| d.features(i).to_vec()).collect();
                let sub_params = ClusteringParams {
                    seed: derive_seed(params.seed, c as u64),
                    ..params.clone()
                };
                let fit = fit_gmm(&pts, &sub_params).map_err(|e| {
                    Error::InvalidInput(format!(
                        "mixture for category \"{}\" failed: {e}",
                        d.categories()[c]
                    ))
                })?;
                for mean in &fit.means {
                    prototypes.push(LabeledPoint::new(mean.clone(), Some(c))?);
                }
                fits.push(fit);
            }
        }
        SupervisionMode::PostSupervised => {
            let pts: Vec<Vec<f64>> = (0..d.len()).map(|i| d.features(i).to_vec()).collect();
            let fit = fit_gmm(&pts, params)?;
            for (c, mean) in fit.means.iter().enumerate() {
                let members: Vec<usize> = fit
                    .hard_assignments
                    .iter()
                    .enumerate()
                    .filter(|&(_, &a)| a == c)
                    .map(|(i, _)| i)
                    .collect();
                let label = majority_label(&labels, &members, d.category_count());
                prototypes.push(LabeledPoint::new(mean.clone(), Some(label))?);
            }
            fits.push(fit);
        }
    }
    let refset = ReferenceSet::from_generated(prototypes, d.categories().to_vec())?;
    Ok(GmmRun { refset, fits })
}

/// Tuning knobs for learning-vector-quantisation refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct LvqParams {
    /// Prototypes per category when the initial set is built automatically.
    pub prototypes_per_category: usize,
    /// Initial learning rate; the rate decays linearly to zero over the run.
    pub alpha0: f64,
    /// Number of passes over the training data.
    pub epochs: usize,
    /// Seed for the per-epoch presentation order.
    pub seed: u64,
}

impl Default for LvqParams {
    fn default() -> Self {
        LvqParams {
            prototypes_per_category: 1,
            alpha0: 0.3,
            epochs: 5,
            seed: 0,
        }
    }
}

impl LvqParams {
    fn validate(&self) -> Result<()> {
        if self.prototypes_per_category == 0 {
            return Err(Error::InvalidInput(
                "at least one prototype per category is required".into(),
            ));
        }
        if !self.alpha0.is_finite() || !(0.0..=1.0).contains(&self.alpha0) {
            return Err(Error::InvalidInput(format!(
                "the initial learning rate must lie in [0, 1], got {}",
                self.alpha0
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("at least one epoch is required".into()));
        }
        Ok(())
    }
}

/// Learning vector quantisation (the classic single-winner rule): present
/// the training points in a seeded per-epoch order; the nearest prototype
/// (ties to the lower prototype index) moves towards a same-label point and
/// away from a different-label point, with the step size decaying linearly
/// from `alpha0` to zero over `epochs * N` presentations.
pub fn lvq1(
    d: &Dataset,
    init: &ReferenceSet,
    params: &LvqParams,
    metric: &Metric,
) -> Result<ReferenceSet> {
    use rand::seq::SliceRandom;

    params.validate()?;
    let labels = labels_required(d)?;
    if init.categories() != d.categories() {
        return Err(Error::InvalidInput(
            "initial prototypes must share the dataset's category list".into(),
        ));
    }
    if init.n_features() != d.n_features() {
        return Err(Error::InvalidInput(
            "initial prototypes must match the dataset's feature count".into(),
        ));
    }
    for c in 0..d.category_count() {
        let present_in_data = labels.contains(&c);
        let present_in_init = (0..init.len()).any(|i| init.label(i) == c);
        if present_in_data && !present_in_init {
            return Err(Error::InvalidInput(format!(
                "category \"{}\" occurs in the data but has no initial prototype",
                d.categories()[c]
            )));
        }
    }

    let mut prototypes: Vec<Vec<f64>> = init.points().iter().map(|p| p.features().to_vec()).collect();
    let proto_labels: Vec<usize> = (0..init.len()).map(|i| init.label(i)).collect();

    let n = d.len();
    let total_steps = (params.epochs * n) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut step = 0usize;
    for _ in 0..params.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order {
            let alpha = params.alpha0 * (1.0 - step as f64 / total_steps);
            step += 1;
            let x = d.features(i);
            let mut best = (f64::INFINITY, usize::MAX);
            for (pi, proto) in prototypes.iter().enumerate() {
                let dist = metric.distance(proto, x)?;
                if (dist, pi) < best {
                    best = (dist, pi);
                }
            }
            let w = &mut prototypes[best.1];
            let sign = if proto_labels[best.1] == labels[i] { alpha } else { -alpha };
            for (wj, xj) in w.iter_mut().zip(x) {
                *wj += sign * (xj - *wj);
            }
        }
    }

    let points = prototypes
        .into_iter()
        .zip(&proto_labels)
        .map(|(w, &l)| {
            LabeledPoint::new(w, Some(l))
                .map_err(|_| Error::Numeric("a prototype diverged to a non-finite value".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    ReferenceSet::from_generated(points, d.categories().to_vec())
}
