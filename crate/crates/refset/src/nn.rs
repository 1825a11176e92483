//! Nearest-neighbour classification over a reference set, plus the
//! similarity-weighted proportion predictor.
//!
//! Tie rules are part of the contract and hold everywhere:
//! * 1-NN: among the points at minimum distance, the lowest category index
//!   wins, then the lowest reference-point position.
//! * k-NN: the k nearest are taken with distance ties at the k-th rank
//!   resolved by lowest position; majority-vote ties resolve to the lowest
//!   category index.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::{similarity, Metric, SimilarityParams};
use crate::refset::{ProbabilityVector, ReferenceSet};

fn check_compat(s: &ReferenceSet, d: &Dataset) -> Result<()> {
    if s.categories() != d.categories() {
        return Err(Error::InvalidInput(
            "reference set and dataset disagree on the category list".into(),
        ));
    }
    if s.n_features() != d.n_features() {
        return Err(Error::InvalidInput(format!(
            "reference set has {} features, dataset has {}",
            s.n_features(),
            d.n_features()
        )));
    }
    Ok(())
}

/// Predicts the label of `query` by its single nearest reference point.
pub fn classify_1nn(s: &ReferenceSet, metric: &Metric, query: &[f64]) -> Result<usize> {
    // best = (distance, label, position), minimized lexicographically.
    let mut best: Option<(f64, usize, usize)> = None;
    for (pos, p) in s.points().iter().enumerate() {
        let d = metric.distance(p.features(), query)?;
        let key = (d, s.label(pos), pos);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    Ok(best.expect("reference sets are non-empty").1)
}

/// Majority vote among the k nearest reference points over candidate
/// positions `positions` (given in tie-break order). Shared by
/// [`classify_knn`] and the editing rule, which votes over X∖{i}.
pub(crate) fn knn_vote_over(
    s: &ReferenceSet,
    metric: &Metric,
    query: &[f64],
    k: usize,
    positions: impl Iterator<Item = usize>,
) -> Result<usize> {
    // (distance, rank) pairs; rank is the order in which candidates were
    // offered, which is the documented position tie-break.
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for (rank, pos) in positions.enumerate() {
        let d = metric.distance(s.features(pos), query)?;
        scored.push((d, rank, pos));
    }
    if scored.is_empty() {
        return Err(Error::InvalidState("no candidates to vote over".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k > scored.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the {} available reference points",
            scored.len()
        )));
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).expect("distances are finite").then(a.1.cmp(&b.1))
    });
    let mut votes = vec![0usize; s.categories().len()];
    for &(_, _, pos) in scored.iter().take(k) {
        votes[s.label(pos)] += 1;
    }
    let mut winner = 0;
    for (c, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[winner] {
            winner = c;
        }
    }
    Ok(winner)
}

/// Predicts the label of `query` by majority vote among its k nearest
/// reference points. Requires `1 ≤ k ≤ |S|`.
pub fn classify_knn(s: &ReferenceSet, metric: &Metric, query: &[f64], k: usize) -> Result<usize> {
    knn_vote_over(s, metric, query, k, 0..s.len())
}

/// True iff every point of `d` is classified correctly by 1-NN over `s`.
/// All dataset points must be labelled.
pub fn is_consistent(s: &ReferenceSet, d: &Dataset, metric: &Metric) -> Result<bool> {
    Ok(training_accuracy(s, d, metric)? == 1.0)
}

/// Fraction of `d`'s points classified correctly by 1-NN over `s`.
/// All dataset points must be labelled.
pub fn training_accuracy(s: &ReferenceSet, d: &Dataset, metric: &Metric) -> Result<f64> {
    check_compat(s, d)?;
    if !d.is_fully_labeled() {
        return Err(Error::InvalidInput(
            "accuracy is only defined over fully-labelled datasets".into(),
        ));
    }
    let mut correct = 0usize;
    for i in 0..d.len() {
        if classify_1nn(s, metric, d.features(i))? == d.label(i).unwrap() {
            correct += 1;
        }
    }
    Ok(correct as f64 / d.len() as f64)
}

/// Similarity-weighted category proportions for `query`:
/// `P(ωᵢ | q) = Σ_{s ∈ Sᵢ} exp(−γ·d(s, q)) / Σ_{s ∈ S} exp(−γ·d(s, q))`.
///
/// Computed with the minimum distance shifted out (mathematically a no-op,
/// numerically it keeps the denominator well away from zero), so the result
/// is finite for any `γ`.
pub fn predict_proportions(
    s: &ReferenceSet,
    metric: &Metric,
    params: &SimilarityParams,
    query: &[f64],
) -> Result<ProbabilityVector> {
    let mut distances = Vec::with_capacity(s.len());
    let mut d_min = f64::INFINITY;
    for p in s.points() {
        let d = metric.distance(p.features(), query)?;
        d_min = d_min.min(d);
        distances.push(d);
    }
    let mut per_category = vec![0.0f64; s.categories().len()];
    let mut total = 0.0f64;
    for (pos, d) in distances.iter().enumerate() {
        let w = similarity(d - d_min, params);
        per_category[s.label(pos)] += w;
        total += w;
    }
    ProbabilityVector::new(per_category.iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledPoint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(points: &[(&[f64], usize)], categories: &[&str]) -> Dataset {
        let pts = points
            .iter()
            .map(|(f, l)| LabeledPoint::new(f.to_vec(), Some(*l)).unwrap())
            .collect();
        Dataset::new(pts, categories.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn full_refset(d: &Dataset) -> ReferenceSet {
        let idx: Vec<usize> = (0..d.len()).collect();
        ReferenceSet::from_selection(d, &idx).unwrap()
    }

    #[test]
    fn one_nn_picks_nearest() {
        let d = dataset(&[(&[0.0], 0), (&[2.0], 1)], &["A", "B"]);
        let s = full_refset(&d);
        let m = Metric::euclidean();
        assert_eq!(classify_1nn(&s, &m, &[0.9]).unwrap(), 0);
        assert_eq!(classify_1nn(&s, &m, &[1.1]).unwrap(), 1);
    }

    #[test]
    fn one_nn_tie_prefers_lowest_category_then_position() {
        // Query equidistant from a B point (position 0) and an A point
        // (position 1): the lower category index must win.
        let d = dataset(&[(&[1.0], 1), (&[-1.0], 0)], &["A", "B"]);
        let s = full_refset(&d);
        assert_eq!(classify_1nn(&s, &Metric::euclidean(), &[0.0]).unwrap(), 0);

        // Same-category tie: resolved by position, result unchanged.
        let d2 = dataset(&[(&[1.0], 1), (&[-1.0], 1)], &["A", "B"]);
        let s2 = full_refset(&d2);
        assert_eq!(classify_1nn(&s2, &Metric::euclidean(), &[0.0]).unwrap(), 1);
    }

    #[test]
    fn knn_majority_and_ties() {
        let m = Metric::euclidean();
        let d = dataset(&[(&[0.0], 0), (&[1.0], 0), (&[2.0], 1)], &["A", "B"]);
        let s = full_refset(&d);
        assert_eq!(classify_knn(&s, &m, &[0.4], 3).unwrap(), 0);

        // k = 2 with one A and one B among the nearest: label tie → A.
        let d2 = dataset(&[(&[0.0], 0), (&[1.0], 1)], &["A", "B"]);
        let s2 = full_refset(&d2);
        assert_eq!(classify_knn(&s2, &m, &[0.5], 2).unwrap(), 0);

        assert!(classify_knn(&s2, &m, &[0.5], 0).is_err());
        assert!(classify_knn(&s2, &m, &[0.5], 3).is_err());
    }

    #[test]
    fn knn_kth_rank_distance_tie_resolves_by_position() {
        // Query 0: distances are 1 (pos 0, B), 1 (pos 1, A), 1 (pos 2, A).
        // k = 1 keeps position 0 only → B. (1-NN proper would say A.)
        let d = dataset(&[(&[1.0], 1), (&[-1.0], 0), (&[1.0], 0)], &["A", "B"]);
        let s = full_refset(&d);
        assert_eq!(classify_knn(&s, &Metric::euclidean(), &[0.0], 1).unwrap(), 1);
        assert_eq!(classify_1nn(&s, &Metric::euclidean(), &[0.0]).unwrap(), 0);
    }

    #[test]
    fn knn_k1_matches_1nn_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pts: Vec<(Vec<f64>, usize)> = (0..40)
            .map(|_| {
                (
                    vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
                    rng.gen_range(0..3usize),
                )
            })
            .collect();
        let d = Dataset::new(
            pts.iter()
                .map(|(f, l)| LabeledPoint::new(f.clone(), Some(*l)).unwrap())
                .collect(),
            vec!["A".into(), "B".into(), "C".into()],
        )
        .unwrap();
        let s = full_refset(&d);
        let m = Metric::euclidean();
        for _ in 0..1000 {
            let q = vec![rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            assert_eq!(
                classify_knn(&s, &m, &q, 1).unwrap(),
                classify_1nn(&s, &m, &q).unwrap()
            );
        }
    }

    #[test]
    fn one_nn_invariant_under_power_of_two_scaling() {
        // Scaling every coordinate by 4 is exact in binary floating point,
        // so distances scale exactly and all comparisons are preserved.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(Vec<f64>, usize)> = (0..30)
            .map(|_| {
                (
                    vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)],
                    rng.gen_range(0..2usize),
                )
            })
            .collect();
        let build = |scale: f64| {
            let d = Dataset::new(
                pts.iter()
                    .map(|(f, l)| {
                        LabeledPoint::new(f.iter().map(|v| v * scale).collect(), Some(*l))
                            .unwrap()
                    })
                    .collect(),
                vec!["A".into(), "B".into()],
            )
            .unwrap();
            full_refset(&d)
        };
        let (s1, s4) = (build(1.0), build(4.0));
        let m = Metric::euclidean();
        for _ in 0..200 {
            let q = vec![rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let q4: Vec<f64> = q.iter().map(|v| v * 4.0).collect();
            assert_eq!(
                classify_1nn(&s1, &m, &q).unwrap(),
                classify_1nn(&s4, &m, &q4).unwrap()
            );
        }
    }

    #[test]
    fn consistency_and_accuracy() {
        let d = dataset(&[(&[0.0], 0), (&[1.0], 1), (&[2.0], 1)], &["A", "B"]);
        let s = full_refset(&d);
        let m = Metric::euclidean();
        assert!(is_consistent(&s, &d, &m).unwrap());
        assert_eq!(training_accuracy(&s, &d, &m).unwrap(), 1.0);

        // One centroid per class on separable blobs stays consistent.
        let blob = dataset(
            &[
                (&[0.0, 0.1], 0),
                (&[0.1, -0.1], 0),
                (&[-0.1, 0.0], 0),
                (&[5.0, 5.1], 1),
                (&[5.1, 4.9], 1),
                (&[4.9, 5.0], 1),
            ],
            &["A", "B"],
        );
        let centroids = ReferenceSet::from_generated(
            vec![
                LabeledPoint::new(vec![0.0, 0.0], Some(0)).unwrap(),
                LabeledPoint::new(vec![5.0, 5.0], Some(1)).unwrap(),
            ],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        // Independent check: every blob point is nearer to its own centroid.
        for i in 0..blob.len() {
            let d0 = Metric::euclidean().distance(blob.features(i), &[0.0, 0.0]).unwrap();
            let d1 = Metric::euclidean().distance(blob.features(i), &[5.0, 5.0]).unwrap();
            let want = if d0 < d1 { 0 } else { 1 };
            assert_eq!(want, blob.label(i).unwrap());
        }
        assert!(is_consistent(&centroids, &blob, &m).unwrap());

        // A single far-away prototype of the wrong class breaks it.
        let wrong = ReferenceSet::from_generated(
            vec![LabeledPoint::new(vec![0.0, 0.0], Some(1)).unwrap()],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        assert!(!is_consistent(&wrong, &blob, &m).unwrap());
    }

    #[test]
    fn accuracy_requires_matching_categories_and_labels() {
        let d = dataset(&[(&[0.0], 0)], &["A", "B"]);
        let other = dataset(&[(&[0.0], 0)], &["A", "C"]);
        let s = full_refset(&d);
        assert!(training_accuracy(&s, &other, &Metric::euclidean()).is_err());

        let with_gap = Dataset::new(
            vec![
                LabeledPoint::new(vec![0.0], Some(0)).unwrap(),
                LabeledPoint::new(vec![1.0], None).unwrap(),
            ],
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        assert!(training_accuracy(&s, &with_gap, &Metric::euclidean()).is_err());
    }

    #[test]
    fn proportions_logistic_worked_example() {
        // S = {(0)→A, (2)→B}, query (0), γ = 1:
        // P(A) = 1 / (1 + e⁻²) ≈ 0.8807970779778823.
        let d = dataset(&[(&[0.0], 0), (&[2.0], 1)], &["A", "B"]);
        let s = full_refset(&d);
        let p = predict_proportions(
            &s,
            &Metric::euclidean(),
            &SimilarityParams::default(),
            &[0.0],
        )
        .unwrap();
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p.probabilities()[0] - expected).abs() < 1e-12);
        assert!((p.probabilities()[0] - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn proportions_sum_to_one_and_respect_gamma_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(Vec<f64>, usize)> = (0..25)
            .map(|_| {
                (
                    vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                    rng.gen_range(0..3usize),
                )
            })
            .collect();
        let d = Dataset::new(
            pts.iter()
                .map(|(f, l)| LabeledPoint::new(f.clone(), Some(*l)).unwrap())
                .collect(),
            vec!["A".into(), "B".into(), "C".into()],
        )
        .unwrap();
        let s = full_refset(&d);
        let m = Metric::euclidean();
        let sharp = SimilarityParams::new(60.0).unwrap();
        for _ in 0..1000 {
            let q = vec![rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)];
            let p = predict_proportions(&s, &m, &sharp, &q).unwrap();
            let sum: f64 = p.probabilities().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            // With a sharp γ the argmax agrees with the 1-NN label when the
            // nearest neighbour is unique (random queries: always).
            assert_eq!(p.argmax(), classify_1nn(&s, &m, &q).unwrap());
        }
    }

    #[test]
    fn proportions_covary_with_category_permutation() {
        let d = dataset(&[(&[0.0], 0), (&[1.0], 1), (&[1.5], 1)], &["A", "B"]);
        let swapped = dataset(&[(&[0.0], 1), (&[1.0], 0), (&[1.5], 0)], &["B", "A"]);
        let (s1, s2) = (full_refset(&d), full_refset(&swapped));
        let m = Metric::euclidean();
        let g = SimilarityParams::default();
        for q in [[0.2], [0.9], [3.0]] {
            let p1 = predict_proportions(&s1, &m, &g, &q).unwrap();
            let p2 = predict_proportions(&s2, &m, &g, &q).unwrap();
            assert!((p1.probabilities()[0] - p2.probabilities()[1]).abs() < 1e-15);
            assert!((p1.probabilities()[1] - p2.probabilities()[0]).abs() < 1e-15);
        }
    }
}
