//! Category-representation models made executable: each one builds a
//! reference set from training data, so the same evaluation harness can
//! compare exemplar storage, prototype abstraction, incremental clustering
//! schemes, and exhaustive partition search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{labels_required, Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::metric::{similarity, Metric, SimilarityParams};
use crate::par;
use crate::refset::ReferenceSet;
use crate::replacement::{cluster_post_supervised, mean_of, nearest_mean_prototypes, ClusteringParams};
use crate::selection::{exhaustive_select, EditingParams};

/// Largest number of partition combinations enumerated by default.
pub const DEFAULT_VAM_CAP: u64 = 1_000_000;

/// Exemplar storage: every training point becomes a reference point.
pub fn pure_exemplar(d: &Dataset) -> Result<ReferenceSet> {
    labels_required(d)?;
    let all: Vec<usize> = (0..d.len()).collect();
    ReferenceSet::from_selection(d, &all)
}

/// Prototype abstraction: one mean per category. Identical to
/// [`nearest_mean_prototypes`] by construction.
pub fn pure_prototype(d: &Dataset) -> Result<ReferenceSet> {
    nearest_mean_prototypes(d)
}

/// Tuning knobs for the rational-style incremental clustering model.
#[derive(Debug, Clone, PartialEq)]
pub struct RmcParams {
    /// Similarity threshold for joining an existing cluster; a stimulus
    /// whose best similarity falls below it opens a new cluster.
    /// Must lie strictly between 0 and 1.
    pub coupling: f64,
    /// Weight of the one-hot label dimensions appended to each stimulus.
    pub label_weight: f64,
    /// Seed for the presentation order (used only when `shuffle` is set).
    pub seed: u64,
    /// Present stimuli in a seeded random order instead of dataset order.
    pub shuffle: bool,
}

impl Default for RmcParams {
    fn default() -> Self {
        RmcParams {
            coupling: 0.5,
            label_weight: 1.0,
            seed: 0,
            shuffle: false,
        }
    }
}

/// Incremental similarity-threshold clustering over label-augmented
/// stimuli.
///
/// Each stimulus is extended with a one-hot encoding of its label scaled by
/// `label_weight`, then compared to every existing cluster mean with
/// exp(-distance). It joins the most similar cluster (ties to the earliest
/// cluster) when that similarity reaches `coupling`, updating the running
/// mean; otherwise it opens a new cluster. Cluster means projected back to
/// the feature dimensions become the prototypes, labelled by majority (ties
/// to the lowest category index).
pub fn rmc(d: &Dataset, params: &RmcParams, metric: &Metric) -> Result<ReferenceSet> {
    if !params.coupling.is_finite() || params.coupling <= 0.0 || params.coupling >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "coupling must lie strictly between 0 and 1, got {}",
            params.coupling
        )));
    }
    if !params.label_weight.is_finite() || params.label_weight < 0.0 {
        return Err(Error::InvalidInput(format!(
            "label weight must be finite and non-negative, got {}",
            params.label_weight
        )));
    }
    let labels = labels_required(d)?;
    let n_features = d.n_features();
    let n_cats = d.category_count();
    let aug_metric = metric.extended(n_cats);
    let sim_params = SimilarityParams::default();

    let mut order: Vec<usize> = (0..d.len()).collect();
    if params.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        order.shuffle(&mut rng);
    }

    struct Cluster {
        mean: Vec<f64>,
        count: f64,
        label_counts: Vec<usize>,
    }
    let mut clusters: Vec<Cluster> = Vec::new();

    for &i in &order {
        let mut stimulus = d.features(i).to_vec();
        stimulus.extend((0..n_cats).map(|c| {
            if c == labels[i] {
                params.label_weight
            } else {
                0.0
            }
        }));

        let mut best: Option<(f64, usize)> = None;
        for (ci, cl) in clusters.iter().enumerate() {
            let sim = similarity(aug_metric.distance(&cl.mean, &stimulus)?, &sim_params);
            if best.is_none_or(|(bs, _)| sim > bs) {
                best = Some((sim, ci));
            }
        }
        match best {
            Some((sim, ci)) if sim >= params.coupling => {
                let cl = &mut clusters[ci];
                cl.count += 1.0;
                for (m, v) in cl.mean.iter_mut().zip(&stimulus) {
                    *m += (v - *m) / cl.count;
                }
                cl.label_counts[labels[i]] += 1;
            }
            _ => {
                let mut label_counts = vec![0usize; n_cats];
                label_counts[labels[i]] += 1;
                clusters.push(Cluster {
                    mean: stimulus,
                    count: 1.0,
                    label_counts,
                });
            }
        }
    }

    let prototypes = clusters
        .into_iter()
        .map(|cl| {
            let top = *cl.label_counts.iter().max().unwrap();
            let label = cl.label_counts.iter().position(|&c| c == top).unwrap();
            LabeledPoint::new(cl.mean[..n_features].to_vec(), Some(label))
        })
        .collect::<Result<Vec<_>>>()?;
    ReferenceSet::from_generated(prototypes, d.categories().to_vec())
}

/// Representation-by-clusters with labels assigned after the fact: identical
/// to [`cluster_post_supervised`] by construction.
pub fn rex(d: &Dataset, params: &ClusteringParams, metric: &Metric) -> Result<ReferenceSet> {
    cluster_post_supervised(d, params, metric)
}

/// Tuning knobs for the error-driven incremental clustering model.
#[derive(Debug, Clone, PartialEq)]
pub struct SustainParams {
    /// Step size towards a correctly-matched stimulus; must lie in (0, 1].
    pub learning_rate: f64,
    /// Number of passes over the training data.
    pub epochs: usize,
    /// Seed for the per-epoch presentation order.
    pub seed: u64,
}

impl Default for SustainParams {
    fn default() -> Self {
        SustainParams {
            learning_rate: 0.1,
            epochs: 5,
            seed: 0,
        }
    }
}

/// Error-driven incremental clustering: the first stimulus opens a cluster;
/// after that the nearest cluster centre (ties to the earliest cluster)
/// absorbs a same-label stimulus, moving `learning_rate` of the way towards
/// it, while a different-label stimulus opens a new cluster at its own
/// position. Presentation order is reshuffled each epoch from the seed.
pub fn sustain(d: &Dataset, params: &SustainParams, metric: &Metric) -> Result<ReferenceSet> {
    if !params.learning_rate.is_finite()
        || params.learning_rate <= 0.0
        || params.learning_rate > 1.0
    {
        return Err(Error::InvalidInput(format!(
            "learning rate must lie in (0, 1], got {}",
            params.learning_rate
        )));
    }
    if params.epochs == 0 {
        return Err(Error::InvalidInput("at least one epoch is required".into()));
    }
    let labels = labels_required(d)?;

    let mut centres: Vec<Vec<f64>> = Vec::new();
    let mut centre_labels: Vec<usize> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.epochs {
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order {
            let x = d.features(i);
            if centres.is_empty() {
                centres.push(x.to_vec());
                centre_labels.push(labels[i]);
                continue;
            }
            let mut best = (f64::INFINITY, usize::MAX);
            for (ci, c) in centres.iter().enumerate() {
                let dist = metric.distance(c, x)?;
                if (dist, ci) < best {
                    best = (dist, ci);
                }
            }
            if centre_labels[best.1] == labels[i] {
                let c = &mut centres[best.1];
                for (cj, xj) in c.iter_mut().zip(x) {
                    *cj += params.learning_rate * (xj - *cj);
                }
            } else {
                centres.push(x.to_vec());
                centre_labels.push(labels[i]);
            }
        }
    }

    let prototypes = centres
        .into_iter()
        .zip(&centre_labels)
        .map(|(c, &l)| LabeledPoint::new(c, Some(l)))
        .collect::<Result<Vec<_>>>()?;
    ReferenceSet::from_generated(prototypes, d.categories().to_vec())
}

/// Every set partition of `0..m` in restricted-growth-string order: the
/// first entry is the single all-in-one block, the last is all singletons.
/// Blocks are ordered by first occurrence and each block is ascending.
pub(crate) fn set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    assert!(m >= 1);
    let mut rgs = vec![0usize; m];
    let mut out = Vec::new();
    loop {
        let blocks = rgs.iter().copied().max().unwrap() + 1;
        let mut partition = vec![Vec::new(); blocks];
        for (i, &b) in rgs.iter().enumerate() {
            partition[b].push(i);
        }
        out.push(partition);

        // Next restricted growth string in lexicographic order.
        let mut advanced = false;
        for i in (1..m).rev() {
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for tail in &mut rgs[i + 1..m] {
                    *tail = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            return out;
        }
    }
}

/// Number of set partitions of an m-element set, via the Bell triangle.
pub(crate) fn bell_number(m: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 0..m {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(last.checked_add(v).expect("Bell number overflow"));
        }
        row = next;
    }
    row[0]
}

/// One abstraction level from the partition enumeration: a way of grouping
/// each category's members, the prototype set it induces, and its score.
#[derive(Debug, Clone)]
pub struct PartitionRecord {
    /// `blocks[category]` is that category's grouping; each block lists
    /// dataset indices, and every block contributes its mean as a prototype
    /// labelled with the category.
    pub blocks: Vec<Vec<Vec<usize>>>,
    pub refset: ReferenceSet,
    pub score: f64,
}

/// Enumerate every combination of per-category set partitions, from pure
/// prototype (first record) to pure exemplar storage (last record), scoring
/// each induced reference set with `score` (higher is better).
///
/// The enumeration varies the last category fastest. Its size is the
/// product of the per-category Bell numbers; combinations beyond `cap` are
/// refused with [`Error::Capacity`].
pub fn vam_enumerate<F>(d: &Dataset, score: F, cap: u64) -> Result<Vec<PartitionRecord>>
where
    F: Fn(&ReferenceSet) -> Result<f64> + Sync,
{
    labels_required(d)?;
    let n_cats = d.category_count();
    let mut member_indices: Vec<Vec<usize>> = Vec::with_capacity(n_cats);
    let mut total: u128 = 1;
    for c in 0..n_cats {
        let indices = d.indices_of_category(c);
        if indices.is_empty() {
            return Err(Error::InvalidInput(format!(
                "category \"{}\" has no points to partition",
                d.categories()[c]
            )));
        }
        total = total
            .checked_mul(bell_number(indices.len()))
            .ok_or(Error::Capacity {
                required: u128::MAX,
                cap,
            })?;
        member_indices.push(indices);
    }
    if total > u128::from(cap) {
        return Err(Error::Capacity {
            required: total,
            cap,
        });
    }

    // Per-category partitions, remapped from local positions to dataset
    // indices.
    let per_category: Vec<Vec<Vec<Vec<usize>>>> = member_indices
        .iter()
        .map(|indices| {
            set_partitions(indices.len())
                .into_iter()
                .map(|partition| {
                    partition
                        .into_iter()
                        .map(|block| block.into_iter().map(|i| indices[i]).collect())
                        .collect()
                })
                .collect()
        })
        .collect();

    let views: Vec<&[f64]> = (0..d.len()).map(|i| d.features(i)).collect();
    let total = total as usize;
    let mut assembled: Vec<(Vec<Vec<Vec<usize>>>, ReferenceSet)> = Vec::with_capacity(total);
    for e in 0..total {
        let mut rest = e;
        let mut choice = vec![0usize; n_cats];
        for c in (0..n_cats).rev() {
            let radix = per_category[c].len();
            choice[c] = rest % radix;
            rest /= radix;
        }
        let mut blocks = Vec::with_capacity(n_cats);
        let mut prototypes = Vec::new();
        for c in 0..n_cats {
            let partition = &per_category[c][choice[c]];
            for block in partition {
                prototypes.push(LabeledPoint::new(mean_of(&views, block), Some(c))?);
            }
            blocks.push(partition.clone());
        }
        let refset = ReferenceSet::from_generated(prototypes, d.categories().to_vec())?;
        assembled.push((blocks, refset));
    }

    let scores = par::map_range(0, total, |e| score(&assembled[e].1));
    assembled
        .into_iter()
        .zip(scores)
        .map(|((blocks, refset), score)| {
            Ok(PartitionRecord {
                blocks,
                refset,
                score: score?,
            })
        })
        .collect()
}

/// The best record from [`vam_enumerate`]: highest score, ties to fewer
/// total blocks, remaining ties to the earliest enumerated record.
pub fn vam_best<F>(d: &Dataset, score: F, cap: u64) -> Result<PartitionRecord>
where
    F: Fn(&ReferenceSet) -> Result<f64> + Sync,
{
    let records = vam_enumerate(d, score, cap)?;
    let total_blocks =
        |r: &PartitionRecord| -> usize { r.blocks.iter().map(|b| b.len()).sum() };
    let mut best = 0usize;
    for i in 1..records.len() {
        let better = records[i].score > records[best].score
            || (records[i].score == records[best].score
                && total_blocks(&records[i]) < total_blocks(&records[best]));
        if better {
            best = i;
        }
    }
    Ok(records
        .into_iter()
        .nth(best)
        .expect("enumeration is non-empty"))
}

/// The default partition score: how much of the training set the induced
/// prototypes classify correctly by 1-NN.
pub fn vam_training_accuracy_score<'a>(
    d: &'a Dataset,
    metric: &'a Metric,
) -> impl Fn(&ReferenceSet) -> Result<f64> + Sync + 'a {
    move |s: &ReferenceSet| crate::nn::training_accuracy(s, d, metric)
}

/// Accuracy-only exhaustive subset selection: [`exhaustive_select`] with the
/// trade-off weight pinned to 1, so only the cross-validated error counts
/// and smaller subsets win ties.
pub fn rex_leopold_i(
    d: &Dataset,
    metric: &Metric,
    cv_folds: usize,
    seed: u64,
    cap: u64,
) -> Result<ReferenceSet> {
    let params = EditingParams {
        lambda: 1.0,
        t: 1,
        k: 1,
        seed,
        cv_folds,
    };
    exhaustive_select(d, &params, metric, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::training_accuracy;
    use crate::selection::DEFAULT_SUBSET_CAP;

    fn line_dataset(xs: &[f64], labels: &[usize]) -> Dataset {
        let points = xs
            .iter()
            .zip(labels)
            .map(|(&x, &l)| LabeledPoint::new(vec![x], Some(l)).unwrap())
            .collect();
        Dataset::new(points, vec!["A".into(), "B".into()]).unwrap()
    }

    #[test]
    fn exemplar_storage_keeps_everything_in_order() {
        let d = line_dataset(&[0.0, 1.0, 2.0], &[0, 1, 0]);
        let s = pure_exemplar(&d).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.source_indices().unwrap(), &[0, 1, 2]);
        for i in 0..3 {
            assert_eq!(s.features(i), d.features(i));
            assert_eq!(Some(s.label(i)), d.label(i));
        }

        let unlabelled = Dataset::new(
            vec![LabeledPoint::new(vec![0.0], None).unwrap()],
            vec!["A".into()],
        )
        .unwrap();
        assert!(pure_exemplar(&unlabelled).is_err());
    }

    #[test]
    fn prototype_abstraction_equals_nearest_means_exactly() {
        let d = line_dataset(&[0.0, 2.0, 10.0], &[0, 0, 1]);
        assert_eq!(
            pure_prototype(&d).unwrap().to_json_string(),
            nearest_mean_prototypes(&d).unwrap().to_json_string()
        );
    }

    #[test]
    fn cluster_representation_equals_post_supervised_clustering_exactly() {
        let d = line_dataset(&[0.0, 1.0, 10.0, 11.0], &[0, 0, 1, 1]);
        let params = ClusteringParams::with_k(2);
        let metric = Metric::euclidean();
        assert_eq!(
            rex(&d, &params, &metric).unwrap().to_json_string(),
            cluster_post_supervised(&d, &params, &metric)
                .unwrap()
                .to_json_string()
        );
    }

    #[test]
    fn accuracy_only_search_equals_exhaustive_selection_at_lambda_one() {
        let d = line_dataset(&[0.0, 1.0, 5.0, 10.0, 11.0], &[0, 0, 0, 1, 1]);
        let metric = Metric::euclidean();
        let a = rex_leopold_i(&d, &metric, d.len(), 7, DEFAULT_SUBSET_CAP).unwrap();
        let params = EditingParams {
            lambda: 1.0,
            seed: 7,
            cv_folds: d.len(),
            ..EditingParams::default()
        };
        let b = exhaustive_select(&d, &params, &metric, DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn high_coupling_stores_every_distinct_stimulus() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 3.0).collect();
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let d = line_dataset(&xs, &labels);
        let params = RmcParams {
            coupling: 1.0 - 1e-6,
            ..RmcParams::default()
        };
        let s = rmc(&d, &params, &Metric::euclidean()).unwrap();
        assert_eq!(s.len(), 10);
        for i in 0..10 {
            assert_eq!(s.features(i), d.features(i));
            assert_eq!(Some(s.label(i)), d.label(i));
        }
    }

    #[test]
    fn low_coupling_collapses_to_the_global_mean() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 10.0];
        let d = line_dataset(&xs, &[0, 0, 0, 1, 1, 1]);
        let params = RmcParams {
            coupling: 1e-9,
            ..RmcParams::default()
        };
        let s = rmc(&d, &params, &Metric::euclidean()).unwrap();
        assert_eq!(s.len(), 1);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((s.features(0)[0] - mean).abs() < 1e-9);
        assert_eq!(s.label(0), 0); // 3 vs 3 labels: tie goes to category 0
    }

    #[test]
    fn label_weight_separates_coincident_stimuli_with_different_labels() {
        let d = line_dataset(&[5.0, 5.0], &[0, 1]);
        let metric = Metric::euclidean();
        let separated = rmc(
            &d,
            &RmcParams {
                label_weight: 10.0,
                ..RmcParams::default()
            },
            &metric,
        )
        .unwrap();
        assert_eq!(separated.len(), 2);

        let merged = rmc(
            &d,
            &RmcParams {
                label_weight: 0.0,
                ..RmcParams::default()
            },
            &metric,
        )
        .unwrap();
        assert_eq!(merged.len(), 1);
    }

    #[test]
    fn presentation_order_is_seeded_and_optional() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..8).map(|i| i % 2).collect();
        let d = line_dataset(&xs, &labels);
        let metric = Metric::euclidean();
        let shuffled = |seed| RmcParams {
            shuffle: true,
            seed,
            coupling: 0.3,
            ..RmcParams::default()
        };
        assert_eq!(
            rmc(&d, &shuffled(4), &metric).unwrap().to_json_string(),
            rmc(&d, &shuffled(4), &metric).unwrap().to_json_string()
        );
        // Without shuffling the seed is inert.
        let fixed = |seed| RmcParams {
            shuffle: false,
            seed,
            ..RmcParams::default()
        };
        assert_eq!(
            rmc(&d, &fixed(1), &metric).unwrap().to_json_string(),
            rmc(&d, &fixed(2), &metric).unwrap().to_json_string()
        );
    }

    #[test]
    fn rmc_validates_its_parameters() {
        let d = line_dataset(&[0.0], &[0]);
        for coupling in [0.0, 1.0, -0.5, f64::NAN] {
            let params = RmcParams {
                coupling,
                ..RmcParams::default()
            };
            assert!(rmc(&d, &params, &Metric::euclidean()).is_err());
        }
    }

    // Hand-checked trace for the presentation order 0, 1, 2 with rate 0.5:
    // stimulus 0 (x=0, A) opens a cluster; stimulus 1 (x=10, B) mismatches
    // it and opens a second; stimulus 2 (x=1, A) matches the first, which
    // moves to 0 + 0.5 * (1 - 0) = 0.5.
    #[test]
    fn error_driven_clustering_matches_a_hand_trace() {
        let d = line_dataset(&[0.0, 10.0, 1.0], &[0, 1, 0]);
        let seed = (0..)
            .find(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut order = vec![0usize, 1, 2];
                order.shuffle(&mut rng);
                order == [0, 1, 2]
            })
            .unwrap();
        let params = SustainParams {
            learning_rate: 0.5,
            epochs: 1,
            seed,
        };
        let s = sustain(&d, &params, &Metric::euclidean()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s.features(0), s.label(0)), (&[0.5][..], 0));
        assert_eq!((s.features(1), s.label(1)), (&[10.0][..], 1));
    }

    #[test]
    fn single_category_stream_keeps_one_cluster() {
        let points = (0..6)
            .map(|i| LabeledPoint::new(vec![i as f64], Some(0)).unwrap())
            .collect();
        let d = Dataset::new(points, vec!["only".into()]).unwrap();
        for seed in 0..5 {
            let params = SustainParams {
                epochs: 3,
                seed,
                ..SustainParams::default()
            };
            let s = sustain(&d, &params, &Metric::euclidean()).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s.label(0), 0);
        }
    }

    #[test]
    fn partition_enumeration_is_in_refinement_order() {
        let got = set_partitions(3);
        let expected: Vec<Vec<Vec<usize>>> = vec![
            vec![vec![0, 1, 2]],
            vec![vec![0, 1], vec![2]],
            vec![vec![0, 2], vec![1]],
            vec![vec![0], vec![1, 2]],
            vec![vec![0], vec![1], vec![2]],
        ];
        assert_eq!(got, expected);
        for m in 1..=7 {
            assert_eq!(set_partitions(m).len() as u128, bell_number(m));
        }
    }

    #[test]
    fn bell_numbers_match_the_known_sequence() {
        let expected: [u128; 8] = [1, 1, 2, 5, 15, 52, 203, 877];
        for (m, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number(m), b, "m = {m}");
        }
    }

    #[test]
    fn enumeration_spans_prototype_to_exemplar() {
        let d = line_dataset(&[0.0, 1.0, 10.0, 11.0], &[0, 0, 1, 1]);
        let metric = Metric::euclidean();
        let records =
            vam_enumerate(&d, vam_training_accuracy_score(&d, &metric), DEFAULT_VAM_CAP).unwrap();
        assert_eq!(records.len(), 4); // Bell(2) * Bell(2)

        // First record: one block per category, i.e. the category means.
        assert_eq!(
            records[0].refset.to_json_string(),
            nearest_mean_prototypes(&d).unwrap().to_json_string()
        );
        // Last record: all singletons, i.e. the training points themselves.
        let last = records.last().unwrap();
        assert_eq!(last.refset.len(), d.len());
        for (c, blocks) in last.blocks.iter().enumerate() {
            for block in blocks {
                assert_eq!(block.len(), 1);
                assert_eq!(d.label(block[0]), Some(c));
            }
        }
        for r in &records {
            assert!((0.0..=1.0).contains(&r.score));
        }
    }

    // Hand-checked: every merge of two same-category points produces a mean
    // that misclassifies at least one training point, so exemplar storage
    // is the unique accuracy maximiser.
    #[test]
    fn best_partition_is_exemplar_storage_when_all_merges_hurt() {
        let d = line_dataset(&[0.0, 0.4, 1.6, 2.0], &[0, 1, 1, 0]);
        let metric = Metric::euclidean();
        let best = vam_best(&d, vam_training_accuracy_score(&d, &metric), DEFAULT_VAM_CAP).unwrap();
        assert_eq!(best.score, 1.0);
        assert_eq!(best.refset.len(), 4);
        let exemplars = pure_exemplar(&d).unwrap();
        // Same points and labels; provenance differs (generated vs selected),
        // and the enumeration orders prototypes category-major.
        let mut got: Vec<(Vec<u64>, usize)> = (0..4)
            .map(|i| {
                (
                    best.refset.features(i).iter().map(|v| v.to_bits()).collect(),
                    best.refset.label(i),
                )
            })
            .collect();
        let mut want: Vec<(Vec<u64>, usize)> = (0..4)
            .map(|i| {
                (
                    exemplars.features(i).iter().map(|v| v.to_bits()).collect(),
                    exemplars.label(i),
                )
            })
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    // Hand-checked: every abstraction level classifies this dataset
    // perfectly, so the tie-break on fewer blocks must pick the pure
    // prototype record.
    #[test]
    fn score_ties_prefer_fewer_blocks() {
        let points = vec![
            LabeledPoint::new(vec![0.0, 0.0], Some(0)).unwrap(),
            LabeledPoint::new(vec![0.2, 0.0], Some(0)).unwrap(),
            LabeledPoint::new(vec![10.0, 0.0], Some(1)).unwrap(),
            LabeledPoint::new(vec![10.2, 0.0], Some(1)).unwrap(),
        ];
        let d = Dataset::new(points, vec!["A".into(), "B".into()]).unwrap();
        let metric = Metric::euclidean();
        let best = vam_best(&d, vam_training_accuracy_score(&d, &metric), DEFAULT_VAM_CAP).unwrap();
        assert_eq!(best.score, 1.0);
        assert_eq!(
            best.refset.to_json_string(),
            nearest_mean_prototypes(&d).unwrap().to_json_string()
        );
        assert!(training_accuracy(&best.refset, &d, &metric).unwrap() == 1.0);
    }

    #[test]
    fn partition_capacity_is_enforced() {
        // Categories of 5 and 4 members: 52 * 15 = 780 combinations.
        let xs: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let labels = [0, 0, 0, 0, 0, 1, 1, 1, 1];
        let d = line_dataset(&xs, &labels);
        let metric = Metric::euclidean();
        match vam_enumerate(&d, vam_training_accuracy_score(&d, &metric), 700) {
            Err(Error::Capacity { required, cap }) => {
                assert_eq!(required, 780);
                assert_eq!(cap, 700);
            }
            other => panic!("expected a capacity error, got {:?}", other.map(|r| r.len())),
        }
        let records =
            vam_enumerate(&d, vam_training_accuracy_score(&d, &metric), 780).unwrap();
        assert_eq!(records.len(), 780);
    }
}
