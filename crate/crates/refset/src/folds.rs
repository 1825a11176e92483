//! Seeded train/test splitting shared by the evaluation protocols and the
//! cross-validated subset searches.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Test-index folds for k-fold cross-validation, plus whether the split
/// was stratified.
///
/// * `folds == n` degenerates to leave-one-out: fold i = {i}, no shuffling.
/// * Otherwise indices are shuffled once with the seed and chunked
///   contiguously; when every category has at least `folds` members the
///   shuffle-and-chunk happens per category (stratified) and the per-fold
///   chunks are concatenated in category order.
///
/// Folds are returned with indices ascending; every point lands in exactly
/// one fold and no fold is empty.
pub(crate) fn make_folds(d: &Dataset, folds: usize, seed: u64) -> Result<(Vec<Vec<usize>>, bool)> {
    let n = d.len();
    if folds < 2 && folds != n {
        return Err(Error::InvalidInput(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if folds > n {
        return Err(Error::InvalidInput(format!(
            "{folds} folds exceed the {n} available points"
        )));
    }
    if folds == n {
        return Ok(((0..n).map(|i| vec![i]).collect(), false));
    }
    if !d.is_fully_labeled() {
        return Err(Error::InvalidInput(
            "cross-validation requires a fully-labelled dataset".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_category: Vec<Vec<usize>> = (0..d.category_count())
        .map(|c| d.indices_of_category(c))
        .collect();
    let stratified = per_category.iter().all(|idx| idx.len() >= folds);

    let chunk = |indices: &mut Vec<usize>, rng: &mut ChaCha8Rng| -> Vec<Vec<usize>> {
        indices.shuffle(rng);
        let n = indices.len();
        let base = n / folds;
        let extra = n % folds;
        let mut out = Vec::with_capacity(folds);
        let mut at = 0;
        for f in 0..folds {
            let size = base + usize::from(f < extra);
            out.push(indices[at..at + size].to_vec());
            at += size;
        }
        out
    };

    let mut result: Vec<Vec<usize>> = vec![Vec::new(); folds];
    if stratified {
        for mut indices in per_category {
            for (f, part) in chunk(&mut indices, &mut rng).into_iter().enumerate() {
                result[f].extend(part);
            }
        }
    } else {
        let mut indices: Vec<usize> = (0..n).collect();
        for (f, part) in chunk(&mut indices, &mut rng).into_iter().enumerate() {
            result[f] = part;
        }
    }
    for fold in &mut result {
        fold.sort_unstable();
    }
    if result.iter().any(|f| f.is_empty()) {
        return Err(Error::InvalidState(
            "fold construction produced an empty fold".into(),
        ));
    }
    Ok((result, stratified))
}

/// The complement of `fold` within `0..n`, ascending.
pub(crate) fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut in_fold = vec![false; n];
    for &i in fold {
        in_fold[i] = true;
    }
    (0..n).filter(|&i| !in_fold[i]).collect()
}

/// Seeded holdout split: `(train, test)` index lists, ascending, with
/// `⌊fraction·n⌋` test points. Both sides must end up non-empty.
pub(crate) fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n_test = (fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidInput(format!(
            "holdout of {n} points at fraction {fraction} leaves an empty side"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut test: Vec<usize> = indices[..n_test].to_vec();
    let mut train: Vec<usize> = indices[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}
