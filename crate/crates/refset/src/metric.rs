//! Distances over feature vectors and the similarity transform built on them.

use crate::error::{Error, Result};

/// Distance family. Minkowski generalizes euclidean (`p = 2`); hamming is
/// only defined for 0/1-valued coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    Euclidean,
    Hamming,
    Minkowski { p: f64 },
}

/// A distance function: a [`MetricKind`] plus optional per-dimension
/// non-negative weights (at least one must be positive).
///
/// Weighted forms: euclidean `sqrt(Σ wᵢ(aᵢ−bᵢ)²)`, hamming `Σ wᵢ·[aᵢ≠bᵢ]`,
/// minkowski `(Σ wᵢ|aᵢ−bᵢ|^p)^(1/p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    kind: MetricKind,
    weights: Option<Vec<f64>>,
}

impl Metric {
    pub fn euclidean() -> Self {
        Metric { kind: MetricKind::Euclidean, weights: None }
    }

    pub fn hamming() -> Self {
        Metric { kind: MetricKind::Hamming, weights: None }
    }

    /// Requires `p ≥ 1` (the triangle inequality fails below that).
    pub fn minkowski(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidInput(format!(
                "minkowski exponent must be a finite real ≥ 1, got {p}"
            )));
        }
        Ok(Metric { kind: MetricKind::Minkowski { p }, weights: None })
    }

    /// Attaches per-dimension weights: all finite and non-negative, at
    /// least one strictly positive. Length is checked against the points
    /// at distance time.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("weights must be non-empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidInput(
                "at least one weight must be positive".into(),
            ));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Used by operations that append dimensions (e.g. label augmentation):
    /// any caller weights are extended with `1.0` for each extra dimension.
    pub(crate) fn extended(&self, extra_dims: usize) -> Metric {
        Metric {
            kind: self.kind.clone(),
            weights: self.weights.as_ref().map(|w| {
                let mut w = w.clone();
                w.extend(std::iter::repeat_n(1.0, extra_dims));
                w
            }),
        }
    }

    /// Distance between two points. Errors on dimension mismatch (between
    /// the points, or against the weight vector) and on non-binary
    /// coordinates under hamming.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(w) = &self.weights {
            if w.len() != a.len() {
                return Err(Error::InvalidInput(format!(
                    "weight vector has {} dimensions, points have {}",
                    w.len(),
                    a.len()
                )));
            }
        }
        let weight = |i: usize| self.weights.as_ref().map_or(1.0, |w| w[i]);
        match self.kind {
            MetricKind::Euclidean => {
                let mut sum = 0.0;
                for i in 0..a.len() {
                    let d = a[i] - b[i];
                    sum += weight(i) * d * d;
                }
                Ok(sum.sqrt())
            }
            MetricKind::Hamming => {
                let mut sum = 0.0;
                for i in 0..a.len() {
                    for v in [a[i], b[i]] {
                        if v != 0.0 && v != 1.0 {
                            return Err(Error::InvalidInput(format!(
                                "hamming distance requires 0/1 coordinates, got {v}"
                            )));
                        }
                    }
                    if a[i] != b[i] {
                        sum += weight(i);
                    }
                }
                Ok(sum)
            }
            MetricKind::Minkowski { p } => {
                let mut sum = 0.0;
                for i in 0..a.len() {
                    sum += weight(i) * (a[i] - b[i]).abs().powf(p);
                }
                Ok(sum.powf(1.0 / p))
            }
        }
    }
}

/// Parameters of the exponential similarity transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    gamma: f64,
}

impl SimilarityParams {
    /// Requires a finite sensitivity `gamma > 0`.
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "gamma must be a finite real > 0, got {gamma}"
            )));
        }
        Ok(SimilarityParams { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams { gamma: 1.0 }
    }
}

/// `exp(−γ·d)`: 1 at distance 0, strictly decreasing, always in (0, 1].
pub fn similarity(distance: f64, params: &SimilarityParams) -> f64 {
    assert!(
        distance >= 0.0 && distance.is_finite(),
        "similarity is defined for finite non-negative distances"
    );
    (-params.gamma * distance).exp()
}
