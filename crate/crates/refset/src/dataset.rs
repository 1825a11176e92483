//! Points and labelled datasets.

use crate::error::{Error, Result};

/// A feature vector with an optional category label (index into the owning
/// collection's category list). Unlabelled points model transfer stimuli.
/// Coordinates are validated finite at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    features: Vec<f64>,
    label: Option<usize>,
}

impl LabeledPoint {
    pub fn new(features: Vec<f64>, label: Option<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidInput("points need at least one feature".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "coordinates must be finite (no NaN/infinity)".into(),
            ));
        }
        Ok(LabeledPoint { features, label })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }
}

/// An ordered collection of points over a fixed category list Ω.
///
/// Invariants: at least one point and one category, equal dimensionality
/// everywhere, unique non-empty category names, labels in range. Category
/// order is meaningful — ties throughout the library break toward the
/// lowest category index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<LabeledPoint>,
    n_features: usize,
    categories: Vec<String>,
}

impl Dataset {
    pub fn new(points: Vec<LabeledPoint>, categories: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one point".into()));
        }
        if categories.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one category".into()));
        }
        for (i, name) in categories.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidInput("category names must be non-empty".into()));
            }
            if categories[..i].contains(name) {
                return Err(Error::InvalidInput(format!(
                    "duplicate category name {name:?}"
                )));
            }
        }
        let n_features = points[0].features().len();
        for (i, p) in points.iter().enumerate() {
            if p.features().len() != n_features {
                return Err(Error::InvalidInput(format!(
                    "point {i} has {} features, expected {n_features}",
                    p.features().len()
                )));
            }
            if let Some(l) = p.label() {
                if l >= categories.len() {
                    return Err(Error::InvalidInput(format!(
                        "point {i} has label index {l} but only {} categories exist",
                        categories.len()
                    )));
                }
            }
        }
        Ok(Dataset { points, n_features, categories })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one point
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &LabeledPoint {
        &self.points[i]
    }

    pub fn features(&self, i: usize) -> &[f64] {
        self.points[i].features()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.points[i].label()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.points.iter().all(|p| p.label().is_some())
    }

    /// Indices of the points carrying `label`.
    pub fn indices_of_category(&self, label: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.label(i) == Some(label)).collect()
    }

    /// A new dataset holding the points at `indices` (in the given order),
    /// with the full category list preserved so label indices stay stable.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("subset needs at least one index".into()));
        }
        let mut points = Vec::with_capacity(indices.len());
        for &i in indices {
            let p = self.points.get(i).ok_or_else(|| {
                Error::InvalidInput(format!("index {i} out of range ({} points)", self.len()))
            })?;
            points.push(p.clone());
        }
        Dataset::new(points, self.categories.clone())
    }
}

/// All labels as category indices, erroring on the first unlabelled point.
pub(crate) fn labels_required(d: &Dataset) -> Result<Vec<usize>> {
    d.points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.label().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "point {i} has no label; this operation needs a fully-labelled dataset"
                ))
            })
        })
        .collect()
}
