//! Reference sets — the deliverable of every selection / generation method —
//! plus their canonical JSON form.

use crate::dataset::{Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::util::{format_f64, json_escape};

const FORMAT_VERSION: u64 = 1;

/// How a reference set was produced: `Selected` points are copies of
/// dataset points (with their indices recorded), `Generated` points are
/// synthesized prototypes, `Mixed` covers anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Selected,
    Generated,
    Mixed,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::Selected => "selected",
            Provenance::Generated => "generated",
            Provenance::Mixed => "mixed",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "selected" => Some(Provenance::Selected),
            "generated" => Some(Provenance::Generated),
            "mixed" => Some(Provenance::Mixed),
            _ => None,
        }
    }
}

/// A non-empty, fully-labelled set of reference points used by the
/// classifiers in [`crate::nn`]. Carries the category list of the dataset
/// it speaks for and, when provenance is `Selected`, the source indices.
///
/// Serialization is canonical: fixed key order, floats at 17 significant
/// digits, no whitespace — equal sets serialize byte-identically and the
/// text round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    points: Vec<LabeledPoint>,
    n_features: usize,
    categories: Vec<String>,
    provenance: Provenance,
    source_indices: Option<Vec<usize>>,
}

impl ReferenceSet {
    /// Builds a `Selected` set from dataset points at `indices` (kept in
    /// the given order). Every chosen point must be labelled.
    pub fn from_selection(dataset: &Dataset, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidState("reference set must be non-empty".into()));
        }
        let mut points = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= dataset.len() {
                return Err(Error::InvalidInput(format!(
                    "source index {i} out of range ({} points)",
                    dataset.len()
                )));
            }
            let p = dataset.point(i);
            if p.label().is_none() {
                return Err(Error::InvalidInput(format!(
                    "point {i} is unlabelled and cannot join a reference set"
                )));
            }
            points.push(p.clone());
        }
        Ok(ReferenceSet {
            points,
            n_features: dataset.n_features(),
            categories: dataset.categories().to_vec(),
            provenance: Provenance::Selected,
            source_indices: Some(indices.to_vec()),
        })
    }

    /// Builds a `Generated` set from synthesized prototypes.
    pub fn from_generated(points: Vec<LabeledPoint>, categories: Vec<String>) -> Result<Self> {
        Self::assemble(points, categories, Provenance::Generated, None)
    }

    fn assemble(
        points: Vec<LabeledPoint>,
        categories: Vec<String>,
        provenance: Provenance,
        source_indices: Option<Vec<usize>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidState("reference set must be non-empty".into()));
        }
        if categories.is_empty() {
            return Err(Error::InvalidInput("category list must be non-empty".into()));
        }
        let n_features = points[0].features().len();
        for (i, p) in points.iter().enumerate() {
            if p.features().len() != n_features {
                return Err(Error::InvalidInput(format!(
                    "reference point {i} has {} features, expected {n_features}",
                    p.features().len()
                )));
            }
            match p.label() {
                None => {
                    return Err(Error::InvalidInput(format!(
                        "reference point {i} is unlabelled"
                    )))
                }
                Some(l) if l >= categories.len() => {
                    return Err(Error::InvalidInput(format!(
                        "reference point {i} has label index {l} but only {} categories exist",
                        categories.len()
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(src) = &source_indices {
            if src.len() != points.len() {
                return Err(Error::InvalidInput(
                    "source_indices length must match point count".into(),
                ));
            }
        }
        Ok(ReferenceSet { points, n_features, categories, provenance, source_indices })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: non-empty
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn features(&self, i: usize) -> &[f64] {
        self.points[i].features()
    }

    /// Label of reference point `i` (always present).
    pub fn label(&self, i: usize) -> usize {
        self.points[i].label().expect("reference points are labelled")
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn source_indices(&self) -> Option<&[usize]> {
        self.source_indices.as_deref()
    }

    /// Canonical JSON: `{"version":…,"provenance":…,"n_features":…,`
    /// `"categories":[…],"points":[{"features":[…],"label":…},…],`
    /// `"source_indices":[…]}` with `source_indices` omitted when absent.
    pub fn to_json_string(&self) -> String {
        let mut out = String::with_capacity(64 + self.points.len() * 32);
        out.push_str("{\"version\":");
        out.push_str(&FORMAT_VERSION.to_string());
        out.push_str(",\"provenance\":");
        out.push_str(&json_escape(self.provenance.as_str()));
        out.push_str(",\"n_features\":");
        out.push_str(&self.n_features.to_string());
        out.push_str(",\"categories\":[");
        for (i, c) in self.categories.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&json_escape(c));
        }
        out.push_str("],\"points\":[");
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"features\":[");
            for (j, v) in p.features().iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format_f64(*v));
            }
            out.push_str("],\"label\":");
            out.push_str(&self.label(i).to_string());
            out.push('}');
        }
        out.push(']');
        if let Some(src) = &self.source_indices {
            out.push_str(",\"source_indices\":[");
            for (i, s) in src.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&s.to_string());
            }
            out.push(']');
        }
        out.push('}');
        out
    }

    /// Parses (strictly validating) the JSON form. Accepts any JSON
    /// formatting; re-serializing yields the canonical text.
    pub fn from_json_str(s: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct PointRepr {
            features: Vec<f64>,
            label: usize,
        }
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            version: u64,
            provenance: String,
            n_features: usize,
            categories: Vec<String>,
            points: Vec<PointRepr>,
            #[serde(default)]
            source_indices: Option<Vec<usize>>,
        }
        let repr: Repr = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if repr.version != FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported reference-set format version {}",
                repr.version
            )));
        }
        let provenance = Provenance::parse(&repr.provenance).ok_or_else(|| {
            Error::InvalidInput(format!("unknown provenance {:?}", repr.provenance))
        })?;
        let mut points = Vec::with_capacity(repr.points.len());
        for p in repr.points {
            if p.features.len() != repr.n_features {
                return Err(Error::InvalidInput(format!(
                    "point has {} features, header says {}",
                    p.features.len(),
                    repr.n_features
                )));
            }
            points.push(LabeledPoint::new(p.features, Some(p.label))?);
        }
        Self::assemble(points, repr.categories, provenance, repr.source_indices)
    }
}

/// A distribution over the categories of a reference set: entries in
/// [0, 1] summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidInput("probability vector must be non-empty".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidInput(
                "probabilities must be finite and within [0, 1]".into(),
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(ProbabilityVector(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Index of the most probable category; ties break low.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate().skip(1) {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }
}
