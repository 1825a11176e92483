//! Dataset construction and file formats: the binary 5–4 category
//! structure, seeded gaussian blobs with label noise, dataset CSV I/O, and
//! observed-proportion tables.

use std::io::Read;
use std::path::Path;

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::util::format_f64;

/// The 5–4 category structure: 9 labelled binary training stimuli over 4
/// features (5 in category A, 4 in B) plus the remaining 7 distinct
/// vectors as unlabelled transfer stimuli.
#[derive(Debug, Clone)]
pub struct FiveFourStructure {
    pub training: Dataset,
    pub transfer: Vec<LabeledPoint>,
}

impl FiveFourStructure {
    /// Training and transfer stimuli in one dataset (training first),
    /// transfer rows unlabelled.
    pub fn combined(&self) -> Dataset {
        let mut points = self.training.points().to_vec();
        points.extend(self.transfer.iter().cloned());
        Dataset::new(points, self.training.categories().to_vec())
            .expect("structure invariants guarantee a valid dataset")
    }
}

/// The structure's stimuli as 4-bit integers (feature j = bit 3−j).
///
/// Found once by exhaustive search over all assignments of the 16 distinct
/// vectors (A-sets then B-sets, lexicographic), under: per-feature strict
/// majority of 1 across A; per-feature mode includes 0 across B; exactly
/// one A-stimulus with exactly two 0-features; exactly two B-stimuli with
/// exactly two 1-features. Requiring a *strict* 0-majority for B is
/// provably infeasible — the two two-one B-stimuli already use the four
/// ones the per-feature bound allows, which would force two copies of
/// 0000 — so the B constraint is the tie-admitting form. The search is
/// kept as a test oracle; these constants are its first solution.
pub(crate) const FIVE_FOUR_A: [u8; 5] = [0b0000, 0b0011, 0b1101, 0b1110, 0b1111];
pub(crate) const FIVE_FOUR_B: [u8; 4] = [0b0001, 0b0010, 0b0101, 0b0110];
pub(crate) const FIVE_FOUR_TRANSFER: [u8; 7] =
    [0b0100, 0b0111, 0b1000, 0b1001, 0b1010, 0b1011, 0b1100];

pub(crate) fn bits_to_features(v: u8) -> Vec<f64> {
    (0..4).map(|j| ((v >> (3 - j)) & 1) as f64).collect()
}

/// Builds the 5–4 structure (see [`FIVE_FOUR_A`] for how the instance was
/// derived). Deterministic: no randomness involved.
pub fn gen_5_4() -> FiveFourStructure {
    let mut points = Vec::with_capacity(9);
    for v in FIVE_FOUR_A {
        points.push(LabeledPoint::new(bits_to_features(v), Some(0)).unwrap());
    }
    for v in FIVE_FOUR_B {
        points.push(LabeledPoint::new(bits_to_features(v), Some(1)).unwrap());
    }
    let training = Dataset::new(points, vec!["A".into(), "B".into()]).unwrap();
    let transfer = FIVE_FOUR_TRANSFER
        .iter()
        .map(|&v| LabeledPoint::new(bits_to_features(v), None).unwrap())
        .collect();
    FiveFourStructure { training, transfer }
}

fn default_category_names(c: usize) -> Vec<String> {
    (0..c)
        .map(|i| {
            if i < 26 {
                char::from(b'A' + i as u8).to_string()
            } else {
                format!("cat{i}")
            }
        })
        .collect()
}

/// Samples spherical gaussian blobs, one per category, then flips the
/// labels of `⌊noise_rate·N⌋` points (chosen uniformly without
/// replacement) to a uniformly random *other* category.
///
/// Points are emitted category by category in the given order; the second
/// element of the return value lists the flipped indices (ascending).
/// Deterministic for a fixed seed.
pub fn gen_gaussian(
    counts: &[usize],
    means: &[Vec<f64>],
    sigmas: &[f64],
    noise_rate: f64,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    let c = counts.len();
    if c == 0 || means.len() != c || sigmas.len() != c {
        return Err(Error::InvalidInput(
            "counts, means and sigmas must describe the same categories".into(),
        ));
    }
    let n_features = means[0].len();
    if n_features == 0 {
        return Err(Error::InvalidInput("means need at least one dimension".into()));
    }
    for m in means {
        if m.len() != n_features || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "means must be finite and share one dimensionality".into(),
            ));
        }
    }
    if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidInput("sigmas must be finite and non-negative".into()));
    }
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(Error::InvalidInput(format!(
            "noise_rate must lie in [0, 1), got {noise_rate}"
        )));
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidInput("at least one point is required".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut points = Vec::with_capacity(n);
    for (cat, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let features: Vec<f64> = (0..n_features)
                .map(|dim| {
                    let z: f64 = normal.sample(&mut rng);
                    means[cat][dim] + sigmas[cat] * z
                })
                .collect();
            points.push(LabeledPoint::new(features, Some(cat))?);
        }
    }

    let n_flips = (noise_rate * n as f64).floor() as usize;
    let mut flipped: Vec<usize> = if n_flips > 0 {
        if c < 2 {
            return Err(Error::InvalidInput(
                "label noise requires at least two categories".into(),
            ));
        }
        rand::seq::index::sample(&mut rng, n, n_flips).into_vec()
    } else {
        Vec::new()
    };
    flipped.sort_unstable();
    for &i in &flipped {
        let old = points[i].label().unwrap();
        let mut new = rng.gen_range(0..c - 1);
        if new >= old {
            new += 1;
        }
        points[i] = LabeledPoint::new(points[i].features().to_vec(), Some(new))?;
    }

    let dataset = Dataset::new(points, default_category_names(c))?;
    Ok((dataset, flipped))
}

// ---------------------------------------------------------------------------
// Dataset CSV: n feature columns then a final column named exactly "label".
// An empty label cell marks an unlabelled (transfer) stimulus. Categories
// are ordered by first appearance. Floats are written with 17 significant
// digits, so save → load is bit-exact.
// ---------------------------------------------------------------------------

/// Renders a dataset as CSV text (feature columns named `f0..`, final
/// column `label`).
pub fn dataset_to_csv_string(d: &Dataset) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header: Vec<String> = (0..d.n_features()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).expect("writing to memory cannot fail");
    for p in d.points() {
        let mut row: Vec<String> = p.features().iter().map(|v| format_f64(*v)).collect();
        row.push(match p.label() {
            Some(l) => d.categories()[l].clone(),
            None => String::new(),
        });
        w.write_record(&row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("flush to memory cannot fail"))
        .expect("csv output is UTF-8")
}

/// Writes [`dataset_to_csv_string`] to a file.
pub fn save_csv(d: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_csv_string(d))?;
    Ok(())
}

fn csv_error_line(e: &csv::Error) -> usize {
    e.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Parses dataset CSV text (see the module notes for the format).
pub fn parse_csv_str(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "expected at least one feature column plus a label column".into(),
        });
    }
    let last = headers.len() - 1;
    if &headers[last] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: format!("final column must be named \"label\", got {:?}", &headers[last]),
        });
    }

    let mut categories: Vec<String> = Vec::new();
    let mut points: Vec<LabeledPoint> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: csv_error_line(&e),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        let mut features = Vec::with_capacity(last);
        for j in 0..last {
            let raw = &record[j];
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: {:?} is not a number", &headers[j], raw),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {:?}: non-finite value {raw:?}", &headers[j]),
                });
            }
            features.push(v);
        }
        let label_raw = &record[last];
        let label = if label_raw.is_empty() {
            None
        } else {
            let idx = match categories.iter().position(|c| c == label_raw) {
                Some(i) => i,
                None => {
                    categories.push(label_raw.to_string());
                    categories.len() - 1
                }
            };
            Some(idx)
        };
        points.push(LabeledPoint::new(features, label).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    if points.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    if categories.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "every row is unlabelled; at least one category is required".into(),
        });
    }
    Dataset::new(points, categories)
        .map_err(|e| Error::Parse { line: 0, message: e.to_string() })
}

/// Loads a dataset from a CSV file.
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_csv_str(&text)
}

// ---------------------------------------------------------------------------
// Proportion tables: per-stimulus observed category counts.
// ---------------------------------------------------------------------------

/// One stimulus with its observed per-category counts, their total M, and
/// the derived proportions Q (counts / M).
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionRow {
    stimulus: Vec<f64>,
    counts: Vec<f64>,
    total: f64,
    proportions: Vec<f64>,
}

impl ProportionRow {
    pub fn stimulus(&self) -> &[f64] {
        &self.stimulus
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }
}

/// Observed categorisation proportions for a list of stimuli. Loaded from
/// CSV the counts are non-negative integers; built in memory via
/// [`ProportionsTable::from_proportions`] they may be fractional (total 1)
/// so a table can carry exact model predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionsTable {
    rows: Vec<ProportionRow>,
    categories: Vec<String>,
    n_features: usize,
}

impl ProportionsTable {
    fn assemble(
        stimuli: Vec<Vec<f64>>,
        counts: Vec<Vec<f64>>,
        categories: Vec<String>,
        strict_m: bool,
    ) -> Result<Self> {
        if categories.is_empty() {
            return Err(Error::InvalidInput("at least one category column required".into()));
        }
        if stimuli.is_empty() || stimuli.len() != counts.len() {
            return Err(Error::InvalidInput(
                "stimuli and counts must be non-empty and aligned".into(),
            ));
        }
        let n_features = stimuli[0].len();
        let mut rows = Vec::with_capacity(stimuli.len());
        let mut first_total: Option<f64> = None;
        for (stimulus, row_counts) in stimuli.into_iter().zip(counts) {
            if stimulus.len() != n_features || stimulus.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(
                    "stimuli must be finite and share one dimensionality".into(),
                ));
            }
            if row_counts.len() != categories.len() {
                return Err(Error::InvalidInput(
                    "each row needs one count per category".into(),
                ));
            }
            if row_counts.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput(
                    "counts must be finite and non-negative".into(),
                ));
            }
            let total: f64 = row_counts.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidInput(
                    "every row needs a positive count total".into(),
                ));
            }
            if strict_m {
                match first_total {
                    None => first_total = Some(total),
                    Some(t) if t != total => {
                        return Err(Error::InvalidInput(format!(
                            "strict-M: row totals differ ({t} vs {total})"
                        )))
                    }
                    Some(_) => {}
                }
            }
            let proportions: Vec<f64> = row_counts.iter().map(|c| c / total).collect();
            rows.push(ProportionRow { stimulus, counts: row_counts, total, proportions });
        }
        Ok(ProportionsTable { rows, categories, n_features })
    }

    /// Builds a table from integer counts.
    pub fn from_counts(
        stimuli: Vec<Vec<f64>>,
        counts: Vec<Vec<u64>>,
        categories: Vec<String>,
        strict_m: bool,
    ) -> Result<Self> {
        let counts = counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64).collect())
            .collect();
        Self::assemble(stimuli, counts, categories, strict_m)
    }

    /// Builds a table whose proportions are exactly the given values
    /// (each row must sum to 1 within 1e-9; stored totals are 1).
    pub fn from_proportions(
        stimuli: Vec<Vec<f64>>,
        proportions: Vec<Vec<f64>>,
        categories: Vec<String>,
    ) -> Result<Self> {
        for row in &proportions {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "proportions must sum to 1 within 1e-9, got {sum}"
                )));
            }
        }
        let table = Self::assemble(stimuli, proportions, categories, false)?;
        // Store Q verbatim rather than re-dividing by the total, so model
        // predictions survive bit-exactly.
        let rows = table
            .rows
            .into_iter()
            .map(|r| ProportionRow {
                proportions: r.counts.clone(),
                total: 1.0,
                ..r
            })
            .collect();
        Ok(ProportionsTable { rows, ..table })
    }

    pub fn rows(&self) -> &[ProportionRow] {
        &self.rows
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Parses a proportions CSV: feature columns first, then one column per
/// category named `count:<category>`. Counts must be non-negative
/// integers; with `strict_m` every row must total the same M.
pub fn parse_proportions_str(text: &str, strict_m: bool) -> Result<ProportionsTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let first_count = headers
        .iter()
        .position(|h| h.starts_with("count:"))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "no count columns (headers prefixed \"count:\") found".into(),
        })?;
    if first_count == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "at least one feature column must precede the count columns".into(),
        });
    }
    let mut categories = Vec::new();
    for (j, h) in headers.iter().enumerate().skip(first_count) {
        match h.strip_prefix("count:") {
            Some(name) if !name.is_empty() => categories.push(name.to_string()),
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "column {j} ({h:?}): count columns must trail the feature columns"
                    ),
                })
            }
        }
    }

    let mut stimuli = Vec::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: csv_error_line(&e),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            });
        }
        let mut stimulus = Vec::with_capacity(first_count);
        for j in 0..first_count {
            let v: f64 = record[j].parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {:?}: {:?} is not a number", &headers[j], &record[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column {:?}: non-finite value", &headers[j]),
                });
            }
            stimulus.push(v);
        }
        let mut row_counts = Vec::with_capacity(categories.len());
        for j in first_count..headers.len() {
            let c: u64 = record[j].parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column {:?}: {:?} is not a non-negative integer",
                    &headers[j], &record[j]
                ),
            })?;
            row_counts.push(c);
        }
        stimuli.push(stimulus);
        counts.push(row_counts);
    }
    if stimuli.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    ProportionsTable::from_counts(stimuli, counts, categories, strict_m)
}

/// Loads a proportions table from a CSV file.
pub fn load_proportions(path: &Path, strict_m: bool) -> Result<ProportionsTable> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    parse_proportions_str(&text, strict_m)
}
