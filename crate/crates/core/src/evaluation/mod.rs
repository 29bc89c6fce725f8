//! Angular-error statistics, evaluation runs and run tables.

mod oracle;

pub use oracle::{oracle_mismatch_experiment, OracleExperiment};

pub use crate::illuminant::angular_error;

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundtruth::GroundTruthTable;
use crate::illuminant::Illuminant;
use crate::imaging::Pipeline;
use crate::scalar::{sort_ascending, Scalar};

/// Summary of a set of angular errors, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ErrorStats<T> {
    pub mean: T,
    pub median: T,
    pub trimean: T,
    pub best25_mean: T,
    pub worst25_mean: T,
    pub max: T,
}

/// Linear interpolation between order statistics at position `(n - 1) q`.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = T::of_usize(sorted.len() - 1) * q;
    let lo = pos.floor().to_usize().unwrap_or(0).min(sorted.len() - 1);
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - T::of_usize(lo);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean, median, trimean, best/worst 25 % means and maximum.
///
/// Best and worst 25 % are the means of the `ceil(n / 4)` smallest and largest
/// values. Everything is computed from the sorted sample, so the result does
/// not depend on input order.
pub fn compute_stats<T: Scalar>(errors: &[T]) -> Result<ErrorStats<T>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = errors.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite error value {bad}")));
    }
    let mut s = errors.to_vec();
    sort_ascending(&mut s);
    let n = s.len();
    let q = |p: f64| quantile_sorted(&s, T::of(p));
    let (q1, q2, q3) = (q(0.25), q(0.5), q(0.75));
    let quarter = n.div_ceil(4);
    let mean_of = |v: &[T]| v.iter().copied().sum::<T>() / T::of_usize(v.len());
    Ok(ErrorStats {
        mean: mean_of(&s),
        median: q2,
        trimean: (q1 + T::of(2.0) * q2 + q3) / T::of(4.0),
        best25_mean: mean_of(&s[..quarter]),
        worst25_mean: mean_of(&s[n - quarter..]),
        max: s[n - 1],
    })
}

/// Illuminant estimates keyed by image id (CSV `image_id,R,G,B`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimateSet<T> {
    items: IndexMap<String, Illuminant<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct EstimateRow<T> {
    image_id: String,
    #[serde(rename = "R")]
    r: T,
    #[serde(rename = "G")]
    g: T,
    #[serde(rename = "B")]
    b: T,
}

impl<T: Scalar> EstimateSet<T> {
    pub fn new() -> Self {
        Self { items: IndexMap::new() }
    }

    pub fn insert(&mut self, image_id: impl Into<String>, e: Illuminant<T>) -> Result<()> {
        let id = image_id.into();
        if self.items.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.items.insert(id, e);
        Ok(())
    }

    pub fn get(&self, image_id: &str) -> Option<&Illuminant<T>> {
        self.items.get(image_id)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Illuminant<T>)> {
        self.items.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut set = Self::new();
        for row in reader.deserialize::<EstimateRow<T>>() {
            let row = row.map_err(|e| Error::csv(path, e))?;
            set.insert(row.image_id, Illuminant::new([row.r, row.g, row.b])?)?;
        }
        Ok(set)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for (id, e) in &self.items {
            let [r, g, b] = e.rgb();
            writer
                .serialize(EstimateRow {
                    image_id: id.clone(),
                    r,
                    g,
                    b,
                })
                .map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

impl<T: Scalar> FromIterator<(String, Illuminant<T>)> for EstimateSet<T> {
    fn from_iter<I: IntoIterator<Item = (String, Illuminant<T>)>>(iter: I) -> Self {
        Self {
            items: iter.into_iter().collect(),
        }
    }
}

/// Provenance attached to every run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTags {
    pub estimator: String,
    /// Pipeline the estimates were computed on.
    pub pipeline: Pipeline,
    pub ground_truth_id: String,
    /// Pipeline the ground truth was extracted from, when known.
    #[serde(default)]
    pub ground_truth_pipeline: Option<Pipeline>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvaluationRun<T> {
    pub estimator: String,
    pub pipeline: Pipeline,
    pub ground_truth_id: String,
    #[serde(default)]
    pub ground_truth_pipeline: Option<Pipeline>,
    pub per_image_error: IndexMap<String, T>,
    pub stats: ErrorStats<T>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl<T: Scalar> EvaluationRun<T> {
    /// Recomputes the statistics from the stored per-image errors.
    pub fn recompute_stats(&self) -> Result<ErrorStats<T>> {
        let v: Vec<T> = self.per_image_error.values().copied().collect();
        compute_stats(&v)
    }
}

pub const UNSUBTRACTED_WARNING: &str =
    "METHODOLOGY WARNING: estimates were computed on images whose black level was not subtracted; \
     these errors do not measure the method and must not be compared with runs on black-subtracted images";

pub const MISMATCH_WARNING: &str = "METHODOLOGY WARNING: estimates and ground truth come from different pipelines \
     (black level subtracted for one but not the other); even a perfect estimator shows nonzero error";

/// Scores estimates against ground truth on their shared ids (estimate order).
pub fn evaluate<T: Scalar>(
    estimates: &EstimateSet<T>,
    gt: &GroundTruthTable<T>,
    tags: RunTags,
) -> Result<EvaluationRun<T>> {
    let per_image_error: IndexMap<String, T> = estimates
        .iter()
        .filter_map(|(id, e)| gt.get(id).map(|r| (id.to_string(), e.angle_to(&r.illuminant))))
        .collect();
    if per_image_error.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let values: Vec<T> = per_image_error.values().copied().collect();
    let stats = compute_stats(&values)?;
    let mut warnings = Vec::new();
    if tags.pipeline == Pipeline::Unsubtracted {
        warnings.push(UNSUBTRACTED_WARNING.to_string());
    }
    if tags.ground_truth_pipeline.is_some_and(|p| p != tags.pipeline) {
        warnings.push(MISMATCH_WARNING.to_string());
    }
    Ok(EvaluationRun {
        estimator: tags.estimator,
        pipeline: tags.pipeline,
        ground_truth_id: tags.ground_truth_id,
        ground_truth_pipeline: tags.ground_truth_pipeline,
        per_image_error,
        stats,
        warnings,
    })
}

/// One row of a run table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunRow<T> {
    pub estimator: String,
    pub pipeline: Pipeline,
    pub ground_truth_id: String,
    pub n: usize,
    pub mean: T,
    pub median: T,
    pub trimean: T,
    pub best25_mean: T,
    pub worst25_mean: T,
    pub max: T,
}

/// Lays runs out as one table. Runs scored against different ground truths
/// are refused unless `force_mixed` is set.
pub fn tabulate<T: Scalar>(runs: &[EvaluationRun<T>], force_mixed: bool) -> Result<Vec<RunRow<T>>> {
    let mut ids: Vec<&str> = runs.iter().map(|r| r.ground_truth_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > 1 && !force_mixed {
        return Err(Error::MixedGroundTruth(ids.join(", ")));
    }
    Ok(runs
        .iter()
        .map(|r| RunRow {
            estimator: r.estimator.clone(),
            pipeline: r.pipeline,
            ground_truth_id: r.ground_truth_id.clone(),
            n: r.per_image_error.len(),
            mean: r.stats.mean,
            median: r.stats.median,
            trimean: r.stats.trimean,
            best25_mean: r.stats.best25_mean,
            worst25_mean: r.stats.worst25_mean,
            max: r.stats.max,
        })
        .collect())
}

pub fn write_table_csv<T: Scalar>(rows: &[RunRow<T>], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_run(path: &Path) -> Result<EvaluationRun<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
