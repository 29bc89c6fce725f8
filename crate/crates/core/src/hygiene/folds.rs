//! Cross-validation folds: construction, loading and auditing.
//!
//! Seeded shuffling is bit-exact: SplitMix64 seeded with the user seed, then
//! Fisher-Yates from the last index down, drawing `j = (x * (i + 1)) >> 64`
//! (128-bit product) for each `i` from `n - 1` to `1`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Deserializer, Serialize};

use super::{CheckId, Finding, Severity};
use crate::error::{Error, Result};
use crate::groundtruth::GroundTruthTable;
use crate::scalar::Scalar;

pub const DEFAULT_CENTROID_THRESHOLD: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleMode {
    None,
    Seeded,
    External,
}

impl std::str::FromStr for ShuffleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ShuffleMode::None),
            "seeded" => Ok(ShuffleMode::Seeded),
            "external" => Ok(ShuffleMode::External),
            other => Err(Error::InvalidArgument(format!("unknown fold mode {other:?}"))),
        }
    }
}

/// Fold file ids may be written as strings or numbers.
fn id_lists<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<String>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Text(String),
        Number(serde_json::Number),
    }
    let raw: Vec<Vec<Id>> = Vec::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|fold| {
            fold.into_iter()
                .map(|id| match id {
                    Id::Text(s) => s,
                    Id::Number(n) => n.to_string(),
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub k: usize,
    pub mode: ShuffleMode,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(deserialize_with = "id_lists")]
    pub folds: Vec<Vec<String>>,
}

fn shuffle(ids: &mut [String], seed: u64) {
    let mut rng = SplitMix64::seed_from_u64(seed);
    for i in (1..ids.len()).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        ids.swap(i, j);
    }
}

fn contiguous(ids: Vec<String>, k: usize) -> Vec<Vec<String>> {
    let n = ids.len();
    let mut it = ids.into_iter();
    // The first n % k folds take one extra id.
    (0..k)
        .map(|f| it.by_ref().take(n / k + usize::from(f < n % k)).collect())
        .collect()
}

/// Splits `ids` into `k` folds: contiguous for [`ShuffleMode::None`], after a
/// seeded Fisher-Yates permutation for [`ShuffleMode::Seeded`].
pub fn make_folds(ids: &[String], k: usize, mode: ShuffleMode, seed: u64) -> Result<FoldSpec> {
    if k < 2 || k > ids.len() {
        return Err(Error::InvalidFolds(format!(
            "need 2 <= k <= number of ids ({}), got k = {k}",
            ids.len()
        )));
    }
    let mut unique = HashSet::new();
    if let Some(dup) = ids.iter().find(|id| !unique.insert(id.as_str())) {
        return Err(Error::DuplicateId(dup.clone()));
    }
    let mut order = ids.to_vec();
    let seed = match mode {
        ShuffleMode::None => None,
        ShuffleMode::Seeded => {
            shuffle(&mut order, seed);
            Some(seed)
        }
        ShuffleMode::External => {
            return Err(Error::InvalidFolds(
                "external folds are loaded from a file, not generated".into(),
            ))
        }
    };
    Ok(FoldSpec {
        k,
        mode,
        seed,
        source: None,
        folds: contiguous(order, k),
    })
}

impl FoldSpec {
    /// Checks the folds are disjoint, cover `ids` exactly and, for generated
    /// modes, differ in size by at most one.
    pub fn validate(&self, ids: &[String]) -> Result<()> {
        if self.folds.len() != self.k || self.k < 2 {
            return Err(Error::InvalidFolds(format!(
                "k = {} but {} folds listed",
                self.k,
                self.folds.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in self.folds.iter().flatten() {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidFolds(format!("id {id:?} appears in more than one fold")));
            }
        }
        let expected: HashSet<&str> = ids.iter().map(String::as_str).collect();
        if let Some(extra) = seen.iter().find(|id| !expected.contains(*id)) {
            return Err(Error::InvalidFolds(format!("id {extra:?} is not in the dataset")));
        }
        if let Some(missing) = ids.iter().find(|id| !seen.contains(id.as_str())) {
            return Err(Error::InvalidFolds(format!("id {missing:?} is in no fold")));
        }
        if self.mode != ShuffleMode::External {
            let sizes = self.folds.iter().map(Vec::len);
            let (lo, hi) = (sizes.clone().min().unwrap_or(0), sizes.max().unwrap_or(0));
            if hi - lo > 1 {
                return Err(Error::InvalidFolds(format!("fold sizes range from {lo} to {hi}")));
            }
        }
        Ok(())
    }

    /// Loads a fold file verbatim as an external split and validates it against `ids`.
    pub fn load_external(path: &Path, ids: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: FoldSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        spec.mode = ShuffleMode::External;
        spec.source = Some(path.display().to_string());
        spec.validate(ids)?;
        Ok(spec)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FoldAudit<T> {
    /// Images per camera, per fold.
    pub composition: FoldComposition,
    /// Mean rb chromaticity per fold.
    pub centroids: Vec<[T; 2]>,
    pub max_centroid_distance: T,
    pub findings: Vec<Finding>,
}

/// Camera id -> image count, one map per fold.
pub type FoldComposition = Vec<BTreeMap<String, usize>>;

/// Per-fold camera counts plus a warning for every camera confined to one fold.
pub fn fold_camera_findings<'a>(
    spec: &FoldSpec,
    camera_of: impl Fn(&str) -> Option<&'a str>,
) -> Result<(FoldComposition, Vec<Finding>)> {
    let mut composition = Vec::with_capacity(spec.folds.len());
    for fold in &spec.folds {
        let mut cams = BTreeMap::new();
        for id in fold {
            let cam = camera_of(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            *cams.entry(cam.to_string()).or_insert(0usize) += 1;
        }
        composition.push(cams);
    }
    let mut findings = Vec::new();
    let mut folds_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (f, cams) in composition.iter().enumerate() {
        for cam in cams.keys() {
            folds_of.entry(cam.as_str()).or_default().push(f);
        }
    }
    if composition.len() > 1 {
        for (cam, folds) in &folds_of {
            if let [only] = folds.as_slice() {
                findings.push(
                    Finding::new(
                        CheckId::FoldCamera,
                        Severity::Warn,
                        format!("camera {cam} present only in fold {}", only + 1),
                    )
                    .with("camera_id", cam)
                    .with("fold", only + 1)
                    .with("count", composition[*only][*cam]),
                );
            }
        }
    }
    Ok((composition, findings))
}

/// Camera composition and illuminant-distribution balance of a fold split.
pub fn audit_folds<T: Scalar>(
    spec: &FoldSpec,
    gt: &GroundTruthTable<T>,
    centroid_threshold: T,
) -> Result<FoldAudit<T>> {
    let (composition, mut findings) = fold_camera_findings(spec, |id| gt.get(id).map(|r| r.camera_id.as_str()))?;
    let mut centroids = Vec::with_capacity(spec.folds.len());
    for fold in &spec.folds {
        let mut acc = [T::zero(); 2];
        for id in fold {
            let (r, b) = gt.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?.illuminant.rb();
            acc[0] += r;
            acc[1] += b;
        }
        let n = T::of_usize(fold.len().max(1));
        centroids.push([acc[0] / n, acc[1] / n]);
    }

    let mut max_centroid_distance = T::zero();
    let mut worst_pair = (0, 0);
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let d = ((centroids[i][0] - centroids[j][0]).powi(2) + (centroids[i][1] - centroids[j][1]).powi(2)).sqrt();
            if d > max_centroid_distance {
                max_centroid_distance = d;
                worst_pair = (i + 1, j + 1);
            }
        }
    }
    let centroid_finding = if max_centroid_distance > centroid_threshold {
        Finding::new(
            CheckId::FoldCentroid,
            Severity::Warn,
            format!(
                "illuminant distribution differs between folds {} and {} (rb centroid distance {:.4} > {})",
                worst_pair.0,
                worst_pair.1,
                max_centroid_distance.as_f64(),
                centroid_threshold.as_f64()
            ),
        )
    } else {
        Finding::new(
            CheckId::FoldCentroid,
            Severity::Info,
            format!(
                "fold rb centroids within {:.4} of each other",
                max_centroid_distance.as_f64()
            ),
        )
    };
    findings.push(
        centroid_finding
            .with("max_centroid_distance", max_centroid_distance.as_f64())
            .with("threshold", centroid_threshold.as_f64())
            .with(
                "centroids",
                centroids.iter().map(|c| c.map(T::as_f64)).collect::<Vec<_>>(),
            )
            .with("composition", &composition),
    );

    Ok(FoldAudit {
        composition,
        centroids,
        max_centroid_distance,
        findings,
    })
}

/// Folds that take every camera's images round-robin, so each fold mixes cameras.
/// `items` are `(image_id, camera_id)` pairs in dataset order.
pub fn stratified_folds<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>, k: usize) -> Result<FoldSpec> {
    let mut by_camera: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut unique = HashSet::new();
    let mut n = 0;
    for (id, cam) in items {
        if !unique.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        by_camera.entry(cam).or_default().push(id);
        n += 1;
    }
    if k < 2 || k > n {
        return Err(Error::InvalidFolds(format!("need 2 <= k <= {n}, got {k}")));
    }
    let mut folds = vec![Vec::new(); k];
    for (i, id) in by_camera.values().flatten().enumerate() {
        folds[i % k].push(id.to_string());
    }
    Ok(FoldSpec {
        k,
        mode: ShuffleMode::External,
        seed: None,
        source: Some("stratified by camera".into()),
        folds,
    })
}
