//! Ground truth from annotated achromatic chart patches, ground-truth tables
//! and the per-image comparison of two tables.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{compute_stats, quantile_sorted, ErrorStats};
use crate::geometry::Quad;
use crate::illuminant::Illuminant;
use crate::imaging::{BlackLevelPolicy, LinearImage, SaturationMask};
use crate::scalar::{sort_ascending, Scalar};

pub const DEFAULT_INSET: f64 = 0.15;

fn default_inset<T: Scalar>() -> T {
    T::of(DEFAULT_INSET)
}

/// Achromatic patches of one image, brightest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PatchAnnotation<T> {
    pub image_id: String,
    pub patches: Vec<Quad<T>>,
    #[serde(default = "default_inset")]
    pub inset: T,
}

impl<T: Scalar> PatchAnnotation<T> {
    pub fn new(image_id: impl Into<String>, patches: Vec<Quad<T>>, inset: T) -> Result<Self> {
        let ann = Self {
            image_id: image_id.into(),
            patches,
            inset,
        };
        ann.validate()?;
        Ok(ann)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patches.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "annotation {} has no patches",
                self.image_id
            )));
        }
        if !(self.inset >= T::zero() && self.inset < T::of(0.5)) {
            return Err(Error::InvalidArgument(format!("inset {} outside [0, 0.5)", self.inset)));
        }
        Ok(())
    }

    /// Keeps only the patches at `indices` (in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let patches = indices
            .iter()
            .map(|i| {
                self.patches.get(*i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "patch index {i} out of range for {} ({} patches)",
                        self.image_id,
                        self.patches.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.image_id.clone(), patches, self.inset)
    }
}

pub fn read_annotations<T: Scalar>(path: &Path) -> Result<Vec<PatchAnnotation<T>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let anns: Vec<PatchAnnotation<T>> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    for a in &anns {
        a.validate()?;
    }
    Ok(anns)
}

pub fn write_annotations<T: Scalar>(anns: &[PatchAnnotation<T>], path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(anns).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Outcome for every patch of one extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchExtraction<T> {
    /// Mean RGB of each patch's inset interior.
    pub means: Vec<[T; 3]>,
    /// Whether each patch contained a clipped pixel (and was discarded).
    pub clipped: Vec<bool>,
    pub illuminant: Illuminant<T>,
}

/// Samples every patch and averages the means of the unclipped ones.
pub fn extract_patches<T: Scalar>(
    img: &LinearImage<T>,
    ann: &PatchAnnotation<T>,
    mask: &SaturationMask,
    policy: BlackLevelPolicy,
) -> Result<PatchExtraction<T>> {
    policy.check(img, "ground-truth extraction")?;
    mask.check_dims(img)?;
    ann.validate()?;
    let (w, h) = (img.width(), img.height());
    let mut means = Vec::with_capacity(ann.patches.len());
    let mut clipped = Vec::with_capacity(ann.patches.len());
    for (index, quad) in ann.patches.iter().enumerate() {
        if !quad.within(w, h) {
            return Err(Error::OutOfBounds {
                image_id: ann.image_id.clone(),
                index,
                width: w,
                height: h,
            });
        }
        let pixels = quad.inset(ann.inset).pixels(w, h);
        if pixels.is_empty() {
            return Err(Error::EmptyRegion {
                image_id: ann.image_id.clone(),
                index,
            });
        }
        clipped.push(pixels.iter().any(|&(x, y)| mask.is_flagged(x, y)));
        means.push(img.mean_over(&pixels));
    }
    let kept: Vec<&[T; 3]> = means
        .iter()
        .zip(&clipped)
        .filter(|(_, c)| !**c)
        .map(|(m, _)| m)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoUsablePatch);
    }
    let n = T::of_usize(kept.len());
    let mut acc = [T::zero(); 3];
    for m in &kept {
        for c in 0..3 {
            acc[c] += m[c];
        }
    }
    let illuminant = Illuminant::new(acc.map(|v| v / n))?;
    Ok(PatchExtraction {
        means,
        clipped,
        illuminant,
    })
}

/// Ground-truth illuminant of one image from its achromatic patches.
pub fn extract_ground_truth<T: Scalar>(
    img: &LinearImage<T>,
    ann: &PatchAnnotation<T>,
    mask: &SaturationMask,
    policy: BlackLevelPolicy,
) -> Result<Illuminant<T>> {
    extract_patches(img, ann, mask, policy).map(|e| e.illuminant)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GroundTruthRecord<T> {
    pub illuminant: Illuminant<T>,
    pub camera_id: String,
}

/// Per-image illuminants keyed by image id, in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GroundTruthTable<T> {
    records: IndexMap<String, GroundTruthRecord<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct GtRow<T> {
    image_id: String,
    #[serde(rename = "R")]
    r: T,
    #[serde(rename = "G")]
    g: T,
    #[serde(rename = "B")]
    b: T,
    camera_id: String,
}

impl<T: Scalar> GroundTruthTable<T> {
    pub fn new() -> Self {
        Self {
            records: IndexMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        image_id: impl Into<String>,
        illuminant: Illuminant<T>,
        camera_id: impl Into<String>,
    ) -> Result<()> {
        let id = image_id.into();
        if self.records.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.records.insert(
            id,
            GroundTruthRecord {
                illuminant,
                camera_id: camera_id.into(),
            },
        );
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&GroundTruthRecord<T>> {
        self.records.get(image_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GroundTruthRecord<T>)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Reads `image_id,R,G,B,camera_id`; triples are normalised on load.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut table = Self::new();
        for row in reader.deserialize::<GtRow<T>>() {
            let row = row.map_err(|e| Error::csv(path, e))?;
            table.insert(row.image_id, Illuminant::new([row.r, row.g, row.b])?, row.camera_id)?;
        }
        Ok(table)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for (id, rec) in &self.records {
            let [r, g, b] = rec.illuminant.rgb();
            writer
                .serialize(GtRow {
                    image_id: id.clone(),
                    r,
                    g,
                    b,
                    camera_id: rec.camera_id.clone(),
                })
                .map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

impl<T: Scalar> FromIterator<(String, GroundTruthRecord<T>)> for GroundTruthTable<T> {
    /// Later duplicates replace earlier ones.
    fn from_iter<I: IntoIterator<Item = (String, GroundTruthRecord<T>)>>(iter: I) -> Self {
        Self {
            records: iter.into_iter().collect(),
        }
    }
}

/// Per-image angular differences between two ground-truth versions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct GroundTruthDiff<T> {
    pub per_image_angle: IndexMap<String, T>,
    pub stats: ErrorStats<T>,
    /// 75th percentile: the boundary of the 25 % largest differences.
    pub p75: T,
    pub max: T,
}

/// Compares the tables on their shared ids (in `a`'s order).
pub fn diff_ground_truths<T: Scalar>(a: &GroundTruthTable<T>, b: &GroundTruthTable<T>) -> Result<GroundTruthDiff<T>> {
    let per_image_angle: IndexMap<String, T> = a
        .iter()
        .filter_map(|(id, ra)| {
            b.get(id)
                .map(|rb| (id.to_string(), ra.illuminant.angle_to(&rb.illuminant)))
        })
        .collect();
    if per_image_angle.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let values: Vec<T> = per_image_angle.values().copied().collect();
    let stats = compute_stats(&values)?;
    let mut sorted = values;
    sort_ascending(&mut sorted);
    Ok(GroundTruthDiff {
        p75: quantile_sorted(&sorted, T::of(0.75)),
        max: stats.max,
        per_image_angle,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{saturation_mask, ClipMargin, ImageMeta};

    fn two_patch_image(a: [f64; 3], b: [f64; 3], subtracted: bool) -> LinearImage<f64> {
        let (w, h) = (20, 10);
        let mut data = Vec::with_capacity(w * h * 3);
        for _y in 0..h {
            for x in 0..w {
                data.extend_from_slice(if x < 10 { &a } else { &b });
            }
        }
        let meta = ImageMeta {
            black_level: [0.0; 3],
            saturation_level: [1000.0; 3],
            camera_id: "c".into(),
            black_subtracted: subtracted,
        };
        LinearImage::new(w, h, data, meta).unwrap()
    }

    fn ann(n: usize) -> PatchAnnotation<f64> {
        let quads = [Quad::rect(0.0, 0.0, 10.0, 10.0), Quad::rect(10.0, 0.0, 20.0, 10.0)];
        PatchAnnotation::new("img", quads[..n].to_vec(), 0.15).unwrap()
    }

    fn mask(img: &LinearImage<f64>) -> SaturationMask {
        saturation_mask(img, ClipMargin::default())
    }

    #[test]
    fn single_uniform_patch() {
        let img = two_patch_image([400.0, 200.0, 100.0], [0.0; 3], true);
        let e = extract_ground_truth(&img, &ann(1), &mask(&img), BlackLevelPolicy::Require).unwrap();
        assert!(e.angle_to(&Illuminant::new([400.0, 200.0, 100.0]).unwrap()) < 1e-12);
    }

    #[test]
    fn collinear_patches_share_direction() {
        let img = two_patch_image([400.0, 200.0, 100.0], [800.0, 400.0, 200.0], true);
        let e = extract_ground_truth(&img, &ann(2), &mask(&img), BlackLevelPolicy::Require).unwrap();
        assert!(e.angle_to(&Illuminant::new([4.0, 2.0, 1.0]).unwrap()) < 1e-12);
    }

    #[test]
    fn clipped_patch_is_discarded() {
        // The brighter (first) patch touches saturation; only the darker one counts.
        let img = two_patch_image([995.0, 500.0, 200.0], [300.0, 200.0, 100.0], true);
        let ex = extract_patches(&img, &ann(2), &mask(&img), BlackLevelPolicy::Require).unwrap();
        assert_eq!(ex.clipped, vec![true, false]);
        assert!(ex.illuminant.angle_to(&Illuminant::new([3.0, 2.0, 1.0]).unwrap()) < 1e-12);

        let all = two_patch_image([995.0, 0.0, 0.0], [999.0, 0.0, 0.0], true);
        assert!(matches!(
            extract_ground_truth(&all, &ann(2), &mask(&all), BlackLevelPolicy::Require),
            Err(Error::NoUsablePatch)
        ));
    }

    #[test]
    fn patch_outside_image_is_an_error() {
        let img = two_patch_image([1.0; 3], [1.0; 3], true);
        let bad = PatchAnnotation::new("img", vec![Quad::rect(15.0, 0.0, 25.0, 10.0)], 0.1).unwrap();
        assert!(matches!(
            extract_ground_truth(&img, &bad, &mask(&img), BlackLevelPolicy::Require),
            Err(Error::OutOfBounds { index: 0, .. })
        ));
    }

    #[test]
    fn unsubtracted_image_is_refused_unless_unsafe() {
        let img = two_patch_image([400.0, 200.0, 100.0], [0.0; 3], false);
        assert!(matches!(
            extract_ground_truth(&img, &ann(1), &mask(&img), BlackLevelPolicy::Require),
            Err(Error::BlackLevelNotSubtracted { .. })
        ));
        assert!(extract_ground_truth(&img, &ann(1), &mask(&img), BlackLevelPolicy::UnsafeAllowUnsubtracted).is_ok());
    }

    #[test]
    fn annotation_validation() {
        assert!(PatchAnnotation::<f64>::new("x", vec![], 0.1).is_err());
        assert!(PatchAnnotation::new("x", vec![Quad::rect(0.0, 0.0, 1.0, 1.0)], 0.5).is_err());
        let a = ann(2).select(&[1]).unwrap();
        assert_eq!(a.patches, vec![Quad::rect(10.0, 0.0, 20.0, 10.0)]);
        assert!(ann(2).select(&[2]).is_err());
    }

    fn table(entries: &[(&str, [f64; 3])]) -> GroundTruthTable<f64> {
        let mut t = GroundTruthTable::new();
        for (id, rgb) in entries {
            t.insert(*id, Illuminant::new(*rgb).unwrap(), "cam").unwrap();
        }
        t
    }

    #[test]
    fn diff_identity_and_degenerate() {
        let a = table(&[("1", [1.0, 2.0, 3.0]), ("2", [3.0, 1.0, 1.0])]);
        let d = diff_ground_truths(&a, &a).unwrap();
        assert!(d.per_image_angle.values().all(|v| *v == 0.0));
        assert_eq!(d.stats.median, 0.0);

        let x = table(&[("only", [1.0, 0.0, 0.0])]);
        let y = table(&[("only", [0.0, 1.0, 0.0])]);
        let d = diff_ground_truths(&x, &y).unwrap();
        for v in [
            d.stats.mean,
            d.stats.median,
            d.stats.trimean,
            d.stats.best25_mean,
            d.stats.worst25_mean,
            d.max,
            d.p75,
        ] {
            assert!((v - 90.0).abs() < 1e-12);
        }

        let z = table(&[("other", [1.0, 1.0, 1.0])]);
        assert!(matches!(diff_ground_truths(&x, &z), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut t = table(&[("1", [1.0; 3])]);
        assert!(matches!(
            t.insert("1", Illuminant::neutral(), "cam"),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn csv_normalises_on_load_and_keeps_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        fs::write(
            &path,
            "image_id,R,G,B,camera_id\n10,2,1,1,canon1d\n2,0.3,0.3,0.3,canon5d\n",
        )
        .unwrap();
        let t = GroundTruthTable::<f64>::read_csv(&path).unwrap();
        assert_eq!(t.ids().collect::<Vec<_>>(), vec!["10", "2"]);
        let e = t.get("10").unwrap().illuminant.rgb();
        assert!((e[0] - 2.0 / 6.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.get("2").unwrap().camera_id, "canon5d");

        let out = dir.path().join("out.csv");
        t.write_csv(&out).unwrap();
        assert_eq!(GroundTruthTable::<f64>::read_csv(&out).unwrap(), t);

        fs::write(&path, "image_id,R,G,B,camera_id\n1,0,0,0,c\n").unwrap();
        assert!(GroundTruthTable::<f64>::read_csv(&path).is_err());
    }
}
