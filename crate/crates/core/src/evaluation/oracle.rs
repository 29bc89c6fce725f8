//! The perfect-oracle experiment: a method with zero error still scores badly
//! when its estimates come from unsubtracted images and the ground truth from
//! subtracted ones.

use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate, EstimateSet, EvaluationRun, RunTags};
use crate::error::Result;
use crate::groundtruth::{extract_patches, GroundTruthTable};
use crate::illuminant::Illuminant;
use crate::imaging::{saturation_mask, subtract_black, BlackLevelPolicy, ClipMargin, Pipeline};
use crate::scalar::Scalar;
use crate::synthetic::{render, RenderOptions, SyntheticDataset};

pub const ORACLE_ESTIMATOR: &str = "oracle";
pub const ORACLE_GROUND_TRUTH_ID: &str = "synthetic-chart-subtracted";

#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct OracleExperiment<T> {
    pub black_level: T,
    /// Oracle on unsubtracted images scored against subtracted ground truth.
    pub wrong_run: EvaluationRun<T>,
    /// Oracle and ground truth both from subtracted images.
    pub right_run: EvaluationRun<T>,
    /// Darkest channel of any achromatic patch mean, after subtraction.
    pub min_patch_value: T,
    pub warnings: Vec<String>,
}

/// Re-renders every image with `black_level` counts of pedestal and runs both
/// pipelines with an oracle that reproduces its pipeline's ground truth exactly.
pub fn oracle_mismatch_experiment<T: Scalar>(
    dataset: &SyntheticDataset<T>,
    black_level: T,
) -> Result<OracleExperiment<T>> {
    let cfg = &dataset.config;
    let per_image = dataset
        .items
        .par_iter()
        .zip(&dataset.annotations)
        .map(|(item, ann)| -> Result<(Illuminant<T>, Illuminant<T>, T)> {
            let cam = item.camera(&cfg.cameras).with_black_level([black_level; 3])?;
            let opts = RenderOptions {
                inject_black: true,
                noise_sigma: cfg.noise_sigma,
                noise_seed: item.noise_seed,
                quantize: cfg.quantize,
            };
            let raw = render(&item.scene, &cam, &opts)?.image;
            let sub = subtract_black(&raw)?;
            let margin = ClipMargin::default();
            let right = extract_patches(&sub, ann, &saturation_mask(&sub, margin), BlackLevelPolicy::Require)?;
            let wrong = extract_patches(
                &raw,
                ann,
                &saturation_mask(&raw, margin),
                BlackLevelPolicy::UnsafeAllowUnsubtracted,
            )?;
            let darkest = right.means.iter().flatten().copied().fold(T::infinity(), T::min);
            Ok((right.illuminant, wrong.illuminant, darkest))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut gt_sub = GroundTruthTable::new();
    let mut oracle_sub = EstimateSet::new();
    let mut oracle_unsub = EstimateSet::new();
    let mut min_patch_value = T::infinity();
    for (item, (right, wrong, darkest)) in dataset.items.iter().zip(per_image) {
        let camera_id = &cfg.cameras[item.camera_index].camera_id;
        gt_sub.insert(item.image_id.clone(), right, camera_id.clone())?;
        oracle_sub.insert(item.image_id.clone(), right)?;
        oracle_unsub.insert(item.image_id.clone(), wrong)?;
        min_patch_value = min_patch_value.min(darkest);
    }
    let tags = |pipeline| RunTags {
        estimator: ORACLE_ESTIMATOR.into(),
        pipeline,
        ground_truth_id: ORACLE_GROUND_TRUTH_ID.into(),
        ground_truth_pipeline: Some(Pipeline::Subtracted),
    };
    let right_run = evaluate(&oracle_sub, &gt_sub, tags(Pipeline::Subtracted))?;
    let wrong_run = evaluate(&oracle_unsub, &gt_sub, tags(Pipeline::Unsubtracted))?;
    let mut warnings = Vec::new();
    if black_level >= min_patch_value {
        warnings.push(format!(
            "black level {black_level} is not below the darkest achromatic patch value {min_patch_value}; \
             clamping at zero makes the error no longer monotone in the black level"
        ));
    }
    Ok(OracleExperiment {
        black_level,
        wrong_run,
        right_run,
        min_patch_value,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{make_benchmark, BenchmarkConfig, CameraModel};

    fn dataset() -> SyntheticDataset<f64> {
        let mut cfg = BenchmarkConfig::new(6, vec![CameraModel::reference()], 21);
        cfg.width = 32;
        cfg.height = 24;
        make_benchmark(cfg).unwrap()
    }

    #[test]
    fn zero_black_level_means_no_mismatch() {
        let ex = oracle_mismatch_experiment(&dataset(), 0.0).unwrap();
        assert_eq!(ex.right_run.stats.max, 0.0);
        assert_eq!(ex.wrong_run.stats.max, 0.0);
    }

    #[test]
    fn pedestal_hurts_only_the_wrong_pipeline() {
        let ds = dataset();
        let mut last = 0.0;
        for bl in [64.0, 256.0, 512.0] {
            let ex = oracle_mismatch_experiment(&ds, bl).unwrap();
            assert_eq!(ex.right_run.stats.max, 0.0);
            assert!(ex.wrong_run.per_image_error.values().all(|e| *e > 0.0));
            assert!(ex.wrong_run.stats.median > last);
            assert!(!ex.wrong_run.warnings.is_empty());
            last = ex.wrong_run.stats.median;
        }
    }

    #[test]
    fn warns_when_pedestal_swamps_darkest_patch() {
        let ex = oracle_mismatch_experiment(&dataset(), 3000.0).unwrap();
        assert_eq!(ex.warnings.len(), 1);
    }
}
