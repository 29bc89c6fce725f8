use serde::Serialize;

use super::{CheckId, Finding, Severity};
use crate::error::{Error, Result};
use crate::evaluation::{compute_stats, EstimateSet};
use crate::groundtruth::GroundTruthTable;
use crate::imaging::Pipeline;
use crate::scalar::Scalar;

/// Two estimates closer than this (degrees) count as the same.
pub const IDENTITY_ANGLE: f64 = 0.01;
/// Share of shared images that must be identical to call two runs identical.
pub const IDENTITY_FRACTION: f64 = 0.99;

/// Flags two allegedly different runs whose estimates coincide.
pub fn estimates_identity<T: Scalar>(a: &EstimateSet<T>, b: &EstimateSet<T>) -> Result<Finding> {
    let mut shared = 0usize;
    let mut same = 0usize;
    for (id, ea) in a.iter() {
        if let Some(eb) = b.get(id) {
            shared += 1;
            if ea.angle_to(eb) < T::of(IDENTITY_ANGLE) {
                same += 1;
            }
        }
    }
    if shared == 0 {
        return Err(Error::EmptyIntersection);
    }
    let fraction = same as f64 / shared as f64;
    let (severity, message) = if fraction >= IDENTITY_FRACTION {
        (
            Severity::Fail,
            format!(
                "identical estimates across pipelines: {same} of {shared} images agree within {IDENTITY_ANGLE} deg; \
                 the two runs cannot come from different preprocessing"
            ),
        )
    } else {
        (
            Severity::Info,
            format!("estimates differ on {} of {shared} images", shared - same),
        )
    };
    Ok(Finding::new(CheckId::PipelineIdentity, severity, message)
        .with("shared", shared)
        .with("identical", same)
        .with("identical_fraction", fraction)
        .with("angle_threshold_deg", IDENTITY_ANGLE))
}

/// Which ground truth an estimate set scores better against.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Attribution<T> {
    pub median_vs_subtracted: T,
    pub median_vs_unsubtracted: T,
    pub closer_to: Pipeline,
    /// `|median_vs_subtracted - median_vs_unsubtracted|`.
    pub gap: T,
    pub n: usize,
}

pub fn attribute_pipeline<T: Scalar>(
    run: &EstimateSet<T>,
    gt_sub: &GroundTruthTable<T>,
    gt_unsub: &GroundTruthTable<T>,
) -> Result<Attribution<T>> {
    let mut err_sub = Vec::new();
    let mut err_unsub = Vec::new();
    for (id, e) in run.iter() {
        if let (Some(s), Some(u)) = (gt_sub.get(id), gt_unsub.get(id)) {
            err_sub.push(e.angle_to(&s.illuminant));
            err_unsub.push(e.angle_to(&u.illuminant));
        }
    }
    if err_sub.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let ms = compute_stats(&err_sub)?.median;
    let mu = compute_stats(&err_unsub)?.median;
    Ok(Attribution {
        median_vs_subtracted: ms,
        median_vs_unsubtracted: mu,
        closer_to: if mu < ms {
            Pipeline::Unsubtracted
        } else {
            Pipeline::Subtracted
        },
        gap: (ms - mu).abs(),
        n: err_sub.len(),
    })
}

fn attribution_finding<T: Scalar>(label: &str, a: &Attribution<T>) -> Finding {
    let severity = match a.closer_to {
        Pipeline::Unsubtracted => Severity::Warn,
        Pipeline::Subtracted => Severity::Info,
    };
    Finding::new(
        CheckId::PipelineAttribution,
        severity,
        format!(
            "{label} is closer to gt_{} (median gap {:.4} deg): evidence it was produced on {} images",
            if a.closer_to == Pipeline::Unsubtracted {
                "unsub"
            } else {
                "sub"
            },
            a.gap.as_f64(),
            a.closer_to
        ),
    )
    .with("run", label)
    .with("median_vs_subtracted", a.median_vs_subtracted.as_f64())
    .with("median_vs_unsubtracted", a.median_vs_unsubtracted.as_f64())
    .with("closer_to", a.closer_to)
    .with("gap_deg", a.gap.as_f64())
    .with("n", a.n)
}

/// Identity check between the runs plus a pipeline attribution of each.
pub fn pipeline_forensics<T: Scalar>(
    run_a: &EstimateSet<T>,
    run_b: &EstimateSet<T>,
    gt_sub: &GroundTruthTable<T>,
    gt_unsub: &GroundTruthTable<T>,
) -> Result<Vec<Finding>> {
    Ok(vec![
        estimates_identity(run_a, run_b)?,
        attribution_finding("run_a", &attribute_pipeline(run_a, gt_sub, gt_unsub)?),
        attribution_finding("run_b", &attribute_pipeline(run_b, gt_sub, gt_unsub)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::illuminant::Illuminant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(seed: u64, n: usize) -> EstimateSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let v = [
                    rng.random_range(0.1..1.0),
                    rng.random_range(0.1..1.0),
                    rng.random_range(0.1..1.0),
                ];
                (format!("{i}"), Illuminant::new(v).unwrap())
            })
            .collect()
    }

    #[test]
    fn copy_is_flagged_and_symmetric() {
        let a = random_set(1, 50);
        let f = estimates_identity(&a, &a.clone()).unwrap();
        assert_eq!(f.severity, Severity::Fail);
        assert!(f.message.contains("identical estimates across pipelines"));
        let b = random_set(2, 50);
        let ab = estimates_identity(&a, &b).unwrap();
        let ba = estimates_identity(&b, &a).unwrap();
        assert_eq!(ab.severity, Severity::Info);
        assert_eq!(ab.evidence, ba.evidence);
    }

    #[test]
    fn disjoint_runs_error() {
        let a = random_set(1, 3);
        let b: EstimateSet<f64> = [("x".to_string(), Illuminant::neutral())].into_iter().collect();
        assert!(matches!(estimates_identity(&a, &b), Err(Error::EmptyIntersection)));
    }

    #[test]
    fn attribution_prefers_matching_table() {
        let run = random_set(3, 20);
        let gt_unsub: GroundTruthTable<f64> = run
            .iter()
            .map(|(id, e)| {
                (
                    id.to_string(),
                    crate::groundtruth::GroundTruthRecord {
                        illuminant: *e,
                        camera_id: "c".into(),
                    },
                )
            })
            .collect();
        let other = random_set(4, 20);
        let gt_sub: GroundTruthTable<f64> = other
            .iter()
            .map(|(id, e)| {
                (
                    id.to_string(),
                    crate::groundtruth::GroundTruthRecord {
                        illuminant: *e,
                        camera_id: "c".into(),
                    },
                )
            })
            .collect();
        let a = attribute_pipeline(&run, &gt_sub, &gt_unsub).unwrap();
        assert_eq!(a.closer_to, Pipeline::Unsubtracted);
        assert_eq!(a.median_vs_unsubtracted, 0.0);
        assert!(a.gap > 0.0);
    }
}
