use serde::{Deserialize, Serialize};

use super::{CheckId, Finding, Severity};
use crate::error::{Error, Result};
use crate::geometry::Quad;
use crate::illuminant::angular_error;
use crate::imaging::{saturation_mask, BlackLevelPolicy, ClipMargin, LinearImage};
use crate::scalar::Scalar;

pub const DEFAULT_UNIFORM_THRESHOLD: f64 = 1.0;

/// A region the user asserts is achromatic (a white wall, a gray card, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LabeledRegion<T> {
    pub label: String,
    pub quad: Quad<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct UniformityReport<T> {
    pub labels: Vec<String>,
    pub means: Vec<[T; 3]>,
    /// Pairwise angles in degrees; symmetric with a zero diagonal.
    pub matrix: Vec<Vec<T>>,
    pub max_angle: T,
    /// One warning per pair above the threshold, or a single info finding.
    pub findings: Vec<Finding>,
}

/// Compares the colour of regions that should all show the same light.
pub fn uniform_illumination_check<T: Scalar>(
    img: &LinearImage<T>,
    image_id: Option<&str>,
    regions: &[LabeledRegion<T>],
    threshold: T,
    policy: BlackLevelPolicy,
) -> Result<UniformityReport<T>> {
    policy.check(img, "the uniform-illumination check")?;
    if regions.len() < 2 {
        return Err(Error::InvalidArgument("need at least two regions".into()));
    }
    let mask = saturation_mask(img, ClipMargin::default());
    let (w, h) = (img.width(), img.height());
    let id = image_id.unwrap_or("");
    let mut means = Vec::with_capacity(regions.len());
    for (index, r) in regions.iter().enumerate() {
        if !r.quad.within(w, h) {
            return Err(Error::OutOfBounds {
                image_id: id.to_string(),
                index,
                width: w,
                height: h,
            });
        }
        let px = r.quad.pixels(w, h);
        if px.is_empty() {
            return Err(Error::EmptyRegion {
                image_id: id.to_string(),
                index,
            });
        }
        if px.iter().any(|&(x, y)| mask.is_flagged(x, y)) {
            return Err(Error::ClippedRegion { label: r.label.clone() });
        }
        means.push(img.mean_over(&px));
    }
    let n = regions.len();
    let mut matrix = vec![vec![T::zero(); n]; n];
    let mut findings = Vec::new();
    let mut max_angle = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let a = angular_error(&means[i], &means[j])?;
            matrix[i][j] = a;
            matrix[j][i] = a;
            max_angle = max_angle.max(a);
            if a > threshold {
                findings.push(
                    Finding::new(
                        CheckId::UniformIllumination,
                        Severity::Warn,
                        format!(
                            "regions {:?} and {:?} differ by {:.2} deg (> {}): illumination is not uniform",
                            regions[i].label,
                            regions[j].label,
                            a.as_f64(),
                            threshold.as_f64()
                        ),
                    )
                    .with("regions", [&regions[i].label, &regions[j].label])
                    .with("angle_deg", a.as_f64())
                    .with("threshold_deg", threshold.as_f64()),
                );
            }
        }
    }
    if findings.is_empty() {
        findings.push(
            Finding::new(
                CheckId::UniformIllumination,
                Severity::Info,
                format!("all region pairs within {} deg", threshold.as_f64()),
            )
            .with("max_angle_deg", max_angle.as_f64())
            .with("threshold_deg", threshold.as_f64()),
        );
    }
    if let Some(id) = image_id {
        for f in &mut findings {
            f.image_id = Some(id.to_string());
        }
    }
    Ok(UniformityReport {
        labels: regions.iter().map(|r| r.label.clone()).collect(),
        means,
        matrix,
        max_angle,
        findings,
    })
}
