use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Serialize;

use super::{CheckId, Finding, Severity};
use crate::error::{Error, Result};
use crate::groundtruth::GroundTruthTable;
use crate::scalar::Scalar;

/// Cross-separation must exceed this multiple of the worst within-camera RMS
/// residual for the "two-line" warning.
pub const TWO_LINE_FACTOR: f64 = 3.0;
/// Separations below this are treated as coincident lines (rounding noise).
const MIN_SEPARATION: f64 = 1e-9;

pub const TWO_LINE_RULE: &str = "two-line rule (this tool's operationalization, not a published criterion): \
     warn when the mean cross-camera point-to-line distance exceeds 3x the largest within-camera RMS residual";

/// Orthogonal-regression line through 2-D points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct LineFit<T> {
    /// Centroid; the line passes through it.
    pub point: [T; 2],
    /// Unit direction.
    pub direction: [T; 2],
    pub rms_residual: T,
}

impl<T: Scalar> LineFit<T> {
    pub fn distance(&self, p: [T; 2]) -> T {
        let (dx, dy) = (p[0] - self.point[0], p[1] - self.point[1]);
        (dx * self.direction[1] - dy * self.direction[0]).abs()
    }
}

/// Total least squares: the line along the principal eigenvector of the 2x2
/// covariance, at angle `atan2(2 sxy, sxx - syy) / 2`.
///
/// Points are sorted first, so the result is bitwise independent of input order.
pub fn fit_line_tls<T: Scalar>(points: &[[T; 2]]) -> Result<LineFit<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a line fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a[1].partial_cmp(&b[1]).unwrap_or(std::cmp::Ordering::Equal))
    });
    let n = T::of_usize(pts.len());
    let cx = pts.iter().map(|p| p[0]).sum::<T>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<T>() / n;
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for p in &pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = (T::of(2.0) * sxy).atan2(sxx - syy) / T::of(2.0);
    let mut fit = LineFit {
        point: [cx, cy],
        direction: [theta.cos(), theta.sin()],
        rms_residual: T::zero(),
    };
    let ss: T = pts.iter().map(|p| fit.distance(*p).powi(2)).sum();
    fit.rms_residual = (ss / n).sqrt();
    Ok(fit)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CameraLine<T> {
    pub camera_id: String,
    pub image_ids: Vec<String>,
    /// rb chromaticities, in table order.
    pub points: Vec<[T; 2]>,
    pub fit: LineFit<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CameraSplitReport<T> {
    /// Cameras in order of first appearance.
    pub cameras: Vec<CameraLine<T>>,
    /// `(camera_a, camera_b) -> separation` for every unordered pair.
    pub pair_separation: Vec<(String, String, T)>,
    /// Largest pairwise separation (0 with a single camera).
    pub separation: T,
    pub max_rms_residual: T,
    pub two_lines: bool,
    pub finding: Finding,
}

fn mean_distance<T: Scalar>(points: &[[T; 2]], line: &LineFit<T>) -> T {
    points.iter().map(|p| line.distance(*p)).sum::<T>() / T::of_usize(points.len())
}

/// Groups ground truth by camera in the rb plane and fits one line per camera.
pub fn camera_split_analysis<T: Scalar>(gt: &GroundTruthTable<T>) -> Result<CameraSplitReport<T>> {
    if gt.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: IndexMap<&str, (Vec<String>, Vec<[T; 2]>)> = IndexMap::new();
    for (id, rec) in gt.iter() {
        let (r, b) = rec.illuminant.rb();
        let g = groups.entry(rec.camera_id.as_str()).or_default();
        g.0.push(id.to_string());
        g.1.push([r, b]);
    }
    let mut cameras = Vec::with_capacity(groups.len());
    for (camera_id, (image_ids, points)) in groups {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                camera_id: camera_id.to_string(),
                count: points.len(),
            });
        }
        cameras.push(CameraLine {
            camera_id: camera_id.to_string(),
            fit: fit_line_tls(&points)?,
            image_ids,
            points,
        });
    }
    let max_rms_residual = cameras.iter().map(|c| c.fit.rms_residual).fold(T::zero(), T::max);
    let mut pair_separation = Vec::new();
    for i in 0..cameras.len() {
        for j in i + 1..cameras.len() {
            let (a, b) = (&cameras[i], &cameras[j]);
            let sep = (mean_distance(&a.points, &b.fit) + mean_distance(&b.points, &a.fit)) / T::of(2.0);
            pair_separation.push((a.camera_id.clone(), b.camera_id.clone(), sep));
        }
    }
    let separation = pair_separation.iter().map(|p| p.2).fold(T::zero(), T::max);
    let two_lines = separation > T::of(TWO_LINE_FACTOR) * max_rms_residual && separation > T::of(MIN_SEPARATION);

    let counts: BTreeMap<&str, usize> = cameras.iter().map(|c| (c.camera_id.as_str(), c.points.len())).collect();
    let finding = if two_lines {
        Finding::new(
            CheckId::CameraSplit,
            Severity::Warn,
            format!(
                "ground truth falls on separate rb lines per camera (separation {:.5} > {TWO_LINE_FACTOR} x residual {:.5}); \
                 illuminants from different sensors are not comparable",
                separation.as_f64(),
                max_rms_residual.as_f64()
            ),
        )
    } else {
        Finding::new(
            CheckId::CameraSplit,
            Severity::Info,
            format!("no per-camera line structure ({} camera(s))", cameras.len()),
        )
    }
    .with("separation", separation.as_f64())
    .with("max_rms_residual", max_rms_residual.as_f64())
    .with("factor", TWO_LINE_FACTOR)
    .with("points_per_camera", counts)
    .with("rule", TWO_LINE_RULE);

    Ok(CameraSplitReport {
        cameras,
        pair_separation,
        separation,
        max_rms_residual,
        two_lines,
        finding,
    })
}
