use super::{CheckId, Finding, Severity};
use crate::evaluation::quantile_sorted;
use crate::imaging::LinearImage;
use crate::scalar::{sort_ascending, Scalar};

/// Percentile (as a fraction) used as the image's "darkest" value per channel.
pub const BLACK_PERCENTILE: f64 = 0.001;
pub const DEFAULT_BLACK_THRESHOLD: f64 = 0.01;

/// Hazy-image heuristic: if even the darkest 0.1 % of every channel sits
/// above `threshold * saturation`, a pedestal is probably still in the data.
pub fn detect_unsubtracted_black<T: Scalar>(img: &LinearImage<T>, image_id: Option<&str>, threshold: T) -> Finding {
    let sat = img.saturation_level();
    let mut floor = [T::zero(); 3];
    let mut ratio = [T::zero(); 3];
    for c in 0..3 {
        let mut v: Vec<T> = img.data().iter().skip(c).step_by(3).copied().collect();
        sort_ascending(&mut v);
        floor[c] = quantile_sorted(&v, T::of(BLACK_PERCENTILE));
        ratio[c] = floor[c] / sat[c];
    }
    let lowest = ratio.iter().copied().fold(T::infinity(), T::min);
    let (severity, message) = if lowest > threshold {
        (
            Severity::Warn,
            format!(
                "darkest pixels sit at {:.2}% of saturation or more in every channel; \
                 the black level looks unsubtracted",
                lowest.as_f64() * 100.0
            ),
        )
    } else {
        (
            Severity::Info,
            "image reaches near-zero values; no pedestal detected".to_string(),
        )
    };
    let f = Finding::new(CheckId::UnsubtractedBlack, severity, message)
        .with("percentile", BLACK_PERCENTILE)
        .with("floor", floor.map(T::as_f64))
        .with("floor_over_saturation", ratio.map(T::as_f64))
        .with("threshold", threshold.as_f64())
        .with("flagged_black_subtracted", img.black_subtracted());
    match image_id {
        Some(id) => f.for_image(id),
        None => f,
    }
}
