//! Linear raster container, black-level handling and clip masking.

mod ppm;

pub use ppm::{decode_ppm16, encode_ppm16, read_ppm16, sidecar_path, write_ppm16};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Grid;
use crate::scalar::Scalar;

/// Per-image metadata. This is also the on-disk sidecar (`<image>.meta.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ImageMeta<T> {
    pub black_level: [T; 3],
    pub saturation_level: [T; 3],
    pub camera_id: String,
    pub black_subtracted: bool,
}

/// Whether pixel values still carry the sensor pedestal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Subtracted,
    Unsubtracted,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Subtracted => "subtracted",
            Pipeline::Unsubtracted => "unsubtracted",
        }
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subtracted" => Ok(Pipeline::Subtracted),
            "unsubtracted" => Ok(Pipeline::Unsubtracted),
            other => Err(Error::InvalidArgument(format!("unknown pipeline {other:?}"))),
        }
    }
}

/// What estimation and ground-truth extraction do with an image that still
/// contains its black level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlackLevelPolicy {
    /// Refuse. The only correct choice for linear-image methods.
    #[default]
    Require,
    /// Proceed anyway. Exists to reproduce the wrong pipeline on purpose.
    UnsafeAllowUnsubtracted,
}

impl BlackLevelPolicy {
    pub fn check<T: Scalar>(self, img: &LinearImage<T>, operation: &'static str) -> Result<()> {
        if img.black_subtracted() || self == BlackLevelPolicy::UnsafeAllowUnsubtracted {
            Ok(())
        } else {
            Err(Error::BlackLevelNotSubtracted { operation })
        }
    }
}

/// Row-major RGB raster of linear sensor values.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImage<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
    meta: ImageMeta<T>,
}

impl<T: Scalar> LinearImage<T> {
    /// Validates every container invariant.
    pub fn new(width: usize, height: usize, data: Vec<T>, meta: ImageMeta<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty raster {width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "{} samples for a {width}x{height} RGB raster",
                data.len()
            )));
        }
        for c in 0..3 {
            let (bl, sat) = (meta.black_level[c], meta.saturation_level[c]);
            if !(bl >= T::zero() && bl.is_finite()) {
                return Err(Error::InvalidImage(format!("black level {bl} in channel {c}")));
            }
            if !(sat > T::zero() && sat.is_finite()) {
                return Err(Error::InvalidImage(format!("saturation level {sat} in channel {c}")));
            }
            // After subtraction the recorded level relates to the original
            // saturation (`sat + bl`), which is above it by construction.
            if !meta.black_subtracted && bl >= sat {
                return Err(Error::InvalidImage(format!(
                    "black level {bl} not below saturation level {sat} in channel {c}"
                )));
            }
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(i, v)| !(**v >= T::zero() && **v <= meta.saturation_level[i % 3]))
        {
            return Err(Error::InvalidImage(format!(
                "sample {v} at pixel {} channel {} outside [0, saturation]",
                i / 3,
                i % 3
            )));
        }
        Ok(Self {
            width,
            height,
            data,
            meta,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn meta(&self) -> &ImageMeta<T> {
        &self.meta
    }

    pub fn black_level(&self) -> [T; 3] {
        self.meta.black_level
    }

    pub fn saturation_level(&self) -> [T; 3] {
        self.meta.saturation_level
    }

    pub fn camera_id(&self) -> &str {
        &self.meta.camera_id
    }

    pub fn black_subtracted(&self) -> bool {
        self.meta.black_subtracted
    }

    pub fn pipeline(&self) -> Pipeline {
        if self.meta.black_subtracted {
            Pipeline::Subtracted
        } else {
            Pipeline::Unsubtracted
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [T; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One colour channel as a 2-D grid.
    pub fn channel(&self, c: usize) -> Grid<T> {
        let data = self.data.iter().skip(c).step_by(3).copied().collect();
        Grid::new(self.width, self.height, data).expect("dimensions match")
    }

    /// Applies `f` to every sample, keeping the metadata.
    pub fn map_samples(&self, mut f: impl FnMut(usize, T) -> T) -> Result<Self> {
        let data = self.data.iter().enumerate().map(|(i, v)| f(i % 3, *v)).collect();
        Self::new(self.width, self.height, data, self.meta.clone())
    }

    pub fn with_camera_id(mut self, camera_id: impl Into<String>) -> Self {
        self.meta.camera_id = camera_id.into();
        self
    }

    /// Mean RGB over the given pixel coordinates.
    pub(crate) fn mean_over(&self, pixels: &[(usize, usize)]) -> [T; 3] {
        let mut acc = [T::zero(); 3];
        for &(x, y) in pixels {
            let p = self.pixel(x, y);
            for c in 0..3 {
                acc[c] += p[c];
            }
        }
        let n = T::of_usize(pixels.len());
        acc.map(|v| v / n)
    }
}

/// Removes the sensor pedestal: `v -> max(v - black_c, 0)`, saturation lowered
/// by the same amount. Refuses already-subtracted input.
pub fn subtract_black<T: Scalar>(img: &LinearImage<T>) -> Result<LinearImage<T>> {
    if img.black_subtracted() {
        return Err(Error::AlreadySubtracted);
    }
    let bl = img.black_level();
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| (*v - bl[i % 3]).max(T::zero()))
        .collect();
    let sat = img.saturation_level();
    let meta = ImageMeta {
        black_level: bl,
        saturation_level: [sat[0] - bl[0], sat[1] - bl[1], sat[2] - bl[2]],
        camera_id: img.meta.camera_id.clone(),
        black_subtracted: true,
    };
    LinearImage::new(img.width, img.height, data, meta)
}

/// Fraction of the saturation level treated as "clipped". Must lie in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipMargin<T>(T);

impl<T: Scalar> ClipMargin<T> {
    pub fn new(margin: T) -> Result<Self> {
        if margin >= T::zero() && margin < T::one() {
            Ok(Self(margin))
        } else {
            Err(Error::InvalidArgument(format!("clip margin {margin} outside [0, 1)")))
        }
    }

    pub fn get(self) -> T {
        self.0
    }
}

impl<T: Scalar> Default for ClipMargin<T> {
    fn default() -> Self {
        Self(T::of(0.02))
    }
}

/// Per-pixel clip flags; `true` means at least one channel is near saturation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl SaturationMask {
    /// A mask with nothing flagged.
    pub fn clear(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            flags: vec![false; width * height],
        }
    }

    pub fn from_flags(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} mask flags for a {width}x{height} image",
                flags.len()
            )));
        }
        Ok(Self { width, height, flags })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_flagged(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }

    pub(crate) fn check_dims<T: Scalar>(&self, img: &LinearImage<T>) -> Result<()> {
        if self.width == img.width() && self.height == img.height() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "mask is {}x{} but image is {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )))
        }
    }
}

/// Flags pixels with any channel `>= (1 - margin) * saturation_c`.
pub fn saturation_mask<T: Scalar>(img: &LinearImage<T>, margin: ClipMargin<T>) -> SaturationMask {
    let sat = img.saturation_level();
    let keep = T::one() - margin.get();
    let limit = [sat[0] * keep, sat[1] * keep, sat[2] * keep];
    let flags = img.pixels().map(|p| (0..3).any(|c| p[c] >= limit[c])).collect();
    SaturationMask {
        width: img.width(),
        height: img.height(),
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn meta(bl: f64, sat: f64, subtracted: bool) -> ImageMeta<f64> {
        ImageMeta {
            black_level: [bl; 3],
            saturation_level: [sat; 3],
            camera_id: "cam".into(),
            black_subtracted: subtracted,
        }
    }

    fn img(px: &[[f64; 3]], bl: f64, sat: f64) -> LinearImage<f64> {
        let data = px.iter().flatten().copied().collect();
        LinearImage::new(px.len(), 1, data, meta(bl, sat, false)).unwrap()
    }

    #[test]
    fn construction_checks_invariants() {
        assert!(LinearImage::new(2, 1, vec![0.0; 5], meta(0.0, 10.0, false)).is_err());
        assert!(LinearImage::new(1, 1, vec![11.0, 0.0, 0.0], meta(0.0, 10.0, false)).is_err());
        assert!(LinearImage::new(1, 1, vec![-1.0, 0.0, 0.0], meta(0.0, 10.0, false)).is_err());
        assert!(LinearImage::new(1, 1, vec![0.0; 3], meta(10.0, 10.0, false)).is_err());
        assert!(LinearImage::new(0, 1, vec![], meta(0.0, 10.0, false)).is_err());
    }

    #[test]
    fn subtract_examples() {
        let out = subtract_black(&img(&[[300.0; 3], [100.0; 3]], 129.0, 3692.0)).unwrap();
        assert_eq!(out.pixel(0, 0), [171.0; 3]);
        assert_eq!(out.pixel(1, 0), [0.0; 3]);
        assert_eq!(out.saturation_level(), [3563.0; 3]);
        assert_eq!(out.black_level(), [129.0; 3]);
        assert!(out.black_subtracted());

        let zero = img(&[[5.0, 6.0, 7.0]], 0.0, 100.0);
        assert_eq!(subtract_black(&zero).unwrap().data(), zero.data());
    }

    #[test]
    fn double_subtraction_is_refused() {
        let once = subtract_black(&img(&[[300.0; 3]], 129.0, 3692.0)).unwrap();
        assert!(matches!(subtract_black(&once), Err(Error::AlreadySubtracted)));
    }

    #[test]
    fn mask_examples() {
        let m = ClipMargin::new(0.02).unwrap();
        let a = img(&[[990.0, 10.0, 10.0], [979.0, 10.0, 10.0]], 0.0, 1000.0);
        let mask = saturation_mask(&a, m);
        assert!(mask.is_flagged(0, 0));
        assert!(!mask.is_flagged(1, 0));
        let black = img(&[[0.0; 3]; 4], 0.0, 1000.0);
        assert_eq!(saturation_mask(&black, m).count(), 0);
        assert!(ClipMargin::new(1.0).is_err());
        assert!(ClipMargin::new(-0.1).is_err());
    }

    #[test]
    fn policy_refuses_unsubtracted() {
        let raw = img(&[[300.0; 3]], 129.0, 3692.0);
        assert!(BlackLevelPolicy::Require.check(&raw, "test").is_err());
        assert!(BlackLevelPolicy::UnsafeAllowUnsubtracted.check(&raw, "test").is_ok());
    }

    proptest! {
        #[test]
        fn subtract_commutes_with_scaling(
            vals in proptest::collection::vec(0.0f64..1000.0, 3..30),
            bl in 0.0f64..200.0,
            k in 0.25f64..4.0,
        ) {
            let n = vals.len() / 3;
            let data: Vec<f64> = vals[..n * 3].to_vec();
            let a = LinearImage::new(n, 1, data.clone(), meta(bl, 2000.0, false)).unwrap();
            let scaled = LinearImage::new(
                n, 1, data.iter().map(|v| v * k).collect(), meta(bl * k, 2000.0 * k, false),
            ).unwrap();
            let sa = subtract_black(&a).unwrap();
            let ss = subtract_black(&scaled).unwrap();
            for (x, y) in sa.data().iter().zip(ss.data()) {
                prop_assert!((x * k - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn subtract_then_add_back_is_exact(
            counts in proptest::collection::vec(129u32..4000, 3..30),
        ) {
            // Integer counts: the usual case for raw data.
            let n = counts.len() / 3;
            let data: Vec<f64> = counts[..n * 3].iter().map(|v| *v as f64).collect();
            let a = LinearImage::new(n, 1, data.clone(), meta(129.0, 4095.0, false)).unwrap();
            let back: Vec<f64> = subtract_black(&a).unwrap().data().iter().map(|v| v + 129.0).collect();
            prop_assert_eq!(back, data);
        }
    }
}
