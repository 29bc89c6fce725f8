//! Illuminant directions and the small amount of 3-vector algebra they need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn dot<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm<T: Scalar>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}

/// Angle between two RGB vectors in degrees.
///
/// Evaluated as `atan2(|a x b|, a . b)`, which equals the clamped arccos of the
/// normalised dot product but keeps full precision near 0 and 180 degrees.
pub fn angular_error<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> Result<T> {
    let (na, nb) = (norm(a), norm(b));
    if !(na > T::zero() && nb > T::zero()) {
        return Err(Error::ZeroVector);
    }
    Ok(angle_unchecked(a, b))
}

fn angle_unchecked<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    let c = cross(a, b);
    norm(&c).atan2(dot(a, b)).to_degrees()
}

/// Normalised rb chromaticity `(R / sum, B / sum)` of a nonnegative triple.
pub fn rb_chromaticity<T: Scalar>(rgb: [T; 3]) -> Result<(T, T)> {
    if rgb.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::InvalidIlluminant(format!("{rgb:?}")));
    }
    let sum = rgb[0] + rgb[1] + rgb[2];
    if sum <= T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok((rgb[0] / sum, rgb[2] / sum))
}

/// Colour of the light as seen by the sensor: a nonnegative RGB direction,
/// stored with unit L2 norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 3]", into = "[T; 3]", bound = "T: Scalar")]
pub struct Illuminant<T> {
    rgb: [T; 3],
}

impl<T: Scalar> Illuminant<T> {
    /// Normalises `rgb`. Rejects negative, non-finite and all-zero triples.
    pub fn new(rgb: [T; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidIlluminant(format!("{rgb:?}")));
        }
        let n = norm(&rgb);
        if n <= T::zero() || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            rgb: [rgb[0] / n, rgb[1] / n, rgb[2] / n],
        })
    }

    /// The achromatic direction (1, 1, 1) / sqrt(3).
    pub fn neutral() -> Self {
        let c = T::one() / T::of(3.0).sqrt();
        Self { rgb: [c, c, c] }
    }

    pub fn rgb(&self) -> [T; 3] {
        self.rgb
    }

    /// Angular distance to `other` in degrees.
    pub fn angle_to(&self, other: &Self) -> T {
        angle_unchecked(&self.rgb, &other.rgb)
    }

    pub fn rb(&self) -> (T, T) {
        rb_chromaticity(self.rgb).expect("illuminant is nonzero and nonnegative")
    }

    /// Converts to another scalar precision and renormalises.
    pub fn cast<U: Scalar>(&self) -> Illuminant<U> {
        Illuminant::new(self.rgb.map(|v| U::of(v.as_f64()))).expect("valid illuminant")
    }
}

impl<T: Scalar> TryFrom<[T; 3]> for Illuminant<T> {
    type Error = Error;

    fn try_from(rgb: [T; 3]) -> Result<Self> {
        Self::new(rgb)
    }
}

impl<T: Scalar> From<Illuminant<T>> for [T; 3] {
    fn from(e: Illuminant<T>) -> Self {
        e.rgb
    }
}
