//! Statistics-based illuminant estimators under one Minkowski-norm framework.
//!
//! For channel `c` the estimate is `(mean |d_c(x)|^p)^(1/p)` over unmasked
//! pixels, where `d_c` is the channel itself (order 0, optionally smoothed) or
//! the magnitude of its `n`-th Gaussian derivative. The four named methods are
//! points in that parameter space:
//!
//! | method         | p        | order | sigma |
//! |----------------|----------|-------|-------|
//! | gray-world     | 1        | 0     | 0     |
//! | white-patch    | infinity | 0     | any   |
//! | shades-of-gray | p >= 1   | 0     | any   |
//! | gray-edge      | p >= 1   | 1, 2  | > 0   |

mod filter;

pub use filter::{gaussian_derivative, Grid};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::illuminant::Illuminant;
use crate::imaging::{BlackLevelPolicy, LinearImage, SaturationMask};
use crate::scalar::Scalar;

pub const DEFAULT_P: f64 = 6.0;
pub const DEFAULT_ORDER: u8 = 1;
pub const DEFAULT_SIGMA: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    GrayWorld,
    WhitePatch,
    ShadesOfGray,
    GrayEdge,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::GrayWorld => "gray-world",
            EstimatorKind::WhitePatch => "white-patch",
            EstimatorKind::ShadesOfGray => "shades-of-gray",
            EstimatorKind::GrayEdge => "gray-edge",
        }
    }
}

/// Minkowski exponent. `Max` is the exact per-channel maximum (p = infinity).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm<T> {
    Finite(T),
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorSpec<T> {
    kind: EstimatorKind,
    norm: Norm<T>,
    order: u8,
    sigma: T,
}

impl<T: Scalar> EstimatorSpec<T> {
    /// Checks the parameter constraints for `kind`.
    pub fn new(kind: EstimatorKind, norm: Norm<T>, order: u8, sigma: T) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidEstimator(msg));
        if let Norm::Finite(p) = norm {
            if !(p >= T::one() && p.is_finite()) {
                return bad(format!("Minkowski exponent p = {p} must be >= 1"));
            }
        }
        if order > 2 {
            return bad(format!("derivative order {order} not in 0..=2"));
        }
        if !(sigma >= T::zero() && sigma.is_finite()) {
            return bad(format!("sigma = {sigma} must be >= 0"));
        }
        match kind {
            EstimatorKind::GrayWorld if !(norm == Norm::Finite(T::one()) && order == 0 && sigma == T::zero()) => {
                bad("gray-world means p=1, order 0, sigma 0".into())
            }
            EstimatorKind::WhitePatch if !(norm == Norm::Max && order == 0) => {
                bad("white-patch means p=infinity, order 0".into())
            }
            EstimatorKind::ShadesOfGray if order != 0 => bad("shades-of-gray works on pixel values (order 0)".into()),
            EstimatorKind::GrayEdge if order == 0 => bad("gray-edge needs order >= 1".into()),
            _ if order >= 1 && sigma == T::zero() => Err(Error::SigmaRequired(order)),
            _ => Ok(Self {
                kind,
                norm,
                order,
                sigma,
            }),
        }
    }

    pub fn gray_world() -> Self {
        Self::new(EstimatorKind::GrayWorld, Norm::Finite(T::one()), 0, T::zero()).expect("valid")
    }

    pub fn white_patch() -> Self {
        Self::new(EstimatorKind::WhitePatch, Norm::Max, 0, T::zero()).expect("valid")
    }

    pub fn shades_of_gray(p: T) -> Result<Self> {
        Self::new(EstimatorKind::ShadesOfGray, Norm::Finite(p), 0, T::zero())
    }

    pub fn gray_edge(order: u8, norm: Norm<T>, sigma: T) -> Result<Self> {
        Self::new(EstimatorKind::GrayEdge, norm, order, sigma)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn norm(&self) -> Norm<T> {
        self.norm
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

fn parse_norm<T: Scalar>(text: &str) -> Result<Norm<T>> {
    match text {
        "inf" | "infinity" | "max" => Ok(Norm::Max),
        _ => text
            .parse::<f64>()
            .map(|p| Norm::Finite(T::of(p)))
            .map_err(|_| Error::InvalidEstimator(format!("bad exponent {text:?}"))),
    }
}

fn parse_real<T: Scalar>(key: &str, text: &str) -> Result<T> {
    text.parse::<f64>()
        .map(T::of)
        .map_err(|_| Error::InvalidEstimator(format!("bad value {text:?} for {key}")))
}

/// Parses `gray-world`, `white-patch[:sigma=s]`, `shades-of-gray[:p=6]` or
/// `gray-edge[:n=1,p=6,sigma=6]`.
impl<T: Scalar> FromStr for EstimatorSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let kind = match name.trim() {
            "gray-world" => EstimatorKind::GrayWorld,
            "white-patch" => EstimatorKind::WhitePatch,
            "shades-of-gray" => EstimatorKind::ShadesOfGray,
            "gray-edge" => EstimatorKind::GrayEdge,
            other => return Err(Error::InvalidEstimator(format!("unknown estimator {other:?}"))),
        };
        let (mut norm, mut order, mut sigma) = match kind {
            EstimatorKind::GrayWorld => (Norm::Finite(T::one()), 0, T::zero()),
            EstimatorKind::WhitePatch => (Norm::Max, 0, T::zero()),
            EstimatorKind::ShadesOfGray => (Norm::Finite(T::of(DEFAULT_P)), 0, T::zero()),
            EstimatorKind::GrayEdge => (Norm::Finite(T::of(DEFAULT_P)), DEFAULT_ORDER, T::of(DEFAULT_SIGMA)),
        };
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidEstimator(format!("expected key=value, got {item:?}")))?;
            match (kind, key.trim()) {
                (EstimatorKind::ShadesOfGray | EstimatorKind::GrayEdge, "p") => norm = parse_norm(value.trim())?,
                (EstimatorKind::GrayEdge, "n") => {
                    order = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidEstimator(format!("bad derivative order {value:?}")))?
                }
                (EstimatorKind::WhitePatch | EstimatorKind::ShadesOfGray | EstimatorKind::GrayEdge, "sigma") => {
                    sigma = parse_real("sigma", value.trim())?
                }
                (_, key) => {
                    return Err(Error::InvalidEstimator(format!(
                        "{} takes no parameter {key:?}",
                        kind.name()
                    )))
                }
            }
        }
        Self::new(kind, norm, order, sigma)
    }
}

/// Canonical string form; parses back to the same spec.
impl<T: Scalar> fmt::Display for EstimatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.norm {
            Norm::Finite(p) => format!("{p}"),
            Norm::Max => "inf".to_string(),
        };
        match self.kind {
            EstimatorKind::GrayWorld => write!(f, "gray-world"),
            EstimatorKind::WhitePatch if self.sigma == T::zero() => write!(f, "white-patch"),
            EstimatorKind::WhitePatch => write!(f, "white-patch:sigma={}", self.sigma),
            EstimatorKind::ShadesOfGray if self.sigma == T::zero() => {
                write!(f, "shades-of-gray:p={p}")
            }
            EstimatorKind::ShadesOfGray => write!(f, "shades-of-gray:p={p},sigma={}", self.sigma),
            EstimatorKind::GrayEdge => {
                write!(f, "gray-edge:n={},p={p},sigma={}", self.order, self.sigma)
            }
        }
    }
}

/// Minkowski mean of nonnegative values, or `None` for an empty sequence.
///
/// Values are divided by their maximum before raising to `p`, so large
/// exponents cannot overflow.
pub fn minkowski_mean<T: Scalar>(values: &[T], norm: Norm<T>) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let max = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    match norm {
        Norm::Max => Some(max),
        Norm::Finite(_) if max == T::zero() => Some(T::zero()),
        Norm::Finite(p) => {
            let sum: T = values.iter().map(|v| (v.abs() / max).powf(p)).sum();
            Some(max * (sum / T::of_usize(values.len())).powf(T::one() / p))
        }
    }
}

/// Estimates the illuminant of a black-subtracted image.
pub fn estimate<T: Scalar>(
    img: &LinearImage<T>,
    spec: &EstimatorSpec<T>,
    mask: Option<&SaturationMask>,
) -> Result<Illuminant<T>> {
    estimate_with_policy(img, spec, mask, BlackLevelPolicy::Require)
}

pub fn estimate_with_policy<T: Scalar>(
    img: &LinearImage<T>,
    spec: &EstimatorSpec<T>,
    mask: Option<&SaturationMask>,
    policy: BlackLevelPolicy,
) -> Result<Illuminant<T>> {
    policy.check(img, "illuminant estimation")?;
    if let Some(m) = mask {
        m.check_dims(img)?;
        if m.count() == m.flags().len() {
            return Err(Error::AllMasked);
        }
    }
    let mut e = [T::zero(); 3];
    for (c, out) in e.iter_mut().enumerate() {
        let channel = img.channel(c);
        let response = if spec.order == 0 && spec.sigma == T::zero() {
            channel
        } else {
            gaussian_derivative(&channel, spec.order, spec.sigma)?
        };
        let values: Vec<T> = match mask {
            Some(m) => response
                .data()
                .iter()
                .zip(m.flags())
                .filter(|(_, flagged)| !**flagged)
                .map(|(v, _)| *v)
                .collect(),
            None => response.data().to_vec(),
        };
        *out = minkowski_mean(&values, spec.norm).ok_or(Error::AllMasked)?;
    }
    Illuminant::new(e)
}

/// Estimates a batch in parallel; results keep the input order.
pub fn estimate_batch<T: Scalar>(
    images: &[(&LinearImage<T>, Option<&SaturationMask>)],
    spec: &EstimatorSpec<T>,
    policy: BlackLevelPolicy,
) -> Vec<Result<Illuminant<T>>> {
    images
        .par_iter()
        .map(|(img, mask)| estimate_with_policy(img, spec, *mask, policy))
        .collect()
}
