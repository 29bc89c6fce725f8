//! Discretised Lambertian image formation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::spectrum::{gaussian, Spectrum, LAMBDA_STEP_NM, N_SAMPLES};
use crate::error::{Error, Result};
use crate::illuminant::Illuminant;
use crate::imaging::{ImageMeta, LinearImage};
use crate::scalar::Scalar;

/// Default virtual sensor: Gaussian R/G/B peaks, sigma 30 nm.
pub const REFERENCE_PEAKS_NM: [f64; 3] = [600.0, 550.0, 450.0];
/// Second virtual sensor. Each peak moved 20 nm, R and B outward from G.
pub const SHIFTED_PEAKS_NM: [f64; 3] = [620.0, 530.0, 470.0];
pub const SENSITIVITY_SIGMA_NM: f64 = 30.0;
pub const DEFAULT_BLACK_LEVEL: f64 = 129.0;
pub const DEFAULT_SATURATION: f64 = 3692.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CameraModel<T> {
    pub camera_id: String,
    /// Channel sensitivities R, G, B.
    #[serde(with = "spectra_serde")]
    pub sensitivities: [Spectrum<T>; 3],
    pub black_level: [T; 3],
    pub saturation_level: [T; 3],
    pub gain: T,
}

mod spectra_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: Scalar>(v: &[Spectrum<T>; 3], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<T>> = v.iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Scalar>(d: D) -> Result<[Spectrum<T>; 3], D::Error> {
        use serde::de::Error as _;
        let rows: Vec<Vec<T>> = Vec::deserialize(d)?;
        if rows.len() != 3 || rows.iter().any(|r| r.len() != N_SAMPLES) {
            return Err(D::Error::custom("expected 3 sensitivity curves of 31 samples"));
        }
        Ok(std::array::from_fn(|c| std::array::from_fn(|i| rows[c][i])))
    }
}

impl<T: Scalar> CameraModel<T> {
    pub fn new(
        camera_id: impl Into<String>,
        sensitivities: [Spectrum<T>; 3],
        black_level: [T; 3],
        saturation_level: [T; 3],
        gain: T,
    ) -> Result<Self> {
        let cam = Self {
            camera_id: camera_id.into(),
            sensitivities,
            black_level,
            saturation_level,
            gain,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        for c in 0..3 {
            let s = &self.sensitivities[c];
            if s.iter().any(|v| !(*v >= T::zero() && v.is_finite())) {
                return bad(format!("channel {c} sensitivity must be finite and nonnegative"));
            }
            if s.iter().all(|v| *v == T::zero()) {
                return bad(format!("channel {c} sensitivity is identically zero"));
            }
            if !(self.black_level[c] >= T::zero() && self.black_level[c] < self.saturation_level[c]) {
                return bad(format!("channel {c}: need 0 <= black level < saturation level"));
            }
        }
        if !(self.gain > T::zero() && self.gain.is_finite()) {
            return bad(format!("gain {} must be positive", self.gain));
        }
        Ok(())
    }

    /// Gaussian sensitivities with the given R, G, B peaks.
    pub fn gaussian(camera_id: impl Into<String>, peaks_nm: [T; 3], sigma_nm: T) -> Self {
        Self::new(
            camera_id,
            peaks_nm.map(|p| gaussian(p, sigma_nm)),
            [T::of(DEFAULT_BLACK_LEVEL); 3],
            [T::of(DEFAULT_SATURATION); 3],
            T::one(),
        )
        .expect("valid reference camera")
    }

    pub fn reference() -> Self {
        Self::gaussian("synth-a", REFERENCE_PEAKS_NM.map(T::of), T::of(SENSITIVITY_SIGMA_NM))
    }

    pub fn shifted() -> Self {
        Self::gaussian("synth-b", SHIFTED_PEAKS_NM.map(T::of), T::of(SENSITIVITY_SIGMA_NM))
    }

    pub fn with_black_level(mut self, black_level: [T; 3]) -> Result<Self> {
        self.black_level = black_level;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gain(mut self, gain: T) -> Result<Self> {
        self.gain = gain;
        self.validate()?;
        Ok(self)
    }

    /// Signal range above the pedestal.
    pub fn headroom(&self) -> [T; 3] {
        std::array::from_fn(|c| self.saturation_level[c] - self.black_level[c])
    }

    /// `sum_lambda spd * rho_c * d_lambda` per channel (no gain).
    pub fn response(&self, spd: &Spectrum<T>) -> [T; 3] {
        let dl = T::of(LAMBDA_STEP_NM);
        self.sensitivities
            .map(|s| s.iter().zip(spd).map(|(r, i)| *r * *i).sum::<T>() * dl)
    }

    /// The sensor-space colour of the light: normalised `response(spd)`.
    pub fn illuminant_of(&self, spd: &Spectrum<T>) -> Result<Illuminant<T>> {
        Illuminant::new(self.response(spd))
    }

    /// The nonnegative SPD closest to `base` (least squares) whose response
    /// points along `target`, with the magnitude of `base`'s response.
    pub fn spd_with_response(&self, base: &Spectrum<T>, target: [T; 3]) -> Result<Spectrum<T>> {
        let t = Illuminant::new(target)?.rgb();
        let current = self.response(base);
        let mag = crate::illuminant::norm(&current);
        let dl = T::of(LAMBDA_STEP_NM);
        // Response matrix S (3 x 31) with d_lambda folded in; solve (S S^T) y = t - S base.
        let s: [Spectrum<T>; 3] = self.sensitivities.map(|row| row.map(|v| v * dl));
        let mut gram = [[T::zero(); 3]; 3];
        for (i, gi) in gram.iter_mut().enumerate() {
            for (j, g) in gi.iter_mut().enumerate() {
                *g = s[i].iter().zip(&s[j]).map(|(a, b)| *a * *b).sum();
            }
        }
        let rhs: [T; 3] = std::array::from_fn(|c| t[c] * mag - current[c]);
        let y = solve3(gram, rhs)
            .ok_or_else(|| Error::InvalidScene("camera sensitivities are linearly dependent".into()))?;
        let spd: Spectrum<T> = std::array::from_fn(|k| base[k] + s[0][k] * y[0] + s[1][k] * y[1] + s[2][k] * y[2]);
        if spd.iter().any(|v| *v < T::zero()) {
            return Err(Error::InvalidScene(
                "requested response needs a negative spectral power".into(),
            ));
        }
        Ok(spd)
    }
}

fn det3<T: Scalar>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule.
fn solve3<T: Scalar>(m: [[T; 3]; 3], b: [T; 3]) -> Option<[T; 3]> {
    let d = det3(&m);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    Some(std::array::from_fn(|k| {
        let mut mk = m;
        for (row, bv) in mk.iter_mut().zip(b) {
            row[k] = bv;
        }
        det3(&mk) / d
    }))
}

/// A Lambertian surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Surface<T> {
    pub name: String,
    #[serde(with = "spectrum_serde")]
    pub reflectance: Spectrum<T>,
}

mod spectrum_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, T: Scalar>(v: &Spectrum<T>, s: S) -> Result<S::Ok, S::Error> {
        v.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, T: Scalar>(d: D) -> Result<Spectrum<T>, D::Error> {
        use serde::de::Error as _;
        let v: Vec<T> = Vec::deserialize(d)?;
        v.try_into()
            .map_err(|_| D::Error::custom("expected 31 spectral samples"))
    }
}

/// Surfaces, lights and a per-pixel assignment of both.
///
/// Light 0 is the scene illuminant; extra lights exist only for deliberately
/// non-uniform scenes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralScene<T> {
    pub width: usize,
    pub height: usize,
    pub lights: Vec<Spectrum<T>>,
    pub surfaces: Vec<Surface<T>>,
    /// Surface index per pixel, row-major.
    pub surface_map: Vec<u16>,
    /// Light index per pixel, row-major.
    pub light_map: Vec<u8>,
}

impl<T: Scalar> SpectralScene<T> {
    /// One light, every pixel showing surface 0.
    pub fn uniform(width: usize, height: usize, light: Spectrum<T>, surface: Surface<T>) -> Self {
        Self {
            width,
            height,
            lights: vec![light],
            surfaces: vec![surface],
            surface_map: vec![0; width * height],
            light_map: vec![0; width * height],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        let n = self.width * self.height;
        if n == 0 {
            return bad("empty scene".into());
        }
        if self.surface_map.len() != n || self.light_map.len() != n {
            return bad("layout does not cover the image".into());
        }
        if self.lights.is_empty() {
            return bad("no light".into());
        }
        if self
            .lights
            .iter()
            .flatten()
            .any(|v| !(*v >= T::zero() && v.is_finite()))
        {
            return bad("illuminant SPD must be finite and nonnegative".into());
        }
        if self
            .surfaces
            .iter()
            .flat_map(|s| s.reflectance.iter())
            .any(|v| !(*v >= T::zero() && *v <= T::one()))
        {
            return bad("reflectances must lie in [0, 1]".into());
        }
        if self.surface_map.iter().any(|i| *i as usize >= self.surfaces.len()) {
            return bad("surface index out of range".into());
        }
        if self.light_map.iter().any(|i| *i as usize >= self.lights.len()) {
            return bad("light index out of range".into());
        }
        Ok(())
    }

    /// Paints surface `surface` under light `light` over `[x0, x1) x [y0, y1)`.
    pub fn paint(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, surface: u16, light: u8) {
        for y in y0..y1.min(self.height) {
            for x in x0..x1.min(self.width) {
                self.surface_map[y * self.width + x] = surface;
                self.light_map[y * self.width + x] = light;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RenderOptions<T> {
    /// Add the camera black level and mark the image unsubtracted.
    pub inject_black: bool,
    /// Standard deviation of additive Gaussian noise, in counts.
    pub noise_sigma: T,
    pub noise_seed: u64,
    /// Round the signal to integer counts (round half up) like an ADC.
    pub quantize: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered<T> {
    pub image: LinearImage<T>,
    /// Sensor response to light 0.
    pub true_illuminant: Illuminant<T>,
}

/// Renders `f_c = gain * sum_lambda I(lambda) R(lambda) rho_c(lambda) d_lambda`.
///
/// The signal is clipped to the headroom above the pedestal (`saturation -
/// black`), optionally quantized, then either lifted by the black level
/// (unsubtracted output) or returned as is with black level 0 and saturation
/// equal to the headroom.
pub fn render<T: Scalar>(
    scene: &SpectralScene<T>,
    cam: &CameraModel<T>,
    opts: &RenderOptions<T>,
) -> Result<Rendered<T>> {
    scene.validate()?;
    cam.validate()?;
    let true_illuminant = cam.illuminant_of(&scene.lights[0])?;
    // Per (light, surface) colour; scenes have few of each.
    let colours: Vec<Vec<[T; 3]>> = scene
        .lights
        .iter()
        .map(|light| {
            scene
                .surfaces
                .iter()
                .map(|s| {
                    let radiance: Spectrum<T> = std::array::from_fn(|k| light[k] * s.reflectance[k]);
                    cam.response(&radiance).map(|v| v * cam.gain)
                })
                .collect()
        })
        .collect();
    let headroom = cam.headroom();
    let noise = if opts.noise_sigma > T::zero() {
        Some(
            Normal::new(0.0, opts.noise_sigma.as_f64())
                .map_err(|e| Error::InvalidArgument(format!("noise sigma: {e}")))?,
        )
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.noise_seed);
    let n = scene.width * scene.height;
    let mut data = Vec::with_capacity(n * 3);
    let mut all_clipped = true;
    for (s, l) in scene.surface_map.iter().zip(&scene.light_map) {
        let rgb = colours[*l as usize][*s as usize];
        for c in 0..3 {
            let mut v = rgb[c];
            if let Some(dist) = &noise {
                v += T::of(dist.sample(&mut rng));
            }
            v = v.max(T::zero()).min(headroom[c]);
            if opts.quantize {
                v = (v + T::of(0.5)).floor().min(headroom[c].floor());
            }
            all_clipped &= v >= headroom[c];
            if opts.inject_black {
                v += cam.black_level[c];
            }
            data.push(v);
        }
    }
    if all_clipped {
        return Err(Error::AllSaturated);
    }
    let meta = if opts.inject_black {
        ImageMeta {
            black_level: cam.black_level,
            saturation_level: cam.saturation_level,
            camera_id: cam.camera_id.clone(),
            black_subtracted: false,
        }
    } else {
        ImageMeta {
            black_level: [T::zero(); 3],
            saturation_level: headroom,
            camera_id: cam.camera_id.clone(),
            black_subtracted: true,
        }
    };
    Ok(Rendered {
        image: LinearImage::new(scene.width, scene.height, data, meta)?,
        true_illuminant,
    })
}
