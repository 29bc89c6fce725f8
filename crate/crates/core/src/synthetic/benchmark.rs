//! Seeded synthetic benchmark: random matte scenes with a neutral chart row,
//! rendered through one or more virtual cameras under Planckian light.

use std::fs;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::render::{render, CameraModel, RenderOptions, SpectralScene, Surface};
use super::spectrum::{flat, planckian_spd, Spectrum, N_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::Quad;
use crate::groundtruth::{write_annotations, GroundTruthTable, PatchAnnotation, DEFAULT_INSET};
use crate::illuminant::Illuminant;
use crate::imaging::{write_ppm16, LinearImage};
use crate::manifest::{Manifest, ManifestEntry};
use crate::scalar::Scalar;

/// Flat reflectances of the neutral chart row, brightest first.
pub const CHART_LEVELS: [f64; 6] = [0.9, 0.6, 0.35, 0.2, 0.09, 0.03];
/// Upper bound for random scene reflectances; keeps the 0.9 chart patch the
/// brightest surface in every channel.
pub const MAX_SCENE_REFLECTANCE: f64 = 0.8;
const CHART_BODY_REFLECTANCE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct BenchmarkConfig<T> {
    pub n_images: usize,
    pub cameras: Vec<CameraModel<T>>,
    /// Images per camera, in camera order. `None` splits contiguously into
    /// near-equal groups.
    pub camera_counts: Option<Vec<usize>>,
    pub cct_range: (T, T),
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub inject_black: bool,
    pub noise_sigma: T,
    pub quantize: bool,
    /// Brightest chart patch's largest channel, as a fraction of the headroom.
    pub exposure: T,
}

impl<T: Scalar> BenchmarkConfig<T> {
    pub fn new(n_images: usize, cameras: Vec<CameraModel<T>>, seed: u64) -> Self {
        Self {
            n_images,
            cameras,
            camera_counts: None,
            cct_range: (T::of(2500.0), T::of(7500.0)),
            seed,
            width: 64,
            height: 64,
            inject_black: false,
            noise_sigma: T::zero(),
            quantize: false,
            exposure: T::of(0.6),
        }
    }

    fn camera_of_each(&self) -> Result<Vec<usize>> {
        let n = self.n_images;
        let k = self.cameras.len();
        match &self.camera_counts {
            Some(counts) => {
                if counts.len() != k || counts.iter().sum::<usize>() != n {
                    return Err(Error::InvalidArgument(format!(
                        "camera counts {counts:?} must list one count per camera and sum to {n}"
                    )));
                }
                Ok(counts
                    .iter()
                    .enumerate()
                    .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
                    .collect())
            }
            None => Ok((0..n).map(|i| i * k / n).collect()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.n_images == 0 {
            return bad("need at least one image");
        }
        if self.cameras.is_empty() {
            return bad("need at least one camera");
        }
        if self.width < 24 || self.height < 16 {
            return bad("images must be at least 24x16 to hold the chart row");
        }
        let (lo, hi) = self.cct_range;
        planckian_spd(lo)?;
        planckian_spd(hi)?;
        if lo > hi {
            return bad("CCT range is reversed");
        }
        if !(self.exposure > T::zero() && self.exposure <= T::one()) {
            return bad("exposure must lie in (0, 1]");
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < T::zero() {
            return bad("noise sigma must be nonnegative");
        }
        let mut ids = std::collections::HashSet::new();
        for c in &self.cameras {
            c.validate()?;
            if !ids.insert(c.camera_id.as_str()) {
                return bad("camera ids must be distinct");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticItem<T> {
    pub image_id: String,
    pub camera_index: usize,
    pub cct: T,
    pub scene: SpectralScene<T>,
    /// Gain the image was rendered with.
    pub gain: T,
    pub noise_seed: u64,
    pub image: LinearImage<T>,
    pub true_illuminant: Illuminant<T>,
}

impl<T: Scalar> SyntheticItem<T> {
    /// Camera used for this item, with its gain.
    pub fn camera(&self, cameras: &[CameraModel<T>]) -> CameraModel<T> {
        let mut cam = cameras[self.camera_index].clone();
        cam.gain = self.gain;
        cam
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticDataset<T> {
    pub config: BenchmarkConfig<T>,
    pub items: Vec<SyntheticItem<T>>,
    pub annotations: Vec<PatchAnnotation<T>>,
    /// Exact sensor-space illuminants.
    pub ground_truth: GroundTruthTable<T>,
}

/// Smooth random reflectance: a clamped sum of a constant and three cosine harmonics.
pub fn random_reflectance<T: Scalar, R: Rng>(rng: &mut R) -> Spectrum<T> {
    let base: f64 = rng.random_range(0.1..0.6);
    let harmonics: [(f64, f64); 3] = std::array::from_fn(|_| {
        (
            rng.random_range(-0.25..0.25),
            rng.random_range(0.0..std::f64::consts::TAU),
        )
    });
    std::array::from_fn(|i| {
        let t = i as f64 / (N_SAMPLES - 1) as f64;
        let v = base
            + harmonics
                .iter()
                .enumerate()
                .map(|(k, (a, phi))| a * ((k + 1) as f64 * std::f64::consts::PI * t + phi).cos())
                .sum::<f64>();
        T::of(v.clamp(0.0, MAX_SCENE_REFLECTANCE))
    })
}

/// Chart row geometry: patch rectangles `(x0, y0, x1, y1)` in pixels,
/// brightest first.
pub fn chart_patches(width: usize, height: usize) -> Vec<(usize, usize, usize, usize)> {
    let band = height / 4;
    let (y0, y1) = (height - band + 2, height - 2);
    (0..CHART_LEVELS.len())
        .map(|i| {
            let x0 = i * width / CHART_LEVELS.len();
            let x1 = (i + 1) * width / CHART_LEVELS.len();
            (x0 + 1, y0, x1 - 1, y1)
        })
        .collect()
}

/// Random tiles above a chart row of flat neutral patches; one tile is a
/// zero-reflectance light trap.
pub fn benchmark_scene<T: Scalar, R: Rng>(
    width: usize,
    height: usize,
    light: Spectrum<T>,
    rng: &mut R,
) -> SpectralScene<T> {
    let mut scene = SpectralScene::uniform(
        width,
        height,
        light,
        Surface {
            name: "chart-body".into(),
            reflectance: flat(T::of(CHART_BODY_REFLECTANCE)),
        },
    );
    for (i, level) in CHART_LEVELS.iter().enumerate() {
        scene.surfaces.push(Surface {
            name: format!("chart-{i}"),
            reflectance: flat(T::of(*level)),
        });
    }
    scene.surfaces.push(Surface {
        name: "light-trap".into(),
        reflectance: flat(T::zero()),
    });
    let trap = (scene.surfaces.len() - 1) as u16;

    let top = height - height / 4;
    let tile = (width / 8).max(4);
    let trap_tile = rng.random_range(0..width.div_ceil(tile));
    for (ty, y0) in (0..top).step_by(tile).enumerate() {
        for (tx, x0) in (0..width).step_by(tile).enumerate() {
            let idx = if ty == 0 && tx == trap_tile {
                trap
            } else {
                scene.surfaces.push(Surface {
                    name: format!("tile-{tx}-{ty}"),
                    reflectance: random_reflectance(rng),
                });
                (scene.surfaces.len() - 1) as u16
            };
            scene.paint(x0, y0, x0 + tile, (y0 + tile).min(top), idx, 0);
        }
    }
    for (i, (x0, y0, x1, y1)) in chart_patches(width, height).into_iter().enumerate() {
        scene.paint(x0, y0, x1, y1, 1 + i as u16, 0);
    }
    scene
}

fn image_id(i: usize, n: usize) -> String {
    let digits = n.to_string().len().max(4);
    format!("{:0digits$}", i + 1)
}

/// Renders the whole dataset. Image `i` draws all its randomness from
/// `ChaCha8(seed ^ i)`, so images render in parallel yet reproducibly.
pub fn make_benchmark<T: Scalar>(config: BenchmarkConfig<T>) -> Result<SyntheticDataset<T>> {
    config.validate()?;
    let assignment = config.camera_of_each()?;
    let n = config.n_images;
    let items = (0..n)
        .into_par_iter()
        .map(|i| -> Result<SyntheticItem<T>> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ i as u64);
            let (lo, hi) = config.cct_range;
            let cct = if lo == hi {
                lo
            } else {
                T::of(rng.random_range(lo.as_f64()..=hi.as_f64()))
            };
            let light = planckian_spd(cct)?;
            let scene = benchmark_scene(config.width, config.height, light, &mut rng);
            let noise_seed = rng.next_u64();

            let camera_index = assignment[i];
            let base = &config.cameras[camera_index];
            let white = base.response(&light).map(|v| v * T::of(CHART_LEVELS[0]));
            let peak = white.iter().copied().fold(T::zero(), T::max);
            let room = base.headroom().iter().copied().fold(T::infinity(), T::min);
            let gain = config.exposure * room / peak;
            let cam = base.clone().with_gain(gain)?;
            let opts = RenderOptions {
                inject_black: config.inject_black,
                noise_sigma: config.noise_sigma,
                noise_seed,
                quantize: config.quantize,
            };
            let rendered = render(&scene, &cam, &opts)?;
            Ok(SyntheticItem {
                image_id: image_id(i, n),
                camera_index,
                cct,
                scene,
                gain,
                noise_seed,
                image: rendered.image,
                true_illuminant: rendered.true_illuminant,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let quads: Vec<Quad<T>> = chart_patches(config.width, config.height)
        .into_iter()
        .map(|(x0, y0, x1, y1)| Quad::rect(T::of_usize(x0), T::of_usize(y0), T::of_usize(x1), T::of_usize(y1)))
        .collect();
    let mut annotations = Vec::with_capacity(n);
    let mut ground_truth = GroundTruthTable::new();
    for item in &items {
        annotations.push(PatchAnnotation::new(
            item.image_id.clone(),
            quads.clone(),
            T::of(DEFAULT_INSET),
        )?);
        ground_truth.insert(
            item.image_id.clone(),
            item.true_illuminant,
            config.cameras[item.camera_index].camera_id.clone(),
        )?;
    }
    Ok(SyntheticDataset {
        config,
        items,
        annotations,
        ground_truth,
    })
}

impl<T: Scalar> SyntheticDataset<T> {
    /// Writes `images/<id>.ppm` (+ sidecars), `annotations.json`,
    /// `ground_truth.csv` and `manifest.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Manifest> {
        let images = dir.join("images");
        fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
        self.items
            .par_iter()
            .map(|item| write_ppm16(&item.image, &images.join(format!("{}.ppm", item.image_id))))
            .collect::<Result<Vec<()>>>()?;
        write_annotations(&self.annotations, &dir.join("annotations.json"))?;
        self.ground_truth.write_csv(&dir.join("ground_truth.csv"))?;
        let manifest = Manifest {
            entries: self
                .items
                .iter()
                .map(|item| ManifestEntry {
                    image_id: item.image_id.clone(),
                    camera_id: self.config.cameras[item.camera_index].camera_id.clone(),
                    image: Some(format!("images/{}.ppm", item.image_id)),
                    cct: Some(item.cct.as_f64()),
                })
                .collect(),
            annotations: Some("annotations.json".into()),
            ground_truth: Some("ground_truth.csv".into()),
        };
        manifest.write(&dir.join("manifest.json"))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundtruth::extract_ground_truth;
    use crate::imaging::BlackLevelPolicy;
    use crate::imaging::{saturation_mask, ClipMargin};

    fn small(n: usize, seed: u64) -> BenchmarkConfig<f64> {
        BenchmarkConfig::new(n, vec![CameraModel::reference(), CameraModel::shifted()], seed)
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = make_benchmark(small(3, 11)).unwrap();
        let b = make_benchmark(small(3, 11)).unwrap();
        let c = make_benchmark(small(3, 12)).unwrap();
        for (x, y) in a.items.iter().zip(&b.items) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.cct, y.cct);
        }
        assert_ne!(a.items[0].image, c.items[0].image);
    }

    #[test]
    fn chart_recovers_truth_and_nothing_clips() {
        let ds = make_benchmark(small(4, 5)).unwrap();
        for (item, ann) in ds.items.iter().zip(&ds.annotations) {
            let mask = saturation_mask(&item.image, ClipMargin::default());
            assert_eq!(mask.count(), 0);
            let e = extract_ground_truth(&item.image, ann, &mask, BlackLevelPolicy::Require).unwrap();
            assert!(e.angle_to(&item.true_illuminant) < 1e-9);
        }
    }

    #[test]
    fn contiguous_camera_split() {
        let ds = make_benchmark(small(5, 1)).unwrap();
        let cams: Vec<usize> = ds.items.iter().map(|i| i.camera_index).collect();
        assert_eq!(cams, [0, 0, 0, 1, 1]);
        let mut cfg = small(5, 1);
        cfg.camera_counts = Some(vec![1, 4]);
        let ds = make_benchmark(cfg).unwrap();
        assert_eq!(ds.items[0].camera_index, 0);
        assert_eq!(ds.items[1].camera_index, 1);
        assert_eq!(ds.ground_truth.get("0002").unwrap().camera_id, "synth-b");
    }

    #[test]
    fn reflectances_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r: Spectrum<f64> = random_reflectance(&mut rng);
            assert!(r.iter().all(|v| (0.0..=MAX_SCENE_REFLECTANCE).contains(v)));
        }
    }
}
