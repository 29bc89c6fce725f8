//! Spectral renderer and seeded synthetic datasets with exactly known illuminants.

mod benchmark;
mod render;
mod spectrum;

pub use benchmark::{
    benchmark_scene, chart_patches, make_benchmark, random_reflectance, BenchmarkConfig, SyntheticDataset,
    SyntheticItem, CHART_LEVELS, MAX_SCENE_REFLECTANCE,
};
pub use render::{
    render, CameraModel, RenderOptions, Rendered, SpectralScene, Surface, DEFAULT_BLACK_LEVEL, DEFAULT_SATURATION,
    REFERENCE_PEAKS_NM, SENSITIVITY_SIGMA_NM, SHIFTED_PEAKS_NM,
};
pub use spectrum::{flat, gaussian, planckian_spd, wavelengths, Spectrum, LAMBDA_MIN_NM, LAMBDA_STEP_NM, N_SAMPLES};
