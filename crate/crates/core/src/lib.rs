//! Color-constancy benchmark harness and dataset-hygiene linter.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the usual `f64` instantiation.

pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod geometry;
pub mod groundtruth;
pub mod hygiene;
pub mod illuminant;
pub mod imaging;
pub mod manifest;
pub mod scalar;
pub mod synthetic;

pub use error::{Error, Result};
pub use illuminant::{angular_error, rb_chromaticity};
pub use scalar::Scalar;

pub type Illuminant = illuminant::Illuminant<f64>;
pub type Image = imaging::LinearImage<f64>;
pub type ImageMeta = imaging::ImageMeta<f64>;
pub type EstimatorSpec = estimators::EstimatorSpec<f64>;
pub type GroundTruthTable = groundtruth::GroundTruthTable<f64>;
pub type PatchAnnotation = groundtruth::PatchAnnotation<f64>;
pub type EstimateSet = evaluation::EstimateSet<f64>;
pub type ErrorStats = evaluation::ErrorStats<f64>;
pub type EvaluationRun = evaluation::EvaluationRun<f64>;
pub type Quad = geometry::Quad<f64>;
pub type CameraModel = synthetic::CameraModel<f64>;
pub type SpectralScene = synthetic::SpectralScene<f64>;
pub type SyntheticDataset = synthetic::SyntheticDataset<f64>;
pub type CameraSplitReport = hygiene::CameraSplitReport<f64>;
