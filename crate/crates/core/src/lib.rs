//! Sugarcane crop monitoring: leaf-image disease classification and field
//! sensor telemetry.
//!
//! The image path runs K-means colour segmentation, binary morphology on the
//! lesion mask, region/shape feature extraction and a linear SVM
//! (healthy vs. infected) followed by a KNN disease labeller. The telemetry
//! path covers a simulated DHT11/soil-probe node, a text line protocol, an
//! append-only ingestion store and an agronomic rule engine that raises
//! alerts.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the pipeline and the
//! CLI use.

pub mod agronomy;
pub mod classifier;
pub mod features;
pub mod imaging;
pub mod pipeline;
pub mod scalar;
pub mod telemetry;

pub use scalar::Scalar;

pub use imaging::{BinaryMask, GrayImage, LabelRaster, RgbImage, StructuringElement};

/// K-means cluster model over `f64` colour coordinates.
pub type ClusterModel = imaging::kmeans::ClusterModel<f64>;
/// Single-precision cluster model.
pub type ClusterModelF32 = imaging::kmeans::ClusterModel<f32>;

/// Eight-component colour + shape feature vector.
pub type FeatureVector = features::FeatureVector<f64>;
pub type FeatureVectorF32 = features::FeatureVector<f32>;

/// Linear soft-margin SVM.
pub type SvmModel = classifier::svm::SvmModel<f64>;
pub type SvmModelF32 = classifier::svm::SvmModel<f32>;

/// K-nearest-neighbour disease labeller.
pub type KnnModel = classifier::knn::KnnModel<f64>;
pub type KnnModelF32 = classifier::knn::KnnModel<f32>;

pub type TrainingSet = classifier::svm::TrainingSet<f64>;
