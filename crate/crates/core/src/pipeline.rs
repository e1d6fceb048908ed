//! Image → verdict pipeline: segment, refine, filter, measure, classify.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Class, ClassifierError, Disease, KnnModel, SvmModel};
use crate::features::{connected_components, extract_features_with_regions, FeatureError, FeatureVector, Region};
use crate::imaging::kmeans::{ClusterModel, ClusterRole};
use crate::imaging::{
    kmeans_fit, median_filter, refine, select_lesion_cluster, BinaryMask, ImagingError, LabelRaster, MorphologyOrder,
    RgbImage, StructuringElement,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementShape {
    #[default]
    Square,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Segmentation cluster count; lesion selection requires 3.
    pub k: usize,
    pub se_size: usize,
    pub se_shape: ElementShape,
    pub order: MorphologyOrder,
    pub median_window: usize,
    /// Minimum unit-cube distance between the lesion centroid and the other
    /// two centroids. Below it the lesion cluster is a split of healthy
    /// tissue or soil, and the mask is cleared.
    pub min_lesion_contrast: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 3,
            se_size: 3,
            se_shape: ElementShape::Square,
            order: MorphologyOrder::Paper,
            median_window: 3,
            min_lesion_contrast: 0.15,
        }
    }
}

impl PipelineConfig {
    pub fn structuring_element(&self) -> Result<StructuringElement, ImagingError> {
        match self.se_shape {
            ElementShape::Square => StructuringElement::square(self.se_size),
            ElementShape::Cross => StructuringElement::cross(self.se_size),
        }
    }
}

/// Why the lesion mask was emptied before refinement, if it was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suppression {
    /// Fewer than two populated clusters: a flat image.
    DegenerateClusters,
    /// The lesion centroid is too close to the healthy or background one.
    LowContrast,
}

#[derive(Debug, Clone)]
pub struct Segmentation<T> {
    pub model: ClusterModel<T>,
    pub labels: LabelRaster,
    pub iterations: usize,
    /// Lesion-cluster mask straight from clustering.
    pub raw_mask: BinaryMask,
    /// After the morphological composite and the median filter.
    pub mask: BinaryMask,
    pub suppressed: Option<Suppression>,
}

pub fn segment<T: Scalar>(img: &RgbImage, cfg: &PipelineConfig) -> Result<Segmentation<T>, PipelineError> {
    let se = cfg.structuring_element()?;
    let fit = kmeans_fit::<T>(img, cfg.k)?;
    let (model, raw_mask, suppressed) = match select_lesion_cluster(&fit.model, &fit.labels) {
        Ok((tagged, mask)) => {
            if lesion_contrast(&tagged) < T::lit(cfg.min_lesion_contrast) {
                let empty = BinaryMask::empty(img.width(), img.height())?;
                (tagged, empty, Some(Suppression::LowContrast))
            } else {
                (tagged, mask, None)
            }
        }
        Err(ImagingError::DegenerateClusters) => {
            let empty = BinaryMask::empty(img.width(), img.height())?;
            (fit.model.clone(), empty, Some(Suppression::DegenerateClusters))
        }
        Err(e) => return Err(e.into()),
    };
    let refined = refine(&raw_mask, &se, cfg.order);
    let mask = median_filter(&refined, cfg.median_window)?;
    Ok(Segmentation {
        model,
        labels: fit.labels,
        iterations: fit.iterations,
        raw_mask,
        mask,
        suppressed,
    })
}

fn lesion_contrast<T: Scalar>(model: &ClusterModel<T>) -> T {
    let Some(lesion) = model.role_index(ClusterRole::Lesion) else {
        return T::zero();
    };
    let c = &model.centroids;
    (0..model.k())
        .filter(|&j| j != lesion)
        .map(|j| crate::scalar::squared_distance(&c[lesion], &c[j]).sqrt())
        .fold(T::infinity(), T::min)
}

#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub segmentation: Segmentation<T>,
    pub regions: Vec<Region>,
    pub features: FeatureVector<T>,
}

pub fn analyze<T: Scalar>(img: &RgbImage, cfg: &PipelineConfig) -> Result<Analysis<T>, PipelineError> {
    let segmentation = segment::<T>(img, cfg)?;
    let regions = connected_components(&segmentation.mask);
    let features = extract_features_with_regions(img, &segmentation.mask, &regions)?;
    Ok(Analysis {
        segmentation,
        regions,
        features,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub class: Class,
    pub disease: Option<Disease>,
}

impl Verdict {
    pub fn healthy() -> Self {
        Self {
            class: Class::Healthy,
            disease: None,
        }
    }

    pub fn infected(d: Disease) -> Self {
        Self {
            class: Class::Infected,
            disease: Some(d),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification<T> {
    pub verdict: Verdict,
    pub decision_value: T,
    pub analysis: Analysis<T>,
}

/// Runs the full pipeline: the SVM decides healthy vs. infected and, for
/// infected leaves, the KNN names the disease.
pub fn classify<T: Scalar>(
    img: &RgbImage,
    svm: &SvmModel<T>,
    knn: &KnnModel<T>,
    cfg: &PipelineConfig,
) -> Result<Classification<T>, PipelineError> {
    let analysis = analyze::<T>(img, cfg)?;
    let x = analysis.features.to_array();
    let decision_value = svm.decision(&x)?;
    let verdict = if decision_value >= T::zero() {
        Verdict::infected(knn.predict(&x)?)
    } else {
        Verdict::healthy()
    };
    Ok(Classification {
        verdict,
        decision_value,
        analysis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(lines: bool) -> RgbImage {
        let (w, h) = (24, 16);
        let mut img = RgbImage::filled(w, h, [60, 45, 30]).unwrap();
        for y in 3..h - 3 {
            for x in 3..w - 3 {
                let jitter = ((x * 7 + y * 13) % 5) as u8;
                img.set(x, y, [50 + jitter, 140 + jitter, 45]);
                if lines && (y == 6 || y == 7) && (5..w - 5).contains(&x) {
                    img.set(x, y, [235, 235, 220]);
                }
            }
        }
        img
    }

    #[test]
    fn clean_leaf_has_no_lesion() {
        let seg = segment::<f64>(&leaf(false), &PipelineConfig::default()).unwrap();
        assert_eq!(seg.mask.count_ones(), 0);
        assert_eq!(seg.suppressed, Some(Suppression::LowContrast));
    }

    #[test]
    fn white_streak_is_found() {
        let a = analyze::<f64>(&leaf(true), &PipelineConfig::default()).unwrap();
        assert_eq!(a.segmentation.suppressed, None);
        assert_eq!(a.regions.len(), 1);
        // 14x2 streak; the median vote trims one column at each end
        assert_eq!(a.regions[0].area, 24);
        assert!(a.features.lesion_mean_r > 0.9);
        assert_eq!(a.features.max_elongation, 6.0);
    }

    #[test]
    fn flat_image_is_degenerate_not_an_error() {
        let img = RgbImage::filled(5, 5, [10, 200, 10]).unwrap();
        let seg = segment::<f32>(&img, &PipelineConfig::default()).unwrap();
        assert_eq!(seg.suppressed, Some(Suppression::DegenerateClusters));
        assert_eq!(seg.mask.count_ones(), 0);
    }
}
