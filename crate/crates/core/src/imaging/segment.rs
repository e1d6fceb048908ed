use super::kmeans::{ClusterModel, ClusterRole};
use super::{BinaryMask, ImagingError, LabelRaster};
use crate::scalar::Scalar;

/// Tags the three clusters of a segmentation and returns the lesion mask.
///
/// Background is the cluster touching the image frame most often, Healthy
/// the larger of the remaining two, Lesion the last one. Ties go to the lower
/// cluster index.
pub fn select_lesion_cluster<T: Scalar>(
    model: &ClusterModel<T>,
    labels: &LabelRaster,
) -> Result<(ClusterModel<T>, BinaryMask), ImagingError> {
    if model.k() != 3 {
        return Err(ImagingError::KNotThree(model.k()));
    }
    let mut counts = [0usize; 3];
    for &l in labels.labels() {
        if l >= 3 {
            return Err(ImagingError::KNotThree(l + 1));
        }
        counts[l] += 1;
    }
    if counts.iter().filter(|&&n| n == 0).count() >= 2 {
        return Err(ImagingError::DegenerateClusters);
    }
    let mut border = [0usize; 3];
    for i in labels.border_indices() {
        border[labels.labels()[i]] += 1;
    }
    let background = argmax_lowest(&border, |_| true);
    let healthy = argmax_lowest(&counts, |j| j != background);
    let lesion = (0..3)
        .find(|&j| j != background && j != healthy)
        .expect("three clusters");

    let mut tagged = model.clone();
    tagged.counts = counts.to_vec();
    tagged.roles = vec![None; 3];
    tagged.roles[background] = Some(ClusterRole::Background);
    tagged.roles[healthy] = Some(ClusterRole::Healthy);
    tagged.roles[lesion] = Some(ClusterRole::Lesion);

    let bits = labels.labels().iter().map(|&l| l == lesion).collect();
    let mask = BinaryMask::new(labels.width(), labels.height(), bits)?;
    Ok((tagged, mask))
}

fn argmax_lowest(values: &[usize; 3], allowed: impl Fn(usize) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for j in (0..3).filter(|&j| allowed(j)) {
        if best.is_none_or(|b| values[j] > values[b]) {
            best = Some(j);
        }
    }
    best.expect("at least one candidate")
}
