//! Lloyd's K-means over pixel colours in the unit RGB cube.
//!
//! Initialisation is farthest-first traversal seeded at the brightest pixel,
//! so a fit is a pure function of the image and `k`.

use serde::{Deserialize, Serialize};

use super::{luminance, ImagingError, LabelRaster, RgbImage};
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterRole {
    Background,
    Healthy,
    Lesion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ClusterModel<T> {
    pub centroids: Vec<[T; 3]>,
    /// Pixels assigned to each cluster by the final assignment step.
    pub counts: Vec<usize>,
    /// Filled in by [`select_lesion_cluster`](super::select_lesion_cluster).
    pub roles: Vec<Option<ClusterRole>>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn role_index(&self, role: ClusterRole) -> Option<usize> {
        self.roles.iter().position(|r| *r == Some(role))
    }
}

/// Outcome of [`kmeans_fit`], including the per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct KmeansFit<T> {
    pub model: ClusterModel<T>,
    pub labels: LabelRaster,
    /// Within-cluster sum of squared distances after the initial assignment
    /// and after every Lloyd iteration.
    pub objective_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> KmeansFit<T> {
    pub fn objective(&self) -> T {
        *self.objective_history.last().expect("history never empty")
    }
}

pub fn normalized_pixels<T: Scalar>(img: &RgbImage) -> Vec<[T; 3]> {
    let scale = T::lit(255.0);
    img.pixels()
        .iter()
        .map(|p| {
            [
                T::lit(p[0] as f64) / scale,
                T::lit(p[1] as f64) / scale,
                T::lit(p[2] as f64) / scale,
            ]
        })
        .collect()
}

fn dist2<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    crate::scalar::squared_distance(a, b)
}

/// Nearest centroid, ties resolved toward the lower index.
fn nearest<T: Scalar>(p: &[T; 3], centroids: &[[T; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = dist2(p, &centroids[0]);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist2(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn assign_points<T: Scalar>(points: &[[T; 3]], centroids: &[[T; 3]]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

pub fn objective<T: Scalar>(points: &[[T; 3]], centroids: &[[T; 3]], labels: &[usize]) -> T {
    points
        .iter()
        .zip(labels)
        .fold(T::zero(), |acc, (p, &l)| acc + dist2(p, &centroids[l]))
}

/// Farthest-first traversal starting from the brightest pixel (lowest index
/// among equally bright pixels). Exposed so tests can replay a fit.
pub fn farthest_first_init<T: Scalar>(img: &RgbImage, k: usize) -> Result<Vec<[T; 3]>, ImagingError> {
    let points = normalized_pixels::<T>(img);
    farthest_first_points(img, &points, k)
}

fn farthest_first_points<T: Scalar>(img: &RgbImage, points: &[[T; 3]], k: usize) -> Result<Vec<[T; 3]>, ImagingError> {
    if k == 0 {
        return Err(ImagingError::KZero);
    }
    if k > points.len() {
        return Err(ImagingError::KTooLarge {
            k,
            pixels: points.len(),
        });
    }
    let mut brightest = 0;
    let mut best_lum = 0u8;
    for (i, &p) in img.pixels().iter().enumerate() {
        let l = luminance(p);
        if l > best_lum {
            best_lum = l;
            brightest = i;
        }
    }
    let mut centroids = vec![points[brightest]];
    let mut min_d: Vec<T> = points.iter().map(|p| dist2(p, &points[brightest])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, d) in min_d.iter().enumerate() {
            if *d > min_d[far] {
                far = i;
            }
        }
        let c = points[far];
        centroids.push(c);
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
    }
    Ok(centroids)
}

/// Mean update. Clusters left without members are re-seeded, one at a time,
/// with the point lying farthest from its assigned centroid.
fn update_centroids<T: Scalar>(points: &[[T; 3]], labels: &[usize], k: usize) -> Vec<[T; 3]> {
    let mut sums = vec![[T::zero(); 3]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        for c in 0..3 {
            sums[l][c] = sums[l][c] + p[c];
        }
        counts[l] += 1;
    }
    let mut centroids: Vec<[T; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| {
            if n == 0 {
                [T::zero(); 3]
            } else {
                let n = T::from_count(n);
                [s[0] / n, s[1] / n, s[2] / n]
            }
        })
        .collect();
    let mut taken = vec![false; points.len()];
    for j in 0..k {
        if counts[j] != 0 {
            continue;
        }
        let mut far: Option<(usize, T)> = None;
        for (i, p) in points.iter().enumerate() {
            if taken[i] || counts[labels[i]] <= 1 {
                continue;
            }
            let d = dist2(p, &centroids[labels[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        // Fewer distinct donors than empty clusters: leave the centroid where
        // it is; it stays empty.
        if let Some((i, _)) = far {
            taken[i] = true;
            counts[labels[i]] -= 1;
            centroids[j] = points[i];
        }
    }
    centroids
}

pub fn kmeans_fit<T: Scalar>(img: &RgbImage, k: usize) -> Result<KmeansFit<T>, ImagingError> {
    let points = normalized_pixels::<T>(img);
    let mut centroids = farthest_first_points(img, &points, k)?;
    let mut labels = assign_points(&points, &centroids);
    let mut history = vec![objective(&points, &centroids, &labels)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        centroids = update_centroids(&points, &labels, k);
        let next = assign_points(&points, &centroids);
        iterations += 1;
        history.push(objective(&points, &centroids, &next));
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    let mut counts = vec![0usize; k];
    for &l in &labels {
        counts[l] += 1;
    }
    Ok(KmeansFit {
        model: ClusterModel {
            centroids,
            counts,
            roles: vec![None; k],
        },
        labels: LabelRaster::new(img.width(), img.height(), labels)?,
        objective_history: history,
        iterations,
        converged,
    })
}

/// Maps every pixel to its nearest centroid (Euclidean in the unit cube).
pub fn kmeans_assign<T: Scalar>(model: &ClusterModel<T>, img: &RgbImage) -> LabelRaster {
    assert!(model.k() >= 1, "cluster model has no centroids");
    let points = normalized_pixels::<T>(img);
    let labels = assign_points(&points, &model.centroids);
    LabelRaster::new(img.width(), img.height(), labels).expect("image dimensions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves(left: [u8; 3], right: [u8; 3], w: usize, h: usize) -> RgbImage {
        let px = (0..w * h).map(|i| if i % w < w / 2 { left } else { right }).collect();
        RgbImage::new(w, h, px).unwrap()
    }

    #[test]
    fn k1_is_channel_mean() {
        let img = RgbImage::new(3, 1, vec![[255, 0, 0], [0, 51, 0], [0, 0, 102]]).unwrap();
        let fit = kmeans_fit::<f64>(&img, 1).unwrap();
        let c = fit.model.centroids[0];
        let expect = [1.0 / 3.0, 0.2 / 3.0, 0.4 / 3.0];
        for ch in 0..3 {
            assert!((c[ch] - expect[ch]).abs() < 1e-12);
        }
        assert_eq!(fit.model.counts, vec![3]);
    }

    #[test]
    fn separated_point_masses_recovered_exactly() {
        let img = halves([0, 255, 0], [255, 0, 0], 8, 4);
        let fit = kmeans_fit::<f64>(&img, 2).unwrap();
        let mut c = fit.model.centroids.clone();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        assert!(fit.converged);
        let f32fit = kmeans_fit::<f32>(&img, 2).unwrap();
        assert_eq!(f32fit.model.centroids[0], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn k_bounds() {
        let img = RgbImage::filled(2, 2, [1, 2, 3]).unwrap();
        assert_eq!(
            kmeans_fit::<f64>(&img, 5).unwrap_err(),
            ImagingError::KTooLarge { k: 5, pixels: 4 }
        );
        assert_eq!(kmeans_fit::<f64>(&img, 0).unwrap_err(), ImagingError::KZero);
    }

    #[test]
    fn uniform_image_with_extra_clusters() {
        let img = RgbImage::filled(4, 4, [30, 160, 40]).unwrap();
        let fit = kmeans_fit::<f64>(&img, 3).unwrap();
        assert_eq!(fit.model.counts.iter().sum::<usize>(), 16);
        assert_eq!(fit.objective(), 0.0);
    }

    #[test]
    fn assign_ties_go_to_lower_index() {
        let model = ClusterModel::<f64> {
            centroids: vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [1.0, 0.0, 0.0]],
            counts: vec![0; 3],
            roles: vec![None; 3],
        };
        // (0.5,0,0) is equidistant from centroids 0 and 2.
        let img = RgbImage::new(2, 1, vec![[255, 255, 255], [0, 0, 0]]).unwrap();
        assert_eq!(kmeans_assign(&model, &img).labels(), &[1, 0]);
        let half = [0.5, 0.0, 0.0];
        assert_eq!(nearest(&half, &model.centroids), 0);
    }
}
