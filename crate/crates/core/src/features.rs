//! Region analysis of the lesion mask and the colour + shape feature vector.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{BinaryMask, RgbImage};
use crate::scalar::Scalar;

pub const FEATURE_DIM: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "lesion_area_fraction",
    "perimeter_norm",
    "compactness",
    "region_count",
    "lesion_mean_r",
    "lesion_mean_g",
    "lesion_mean_b",
    "max_elongation",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("image is {image:?} but mask is {mask:?}")]
    DimensionMismatch {
        image: (usize, usize),
        mask: (usize, usize),
    },
    #[error("feature row has {0} values, expected 8")]
    BadLength(usize),
}

/// An 8-connected foreground region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub id: usize,
    /// `(x, y)` coordinates in raster order.
    pub pixels: Vec<(usize, usize)>,
    pub area: usize,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
    pub perimeter: usize,
}

impl Region {
    pub fn bbox_size(&self) -> (usize, usize) {
        (self.bbox.2 - self.bbox.0 + 1, self.bbox.3 - self.bbox.1 + 1)
    }

    /// Long side over short side of the bounding box.
    pub fn elongation(&self) -> f64 {
        let (w, h) = self.bbox_size();
        w.max(h) as f64 / w.min(h) as f64
    }
}

/// 8-connected labelling. Regions come back largest first; equal areas are
/// ordered by their first pixel in raster order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Region> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || !mask.bits()[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if !seen[j] && mask.bits()[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        pixels.sort_by_key(|&(x, y)| (y, x));
        let bbox = pixels
            .iter()
            .fold((usize::MAX, usize::MAX, 0, 0), |(x0, y0, x1, y1), &(x, y)| {
                (x0.min(x), y0.min(y), x1.max(x), y1.max(y))
            });
        let mut region = Region {
            id: 0,
            area: pixels.len(),
            pixels,
            bbox,
            perimeter: 0,
        };
        region.perimeter = perimeter(&region, mask);
        regions.push(region);
    }
    regions.sort_by(|a, b| {
        b.area.cmp(&a.area).then_with(|| {
            let fa = a.pixels[0];
            let fb = b.pixels[0];
            (fa.1, fa.0).cmp(&(fb.1, fb.0))
        })
    });
    for (id, r) in regions.iter_mut().enumerate() {
        r.id = id;
    }
    regions
}

/// Per-direction exposed edge totals `(top, left, bottom, right)`.
pub fn directional_edges(region: &Region, mask: &BinaryMask) -> [usize; 4] {
    let mut edges = [0usize; 4];
    for &(x, y) in &region.pixels {
        let (x, y) = (x as isize, y as isize);
        let exposed = [
            !mask.get_or_false(x, y - 1),
            !mask.get_or_false(x - 1, y),
            !mask.get_or_false(x, y + 1),
            !mask.get_or_false(x + 1, y),
        ];
        for (e, hit) in edges.iter_mut().zip(exposed) {
            *e += hit as usize;
        }
    }
    edges
}

/// Exposed-edge perimeter: the sum of the top, left, bottom and right edge
/// totals. A side is exposed when its neighbour is background or off-image.
pub fn perimeter(region: &Region, mask: &BinaryMask) -> usize {
    directional_edges(region, mask).iter().sum()
}

/// Shape and colour descriptors of a lesion mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureVector<T> {
    pub lesion_area_fraction: T,
    /// Total exposed perimeter over the image frame length `2(w + h)`.
    pub perimeter_norm: T,
    /// `P² / (4πA)` over the whole mask; 0 when the mask is empty.
    pub compactness: T,
    pub region_count: T,
    pub lesion_mean_r: T,
    pub lesion_mean_g: T,
    pub lesion_mean_b: T,
    /// Largest bounding-box aspect ratio among regions; 1 without regions.
    pub max_elongation: T,
}

impl<T: Scalar> FeatureVector<T> {
    /// Vector of an image without lesion pixels.
    pub fn zero_lesion() -> Self {
        let z = T::zero();
        Self {
            lesion_area_fraction: z,
            perimeter_norm: z,
            compactness: z,
            region_count: z,
            lesion_mean_r: z,
            lesion_mean_g: z,
            lesion_mean_b: z,
            max_elongation: T::one(),
        }
    }

    pub fn to_array(&self) -> [T; FEATURE_DIM] {
        [
            self.lesion_area_fraction,
            self.perimeter_norm,
            self.compactness,
            self.region_count,
            self.lesion_mean_r,
            self.lesion_mean_g,
            self.lesion_mean_b,
            self.max_elongation,
        ]
    }

    pub fn from_slice(v: &[T]) -> Result<Self, FeatureError> {
        let a: [T; FEATURE_DIM] = v.try_into().map_err(|_| FeatureError::BadLength(v.len()))?;
        Ok(Self {
            lesion_area_fraction: a[0],
            perimeter_norm: a[1],
            compactness: a[2],
            region_count: a[3],
            lesion_mean_r: a[4],
            lesion_mean_g: a[5],
            lesion_mean_b: a[6],
            max_elongation: a[7],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn csv_header() -> String {
        FEATURE_NAMES.join(",")
    }

    /// Eight comma-separated values in fixed-point notation, 6 decimals.
    pub fn to_csv_row(&self) -> String {
        self.to_array()
            .iter()
            .map(|v| format!("{:.6}", v.to_f64_lossy()))
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn extract_features<T: Scalar>(img: &RgbImage, mask: &BinaryMask) -> Result<FeatureVector<T>, FeatureError> {
    let regions = connected_components(mask);
    extract_features_with_regions(img, mask, &regions)
}

/// Same as [`extract_features`] for callers that already labelled the mask.
pub fn extract_features_with_regions<T: Scalar>(
    img: &RgbImage,
    mask: &BinaryMask,
    regions: &[Region],
) -> Result<FeatureVector<T>, FeatureError> {
    let (w, h) = (img.width(), img.height());
    if (w, h) != (mask.width(), mask.height()) {
        return Err(FeatureError::DimensionMismatch {
            image: (w, h),
            mask: (mask.width(), mask.height()),
        });
    }
    let area: usize = regions.iter().map(|r| r.area).sum();
    if area == 0 {
        return Ok(FeatureVector::zero_lesion());
    }
    let perim: usize = regions.iter().map(|r| r.perimeter).sum();
    let mut sums = [0u64; 3];
    for (p, _) in img.pixels().iter().zip(mask.bits()).filter(|(_, &b)| b) {
        for c in 0..3 {
            sums[c] += p[c] as u64;
        }
    }
    let area_t = T::from_count(area);
    let perim_t = T::from_count(perim);
    let pi = T::lit(std::f64::consts::PI);
    let four = T::lit(4.0);
    let mean = |s: u64| T::lit(s as f64) / (area_t * T::lit(255.0));
    let elongation = regions
        .iter()
        .map(|r| {
            let (bw, bh) = r.bbox_size();
            T::from_count(bw.max(bh)) / T::from_count(bw.min(bh))
        })
        .fold(T::one(), |a, b| a.max(b));
    Ok(FeatureVector {
        lesion_area_fraction: area_t / T::from_count(w * h),
        perimeter_norm: perim_t / T::from_count(2 * (w + h)),
        compactness: perim_t * perim_t / (four * pi * area_t),
        region_count: T::from_count(regions.len()),
        lesion_mean_r: mean(sums[0]),
        lesion_mean_g: mean(sums[1]),
        lesion_mean_b: mean(sums[2]),
        max_elongation: elongation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ascii(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_ascii(rows).unwrap()
    }

    #[test]
    fn labelling_basics() {
        assert!(connected_components(&BinaryMask::empty(3, 3).unwrap()).is_empty());
        let diag = connected_components(&ascii(&["#.", ".#"]));
        assert_eq!(diag.len(), 1);
        assert_eq!(diag[0].area, 2);
        assert_eq!(diag[0].perimeter, 8);
    }

    #[test]
    fn ordering_by_area_then_position() {
        let regions = connected_components(&ascii(&["#..##", "....#", "#....", "....."]));
        let firsts: Vec<_> = regions.iter().map(|r| (r.area, r.pixels[0])).collect();
        assert_eq!(firsts, vec![(3, (3, 0)), (1, (0, 0)), (1, (0, 2))]);
        assert_eq!(regions.iter().map(|r| r.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn perimeter_reference_shapes() {
        let single = connected_components(&ascii(&["...", ".#.", "..."]));
        assert_eq!(single[0].perimeter, 4);
        let square = connected_components(&BinaryMask::full(3, 3).unwrap());
        assert_eq!(square[0].perimeter, 12);
        assert_eq!(
            directional_edges(&square[0], &BinaryMask::full(3, 3).unwrap()),
            [3, 3, 3, 3]
        );
    }

    #[test]
    fn degenerate_and_uniform_vectors() {
        let img = RgbImage::filled(4, 4, [255, 0, 0]).unwrap();
        let none: FeatureVector<f64> = extract_features(&img, &BinaryMask::empty(4, 4).unwrap()).unwrap();
        assert_eq!(none.to_array(), [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let all: FeatureVector<f64> = extract_features(&img, &BinaryMask::full(4, 4).unwrap()).unwrap();
        assert_eq!(all.lesion_area_fraction, 1.0);
        assert_eq!(
            (all.lesion_mean_r, all.lesion_mean_g, all.lesion_mean_b),
            (1.0, 0.0, 0.0)
        );
        assert_eq!(all.region_count, 1.0);
    }

    #[test]
    fn red_block_in_10x10() {
        let mut img = RgbImage::filled(10, 10, [0, 128, 0]).unwrap();
        let mut mask = BinaryMask::empty(10, 10).unwrap();
        for y in 4..6 {
            for x in 3..6 {
                img.set(x, y, [255, 0, 0]);
                mask.set(x, y, true);
            }
        }
        let f: FeatureVector<f64> = extract_features(&img, &mask).unwrap();
        assert!((f.lesion_area_fraction - 0.06).abs() < 1e-15);
        assert!((f.perimeter_norm - 10.0 / 40.0).abs() < 1e-15);
        assert!((f.compactness - 100.0 / (24.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(f.max_elongation, 1.5);
        assert_eq!(f.lesion_mean_r, 1.0);
        let f32v: FeatureVector<f32> = extract_features(&img, &mask).unwrap();
        assert!((f32v.compactness - 100.0 / (24.0 * std::f32::consts::PI)).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch() {
        let img = RgbImage::filled(4, 4, [0, 0, 0]).unwrap();
        let err = extract_features::<f64>(&img, &BinaryMask::empty(4, 5).unwrap()).unwrap_err();
        assert!(matches!(err, FeatureError::DimensionMismatch { .. }));
    }

    #[test]
    fn csv_row_is_fixed_point() {
        let f = FeatureVector::<f64>::zero_lesion();
        assert_eq!(
            f.to_csv_row(),
            "0.000000,0.000000,0.000000,0.000000,0.000000,0.000000,0.000000,1.000000"
        );
        assert_eq!(FeatureVector::<f64>::csv_header().split(',').count(), 8);
        assert_eq!(FeatureVector::from_slice(&f.to_array()).unwrap(), f);
        assert_eq!(
            FeatureVector::<f64>::from_slice(&[0.0; 3]).unwrap_err(),
            FeatureError::BadLength(3)
        );
    }
}
