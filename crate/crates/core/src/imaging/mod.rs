//! Raster types and the image-side stages of the pipeline: decoding,
//! grayscale conversion, K-means segmentation and binary morphology.

pub mod kmeans;
pub mod median;
pub mod morphology;
pub mod ppm;
pub mod segment;
pub mod skeleton;

use thiserror::Error;

pub use kmeans::{kmeans_assign, kmeans_fit, ClusterRole, KmeansFit};
pub use median::{median_filter, MedianRaster};
pub use morphology::{dilate, erode, open_mask, refine, MorphologyOrder, StructuringElement};
pub use ppm::{encode_pbm, encode_ppm, load_pbm, load_ppm, PpmError};
pub use segment::select_lesion_cluster;
pub use skeleton::skeletonize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImagingError {
    #[error("raster must be at least 1x1, got {width}x{height}")]
    EmptyRaster { width: usize, height: usize },
    #[error("pixel buffer holds {actual} entries, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("k = {k} exceeds the pixel count {pixels}")]
    KTooLarge { k: usize, pixels: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("lesion selection needs exactly 3 clusters, got {0}")]
    KNotThree(usize),
    #[error("at least two clusters are empty; no lesion/healthy split exists")]
    DegenerateClusters,
    #[error("label raster is {actual:?}, model/image is {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("median window must be odd and >= 3, got {0}")]
    BadWindow(usize),
    #[error("structuring element must have odd dimensions and a set origin")]
    BadStructuringElement,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::EmptyRaster { width, height });
    }
    let expected = width * height;
    if len != expected {
        return Err(ImagingError::BufferSize { expected, actual: len });
    }
    Ok(())
}

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImagingError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![rgb; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Luminance conversion with weights 0.299/0.587/0.114, rounded half
    /// away from zero.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| luminance(p)).collect(),
        }
    }
}

/// Integer luminance: the weighted sum is computed exactly in thousandths so
/// the half-away-from-zero rounding is not disturbed by binary fractions.
pub fn luminance([r, g, b]: [u8; 3]) -> u8 {
    let milli = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((milli + 500) / 1000).min(255) as u8
}

pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    img.to_gray()
}

/// Row-major 8-bit intensity raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Row-major boolean raster; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Builds a mask from rows of `'#'` (set) and anything else (unset).
    /// Mostly useful in tests.
    pub fn from_ascii(rows: &[&str]) -> Result<Self, ImagingError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let bits: Vec<bool> = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        Self::new(width, height, bits)
    }

    pub fn to_ascii(&self) -> Vec<String> {
        self.bits
            .chunks(self.width)
            .map(|row| row.iter().map(|&b| if b { '#' } else { '.' }).collect())
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Signed lookup; anything outside the raster reads as background.
    pub fn get_or_false(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            false
        } else {
            self.bits[y as usize * self.width + x as usize]
        }
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Embeds the mask in a larger raster with `pad_x`/`pad_y` background
    /// pixels on each side.
    pub fn padded(&self, pad_x: usize, pad_y: usize) -> BinaryMask {
        let w = self.width + 2 * pad_x;
        let h = self.height + 2 * pad_y;
        let mut bits = vec![false; w * h];
        for y in 0..self.height {
            let src = &self.bits[y * self.width..(y + 1) * self.width];
            let start = (y + pad_y) * w + pad_x;
            bits[start..start + self.width].copy_from_slice(src);
        }
        BinaryMask {
            width: w,
            height: h,
            bits,
        }
    }

    /// Inverse of [`padded`](Self::padded).
    pub fn cropped(&self, pad_x: usize, pad_y: usize) -> BinaryMask {
        let w = self.width - 2 * pad_x;
        let h = self.height - 2 * pad_y;
        let mut bits = Vec::with_capacity(w * h);
        for y in 0..h {
            let start = (y + pad_y) * self.width + pad_x;
            bits.extend_from_slice(&self.bits[start..start + w]);
        }
        BinaryMask {
            width: w,
            height: h,
            bits,
        }
    }
}

/// Per-pixel cluster indices produced by [`kmeans_assign`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRaster {
    width: usize,
    height: usize,
    labels: Vec<usize>,
}

impl LabelRaster {
    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Result<Self, ImagingError> {
        check_dims(width, height, labels.len())?;
        Ok(Self { width, height, labels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Indices of the pixels on the outer frame, each visited once.
    pub fn border_indices(&self) -> impl Iterator<Item = usize> + '_ {
        let (w, h) = (self.width, self.height);
        (0..w * h).filter(move |&i| {
            let (x, y) = (i % w, i / w);
            x == 0 || y == 0 || x == w - 1 || y == h - 1
        })
    }
}
