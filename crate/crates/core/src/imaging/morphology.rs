//! Binary erosion, dilation and their composites.
//!
//! Standalone [`erode`] treats pixels outside the raster as background and
//! standalone [`dilate`] clips at the edge. The composite [`refine`] runs on a
//! raster padded by the element's half extents, so it behaves as if the mask
//! sat on an unbounded background plane; this makes it idempotent and keeps a
//! full mask full.

use serde::{Deserialize, Serialize};

use super::{BinaryMask, ImagingError};

/// Binary structuring element with its origin at the centre cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) || bits.len() != width * height {
            return Err(ImagingError::BadStructuringElement);
        }
        if !bits[(height / 2) * width + width / 2] {
            return Err(ImagingError::BadStructuringElement);
        }
        Ok(Self { width, height, bits })
    }

    pub fn square(size: usize) -> Result<Self, ImagingError> {
        Self::new(size, size, vec![true; size * size])
    }

    /// Plus-shaped element: the centre row and column.
    pub fn cross(size: usize) -> Result<Self, ImagingError> {
        let c = size / 2;
        let bits = (0..size * size).map(|i| i % size == c || i / size == c).collect();
        Self::new(size, size, bits)
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

    pub fn half_extents(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    /// Offsets `(dx, dy)` of the set cells relative to the origin.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let (ox, oy) = self.half_extents();
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| {
                (
                    (i % self.width) as isize - ox as isize,
                    (i / self.width) as isize - oy as isize,
                )
            })
            .collect()
    }

    /// Point reflection through the origin.
    pub fn reflect(&self) -> StructuringElement {
        StructuringElement {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().rev().copied().collect(),
        }
    }
}

/// Composite order for [`refine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphologyOrder {
    /// Dilation followed by erosion, `(A ⊕ B) ⊖ B`.
    #[default]
    Paper,
    /// Erosion followed by dilation (textbook opening).
    Standard,
}

/// Output is set at `p` iff every cell of `b` placed at `p` lands on a set
/// pixel of `a`.
pub fn erode(a: &BinaryMask, b: &StructuringElement) -> BinaryMask {
    let offsets = b.offsets();
    let (w, h) = (a.width(), a.height());
    let bits = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            offsets.iter().all(|&(dx, dy)| a.get_or_false(x + dx, y + dy))
        })
        .collect();
    BinaryMask::new(w, h, bits).expect("same dimensions")
}

/// Output is set at `p` iff the reflected element placed at `p` touches a
/// set pixel of `a`.
pub fn dilate(a: &BinaryMask, b: &StructuringElement) -> BinaryMask {
    let offsets = b.offsets();
    let (w, h) = (a.width(), a.height());
    let mut out = BinaryMask::empty(w, h).expect("same dimensions");
    for y in 0..h {
        for x in 0..w {
            if !a.get(x, y) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (tx, ty) = (x as isize + dx, y as isize + dy);
                if tx >= 0 && ty >= 0 && (tx as usize) < w && (ty as usize) < h {
                    out.set(tx as usize, ty as usize, true);
                }
            }
        }
    }
    out
}

/// Dilate/erode composite evaluated on a padded raster, then cropped back.
pub fn refine(a: &BinaryMask, b: &StructuringElement, order: MorphologyOrder) -> BinaryMask {
    let (px, py) = b.half_extents();
    let padded = a.padded(px, py);
    let out = match order {
        MorphologyOrder::Paper => erode(&dilate(&padded, b), b),
        MorphologyOrder::Standard => dilate(&erode(&padded, b), b),
    };
    out.cropped(px, py)
}

/// `(A ⊕ B) ⊖ B`: dilation then erosion.
pub fn open_mask(a: &BinaryMask, b: &StructuringElement) -> BinaryMask {
    refine(a, b, MorphologyOrder::Paper)
}
