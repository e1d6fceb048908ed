use super::{BinaryMask, GrayImage, ImagingError};

/// Rasters a median filter can run over. For masks the ordering
/// `false < true` turns the median into a majority vote.
pub trait MedianRaster: Sized {
    type Value: Ord + Copy;

    fn dims(&self) -> (usize, usize);
    fn value(&self, x: usize, y: usize) -> Self::Value;
    fn rebuild(&self, values: Vec<Self::Value>) -> Self;
}

impl MedianRaster for GrayImage {
    type Value = u8;

    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn value(&self, x: usize, y: usize) -> u8 {
        self.get(x, y)
    }

    fn rebuild(&self, values: Vec<u8>) -> Self {
        GrayImage::new(self.width(), self.height(), values).expect("same dimensions")
    }
}

impl MedianRaster for BinaryMask {
    type Value = bool;

    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn value(&self, x: usize, y: usize) -> bool {
        self.get(x, y)
    }

    fn rebuild(&self, values: Vec<bool>) -> Self {
        BinaryMask::new(self.width(), self.height(), values).expect("same dimensions")
    }
}

/// Square-window median with clamp-to-edge replication at the borders.
pub fn median_filter<R: MedianRaster>(img: &R, window: usize) -> Result<R, ImagingError> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(ImagingError::BadWindow(window));
    }
    let (w, h) = img.dims();
    let r = (window / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            buf.clear();
            for dy in -r..=r {
                let sy = clamp(y as isize + dy, h);
                for dx in -r..=r {
                    buf.push(img.value(clamp(x as isize + dx, w), sy));
                }
            }
            let mid = buf.len() / 2;
            let (_, m, _) = buf.select_nth_unstable(mid);
            out.push(*m);
        }
    }
    Ok(img.rebuild(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_validation() {
        let g = GrayImage::new(2, 2, vec![0; 4]).unwrap();
        for bad in [0, 1, 2, 4] {
            assert_eq!(median_filter(&g, bad).unwrap_err(), ImagingError::BadWindow(bad));
        }
    }

    #[test]
    fn constant_image_unchanged() {
        let g = GrayImage::new(4, 3, vec![77; 12]).unwrap();
        assert_eq!(median_filter(&g, 3).unwrap(), g);
        assert_eq!(median_filter(&g, 5).unwrap(), g);
    }

    #[test]
    fn salt_pixel_removed() {
        let mut px = vec![0u8; 25];
        px[12] = 255;
        let g = GrayImage::new(5, 5, px).unwrap();
        assert!(median_filter(&g, 3).unwrap().pixels().iter().all(|&v| v == 0));

        let m = BinaryMask::from_ascii(&[".....", ".....", "..#..", ".....", "....."]).unwrap();
        assert_eq!(median_filter(&m, 3).unwrap().count_ones(), 0);
    }

    #[test]
    fn mask_majority_keeps_thick_bars() {
        let m = BinaryMask::from_ascii(&["......", "######", "######", "......"]).unwrap();
        assert_eq!(median_filter(&m, 3).unwrap(), m);
    }

    #[test]
    fn corner_uses_replicated_edges() {
        // At (0,0) the 3x3 window holds the corner four times and its right
        // neighbour twice: six 9s out of nine.
        let g = GrayImage::new(2, 2, vec![9, 9, 1, 1]).unwrap();
        let out = median_filter(&g, 3).unwrap();
        assert_eq!(out.get(0, 0), 9);
        assert_eq!(out.get(1, 1), 1);
    }
}
