//! Netpbm codecs: binary PPM (`P6`, maxval 255) for colour images and
//! binary PBM (`P4`) for masks.

use thiserror::Error;

use super::{BinaryMask, RgbImage};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PpmError {
    #[error("expected magic {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("pixel data truncated: need {expected} bytes, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },
    #[error("maxval {0} unsupported (only 255)")]
    MaxvalUnsupported(u32),
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PpmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PpmError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PpmError::BadHeader(format!("{what} out of range")))
    }

    /// Exactly one whitespace byte separates the header from the raster.
    fn end_of_header(&mut self) -> Result<usize, PpmError> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(PpmError::BadHeader("missing separator before raster".into())),
        }
    }
}

fn read_magic<'a>(bytes: &'a [u8], magic: &'static str) -> Result<HeaderReader<'a>, PpmError> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(PpmError::BadMagic { expected: magic });
    }
    Ok(HeaderReader { bytes, pos: 2 })
}

fn dims(r: &mut HeaderReader<'_>) -> Result<(usize, usize), PpmError> {
    let w = r.number("width")? as usize;
    let h = r.number("height")? as usize;
    if w == 0 || h == 0 {
        return Err(PpmError::BadHeader(format!("zero dimension {w}x{h}")));
    }
    Ok((w, h))
}

pub fn load_ppm(bytes: &[u8]) -> Result<RgbImage, PpmError> {
    let mut r = read_magic(bytes, "P6")?;
    let (w, h) = dims(&mut r)?;
    let maxval = r.number("maxval")?;
    if maxval != 255 {
        return Err(PpmError::MaxvalUnsupported(maxval));
    }
    let start = r.end_of_header()?;
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| PpmError::BadHeader("dimensions overflow".into()))?;
    let data = &bytes[start.min(bytes.len())..];
    if data.len() < expected {
        return Err(PpmError::TruncatedPixelData {
            expected,
            found: data.len(),
        });
    }
    let pixels = data[..expected].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(RgbImage::new(w, h, pixels).expect("dimensions checked"))
}

/// Canonical encoding: `P6\n<w> <h>\n255\n` followed by the raster.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len() * 3);
    out.extend_from_slice(header.as_bytes());
    for p in img.pixels() {
        out.extend_from_slice(p);
    }
    out
}

/// Decodes a `P4` bitmap; set bits (black) become foreground.
pub fn load_pbm(bytes: &[u8]) -> Result<BinaryMask, PpmError> {
    let mut r = read_magic(bytes, "P4")?;
    let (w, h) = dims(&mut r)?;
    let start = r.end_of_header()?;
    let row_bytes = w.div_ceil(8);
    let expected = row_bytes * h;
    let data = &bytes[start.min(bytes.len())..];
    if data.len() < expected {
        return Err(PpmError::TruncatedPixelData {
            expected,
            found: data.len(),
        });
    }
    let mut bits = Vec::with_capacity(w * h);
    for row in data[..expected].chunks_exact(row_bytes) {
        bits.extend((0..w).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
    }
    Ok(BinaryMask::new(w, h, bits).expect("dimensions checked"))
}

pub fn encode_pbm(mask: &BinaryMask) -> Vec<u8> {
    let (w, h) = (mask.width(), mask.height());
    let row_bytes = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    for row in mask.bits().chunks(w) {
        let mut packed = vec![0u8; row_bytes];
        for (x, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            packed[x / 8] |= 0x80 >> (x % 8);
        }
        out.extend_from_slice(&packed);
    }
    debug_assert_eq!(out.len() - format!("P4\n{w} {h}\n").len(), row_bytes * h);
    out
}
