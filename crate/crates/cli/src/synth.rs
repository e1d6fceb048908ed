//! Seeded synthetic leaf images for the three diseases and clean leaves.
//!
//! Physical widths are converted at [`PX_PER_MM`]. Every image is a pure
//! function of its [`SynthSpec`], so regenerating a corpus reproduces it
//! byte for byte.

use std::fs;
use std::io;
use std::path::Path;

use cane_sentinel::classifier::corpus::{CorpusEntry, Manifest, MANIFEST_NAME};
use cane_sentinel::classifier::{Class, Disease};
use cane_sentinel::imaging::encode_ppm;
use cane_sentinel::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PX_PER_MM: f64 = 2.5;

const SOIL: [f64; 3] = [70.0, 50.0, 35.0];
const LEAF: [f64; 3] = [60.0, 140.0, 50.0];
const SCALD_LINE: [f64; 3] = [235.0, 235.0, 220.0];
const SCALD_HALO: [f64; 3] = [220.0, 210.0, 80.0];
const STRIPE: [f64; 3] = [170.0, 40.0, 40.0];
const MOTTLE: [f64; 3] = [150.0, 190.0, 90.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// `None` renders a clean leaf.
    pub disease: Option<Disease>,
    /// Leaf scald streak width in pixels.
    pub line_width_px: usize,
    /// Red stripe width range in millimetres.
    pub stripe_width_mm: (f64, f64),
    /// Red stripes per 1000 leaf pixels.
    pub stripe_density: f64,
    /// Mosaic value-noise cell size in pixels.
    pub mottle_scale: usize,
    /// Fraction of the leaf covered by mosaic mottling.
    pub mottle_cover: f64,
    /// Half-width of the uniform per-channel pixel noise, in 0..=255 levels.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 80,
            height: 80,
            disease: None,
            line_width_px: 2,
            stripe_width_mm: (0.5, 1.0),
            stripe_density: 6.0,
            mottle_scale: 10,
            mottle_cover: 0.3,
            noise: 8.0,
            seed: 0,
        }
    }
}

struct Leaf {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

impl Leaf {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (u, v) = ((x - self.cx) / self.a, (y - self.cy) / self.b);
        u * u + v * v <= 1.0
    }

    /// Half-height of the leaf at column `x`.
    fn half_height(&self, x: f64) -> f64 {
        let u = (x - self.cx) / self.a;
        self.b * (1.0 - u * u).max(0.0).sqrt()
    }
}

/// Per-pixel colour layer before noise; `None` keeps the base colour.
type Layer = Vec<Option<[f64; 3]>>;

pub fn render(spec: &SynthSpec) -> RgbImage {
    let (w, h) = (spec.width.max(16), spec.height.max(16));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let leaf = Leaf {
        cx: w as f64 / 2.0 + rng.gen_range(-2.0..2.0),
        cy: h as f64 / 2.0 + rng.gen_range(-2.0..2.0),
        a: w as f64 * rng.gen_range(0.38..0.45),
        b: h as f64 * rng.gen_range(0.17..0.24),
    };
    let tint: Vec<f64> = (0..3).map(|_| rng.gen_range(-6.0..6.0)).collect();
    let soil_tint: Vec<f64> = (0..3).map(|_| rng.gen_range(-6.0..6.0)).collect();

    let mut canvas = Canvas {
        leaf: &leaf,
        w,
        h,
        layer: vec![None; w * h],
    };
    match spec.disease {
        None => {}
        Some(Disease::LeafScald) => draw_scald(spec, &mut canvas, &mut rng),
        Some(Disease::RedStripe) => draw_stripes(spec, &mut canvas, &mut rng),
        Some(Disease::Mosaic) => draw_mosaic(spec, &mut canvas, &mut rng),
    }
    let layer = canvas.layer;

    let mut img = RgbImage::filled(w, h, [0, 0, 0]).expect("nonzero size");
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
            let base = if leaf.contains(fx, fy) {
                // Mild lighting gradient along the blade.
                let shade = 6.0 * ((fx - leaf.cx) / leaf.a);
                let c = layer[y * w + x].unwrap_or([LEAF[0] + tint[0], LEAF[1] + tint[1], LEAF[2] + tint[2]]);
                [c[0] + shade, c[1] + shade, c[2] + shade]
            } else {
                [SOIL[0] + soil_tint[0], SOIL[1] + soil_tint[1], SOIL[2] + soil_tint[2]]
            };
            let mut px = [0u8; 3];
            for (ch, v) in px.iter_mut().enumerate() {
                let n = if spec.noise > 0.0 {
                    rng.gen_range(-spec.noise..=spec.noise)
                } else {
                    0.0
                };
                *v = (base[ch] + n).round().clamp(0.0, 255.0) as u8;
            }
            img.set(x, y, px);
        }
    }
    img
}

/// Disease overlay restricted to the leaf blade.
struct Canvas<'a> {
    leaf: &'a Leaf,
    w: usize,
    h: usize,
    layer: Layer,
}

impl Canvas<'_> {
    fn paint(&mut self, x: isize, y: isize, c: [f64; 3], over: bool) {
        if x < 0 || y < 0 || x as usize >= self.w || y as usize >= self.h {
            return;
        }
        if !self.leaf.contains(x as f64 + 0.5, y as f64 + 0.5) {
            return;
        }
        let cell = &mut self.layer[y as usize * self.w + x as usize];
        if over || cell.is_none() {
            *cell = Some(c);
        }
    }
}

/// Long whitish streaks along the blade, each outlined in yellow.
fn draw_scald(spec: &SynthSpec, canvas: &mut Canvas, rng: &mut ChaCha8Rng) {
    let leaf = canvas.leaf;
    let lines = rng.gen_range(1..=3);
    let width = spec.line_width_px.max(1) as isize;
    for _ in 0..lines {
        let len = leaf.a * rng.gen_range(0.9..1.4);
        let x0 = leaf.cx - leaf.a + rng.gen_range(0.1..0.9) * (2.0 * leaf.a - len).max(1.0);
        let rel = rng.gen_range(-0.55..0.55);
        let drift = rng.gen_range(-0.08..0.08);
        let mut streak = Vec::new();
        for step in 0..len as isize {
            let x = x0 + step as f64;
            let y = leaf.cy + rel * leaf.half_height(x) + drift * step as f64;
            for t in 0..width {
                streak.push((x.round() as isize, y.round() as isize + t));
            }
        }
        for &(x, y) in &streak {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    canvas.paint(x + dx, y + dy, SCALD_HALO, false);
                }
            }
        }
        for &(x, y) in &streak {
            canvas.paint(x, y, SCALD_LINE, true);
        }
    }
}

/// Short narrow red stripes parallel to the blade.
fn draw_stripes(spec: &SynthSpec, canvas: &mut Canvas, rng: &mut ChaCha8Rng) {
    let leaf = canvas.leaf;
    let area = std::f64::consts::PI * leaf.a * leaf.b;
    let count = ((spec.stripe_density * area / 1000.0).round() as usize).max(3);
    let (lo, hi) = spec.stripe_width_mm;
    for _ in 0..count {
        let width = ((rng.gen_range(lo..=hi) * PX_PER_MM).round() as isize).clamp(1, 3);
        let len = rng.gen_range(8..=20) as f64;
        let x0 = leaf.cx + rng.gen_range(-0.85..0.85) * leaf.a - len / 2.0;
        let y0 = leaf.cy + rng.gen_range(-0.75..0.75) * leaf.half_height(x0 + len / 2.0);
        for step in 0..len as isize {
            for t in 0..width {
                canvas.paint(
                    (x0 + step as f64).round() as isize,
                    y0.round() as isize + t,
                    STRIPE,
                    true,
                );
            }
        }
    }
}

/// Low-frequency light-green mottling from bilinear value noise.
fn draw_mosaic(spec: &SynthSpec, canvas: &mut Canvas, rng: &mut ChaCha8Rng) {
    let (leaf, w, h) = (canvas.leaf, canvas.w, canvas.h);
    let cell = spec.mottle_scale.max(2);
    let (gw, gh) = (w / cell + 2, h / cell + 2);
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let value = |x: usize, y: usize| {
        let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
        let g = |i: usize, j: usize| grid[j * gw + i];
        let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
        let bottom = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    };
    let mut inside: Vec<(usize, f64)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if leaf.contains(x as f64 + 0.5, y as f64 + 0.5) {
                inside.push((y * w + x, value(x, y)));
            }
        }
    }
    let mut sorted: Vec<f64> = inside.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let cover = spec.mottle_cover.clamp(0.0, 1.0);
    let cut = ((sorted.len() as f64) * (1.0 - cover)) as usize;
    let threshold = sorted
        .get(cut.min(sorted.len().saturating_sub(1)))
        .copied()
        .unwrap_or(1.0);
    for (i, v) in inside {
        if v >= threshold {
            canvas.layer[i] = Some(MOTTLE);
        }
    }
}

/// Balanced corpus settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub count: usize,
    pub seed: u64,
    /// Template for every image; `disease` and `seed` are overwritten.
    pub image: SynthSpec,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            count: 200,
            seed: 42,
            image: SynthSpec::default(),
        }
    }
}

/// Image `i` gets condition `i mod 4` (clean, leaf scald, red stripe,
/// mosaic) and a seed drawn from the corpus seed.
pub fn corpus_specs(spec: &CorpusSpec) -> Vec<(String, SynthSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|i| {
            let disease = match i % 4 {
                0 => None,
                k => Some(Disease::ALL[k - 1]),
            };
            let image = SynthSpec {
                disease,
                seed: rng.gen(),
                ..spec.image.clone()
            };
            (format!("images/img_{i:04}.ppm"), image)
        })
        .collect()
}

/// Writes `<out>/images/*.ppm` and `<out>/labels.csv`.
pub fn gen_synthetic_corpus(spec: &CorpusSpec, out: &Path) -> io::Result<Vec<CorpusEntry>> {
    fs::create_dir_all(out.join("images"))?;
    let mut entries = Vec::with_capacity(spec.count);
    for (path, image) in corpus_specs(spec) {
        fs::write(out.join(&path), encode_ppm(&render(&image)))?;
        entries.push(CorpusEntry {
            path,
            class: if image.disease.is_some() {
                Class::Infected
            } else {
                Class::Healthy
            },
            disease: image.disease,
        });
    }
    fs::write(out.join(MANIFEST_NAME), Manifest::to_csv(&entries))?;
    Ok(entries)
}
