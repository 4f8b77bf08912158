//! Synthetic camera: `Y = clamp(round((1 + K) * X + Theta + P), 0, 255)`.
//!
//! `K` is the PRNU, `X` the scene, `Theta` additive noise and `P` an optional
//! pipeline pattern injected before quantization. All randomness comes from
//! ChaCha8 with one stream per purpose and capture index, so every output is
//! a pure function of the spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{ShiftCell, ShiftMap};
use crate::tensor_io::{Image, Plane};

pub const PRNG_NAME: &str = "chacha8";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
enum Stream {
    Prnu = 1,
    Noise = 2,
    Scene = 3,
    Tile = 4,
    Grain = 5,
    Layout = 6,
}

fn rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((stream as u64) << 40) | index);
    r
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scene {
    Flat(f64),
    /// Horizontal ramp from 64 to 192.
    Gradient,
    /// Smooth random texture, mean 128.
    Texture(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Cosine,
    TiledNoise(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub basis: (usize, usize),
    pub amplitude: f64,
    pub phase: (usize, usize),
    pub waveform: Waveform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dims: (usize, usize),
    pub prnu_sigma: f64,
    pub noise_sigma: f64,
    pub scene: Scene,
    pub pattern: Option<PatternSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            dims: (512, 512),
            prnu_sigma: 0.02,
            noise_sigma: 3.0,
            scene: Scene::Flat(128.0),
            pattern: None,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.dims.0 == 0 || self.dims.1 == 0 {
            return bad(format!("dims {:?} must be positive", self.dims));
        }
        if !(self.prnu_sigma > 0.0 && self.prnu_sigma <= 0.1) {
            return bad(format!("prnu_sigma {} outside (0, 0.1]", self.prnu_sigma));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma {} must be non-negative",
                self.noise_sigma
            ));
        }
        if let Scene::Flat(v) = self.scene {
            if !(16.0..=250.0).contains(&v) {
                return bad(format!("flat intensity {v} outside [16, 250]"));
            }
        }
        if let Some(p) = &self.pattern {
            if p.basis.0 == 0 || p.basis.1 == 0 {
                return bad(format!("pattern basis {:?} must be positive", p.basis));
            }
            if !p.amplitude.is_finite() || p.amplitude < 0.0 {
                return bad(format!(
                    "pattern amplitude {} must be non-negative",
                    p.amplitude
                ));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SynthSpec {
            seed,
            ..self.clone()
        }
    }

    /// Mean scene intensity, used to calibrate pattern amplitudes.
    pub fn mean_intensity(&self) -> f64 {
        match self.scene {
            Scene::Flat(v) => v,
            Scene::Gradient | Scene::Texture(_) => 128.0,
        }
    }
}

/// Pattern amplitude giving `pattern energy / PRNU energy = ratio` at the
/// mean intensity of the scene.
pub fn amplitude_for_ratio(ratio: f64, spec: &SynthSpec, waveform: Waveform) -> f64 {
    let prnu_rms = spec.prnu_sigma * spec.mean_intensity();
    match waveform {
        Waveform::TiledNoise(_) => ratio.sqrt() * prnu_rms,
        // a unit cosine has mean square 1/2
        Waveform::Cosine => (2.0 * ratio).sqrt() * prnu_rms,
    }
}

/// i.i.d. `N(0, prnu_sigma^2)`.
pub fn gen_prnu(spec: &SynthSpec) -> Plane {
    let mut r = rng(spec.seed, Stream::Prnu, 0);
    let s = spec.prnu_sigma;
    Plane::from_fn(spec.dims.0, spec.dims.1, |_, _| s * normal(&mut r))
}

/// Separable Gaussian blur with radius `ceil(3 sigma)`, edges clamped.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let (h, w) = p.dims();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let rows = Plane::from_fn(h, w, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(t, k)| k * p.get(r, clamp(c as isize + t as isize - radius, w)))
            .sum()
    });
    Plane::from_fn(h, w, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(t, k)| k * rows.get(clamp(r as isize + t as isize - radius, h), c))
            .sum()
    })
}

pub fn scene_plane(spec: &SynthSpec) -> Plane {
    let (h, w) = spec.dims;
    match spec.scene {
        Scene::Flat(v) => Plane::filled(h, w, v),
        Scene::Gradient => {
            let denom = (w.max(2) - 1) as f64;
            Plane::from_fn(h, w, |_, c| 64.0 + 128.0 * c as f64 / denom)
        }
        Scene::Texture(seed) => {
            let mut r = rng(seed, Stream::Scene, 0);
            let raw = Plane::from_fn(h, w, |_, _| normal(&mut r));
            let smooth = gaussian_blur(&raw, 4.0);
            let (m, sd) = (smooth.mean(), smooth.variance().sqrt().max(1e-12));
            smooth.map(|v| (128.0 + 30.0 * (v - m) / sd).clamp(32.0, 224.0))
        }
    }
}

/// The additive pipeline pattern.
///
/// `TiledNoise` repeats a `p1 x 3*p2` Gaussian tile, shearing it by `p2`
/// columns every `p1` rows, so `(p1, p2)` is the shortest period vector of
/// the result. `Cosine` uses a plane wave whose frequency is an integer
/// multiple of the dual of `(p1, p2)` and sits close to Nyquist.
pub fn pattern_plane(dims: (usize, usize), p: &PatternSpec) -> Plane {
    let (h, w) = dims;
    let (p1, p2) = p.basis;
    let (q1, q2) = p.phase;
    let a = p.amplitude;
    match p.waveform {
        Waveform::TiledNoise(seed) => {
            let tw = 3 * p2;
            let mut r = rng(seed, Stream::Tile, 0);
            let tile: Vec<f64> = (0..p1 * tw).map(|_| normal(&mut r)).collect();
            let (p1, p2, tw) = (p1 as isize, p2 as isize, tw as isize);
            Plane::from_fn(h, w, |i, j| {
                let ii = i as isize - q1 as isize;
                let jj = j as isize - q2 as isize;
                let row = ii.rem_euclid(p1);
                let col = (jj - p2 * ii.div_euclid(p1)).rem_euclid(tw);
                a * tile[(row * tw + col) as usize]
            })
        }
        Waveform::Cosine => {
            let f1 = 0.5;
            let f2 = ((p1 + p2) / 2) as f64 / p2 as f64 - p1 as f64 / (2.0 * p2 as f64);
            let tau = std::f64::consts::TAU;
            Plane::from_fn(h, w, |i, j| {
                let (di, dj) = (i as f64 - q1 as f64, j as f64 - q2 as f64);
                a * (tau * (f1 * di + f2 * dj)).cos()
            })
        }
    }
}

/// Ground truth attached to a capture.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthBundle {
    pub k_true: Plane,
    pub pattern_plane: Option<Plane>,
    pub hdr_truth: Option<ShiftMap>,
    pub bokeh_truth: Option<Plane>,
}

/// Captures image number `index` of the sequence defined by `spec`.
pub fn capture(spec: &SynthSpec, k: &Plane, index: u64) -> Result<(Image, TruthBundle)> {
    spec.validate()?;
    let (h, w) = spec.dims;
    if k.dims() != spec.dims {
        return Err(Error::DimensionMismatch {
            expected: spec.dims,
            actual: k.dims(),
        });
    }
    let x = scene_plane(spec);
    let pattern = spec.pattern.as_ref().map(|p| pattern_plane(spec.dims, p));
    let mut r = rng(spec.seed, Stream::Noise, index);
    let sigma = spec.noise_sigma;
    let mut pixels = Vec::with_capacity(h * w);
    for idx in 0..h * w {
        let mut v = (1.0 + k.values()[idx]) * x.values()[idx] + sigma * normal(&mut r);
        if let Some(p) = &pattern {
            v += p.values()[idx];
        }
        pixels.push(v.round().clamp(0.0, 255.0) as u16);
    }
    let img = Image::new(h, w, 1, 8, pixels)?.with_tag(format!("synth-{}-{index}", spec.seed));
    Ok((
        img,
        TruthBundle {
            k_true: k.clone(),
            pattern_plane: pattern,
            hdr_truth: None,
            bokeh_truth: None,
        },
    ))
}

/// `count` captures with indices `0..count`.
pub fn capture_set(spec: &SynthSpec, k: &Plane, count: usize) -> Result<Vec<Image>> {
    (0..count as u64)
        .map(|i| capture(spec, k, i).map(|(img, _)| img))
        .collect()
}

/// A rectangle whose content is translated by `shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdrRegion {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub shift: (isize, isize),
}

impl HdrRegion {
    fn contains(&self, r: usize, c: usize) -> bool {
        (self.top..self.top + self.height).contains(&r)
            && (self.left..self.left + self.width).contains(&c)
    }

    fn overlaps(&self, o: &HdrRegion) -> bool {
        self.top < o.top + o.height
            && o.top < self.top + self.height
            && self.left < o.left + o.width
            && o.left < self.left + self.width
    }
}

pub const MAX_HDR_SHIFT: isize = 16;

/// Inside each region `out(x) = in(x + shift)`, sampling outside the frame
/// clamped to the edge. Also returns the per-block truth for `block`.
pub fn apply_hdr_shifts(
    img: &Image,
    regions: &[HdrRegion],
    block: usize,
) -> Result<(Image, ShiftMap)> {
    let (h, w) = img.dims();
    for (i, reg) in regions.iter().enumerate() {
        let inside = reg.height > 0
            && reg.width > 0
            && reg.top + reg.height <= h
            && reg.left + reg.width <= w;
        let small = reg.shift.0.abs() <= MAX_HDR_SHIFT && reg.shift.1.abs() <= MAX_HDR_SHIFT;
        if !inside || !small {
            return Err(Error::RegionOutOfBounds(i));
        }
        for (j, other) in regions.iter().enumerate().take(i) {
            if reg.overlaps(other) {
                return Err(Error::OverlappingRegions(j, i));
            }
        }
    }
    let ch = img.channels();
    let src = img.pixels();
    let mut out = src.to_vec();
    for reg in regions {
        let (d1, d2) = reg.shift;
        for r in reg.top..reg.top + reg.height {
            let sr = (r as isize + d1).clamp(0, h as isize - 1) as usize;
            for c in reg.left..reg.left + reg.width {
                let sc = (c as isize + d2).clamp(0, w as isize - 1) as usize;
                for k in 0..ch {
                    out[(r * w + c) * ch + k] = src[(sr * w + sc) * ch + k];
                }
            }
        }
    }
    let shifted = Image::new(h, w, ch, img.depth(), out)?.with_tag(img.source_tag.clone());
    Ok((shifted, hdr_truth((h, w), regions, block)?))
}

/// Each block takes the shift of the region containing its center.
pub fn hdr_truth(dims: (usize, usize), regions: &[HdrRegion], block: usize) -> Result<ShiftMap> {
    if block == 0 {
        return Err(Error::InvalidConfig("block must be positive".into()));
    }
    let (h, w) = dims;
    let (rows, cols) = (h.div_ceil(block), w.div_ceil(block));
    let mut cells = Vec::with_capacity(rows * cols);
    for br in 0..rows {
        for bc in 0..cols {
            let (top, left) = (br * block, bc * block);
            let cr = top + (block.min(h - top)) / 2;
            let cc = left + (block.min(w - left)) / 2;
            let shift = regions
                .iter()
                .find(|reg| reg.contains(cr, cc))
                .map_or((0, 0), |reg| reg.shift);
            cells.push(ShiftCell {
                shift,
                confidence: 0.0,
                block_origin: (top, left),
            });
        }
    }
    Ok(ShiftMap {
        rows,
        cols,
        cells,
        block,
        stride: block,
        dims,
        search_radius: MAX_HDR_SHIFT as usize,
    })
}

/// A grid of `cell x cell` regions covering the frame, each with a random
/// nonzero shift of at most `max_shift` per axis.
pub fn random_hdr_regions(
    dims: (usize, usize),
    cell: usize,
    max_shift: isize,
    seed: u64,
) -> Vec<HdrRegion> {
    let mut r = rng(seed, Stream::Layout, 0);
    let mut out = Vec::new();
    for top in (0..dims.0).step_by(cell) {
        for left in (0..dims.1).step_by(cell) {
            let shift = loop {
                let m = max_shift as i64;
                let s = (
                    r.random_range(-m..=m) as isize,
                    r.random_range(-m..=m) as isize,
                );
                if s != (0, 0) {
                    break s;
                }
            };
            out.push(HdrRegion {
                top,
                left,
                height: cell.min(dims.0 - top),
                width: cell.min(dims.1 - left),
                shift,
            });
        }
    }
    out
}

/// Inside `mask` (values > 0.5): Gaussian blur followed by additive grain.
/// Pixels outside the mask are untouched.
pub fn apply_bokeh(
    img: &Image,
    mask: &Plane,
    blur_sigma: f64,
    grain_sigma: f64,
    seed: u64,
) -> Result<Image> {
    if !(blur_sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "blur_sigma {blur_sigma} must be positive"
        )));
    }
    let (h, w) = img.dims();
    if mask.dims() != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            actual: mask.dims(),
        });
    }
    let ch = img.channels();
    let maxv = f64::from(img.max_value());
    let mut out = img.pixels().to_vec();
    let mut r = rng(seed, Stream::Grain, 0);
    for k in 0..ch {
        let plane = Plane::from_fn(h, w, |row, col| {
            f64::from(img.pixels()[(row * w + col) * ch + k])
        });
        let blurred = gaussian_blur(&plane, blur_sigma);
        for idx in 0..h * w {
            if mask.values()[idx] > 0.5 {
                let v = blurred.values()[idx] + grain_sigma * normal(&mut r);
                out[idx * ch + k] = v.round().clamp(0.0, maxv) as u16;
            }
        }
    }
    Image::new(h, w, ch, img.depth(), out).map(|i| i.with_tag(img.source_tag.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::{autocorr, ncc_at};

    fn small() -> SynthSpec {
        SynthSpec {
            dims: (128, 128),
            ..SynthSpec::default()
        }
    }

    #[test]
    fn prnu_is_deterministic_and_calibrated() {
        let spec = SynthSpec::default();
        let a = gen_prnu(&spec);
        assert_eq!(a, gen_prnu(&spec));
        let sd = a.variance().sqrt();
        assert!((sd / 0.02 - 1.0).abs() < 0.02, "sd {sd}");
        let b = gen_prnu(&spec.with_seed(1));
        assert!(ncc_at(&a, &b, 0, 0).unwrap().abs() < 0.02);
    }

    #[test]
    fn noiseless_flat_capture_is_constant() {
        let spec = SynthSpec {
            prnu_sigma: 1e-9,
            noise_sigma: 0.0,
            ..small()
        };
        let (img, _) = capture(&spec, &gen_prnu(&spec), 0).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 128));
    }

    #[test]
    fn captures_differ_by_index_only_in_noise() {
        let spec = small();
        let k = gen_prnu(&spec);
        let (a, _) = capture(&spec, &k, 0).unwrap();
        let (a2, _) = capture(&spec, &k, 0).unwrap();
        let (b, _) = capture(&spec, &k, 1).unwrap();
        assert_eq!(a, a2);
        assert_ne!(a.pixels(), b.pixels());
    }

    #[test]
    fn spec_validation() {
        let mut s = small();
        s.prnu_sigma = 0.2;
        assert!(s.validate().is_err());
        let s = SynthSpec {
            scene: Scene::Flat(255.0),
            ..small()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn tiled_pattern_periods() {
        let p = PatternSpec {
            basis: (60, 65),
            amplitude: 1.0,
            phase: (7, 11),
            waveform: Waveform::TiledNoise(3),
        };
        let plane = pattern_plane((300, 400), &p);
        for (i, j) in [(0usize, 0usize), (13, 200), (100, 17)] {
            assert_eq!(plane.get(i, j), plane.get(i + 60, j + 65));
            assert_eq!(plane.get(i, j), plane.get(i, j + 195));
        }
        assert_ne!(plane.get(5, 5), plane.get(65, 5));
        assert_ne!(plane.get(5, 5), plane.get(5, 70));
    }

    #[test]
    fn cosine_autocorr_peaks_on_multiples() {
        let p = PatternSpec {
            basis: (60, 65),
            amplitude: 1.0,
            phase: (0, 0),
            waveform: Waveform::Cosine,
        };
        // dims chosen as multiples of the wave's periods so the circular
        // autocorrelation is exact
        let plane = pattern_plane((240, 260), &p);
        let s = autocorr(&plane).unwrap();
        for k in 1..=2 {
            assert!((s.at(60 * k, 65 * k) - 1.0).abs() < 1e-9);
        }
        assert!(s.at(30, 30) < 0.99);
    }

    #[test]
    fn texture_scene_statistics() {
        let spec = SynthSpec {
            scene: Scene::Texture(4),
            ..small()
        };
        let x = scene_plane(&spec);
        let (lo, hi) = x.min_max();
        assert!(lo >= 32.0 && hi <= 224.0);
        assert!((x.mean() - 128.0).abs() < 5.0);
    }

    #[test]
    fn hdr_shift_moves_content() {
        let img = Image::new(8, 8, 1, 8, (0..64).collect()).unwrap();
        let reg = HdrRegion {
            top: 0,
            left: 0,
            height: 4,
            width: 4,
            shift: (1, 2),
        };
        let (out, truth) = apply_hdr_shifts(&img, &[reg], 4).unwrap();
        assert_eq!(out.pixels()[0], img.pixels()[10]);
        assert_eq!(out.pixels()[63], 63);
        assert_eq!(truth.cells[0].shift, (1, 2));
        assert_eq!(truth.cells[1].shift, (0, 0));
        let (same, _) = apply_hdr_shifts(&img, &[], 4).unwrap();
        assert_eq!(same, img);
    }

    #[test]
    fn hdr_region_errors() {
        let img = Image::new(8, 8, 1, 8, vec![0; 64]).unwrap();
        let a = HdrRegion {
            top: 0,
            left: 0,
            height: 4,
            width: 4,
            shift: (1, 1),
        };
        let b = HdrRegion {
            top: 2,
            left: 2,
            ..a
        };
        assert!(matches!(
            apply_hdr_shifts(&img, &[a, b], 4),
            Err(Error::OverlappingRegions(0, 1))
        ));
        let c = HdrRegion { top: 6, ..a };
        assert!(matches!(
            apply_hdr_shifts(&img, &[c], 4),
            Err(Error::RegionOutOfBounds(0))
        ));
    }

    #[test]
    fn bokeh_with_empty_mask_is_identity() {
        let spec = small();
        let (img, _) = capture(&spec, &gen_prnu(&spec), 0).unwrap();
        let out = apply_bokeh(&img, &Plane::zeros(128, 128), 4.0, 2.0, 1).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn random_regions_tile_the_frame() {
        let regs = random_hdr_regions((200, 130), 64, 8, 5);
        assert_eq!(regs.len(), 4 * 3);
        let area: usize = regs.iter().map(|r| r.height * r.width).sum();
        assert_eq!(area, 200 * 130);
        assert!(regs
            .iter()
            .all(|r| r.shift != (0, 0) && r.shift.0.abs() <= 8));
    }
}
