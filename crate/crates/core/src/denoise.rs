//! Wavelet-domain locally adaptive Wiener filter used to separate an image
//! into content and noise residual.
//!
//! The transform is an orthonormal separable 8-tap Daubechies decomposition
//! with periodic extension. In each detail subband the local signal variance
//! is estimated as `max(0, min_w mean_w(c^2) - sigma0^2)` over square windows
//! `w`, and every coefficient is scaled by `var / (var + sigma0^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::{to_luma, Image, Plane, MIN_PIPELINE_EDGE};

/// Daubechies orthonormal low-pass filter with four vanishing moments.
const LOWPASS: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_4,
    0.630_880_767_929_858_7,
    -0.027_983_769_416_859_85,
    -0.187_034_811_719_093_1,
    0.030_841_381_835_560_763,
    0.032_883_011_666_885,
    -0.010_597_401_785_069_032,
];

fn highpass() -> [f64; 8] {
    let mut g = [0.0; 8];
    for (m, v) in g.iter_mut().enumerate() {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        *v = sign * LOWPASS[7 - m];
    }
    g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub levels: usize,
    /// Assumed stationary noise standard deviation on the 8-bit scale.
    pub base_noise_sigma: f64,
    pub window_sizes: Vec<usize>,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            levels: 4,
            base_noise_sigma: 3.0,
            window_sizes: vec![3, 5, 7, 9],
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::InvalidConfig("levels must be at least 1".into()));
        }
        if !(self.base_noise_sigma > 0.0 && self.base_noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(
                "base_noise_sigma must be positive".into(),
            ));
        }
        if self.window_sizes.is_empty() {
            return Err(Error::InvalidConfig("window_sizes is empty".into()));
        }
        if let Some(w) = self.window_sizes.iter().find(|&&w| w < 3 || w % 2 == 0) {
            return Err(Error::InvalidConfig(format!(
                "window size {w} must be odd and >= 3"
            )));
        }
        Ok(())
    }
}

/// Detail subbands of one decomposition level.
#[derive(Clone, Debug, PartialEq)]
pub struct DetailBands {
    /// Low-pass along rows, high-pass along columns.
    pub lh: Plane,
    /// High-pass along rows, low-pass along columns.
    pub hl: Plane,
    pub hh: Plane,
}

/// Multi-level decomposition; `details[0]` is the finest level.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    pub ll: Plane,
    pub details: Vec<DetailBands>,
}

impl Pyramid {
    pub fn energy(&self) -> f64 {
        self.ll.energy()
            + self
                .details
                .iter()
                .map(|d| d.lh.energy() + d.hl.energy() + d.hh.energy())
                .sum::<f64>()
    }
}

fn analyze(x: &[f64], lo: &mut [f64], hi: &mut [f64], g: &[f64; 8]) {
    let n = x.len();
    for k in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for m in 0..8 {
            let v = x[(2 * k + m) % n];
            a += LOWPASS[m] * v;
            d += g[m] * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
}

fn synthesize(lo: &[f64], hi: &[f64], x: &mut [f64], g: &[f64; 8]) {
    let n = x.len();
    x.fill(0.0);
    for k in 0..n / 2 {
        for m in 0..8 {
            x[(2 * k + m) % n] += LOWPASS[m] * lo[k] + g[m] * hi[k];
        }
    }
}

/// Splits every row of an `h x w` buffer into low and high halves.
fn analyze_rows(values: &[f64], h: usize, w: usize, g: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let half = w / 2;
    let mut lo = vec![0.0; h * half];
    let mut hi = vec![0.0; h * half];
    for r in 0..h {
        analyze(
            &values[r * w..(r + 1) * w],
            &mut lo[r * half..(r + 1) * half],
            &mut hi[r * half..(r + 1) * half],
            g,
        );
    }
    (lo, hi)
}

fn analyze_cols(values: &[f64], h: usize, w: usize, g: &[f64; 8]) -> (Vec<f64>, Vec<f64>) {
    let half = h / 2;
    let mut lo = vec![0.0; half * w];
    let mut hi = vec![0.0; half * w];
    let mut col = vec![0.0; h];
    let mut clo = vec![0.0; half];
    let mut chi = vec![0.0; half];
    for c in 0..w {
        for r in 0..h {
            col[r] = values[r * w + c];
        }
        analyze(&col, &mut clo, &mut chi, g);
        for r in 0..half {
            lo[r * w + c] = clo[r];
            hi[r * w + c] = chi[r];
        }
    }
    (lo, hi)
}

fn synthesize_rows(lo: &[f64], hi: &[f64], h: usize, w: usize, g: &[f64; 8]) -> Vec<f64> {
    let half = w / 2;
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        synthesize(
            &lo[r * half..(r + 1) * half],
            &hi[r * half..(r + 1) * half],
            &mut out[r * w..(r + 1) * w],
            g,
        );
    }
    out
}

fn synthesize_cols(lo: &[f64], hi: &[f64], h: usize, w: usize, g: &[f64; 8]) -> Vec<f64> {
    let half = h / 2;
    let mut out = vec![0.0; h * w];
    let mut clo = vec![0.0; half];
    let mut chi = vec![0.0; half];
    let mut col = vec![0.0; h];
    for c in 0..w {
        for r in 0..half {
            clo[r] = lo[r * w + c];
            chi[r] = hi[r * w + c];
        }
        synthesize(&clo, &chi, &mut col, g);
        for r in 0..h {
            out[r * w + c] = col[r];
        }
    }
    out
}

/// Forward transform. Both dimensions must be multiples of `2^levels`.
pub fn dwt2(p: &Plane, levels: usize) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::InvalidConfig("levels must be at least 1".into()));
    }
    let unit = 1usize << levels;
    let (h, w) = p.dims();
    if h < unit || w < unit {
        return Err(Error::PlaneTooSmall {
            actual: (h, w),
            min: unit,
        });
    }
    if h % unit != 0 || w % unit != 0 {
        return Err(Error::InvalidConfig(format!(
            "dimensions {h}x{w} are not multiples of {unit}"
        )));
    }
    let g = highpass();
    let mut current = p.values().to_vec();
    let (mut ch, mut cw) = (h, w);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (l, hpass) = analyze_rows(&current, ch, cw, &g);
        let (ll, lh) = analyze_cols(&l, ch, cw / 2, &g);
        let (hl, hh) = analyze_cols(&hpass, ch, cw / 2, &g);
        let (nh, nw) = (ch / 2, cw / 2);
        details.push(DetailBands {
            lh: Plane::from_raw(nh, nw, lh),
            hl: Plane::from_raw(nh, nw, hl),
            hh: Plane::from_raw(nh, nw, hh),
        });
        current = ll;
        ch = nh;
        cw = nw;
    }
    Ok(Pyramid {
        ll: Plane::from_raw(ch, cw, current),
        details,
    })
}

pub fn idwt2(pyr: &Pyramid) -> Plane {
    let g = highpass();
    let mut current = pyr.ll.values().to_vec();
    let (mut ch, mut cw) = pyr.ll.dims();
    for bands in pyr.details.iter().rev() {
        let (nh, nw) = (ch * 2, cw * 2);
        let l = synthesize_cols(&current, bands.lh.values(), nh, cw, &g);
        let hpass = synthesize_cols(bands.hl.values(), bands.hh.values(), nh, cw, &g);
        current = synthesize_rows(&l, &hpass, nh, nw, &g);
        ch = nh;
        cw = nw;
    }
    Plane::from_raw(ch, cw, current)
}

/// Mean over a `size x size` window centred on each sample, wrapping around.
fn circular_box_mean(values: &[f64], h: usize, w: usize, size: usize) -> Vec<f64> {
    let r = (size / 2) as isize;
    let horizontal = |src: &[f64], len: usize, out: &mut [f64]| {
        // running sum over the circular window
        let mut acc: f64 = (-r..=r)
            .map(|k| src[k.rem_euclid(len as isize) as usize])
            .sum();
        for i in 0..len {
            out[i] = acc;
            let leaving = (i as isize - r).rem_euclid(len as isize) as usize;
            let entering = (i as isize + r + 1).rem_euclid(len as isize) as usize;
            acc += src[entering] - src[leaving];
        }
    };
    let mut rows = vec![0.0; h * w];
    for row in 0..h {
        horizontal(
            &values[row * w..(row + 1) * w],
            w,
            &mut rows[row * w..(row + 1) * w],
        );
    }
    let mut out = vec![0.0; h * w];
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    let norm = 1.0 / (size * size) as f64;
    for c in 0..w {
        for row in 0..h {
            col[row] = rows[row * w + c];
        }
        horizontal(&col, h, &mut col_out);
        for row in 0..h {
            out[row * w + c] = col_out[row] * norm;
        }
    }
    out
}

fn shrink_band(band: &Plane, cfg: &DenoiseConfig) -> Plane {
    let (h, w) = band.dims();
    let noise_var = cfg.base_noise_sigma * cfg.base_noise_sigma;
    let squares: Vec<f64> = band.values().iter().map(|v| v * v).collect();
    let mut local = vec![f64::INFINITY; h * w];
    for &size in &cfg.window_sizes {
        let mean = circular_box_mean(&squares, h, w, size);
        for (l, m) in local.iter_mut().zip(mean) {
            *l = l.min(m);
        }
    }
    let values = band
        .values()
        .iter()
        .zip(local)
        .map(|(&c, m)| {
            let var = (m - noise_var).max(0.0);
            c * var / (var + noise_var)
        })
        .collect();
    Plane::from_raw(h, w, values)
}

/// Symmetric extension on the bottom and right edges up to `h x w`.
fn pad_symmetric(p: &Plane, h: usize, w: usize) -> Plane {
    let (ph, pw) = p.dims();
    let reflect = |i: usize, n: usize| if i < n { i } else { 2 * n - 1 - i };
    Plane::from_fn(h, w, |r, c| p.get(reflect(r, ph), reflect(c, pw)))
}

/// The content estimate `F(p)`. `p` must be on the 8-bit intensity scale.
pub fn denoise(p: &Plane, cfg: &DenoiseConfig) -> Result<Plane> {
    cfg.validate()?;
    let unit = 1usize << cfg.levels;
    let min = MIN_PIPELINE_EDGE.max(unit);
    let (h, w) = p.dims();
    if h < min || w < min {
        return Err(Error::PlaneTooSmall {
            actual: (h, w),
            min,
        });
    }
    let (ph, pw) = (h.div_ceil(unit) * unit, w.div_ceil(unit) * unit);
    // F commutes with adding a constant; working relative to one sample makes
    // flat regions come back bit-exact instead of carrying round-off.
    let offset = p.get(0, 0);
    let centred = p.map(|v| v - offset);
    let input = if (ph, pw) == (h, w) {
        centred
    } else {
        pad_symmetric(&centred, ph, pw)
    };
    let mut pyr = dwt2(&input, cfg.levels)?;
    for bands in &mut pyr.details {
        bands.lh = shrink_band(&bands.lh, cfg);
        bands.hl = shrink_band(&bands.hl, cfg);
        bands.hh = shrink_band(&bands.hh, cfg);
    }
    let out = idwt2(&pyr).map(|v| v + offset);
    Ok(if (ph, pw) == (h, w) {
        out
    } else {
        out.crop(0, 0, h, w)
    })
}

/// Noise residual `W = Y - F(Y)` of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub plane: Plane,
    pub source_tag: String,
}

impl std::ops::Deref for Residual {
    type Target = Plane;
    fn deref(&self) -> &Plane {
        &self.plane
    }
}

/// Luma of `img` on the 8-bit scale: 16-bit samples are divided by 257.
pub fn working_luma(img: &Image) -> Result<Plane> {
    let luma = to_luma(img)?;
    Ok(if img.depth() == 16 {
        luma.scale(1.0 / 257.0)
    } else {
        luma
    })
}

pub fn residual(img: &Image, cfg: &DenoiseConfig) -> Result<Residual> {
    img.ensure_pipeline_size()?;
    let luma = working_luma(img)?;
    let smooth = denoise(&luma, cfg)?;
    Ok(Residual {
        plane: luma.sub(&smooth),
        source_tag: img.source_tag.clone(),
    })
}
