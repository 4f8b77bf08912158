//! Maximum-likelihood PRNU estimation and fingerprint post-processing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{residual, working_luma, DenoiseConfig, Residual};
use crate::error::{Error, Result};
use crate::fft;
use crate::tensor_io::{atomic_write, load_plane, FptTensor, Image, Plane};

/// Running sums `sum(W * Y)` and `sum(Y * Y)` over the contributing images.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintAccumulator {
    numerator: Plane,
    denominator: Plane,
    count: usize,
    exclude_saturated: bool,
    provenance: Vec<String>,
}

impl FingerprintAccumulator {
    pub fn new(height: usize, width: usize) -> Self {
        FingerprintAccumulator {
            numerator: Plane::zeros(height, width),
            denominator: Plane::zeros(height, width),
            count: 0,
            exclude_saturated: true,
            provenance: Vec::new(),
        }
    }

    /// Whether saturated pixels get zero weight (default `true`).
    pub fn exclude_saturated(mut self, on: bool) -> Self {
        self.exclude_saturated = on;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        self.numerator.dims()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn numerator(&self) -> &Plane {
        &self.numerator
    }

    pub fn denominator(&self) -> &Plane {
        &self.denominator
    }

    pub fn accumulate(&mut self, img: &Image, res: &Residual) -> Result<()> {
        let dims = self.dims();
        for actual in [img.dims(), res.dims()] {
            if actual != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual,
                });
            }
        }
        let y = working_luma(img)?;
        let (_, w) = dims;
        let num = self.numerator.values_mut();
        let den = self.denominator.values_mut();
        for (idx, (&yv, &rv)) in y.values().iter().zip(res.values()).enumerate() {
            if self.exclude_saturated && img.is_saturated(idx / w, idx % w) {
                continue;
            }
            num[idx] += rv * yv;
            den[idx] += yv * yv;
        }
        self.count += 1;
        self.provenance.push(img.source_tag.clone());
        Ok(())
    }

    /// Adds `other` into `self`; provenance of `other` is appended.
    pub fn merge(mut self, other: FingerprintAccumulator) -> Result<Self> {
        self.numerator.ensure_same_dims(&other.numerator)?;
        for (a, b) in self
            .numerator
            .values_mut()
            .iter_mut()
            .zip(other.numerator.values())
        {
            *a += b;
        }
        for (a, b) in self
            .denominator
            .values_mut()
            .iter_mut()
            .zip(other.denominator.values())
        {
            *a += b;
        }
        self.count += other.count;
        self.provenance.extend(other.provenance);
        Ok(self)
    }

    /// `K = num / (den + eps)`, element-wise.
    pub fn finalize(&self, eps: f64) -> Result<Fingerprint> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {eps}"
            )));
        }
        let plane = self
            .numerator
            .zip_map(&self.denominator, |n, d| n / (d + eps));
        Ok(Fingerprint {
            plane,
            post_flags: Vec::new(),
            provenance: self.provenance.clone(),
            eps,
            denoise: None,
        })
    }
}

/// Merges accumulators pairwise, level by level: `((a0+a1)+(a2+a3))+...`.
/// The tree shape depends only on the input length, never on scheduling.
pub fn tree_merge(mut accs: Vec<FingerprintAccumulator>) -> Result<FingerprintAccumulator> {
    if accs.is_empty() {
        return Err(Error::EmptyAccumulator);
    }
    while accs.len() > 1 {
        let mut next = Vec::with_capacity(accs.len().div_ceil(2));
        let mut it = accs.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b)?,
                None => a,
            });
        }
        accs = next;
    }
    Ok(accs.pop().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostFlag {
    ZeroMean,
    WienerFft,
    Adapted,
}

impl PostFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PostFlag::ZeroMean => "zero_mean",
            PostFlag::WienerFft => "wiener_fft",
            PostFlag::Adapted => "adapted",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "zero_mean" => PostFlag::ZeroMean,
            "wiener_fft" => PostFlag::WienerFft,
            "adapted" => PostFlag::Adapted,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fingerprint {
    pub plane: Plane,
    /// Post-processing steps in the order applied.
    pub post_flags: Vec<PostFlag>,
    pub provenance: Vec<String>,
    pub eps: f64,
    pub denoise: Option<DenoiseConfig>,
}

impl Fingerprint {
    /// Wraps an arbitrary plane (no provenance, default eps).
    pub fn from_plane(plane: Plane) -> Self {
        Fingerprint {
            plane,
            post_flags: Vec::new(),
            provenance: Vec::new(),
            eps: DEFAULT_EPS,
            denoise: None,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.plane.dims()
    }

    pub fn with_plane(&self, plane: Plane, flag: PostFlag) -> Self {
        let mut out = self.clone();
        out.plane = plane;
        out.post_flags.push(flag);
        out
    }

    /// The `key=value` sidecar stored next to the FPT plane.
    pub fn sidecar_text(&self) -> String {
        let (h, w) = self.dims();
        let mut s = String::from("format=prnu-fingerprint-1\n");
        let _ = writeln!(s, "height={h}\nwidth={w}\neps={:?}\nluma=bt601", self.eps);
        let flags: Vec<&str> = self.post_flags.iter().map(PostFlag::as_str).collect();
        let _ = writeln!(s, "post_flags={}", flags.join(","));
        if let Some(d) = &self.denoise {
            let windows: Vec<String> = d.window_sizes.iter().map(usize::to_string).collect();
            let _ = writeln!(
                s,
                "denoise_levels={}\ndenoise_sigma0={:?}\ndenoise_windows={}",
                d.levels,
                d.base_noise_sigma,
                windows.join(",")
            );
        }
        for tag in &self.provenance {
            let _ = writeln!(s, "provenance={}", tag.replace('\n', " "));
        }
        s
    }

    fn apply_sidecar(&mut self, text: &str) -> Result<()> {
        let bad = |line: usize, msg: String| Error::Syntax { line, msg };
        let mut denoise = DenoiseConfig::default();
        let mut has_denoise = false;
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(n, format!("expected key=value, got '{line}'")))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| bad(n, format!("{key}: {e}")));
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| bad(n, format!("{key}: {e}")))
            };
            match key {
                "format" | "luma" => {}
                "height" | "width" => {
                    let (h, w) = self.dims();
                    let expected = if key == "height" { h } else { w };
                    if int(value)? != expected {
                        return Err(bad(n, format!("{key} {value} does not match plane")));
                    }
                }
                "eps" => self.eps = num(value)?,
                "post_flags" => {
                    self.post_flags = value
                        .split(',')
                        .filter(|f| !f.is_empty())
                        .map(|f| {
                            PostFlag::parse(f).ok_or_else(|| bad(n, format!("unknown flag {f}")))
                        })
                        .collect::<Result<_>>()?;
                }
                "denoise_levels" => {
                    denoise.levels = int(value)?;
                    has_denoise = true;
                }
                "denoise_sigma0" => denoise.base_noise_sigma = num(value)?,
                "denoise_windows" => {
                    denoise.window_sizes = value.split(',').map(int).collect::<Result<_>>()?;
                }
                "provenance" => self.provenance.push(value.to_string()),
                _ => return Err(bad(n, format!("unknown key '{key}'"))),
            }
        }
        if has_denoise {
            self.denoise = Some(denoise);
        }
        Ok(())
    }
}

pub const DEFAULT_EPS: f64 = 1.0;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the plane as FPT and the sidecar as `<path>.meta`.
pub fn save_fingerprint(fp: &Fingerprint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = crate::tensor_io::encode_fpt(&FptTensor::from_plane(&fp.plane));
    atomic_write(path, &bytes)?;
    atomic_write(&sidecar_path(path), fp.sidecar_text().as_bytes())
}

/// Loads an FPT plane and, when present, its sidecar.
pub fn load_fingerprint(path: impl AsRef<Path>) -> Result<Fingerprint> {
    let path = path.as_ref();
    let mut fp = Fingerprint::from_plane(load_plane(path)?);
    if fp.provenance.is_empty() {
        fp.provenance.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    }
    let meta = sidecar_path(path);
    if meta.exists() {
        let text = std::fs::read_to_string(&meta).map_err(|source| Error::Unreadable {
            path: meta.clone(),
            source,
        })?;
        fp.provenance.clear();
        fp.apply_sidecar(&text)?;
    }
    Ok(fp)
}

/// Subtracts every row mean, then every column mean.
pub fn zero_mean(fp: &Fingerprint) -> Fingerprint {
    let (h, w) = fp.dims();
    let mut v = fp.plane.values().to_vec();
    for row in v.chunks_exact_mut(w) {
        let m = row.iter().sum::<f64>() / w as f64;
        row.iter_mut().for_each(|x| *x -= m);
    }
    let mut col_means = vec![0.0; w];
    for row in v.chunks_exact(w) {
        for (m, x) in col_means.iter_mut().zip(row) {
            *m += x;
        }
    }
    col_means.iter_mut().for_each(|m| *m /= h as f64);
    for row in v.chunks_exact_mut(w) {
        for (x, m) in row.iter_mut().zip(&col_means) {
            *x -= m;
        }
    }
    fp.with_plane(Plane::from_raw(h, w, v), PostFlag::ZeroMean)
}

/// Attenuates spectral peaks: each non-DC bin's power is multiplied by
/// `1 / (1 + strength * max(0, |F|^2 / P0 - 1))`, where `P0` is the noise
/// floor estimated from the median power.
pub fn wiener_fft(fp: &Fingerprint, strength: f64) -> Result<Fingerprint> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "wiener strength must be positive, got {strength}"
        )));
    }
    let (h, w) = fp.dims();
    let mut spec = fft::forward(h, w, fp.plane.values());
    let mut power: Vec<f64> = spec.data[1..].iter().map(|c| c.norm_sqr()).collect();
    if power.is_empty() {
        return Ok(fp.with_plane(fp.plane.clone(), PostFlag::WienerFft));
    }
    let mid = power.len() / 2;
    let (_, median, _) = power.select_nth_unstable_by(mid, f64::total_cmp);
    // median of an exponential variable is mean * ln 2
    let floor = *median / std::f64::consts::LN_2;
    if floor > 0.0 {
        for c in spec.data[1..].iter_mut() {
            let excess = (c.norm_sqr() / floor - 1.0).max(0.0);
            *c *= (1.0 / (1.0 + strength * excess)).sqrt();
        }
    }
    let plane = Plane::new(h, w, fft::inverse_real(spec))?;
    Ok(fp.with_plane(plane, PostFlag::WienerFft))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateConfig {
    pub denoise: DenoiseConfig,
    pub eps: f64,
    pub exclude_saturated: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            denoise: DenoiseConfig::default(),
            eps: DEFAULT_EPS,
            exclude_saturated: true,
        }
    }
}

/// Images per serial shard; shards are merged with [`tree_merge`].
const SHARD: usize = 4;

/// Estimates a fingerprint from `count` images produced by `load(i)`.
///
/// Images are grouped into fixed consecutive shards, so the summation order
/// (and therefore the result) does not depend on the thread count.
pub fn estimate_with<F>(count: usize, load: F, cfg: &EstimateConfig) -> Result<Fingerprint>
where
    F: Fn(usize) -> Result<Image> + Sync,
{
    cfg.denoise.validate()?;
    if count == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let shards: Vec<usize> = (0..count).step_by(SHARD).collect();
    let accs = shards
        .par_iter()
        .map(|&start| {
            let mut acc: Option<FingerprintAccumulator> = None;
            for i in start..(start + SHARD).min(count) {
                let img = load(i)?;
                let res = residual(&img, &cfg.denoise)?;
                let acc = acc.get_or_insert_with(|| {
                    let (h, w) = img.dims();
                    FingerprintAccumulator::new(h, w).exclude_saturated(cfg.exclude_saturated)
                });
                acc.accumulate(&img, &res)?;
            }
            Ok(acc.expect("shard is non-empty"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fp = tree_merge(accs)?.finalize(cfg.eps)?;
    fp.denoise = Some(cfg.denoise.clone());
    Ok(fp)
}

pub fn estimate_fingerprint(images: &[Image], cfg: &EstimateConfig) -> Result<Fingerprint> {
    estimate_with(images.len(), |i| Ok(images[i].clone()), cfg)
}
