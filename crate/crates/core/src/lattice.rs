//! Periodic peak lattices in autocorrelation surfaces, and collision
//! screening of fingerprint pairs that share such a lattice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{
    autocorr, pce, CorrSurface, Decision, PceResult, VerifyConfig, PCE_NEIGHBORHOOD,
};
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::tensor_io::{resize_bicubic, Plane};

pub const DEFAULT_WINDOW: usize = 551;
pub const DEFAULT_MIN_PEAK: f64 = 0.02;
/// Per-axis slack when matching multiples of a basis to peaks.
pub const MULTIPLE_TOLERANCE: isize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePeak {
    pub shift: (isize, isize),
    pub value: f64,
    pub polarity: Polarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    /// Fundamental offset; `(0, 0)` when no lattice was found.
    pub basis: (isize, isize),
    pub peaks: Vec<LatticePeak>,
    /// Mean `|rho|` over the lattice points.
    pub strength: f64,
    pub window: usize,
}

impl LatticeReport {
    pub fn is_empty(&self) -> bool {
        self.basis == (0, 0)
    }

    fn empty(window: usize) -> Self {
        LatticeReport {
            basis: (0, 0),
            peaks: Vec::new(),
            strength: 0.0,
            window,
        }
    }
}

/// Largest odd window that fits in `dims`, capped at `window`.
pub fn fit_window(window: usize, dims: (usize, usize)) -> usize {
    let m = dims.0.min(dims.1);
    let fit = if m % 2 == 1 { m } else { m.saturating_sub(1) };
    window.min(fit)
}

fn within(a: (isize, isize), b: (isize, isize), tol: isize) -> bool {
    (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol
}

/// Local maxima of `|rho|` above `min_peak` in the centered window, outside
/// the origin guard. On plateaus the first pixel in raster order wins.
fn candidates(win: &Plane, min_peak: f64) -> Vec<LatticePeak> {
    let n = win.height() as isize;
    let half = n / 2;
    let guard = (PCE_NEIGHBORHOOD / 2) as isize;
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let (s1, s2) = (r - half, c - half);
            if s1.abs() <= guard && s2.abs() <= guard {
                continue;
            }
            let v = win.get(r as usize, c as usize);
            let a = v.abs();
            if a <= min_peak {
                continue;
            }
            let mut is_max = true;
            'nb: for dr in -1..=1isize {
                for dc in -1..=1isize {
                    let (rr, cc) = (r + dr, c + dc);
                    if (dr, dc) == (0, 0) || rr < 0 || cc < 0 || rr >= n || cc >= n {
                        continue;
                    }
                    let o = win.get(rr as usize, cc as usize).abs();
                    let earlier = dr < 0 || (dr == 0 && dc < 0);
                    if o > a || (earlier && o == a) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                out.push(LatticePeak {
                    shift: (s1, s2),
                    value: v,
                    polarity: if v > 0.0 {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    },
                });
            }
        }
    }
    out
}

/// Finds the shortest positive peak whose integer multiples inside the
/// window all coincide (within one pixel) with positive peaks.
pub fn detect_lattice(
    surface: &CorrSurface,
    window: usize,
    min_peak: f64,
) -> Result<LatticeReport> {
    if !(min_peak > 0.0 && min_peak < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "min_peak {min_peak} outside (0, 1)"
        )));
    }
    let win = surface.centered_window(window)?;
    let half = (window / 2) as isize;
    let cands = candidates(&win, min_peak);
    let mut positive: Vec<&LatticePeak> = cands
        .iter()
        .filter(|p| p.polarity == Polarity::Positive)
        .filter(|p| p.shift.0 > 0 || (p.shift.0 == 0 && p.shift.1 > 0))
        .collect();
    let norm2 = |s: (isize, isize)| s.0 * s.0 + s.1 * s.1;
    positive.sort_by_key(|p| (norm2(p.shift), p.shift));

    for b in &positive {
        let mut matched = vec![**b];
        let mut ok = true;
        let mut k = 2;
        loop {
            let m = (k * b.shift.0, k * b.shift.1);
            if m.0.abs() > half || m.1.abs() > half {
                break;
            }
            match positive
                .iter()
                .find(|p| within(p.shift, m, MULTIPLE_TOLERANCE))
            {
                Some(p) => matched.push(**p),
                None => {
                    ok = false;
                    break;
                }
            }
            k += 1;
        }
        if !ok || matched.len() < 2 {
            continue;
        }
        let mut peaks = Vec::with_capacity(2 * matched.len());
        for p in &matched {
            peaks.push(*p);
            let neg = (-p.shift.0, -p.shift.1);
            let value = win.get((neg.0 + half) as usize, (neg.1 + half) as usize);
            peaks.push(LatticePeak {
                shift: neg,
                value,
                polarity: if value > 0.0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                },
            });
        }
        let strength = peaks.iter().map(|p| p.value.abs()).sum::<f64>() / peaks.len() as f64;
        peaks.extend(
            cands
                .iter()
                .filter(|p| p.polarity == Polarity::Negative)
                .copied(),
        );
        return Ok(LatticeReport {
            basis: b.shift,
            peaks,
            strength: strength.min(1.0),
            window,
        });
    }
    Ok(LatticeReport::empty(window))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub verify: VerifyConfig,
    pub window: usize,
    pub min_peak: f64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            verify: VerifyConfig::default(),
            window: DEFAULT_WINDOW,
            min_peak: DEFAULT_MIN_PEAK,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CollisionSuspected,
    Distinct,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CollisionSuspected => "collision_suspected",
            Verdict::Distinct => "distinct",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub pce_ab: PceResult,
    pub lattice_a: LatticeReport,
    pub lattice_b: LatticeReport,
    pub basis_match: bool,
    pub verdict: Verdict,
}

/// Lattice report of a fingerprint's autocorrelation.
pub fn fingerprint_lattice(fp: &Fingerprint, cfg: &ScreenConfig) -> Result<LatticeReport> {
    let surface = autocorr(&fp.plane)?;
    detect_lattice(&surface, fit_window(cfg.window, fp.dims()), cfg.min_peak)
}

fn verdict(
    pce_ab: &PceResult,
    a: &LatticeReport,
    b: &LatticeReport,
    cfg: &ScreenConfig,
) -> (bool, Verdict) {
    let basis_match = within(a.basis, b.basis, MULTIPLE_TOLERANCE);
    let v = match crate::correlate::verify(pce_ab, &cfg.verify) {
        Decision::H0 => Verdict::Distinct,
        Decision::H1 if basis_match => Verdict::CollisionSuspected,
        Decision::H1 => Verdict::Inconclusive,
    };
    (basis_match, v)
}

fn screen_with(
    fa: &Plane,
    fb: &Plane,
    la: &LatticeReport,
    lb: &LatticeReport,
    cfg: &ScreenConfig,
) -> Result<CollisionReport> {
    let pce_ab = pce(fa, fb)?;
    let (basis_match, verdict) = verdict(&pce_ab, la, lb, cfg);
    Ok(CollisionReport {
        pce_ab,
        lattice_a: la.clone(),
        lattice_b: lb.clone(),
        basis_match,
        verdict,
    })
}

/// Compares two fingerprints of equal size.
pub fn collision_screen(
    fa: &Fingerprint,
    fb: &Fingerprint,
    cfg: &ScreenConfig,
) -> Result<CollisionReport> {
    cfg.verify.validate()?;
    fa.plane.ensure_same_dims(&fb.plane)?;
    let la = fingerprint_lattice(fa, cfg)?;
    let lb = fingerprint_lattice(fb, cfg)?;
    screen_with(&fa.plane, &fb.plane, &la, &lb, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: usize,
    pub b: usize,
    pub report: CollisionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossScreen {
    /// Common dims all fingerprints were resized to.
    pub dims: (usize, usize),
    pub groups: Vec<String>,
    /// Upper-triangular pairs `a < b` in row-major order.
    pub pairs: Vec<PairReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterRow {
    pub pair_id: String,
    pub group_a: String,
    pub group_b: String,
    pub pce: f64,
    pub verdict: Verdict,
}

impl CrossScreen {
    pub fn scatter(&self) -> Vec<ScatterRow> {
        self.pairs
            .iter()
            .map(|p| ScatterRow {
                pair_id: format!("{}-{}", p.a, p.b),
                group_a: self.groups[p.a].clone(),
                group_b: self.groups[p.b].clone(),
                pce: p.report.pce_ab.pce,
                verdict: p.report.verdict,
            })
            .collect()
    }
}

/// All-pairs screening after resizing every fingerprint (bicubic) to the
/// smallest common dims. Groups are the first provenance tag of each input.
pub fn cross_model_screen(fps: &[Fingerprint], cfg: &ScreenConfig) -> Result<CrossScreen> {
    if fps.len() < 2 {
        return Err(Error::TooFewFingerprints(fps.len()));
    }
    cfg.verify.validate()?;
    let h = fps.iter().map(|f| f.dims().0).min().unwrap();
    let w = fps.iter().map(|f| f.dims().1).min().unwrap();
    let planes = fps
        .par_iter()
        .map(|f| {
            if f.dims() == (h, w) {
                Ok(f.plane.clone())
            } else {
                resize_bicubic(&f.plane, h, w)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let window = fit_window(cfg.window, (h, w));
    let lattices = planes
        .par_iter()
        .map(|p| detect_lattice(&autocorr(p)?, window, cfg.min_peak))
        .collect::<Result<Vec<_>>>()?;
    let index: Vec<(usize, usize)> = (0..fps.len())
        .flat_map(|a| (a + 1..fps.len()).map(move |b| (a, b)))
        .collect();
    let pairs = index
        .par_iter()
        .map(|&(a, b)| {
            let report = screen_with(&planes[a], &planes[b], &lattices[a], &lattices[b], cfg)?;
            Ok(PairReport { a, b, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let groups = fps
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.provenance
                .first()
                .cloned()
                .unwrap_or_else(|| format!("fp{i}"))
        })
        .collect();
    Ok(CrossScreen {
        dims: (h, w),
        groups,
        pairs,
    })
}
