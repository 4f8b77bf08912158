//! Circular normalized cross-correlation, PCE and the threshold decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::tensor_io::Plane;

/// Edge of the square neighborhood excluded around the peak.
pub const PCE_NEIGHBORHOOD: usize = 11;

/// The decision threshold conventionally used for PCE.
pub const DEFAULT_TAU: f64 = 60.0;

fn centered(p: &Plane, what: &'static str) -> Result<(Vec<f64>, f64)> {
    if p.is_constant() {
        return Err(Error::DegenerateInput(what));
    }
    let m = p.mean();
    let v: Vec<f64> = p.values().iter().map(|x| x - m).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateInput(what));
    }
    Ok((v, norm))
}

/// `rho(s1, s2) = sum_i a~(i) b~(i + s) / (|a~| |b~|)` with centered planes
/// and circular indexing of `b`.
pub fn ncc_at(a: &Plane, b: &Plane, s1: isize, s2: isize) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    let (ca, na) = centered(a, "first plane is constant")?;
    let (cb, nb) = centered(b, "second plane is constant")?;
    let mut acc = 0.0;
    for r in 0..h {
        let rb = (r as isize + s1).rem_euclid(h as isize) as usize;
        for c in 0..w {
            let cbi = (c as isize + s2).rem_euclid(w as isize) as usize;
            acc += ca[r * w + c] * cb[rb * w + cbi];
        }
    }
    Ok(acc / (na * nb))
}

/// NCC for every circular shift; entry `(s1 mod H, s2 mod W)` holds `rho(s1, s2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrSurface {
    values: Plane,
}

impl CorrSurface {
    pub fn from_plane(values: Plane) -> Self {
        CorrSurface { values }
    }

    pub fn plane(&self) -> &Plane {
        &self.values
    }

    pub fn into_plane(self) -> Plane {
        self.values
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    /// `rho` at a signed shift.
    pub fn at(&self, s1: isize, s2: isize) -> f64 {
        self.values.get_wrapped(s1, s2)
    }

    /// The `window x window` block centered on the zero shift: entry `(r, c)`
    /// holds `rho(r - window/2, c - window/2)`.
    pub fn centered_window(&self, window: usize) -> Result<Plane> {
        let (h, w) = self.dims();
        if window % 2 == 0 || window > h.min(w) {
            return Err(Error::InvalidConfig(format!(
                "window {window} must be odd and at most {}",
                h.min(w)
            )));
        }
        let half = (window / 2) as isize;
        Ok(Plane::from_fn(window, window, |r, c| {
            self.at(r as isize - half, c as isize - half)
        }))
    }
}

/// Frequency-domain evaluation of [`ncc_at`] over all shifts.
pub fn ncc_surface(a: &Plane, b: &Plane) -> Result<CorrSurface> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    let (ca, na) = centered(a, "first plane is constant")?;
    let (cb, nb) = centered(b, "second plane is constant")?;
    let fa = fft::forward(h, w, &ca);
    let mut fb = fft::forward(h, w, &cb);
    for (x, y) in fb.data.iter_mut().zip(&fa.data) {
        *x *= y.conj();
    }
    let norm = 1.0 / (na * nb);
    let values = fft::inverse_real(fb)
        .into_iter()
        .map(|v| v * norm)
        .collect();
    Ok(CorrSurface {
        values: Plane::new(h, w, values)?,
    })
}

pub fn autocorr(p: &Plane) -> Result<CorrSurface> {
    ncc_surface(p, p)
}

/// Wraps a raw index into the signed range `(-n/2, n/2]`.
pub(crate) fn signed(i: usize, n: usize) -> isize {
    if i > n / 2 {
        i as isize - n as isize
    } else {
        i as isize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PceResult {
    pub pce: f64,
    /// Signed location of the maximum, each component in `(-n/2, n/2]`.
    pub peak_shift: (isize, isize),
    pub rho_max: f64,
    /// Size of the excluded neighborhood `|N|`.
    pub excluded: usize,
    pub dims: (usize, usize),
    /// PCE with the peak pinned at the zero shift.
    pub pce_zero: f64,
    pub rho_zero: f64,
}

fn neighborhood_axis(center: usize, n: usize) -> Vec<usize> {
    let half = (PCE_NEIGHBORHOOD / 2) as isize;
    if n <= PCE_NEIGHBORHOOD {
        return (0..n).collect();
    }
    (-half..=half)
        .map(|k| (center as isize + k).rem_euclid(n as isize) as usize)
        .collect()
}

/// Energy bookkeeping shared by the full and zero-pinned statistics.
pub(crate) struct SurfaceEnergy {
    total: f64,
}

impl SurfaceEnergy {
    pub(crate) fn new(s: &Plane) -> Self {
        SurfaceEnergy { total: s.energy() }
    }

    /// PCE for a peak at raw index `(r, c)`; `support` is the number of
    /// samples that the `(support - |N|)` factor counts.
    pub(crate) fn pce_at(
        &self,
        s: &Plane,
        r: usize,
        c: usize,
        support: usize,
    ) -> Result<(f64, usize)> {
        let (h, w) = s.dims();
        let rows = neighborhood_axis(r, h);
        let cols = neighborhood_axis(c, w);
        let excluded = rows.len() * cols.len();
        let mut near = 0.0;
        for &i in &rows {
            for &j in &cols {
                let v = s.get(i, j);
                near += v * v;
            }
        }
        let rest = self.total - near;
        if support <= excluded || rest <= 0.0 {
            return Err(Error::DegenerateInput(
                "correlation surface has no energy outside the peak neighborhood",
            ));
        }
        let peak = s.get(r, c);
        let value = (support - excluded) as f64 * peak.signum() * peak * peak / rest;
        Ok((value, excluded))
    }
}

/// Raw row-major index of the maximum; ties go to the first index.
pub(crate) fn argmax(s: &Plane) -> (usize, usize) {
    let mut best = 0;
    for (i, &v) in s.values().iter().enumerate() {
        if v > s.values()[best] {
            best = i;
        }
    }
    (best / s.width(), best % s.width())
}

pub(crate) fn pce_from_surface(surface: &CorrSurface, support: usize) -> Result<PceResult> {
    let s = surface.plane();
    let (h, w) = s.dims();
    let energy = SurfaceEnergy::new(s);
    let (r, c) = argmax(s);
    let (pce, excluded) = energy.pce_at(s, r, c, support)?;
    let (pce_zero, _) = energy.pce_at(s, 0, 0, support)?;
    Ok(PceResult {
        pce,
        peak_shift: (signed(r, h), signed(c, w)),
        rho_max: s.get(r, c),
        excluded,
        dims: (h, w),
        pce_zero,
        rho_zero: s.get(0, 0),
    })
}

/// Signed peak-to-correlation energy of `w` against `term` (typically `K * Y`).
pub fn pce(w: &Plane, term: &Plane) -> Result<PceResult> {
    let surface = ncc_surface(w, term)?;
    pce_from_surface(&surface, w.len())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Full,
    ZeroOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub tau: f64,
    pub search: SearchMode,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            tau: DEFAULT_TAU,
            search: SearchMode::Full,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "tau must be positive, got {}",
                self.tau
            )))
        }
    }

    /// The statistic compared against `tau` under this search mode.
    pub fn statistic(&self, r: &PceResult) -> f64 {
        match self.search {
            SearchMode::Full => r.pce,
            SearchMode::ZeroOnly => r.pce_zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::H0 => "H0",
            Decision::H1 => "H1",
        })
    }
}

/// `H1` iff the statistic strictly exceeds `tau`.
pub fn verify(r: &PceResult, cfg: &VerifyConfig) -> Decision {
    if cfg.statistic(r) > cfg.tau {
        Decision::H1
    } else {
        Decision::H0
    }
}
