//! Block-wise correlation analyses: local shift maps with fingerprint
//! adaptation, per-block correlation maps, bokeh masks and masked PCE.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlate::{ncc_surface, pce_from_surface, PceResult, SurfaceEnergy};
use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, PostFlag};
use crate::tensor_io::Plane;

pub const DEFAULT_SHIFT_BLOCK: usize = 512;
pub const DEFAULT_SEARCH_RADIUS: usize = 20;
pub const DEFAULT_CORR_BLOCK: usize = 21;
/// Masks covering more than this fraction of the frame are rejected.
pub const MAX_MASK_COVERAGE: f64 = 0.9;

fn check_dims(a: &Plane, b: &Plane) -> Result<()> {
    a.ensure_same_dims(b)
}

/// Top-left corners along one axis: `0, stride, 2*stride, ...` below `n`.
fn origins(n: usize, stride: usize) -> Vec<usize> {
    (0..n).step_by(stride).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftCell {
    pub shift: (isize, isize),
    /// Block-level PCE at `shift`; 0 for blocks without usable content.
    pub confidence: f64,
    pub block_origin: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells.
    pub cells: Vec<ShiftCell>,
    pub block: usize,
    pub stride: usize,
    pub dims: (usize, usize),
    pub search_radius: usize,
}

impl ShiftMap {
    pub fn cell(&self, row: usize, col: usize) -> &ShiftCell {
        &self.cells[row * self.cols + col]
    }

    /// Extent of the cell's block, clipped to the frame.
    pub fn block_extent(&self, cell: &ShiftCell) -> (usize, usize) {
        let (top, left) = cell.block_origin;
        (
            self.block.min(self.dims.0 - top),
            self.block.min(self.dims.1 - left),
        )
    }
}

fn best_shift(w: &Plane, term: &Plane, radius: usize) -> Result<((isize, isize), f64)> {
    let surface = ncc_surface(w, term)?;
    let s = surface.plane();
    let r = radius as isize;
    let mut best = (0, 0);
    let mut best_v = f64::NEG_INFINITY;
    for d1 in -r..=r {
        for d2 in -r..=r {
            let v = surface.at(d1, d2);
            if v > best_v {
                best_v = v;
                best = (d1, d2);
            }
        }
    }
    let (h, wd) = s.dims();
    let raw = (
        best.0.rem_euclid(h as isize) as usize,
        best.1.rem_euclid(wd as isize) as usize,
    );
    let (pce, _) = SurfaceEnergy::new(s).pce_at(s, raw.0, raw.1, s.len())?;
    Ok((best, pce))
}

/// Per-block best circular shift of `w` against `term` within
/// `search_radius`. Blocks on the bottom and right edges are clipped.
pub fn block_shift_map(
    w: &Plane,
    term: &Plane,
    block: usize,
    stride: usize,
    search_radius: usize,
) -> Result<ShiftMap> {
    check_dims(w, term)?;
    let (h, wd) = w.dims();
    if block == 0 || block > h.min(wd) {
        return Err(Error::InvalidConfig(format!(
            "block {block} must be in 1..={}",
            h.min(wd)
        )));
    }
    if stride == 0 || stride > block {
        return Err(Error::InvalidConfig(format!(
            "stride {stride} must be in 1..={block}"
        )));
    }
    if search_radius > block / 4 {
        return Err(Error::InvalidConfig(format!(
            "search radius {search_radius} exceeds block/4 = {}",
            block / 4
        )));
    }
    let tops = origins(h, stride);
    let lefts = origins(wd, stride);
    let jobs: Vec<(usize, usize)> = tops
        .iter()
        .flat_map(|&t| lefts.iter().map(move |&l| (t, l)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(top, left)| {
            let (bh, bw) = (block.min(h - top), block.min(wd - left));
            let a = w.crop(top, left, bh, bw);
            let b = term.crop(top, left, bh, bw);
            let (shift, confidence) = match best_shift(&a, &b, search_radius) {
                Ok(found) => found,
                Err(Error::DegenerateInput(_)) => ((0, 0), 0.0),
                Err(e) => return Err(e),
            };
            Ok(ShiftCell {
                shift,
                confidence,
                block_origin: (top, left),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftMap {
        rows: tops.len(),
        cols: lefts.len(),
        cells,
        block,
        stride,
        dims: (h, wd),
        search_radius,
    })
}

/// Each block of the output is `fp(x + shift)` (circular in the frame).
/// With overlapping blocks, later cells in row-major order win.
pub fn adapt_fingerprint(fp: &Fingerprint, map: &ShiftMap) -> Result<Fingerprint> {
    if fp.dims() != map.dims {
        return Err(Error::DimensionMismatch {
            expected: map.dims,
            actual: fp.dims(),
        });
    }
    let mut out = fp.plane.clone();
    for cell in &map.cells {
        let (top, left) = cell.block_origin;
        let (bh, bw) = map.block_extent(cell);
        let (d1, d2) = cell.shift;
        for r in top..top + bh {
            for c in left..left + bw {
                let v = fp.plane.get_wrapped(r as isize + d1, c as isize + d2);
                out.set(r, c, v);
            }
        }
    }
    Ok(fp.with_plane(out, PostFlag::Adapted))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCorrMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rho(0, 0)` per block.
    pub values: Vec<f64>,
    pub block: usize,
    pub dims: (usize, usize),
}

impl BlockCorrMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn to_plane(&self) -> Plane {
        Plane::from_fn(self.rows, self.cols, |r, c| self.get(r, c))
    }
}

fn local_rho(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x - ma, y - mb);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Zero-shift correlation of every `block x block` tile (edge tiles clipped).
/// Constant tiles map to 0.
pub fn block_corr_map(w: &Plane, term: &Plane, block: usize) -> Result<BlockCorrMap> {
    check_dims(w, term)?;
    if block < 3 {
        return Err(Error::InvalidConfig(format!(
            "block {block} must be at least 3"
        )));
    }
    let (h, wd) = w.dims();
    let (rows, cols) = (h.div_ceil(block), wd.div_ceil(block));
    let values = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (top, left) = ((i / cols) * block, (i % cols) * block);
            let (bh, bw) = (block.min(h - top), block.min(wd - left));
            let a = w.crop(top, left, bh, bw);
            let b = term.crop(top, left, bh, bw);
            local_rho(a.values(), b.values())
        })
        .collect();
    Ok(BlockCorrMap {
        rows,
        cols,
        values,
        block,
        dims: (h, wd),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BokehMask {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `true` where the block is suspected bokeh.
    pub block_mask: Vec<bool>,
    pub block: usize,
    pub dims: (usize, usize),
    pub threshold_used: f64,
    /// Set when every block is flagged.
    pub full_frame: bool,
}

impl BokehMask {
    /// An all-clear mask for a frame.
    pub fn empty(dims: (usize, usize), block: usize) -> Self {
        let (rows, cols) = (dims.0.div_ceil(block), dims.1.div_ceil(block));
        BokehMask {
            rows,
            cols,
            block_mask: vec![false; rows * cols],
            block,
            dims,
            threshold_used: f64::NEG_INFINITY,
            full_frame: false,
        }
    }

    /// The block mask expanded to pixels (1 = masked).
    pub fn pixel_mask(&self) -> Plane {
        let (h, w) = self.dims;
        Plane::from_fn(h, w, |r, c| {
            if self.block_mask[(r / self.block) * self.cols + c / self.block] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn coverage(&self) -> f64 {
        let p = self.pixel_mask();
        p.values().iter().sum::<f64>() / p.len() as f64
    }
}

/// Otsu's threshold over the cell values: the lower bound of the upper class
/// of the split maximizing the between-class variance.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = v.iter().sum();
    let mut below = 0.0;
    let mut best = (f64::NEG_INFINITY, v[0]);
    for k in 1..n {
        below += v[k - 1];
        if v[k] == v[k - 1] {
            continue;
        }
        let (w0, w1) = (k as f64 / n as f64, (n - k) as f64 / n as f64);
        let (m0, m1) = (below / k as f64, (total - below) / (n - k) as f64);
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best.0 {
            best = (between, v[k]);
        }
    }
    best.1
}

/// Flags blocks whose correlation is strictly below the threshold.
pub fn bokeh_mask(map: &BlockCorrMap, threshold: Threshold) -> BokehMask {
    let t = match threshold {
        Threshold::Fixed(t) => t,
        Threshold::Auto => otsu_threshold(&map.values),
    };
    let block_mask: Vec<bool> = map.values.iter().map(|&v| v < t).collect();
    let full_frame = block_mask.iter().all(|&m| m);
    BokehMask {
        rows: map.rows,
        cols: map.cols,
        block_mask,
        block: map.block,
        dims: map.dims,
        threshold_used: t,
        full_frame,
    }
}

/// PCE with masked pixels replaced by each plane's unmasked mean; the
/// `(n - |N|)` factor counts unmasked pixels only.
pub fn masked_pce(w: &Plane, term: &Plane, mask: &BokehMask) -> Result<PceResult> {
    check_dims(w, term)?;
    if mask.dims != w.dims() {
        return Err(Error::DimensionMismatch {
            expected: w.dims(),
            actual: mask.dims,
        });
    }
    let m = mask.pixel_mask();
    let masked: Vec<bool> = m.values().iter().map(|&v| v > 0.5).collect();
    let count = masked.iter().filter(|&&b| b).count();
    let coverage = count as f64 / masked.len() as f64;
    if coverage > MAX_MASK_COVERAGE {
        return Err(Error::InsufficientSupport { coverage });
    }
    let fill = |p: &Plane| -> Plane {
        if count == 0 {
            return p.clone();
        }
        let kept: Vec<f64> = p
            .values()
            .iter()
            .zip(&masked)
            .filter(|(_, &m)| !m)
            .map(|(v, _)| *v)
            .collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        let values = p
            .values()
            .iter()
            .zip(&masked)
            .map(|(&v, &m)| if m { mean } else { v })
            .collect();
        Plane::from_raw(p.height(), p.width(), values)
    };
    let surface = ncc_surface(&fill(w), &fill(term))?;
    pce_from_surface(&surface, masked.len() - count)
}
