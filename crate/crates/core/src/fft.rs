//! 2-D DFT over row-major real planes, built from rustfft row transforms.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Rows of length `len` are transformed in chunks to amortize task overhead.
fn transform_rows(data: &mut [Complex64], len: usize, inverse: bool) {
    let fft = plan(len, inverse);
    let rows_per_task = (16384 / len).max(1);
    data.par_chunks_mut(len * rows_per_task)
        .for_each(|chunk| fft.process(chunk));
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    const TILE: usize = 32;
    let mut dst = vec![Complex64::default(); src.len()];
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}

/// Unnormalized 2-D spectrum, stored column-major (`data[k2 * height + k1]`).
pub(crate) struct Spectrum {
    pub height: usize,
    pub width: usize,
    pub data: Vec<Complex64>,
}

pub(crate) fn forward(height: usize, width: usize, values: &[f64]) -> Spectrum {
    debug_assert_eq!(values.len(), height * width);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_rows(&mut buf, width, false);
    let mut t = transpose(&buf, height, width);
    transform_rows(&mut t, height, false);
    Spectrum {
        height,
        width,
        data: t,
    }
}

/// Inverse transform, normalized by `1 / (height * width)`; returns the real part.
pub(crate) fn inverse_real(spec: Spectrum) -> Vec<f64> {
    let Spectrum {
        height,
        width,
        mut data,
    } = spec;
    transform_rows(&mut data, height, true);
    let mut buf = transpose(&data, width, height);
    transform_rows(&mut buf, width, true);
    let norm = 1.0 / (height * width) as f64;
    buf.into_iter().map(|c| c.re * norm).collect()
}
