use super::{Image, Plane};
use crate::error::{Error, Result};

/// ITU-R BT.601 luma weights for R, G, B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Single-channel view of `img` in its native sample scale.
pub fn to_luma(img: &Image) -> Result<Plane> {
    let px = img.pixels();
    let values = match img.channels() {
        1 => px.iter().map(|&v| f64::from(v)).collect(),
        3 => px
            .chunks_exact(3)
            .map(|c| {
                LUMA_WEIGHTS[0] * f64::from(c[0])
                    + LUMA_WEIGHTS[1] * f64::from(c[1])
                    + LUMA_WEIGHTS[2] * f64::from(c[2])
            })
            .collect(),
        n => return Err(Error::UnsupportedChannels(n)),
    };
    Ok(Plane::from_raw(img.height(), img.width(), values))
}

/// The `h x w` block at offset `(floor((H-h)/2), floor((W-w)/2))`.
pub fn crop_center(p: &Plane, h: usize, w: usize) -> Result<Plane> {
    if h > p.height() || w > p.width() || h == 0 || w == 0 {
        return Err(Error::CropTooLarge {
            requested: (h, w),
            actual: p.dims(),
        });
    }
    Ok(p.crop((p.height() - h) / 2, (p.width() - w) / 2, h, w))
}

const CUBIC_A: f64 = -0.5;

fn catmull_rom(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps and weights for each output sample along one axis, with
/// pixel-center alignment and clamped edges.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let x = (d as f64 + 0.5) * scale - 0.5;
            let base = x.floor();
            let t = x - base;
            let mut idx = [0usize; 4];
            let mut wts = [0.0; 4];
            for k in 0..4 {
                let offset = k as f64 - 1.0;
                let i = (base as isize + k as isize - 1).clamp(0, src_len as isize - 1);
                idx[k] = i as usize;
                wts[k] = catmull_rom(t - offset);
            }
            (idx, wts)
        })
        .collect()
}

/// Bicubic (Catmull-Rom, a = -0.5) resampling to `h x w`.
pub fn resize_bicubic(p: &Plane, h: usize, w: usize) -> Result<Plane> {
    if h < 4 || w < 4 {
        return Err(Error::DegenerateSize((h, w)));
    }
    let (sh, sw) = p.dims();
    let col_taps = axis_taps(sw, w);
    let row_taps = axis_taps(sh, h);

    let mut horiz = Vec::with_capacity(sh * w);
    for r in 0..sh {
        let row = p.row(r);
        horiz.extend(
            col_taps
                .iter()
                .map(|(idx, wts)| (0..4).map(|k| wts[k] * row[idx[k]]).sum::<f64>()),
        );
    }

    let mut out = vec![0.0; h * w];
    for (r, (idx, wts)) in row_taps.iter().enumerate() {
        let dst = &mut out[r * w..(r + 1) * w];
        for k in 0..4 {
            let src = &horiz[idx[k] * w..(idx[k] + 1) * w];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += wts[k] * s;
            }
        }
    }
    Ok(Plane::from_raw(h, w, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rand_plane(h: usize, w: usize, seed: u64) -> Plane {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        Plane::from_fn(h, w, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
    }

    #[test]
    fn gray_luma_is_identity() {
        let img = Image::new(1, 2, 1, 8, vec![5, 7]).unwrap();
        assert_eq!(to_luma(&img).unwrap().values(), &[5.0, 7.0]);
    }

    #[test]
    fn rgb_luma_weights() {
        let white = Image::new(1, 1, 3, 8, vec![255, 255, 255]).unwrap();
        assert!((to_luma(&white).unwrap().get(0, 0) - 255.0).abs() < 1e-9);
        let px = Image::new(1, 1, 3, 8, vec![100, 200, 50]).unwrap();
        // 29.9 + 117.4 + 5.7
        assert!((to_luma(&px).unwrap().get(0, 0) - 153.0).abs() < 1e-9);
    }

    #[test]
    fn crop_offsets() {
        let p = Plane::from_fn(5, 5, |r, c| (r * 5 + c) as f64);
        assert_eq!(crop_center(&p, 5, 5).unwrap(), p);
        let c = crop_center(&p, 3, 3).unwrap();
        assert_eq!(c.get(0, 0), p.get(1, 1));
        assert_eq!(c.get(2, 2), p.get(3, 3));
        assert_eq!(crop_center(&p, 6, 1).unwrap_err().code(), "crop-too-large");
    }

    #[test]
    fn crop_offset_for_full_resolution_frame() {
        // (3024 - 551) / 2 = 1236, (4032 - 551) / 2 = 1740
        let p = Plane::from_fn(3024, 4032, |r, c| (r * 4032 + c) as f64);
        let c = crop_center(&p, 551, 551).unwrap();
        assert_eq!(c.get(0, 0), (1236 * 4032 + 1740) as f64);
    }

    #[test]
    fn resize_same_size_is_identity() {
        let p = rand_plane(17, 23, 3);
        let q = resize_bicubic(&p, 17, 23).unwrap();
        assert!(p.max_abs_diff(&q) < 1e-9);
    }

    #[test]
    fn resize_preserves_constants() {
        let p = Plane::filled(30, 40, 42.5);
        let q = resize_bicubic(&p, 13, 57).unwrap();
        assert!(q.values().iter().all(|v| (v - 42.5).abs() < 1e-12));
    }

    #[test]
    fn resize_rejects_degenerate_target() {
        let p = Plane::filled(30, 40, 1.0);
        assert_eq!(
            resize_bicubic(&p, 3, 10).unwrap_err().code(),
            "degenerate-size"
        );
    }

    proptest! {
        #[test]
        fn luma_is_linear(r in 0u16..=85, g in 0u16..=85, b in 0u16..=85, a in 1u16..=3) {
            let base = Image::new(1, 1, 3, 8, vec![r, g, b]).unwrap();
            let scaled = Image::new(1, 1, 3, 8, vec![a * r, a * g, a * b]).unwrap();
            let l0 = to_luma(&base).unwrap().get(0, 0);
            let l1 = to_luma(&scaled).unwrap().get(0, 0);
            prop_assert!((l1 - f64::from(a) * l0).abs() < 1e-9);
        }

        #[test]
        fn nested_center_crops(h in 8usize..40, w in 8usize..40, dh1 in 0usize..4, dw1 in 0usize..4,
                               dh2 in 0usize..4, dw2 in 0usize..4) {
            // even size differences keep both crops centered on the same pixel grid
            let p = Plane::from_fn(h + 2 * (dh1 + dh2), w + 2 * (dw1 + dw2), |r, c| (r * 1000 + c) as f64);
            let (h1, w1) = (h + 2 * dh2, w + 2 * dw2);
            let outer = crop_center(&p, h1, w1).unwrap();
            prop_assert_eq!(crop_center(&outer, h, w).unwrap(), crop_center(&p, h, w).unwrap());
        }

        #[test]
        fn resize_overshoot_is_bounded(seed in any::<u64>(), h in 4usize..24, w in 4usize..24,
                                       th in 4usize..40, tw in 4usize..40) {
            let p = rand_plane(h, w, seed);
            let (lo, hi) = p.min_max();
            let range = hi - lo;
            let q = resize_bicubic(&p, th, tw).unwrap();
            let (qlo, qhi) = q.min_max();
            prop_assert!(qlo >= lo - 0.25 * range - 1e-9);
            prop_assert!(qhi <= hi + 0.25 * range + 1e-9);
        }
    }
}
