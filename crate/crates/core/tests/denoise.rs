use prnu_core::denoise::{dwt2, idwt2};
use prnu_core::{denoise, residual, DenoiseConfig, Image, Plane};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(h: usize, w: usize, sigma: f64, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(h, w, |_, _| sigma * rng.sample::<f64, _>(StandardNormal))
}

/// Piecewise-smooth content: a few random rectangles over a gentle ramp.
fn natural(h: usize, w: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rects: Vec<(usize, usize, usize, usize, f64)> = (0..6)
        .map(|_| {
            let (t, l) = (rng.random_range(0..h), rng.random_range(0..w));
            (
                t,
                l,
                rng.random_range(8..h / 2),
                rng.random_range(8..w / 2),
                rng.random_range(-40.0..40.0),
            )
        })
        .collect();
    Plane::from_fn(h, w, |r, c| {
        let mut v = 100.0 + 40.0 * (r as f64 / h as f64) + 20.0 * (c as f64 / w as f64);
        for &(t, l, rh, rw, a) in &rects {
            if (t..t + rh).contains(&r) && (l..l + rw).contains(&c) {
                v += a;
            }
        }
        v
    })
}

fn as_image(p: &Plane) -> Image {
    let (h, w) = p.dims();
    let px = p
        .values()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u16)
        .collect();
    Image::new(h, w, 1, 8, px).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_pair_reconstructs(k in 1usize..4, seed in any::<u64>(), levels in 1usize..5) {
        let n = 16 * k * (1 << levels.min(3));
        let p = gauss(n, n + 16 * (1 << levels.min(3)), 50.0, seed);
        let pyr = dwt2(&p, levels.min(3)).unwrap();
        prop_assert!(idwt2(&pyr).max_abs_diff(&p) < 1e-6);
    }

    #[test]
    fn shift_by_period_commutes(seed in any::<u64>(), m1 in 0isize..8, m2 in 0isize..8) {
        let cfg = DenoiseConfig::default();
        let p = natural(128, 128, seed).add(&gauss(128, 128, 3.0, seed ^ 1));
        let (d1, d2) = (16 * m1, 16 * m2);
        let a = denoise(&p.shifted(d1, d2), &cfg).unwrap();
        let b = denoise(&p, &cfg).unwrap().shifted(d1, d2);
        prop_assert!(a.max_abs_diff(&b) < 1e-6);
    }

    #[test]
    fn scaling_commutes(seed in any::<u64>(), a in 0.1f64..10.0) {
        let cfg = DenoiseConfig::default();
        let scaled_cfg = DenoiseConfig { base_noise_sigma: a * cfg.base_noise_sigma, ..cfg.clone() };
        let p = natural(64, 64, seed).add(&gauss(64, 64, 3.0, seed ^ 2));
        let lhs = denoise(&p.scale(a), &scaled_cfg).unwrap();
        let rhs = denoise(&p, &cfg).unwrap().scale(a);
        let mag = rhs.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-6 * mag);
    }

    #[test]
    fn constants_pass_through(v in 0u16..=255, h in 64usize..100, w in 64usize..100) {
        let img = Image::new(h, w, 1, 8, vec![v; h * w]).unwrap();
        let r = residual(&img, &DenoiseConfig::default()).unwrap();
        prop_assert!(r.plane.values().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn residual_recovers_known_noise() {
    for seed in 0..10 {
        let clean = natural(128, 128, seed);
        let noise = gauss(128, 128, 3.0, 100 + seed);
        // keep noise un-quantized: residual works on the luma plane directly
        let noisy = clean.add(&noise);
        let w = noisy.sub(&denoise(&noisy, &DenoiseConfig::default()).unwrap());
        let rho = prnu_core::ncc_at(&w, &noise, 0, 0).unwrap();
        assert!(rho >= 0.5, "seed {seed}: rho {rho}");
    }
}

#[test]
fn refiltering_a_residual_contracts_it() {
    let cfg = DenoiseConfig::default();
    for seed in 0..20 {
        let p = natural(128, 128, seed).add(&gauss(128, 128, 3.0, 200 + seed));
        let w = p.sub(&denoise(&p, &cfg).unwrap());
        let ww = w.sub(&denoise(&w, &cfg).unwrap());
        assert!(ww.energy() < w.energy(), "seed {seed}");
    }
}

#[test]
fn denoised_output_is_nearly_a_fixed_point() {
    let cfg = DenoiseConfig::default();
    let mut ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let p = natural(128, 128, seed).add(&gauss(128, 128, 3.0, 300 + seed));
            let f = denoise(&p, &cfg).unwrap();
            let r_p = p.sub(&f).energy();
            let r_f = f.sub(&denoise(&f, &cfg).unwrap()).energy();
            r_f / r_p
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = (ratios[9] + ratios[10]) / 2.0;
    assert!(median <= 0.3, "median {median}");
}

#[test]
fn white_noise_is_mostly_removed() {
    let cfg = DenoiseConfig::default();
    for seed in 0..10 {
        let p = gauss(256, 256, 3.0, 400 + seed);
        let out = denoise(&p, &cfg).unwrap();
        assert!(out.variance() <= 0.15 * p.variance());
    }
}

#[test]
fn sixteen_bit_images_match_eight_bit_scale() {
    let base = natural(64, 64, 7);
    let img8 = as_image(&base);
    let px16 = img8.pixels().iter().map(|v| v * 257).collect();
    let img16 = Image::new(64, 64, 1, 16, px16).unwrap();
    let r8 = residual(&img8, &DenoiseConfig::default()).unwrap();
    let r16 = residual(&img16, &DenoiseConfig::default()).unwrap();
    assert!(r8.plane.max_abs_diff(&r16.plane) < 1e-9);
}
