use prnu_core::fingerprint::{
    estimate_fingerprint, estimate_with, load_fingerprint, save_fingerprint, tree_merge,
    wiener_fft, zero_mean, EstimateConfig, PostFlag,
};
use prnu_core::synth::{capture_set, gen_prnu};
use prnu_core::{
    ncc_at, residual, DenoiseConfig, Fingerprint, FingerprintAccumulator, Plane, SynthSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        dims: (128, 128),
        ..SynthSpec::default().with_seed(seed)
    }
}

fn accumulator_for(imgs: &[prnu_core::Image]) -> Vec<FingerprintAccumulator> {
    imgs.iter()
        .map(|img| {
            let res = residual(img, &DenoiseConfig::default()).unwrap();
            let mut acc =
                FingerprintAccumulator::new(img.height(), img.width()).exclude_saturated(true);
            acc.accumulate(img, &res).unwrap();
            acc
        })
        .collect()
}

#[test]
fn accumulation_order_does_not_matter() {
    let spec = small_spec(3);
    let k = gen_prnu(&spec);
    let imgs = capture_set(&spec, &k, 9).unwrap();
    let forward = tree_merge(accumulator_for(&imgs))
        .unwrap()
        .finalize(1.0)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let mut shuffled = imgs.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let other = tree_merge(accumulator_for(&shuffled))
            .unwrap()
            .finalize(1.0)
            .unwrap();
        assert!(forward.plane.max_abs_diff(&other.plane) < 1e-9);
    }
}

#[test]
fn single_image_matches_closed_form() {
    let spec = small_spec(4);
    let k = gen_prnu(&spec);
    let img = capture_set(&spec, &k, 1).unwrap().remove(0);
    let fp = estimate_fingerprint(std::slice::from_ref(&img), &EstimateConfig::default()).unwrap();
    let w = residual(&img, &DenoiseConfig::default()).unwrap().plane;
    let y = prnu_core::tensor_io::to_luma(&img).unwrap();
    let expected = Plane::from_fn(128, 128, |r, c| {
        if img.is_saturated(r, c) {
            0.0
        } else {
            w.get(r, c) * y.get(r, c) / (y.get(r, c) * y.get(r, c) + 1.0)
        }
    });
    assert_eq!(fp.plane, expected);
}

#[test]
fn estimate_quality_grows_with_image_count() {
    let mut medians = Vec::new();
    for l in [1usize, 5, 20] {
        let mut rhos: Vec<f64> = (0..10)
            .map(|seed| {
                let spec = small_spec(500 + seed);
                let k = gen_prnu(&spec);
                let imgs = capture_set(&spec, &k, l).unwrap();
                let fp = estimate_fingerprint(&imgs, &EstimateConfig::default()).unwrap();
                ncc_at(&fp.plane, &k, 0, 0).unwrap()
            })
            .collect();
        rhos.sort_by(f64::total_cmp);
        medians.push((rhos[4] + rhos[5]) / 2.0);
    }
    assert!(medians.windows(2).all(|m| m[0] <= m[1]), "{medians:?}");
    assert!(medians[2] >= 0.4, "{medians:?}");
}

#[test]
fn thread_count_does_not_change_the_estimate() {
    let spec = small_spec(6);
    let k = gen_prnu(&spec);
    let imgs = capture_set(&spec, &k, 11).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                estimate_with(
                    imgs.len(),
                    |i| Ok(imgs[i].clone()),
                    &EstimateConfig::default(),
                )
                .unwrap()
            })
    };
    assert_eq!(run(1).plane, run(3).plane);
}

#[test]
fn saturated_pixels_are_excluded() {
    let px: Vec<u16> = (0..64 * 64)
        .map(|i| {
            if i % 7 == 0 {
                255
            } else {
                100 + (i % 13) as u16
            }
        })
        .collect();
    let img = prnu_core::Image::new(64, 64, 1, 8, px).unwrap();
    let fp = estimate_fingerprint(std::slice::from_ref(&img), &EstimateConfig::default()).unwrap();
    for i in (0..64 * 64).step_by(7) {
        assert_eq!(fp.plane.values()[i], 0.0);
    }
}

fn plane(h: usize, w: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0) + 0.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_mean_is_idempotent_and_scales(h in 2usize..30, w in 2usize..30, seed in any::<u64>(), a in -5.0f64..5.0) {
        let fp = Fingerprint::from_plane(plane(h, w, seed));
        let once = zero_mean(&fp);
        let twice = zero_mean(&once);
        prop_assert!(once.plane.max_abs_diff(&twice.plane) < 1e-12);
        let scaled = zero_mean(&Fingerprint::from_plane(fp.plane.scale(a)));
        prop_assert!(scaled.plane.max_abs_diff(&once.plane.scale(a)) < 1e-12);
        for r in 0..h {
            prop_assert!(once.plane.row(r).iter().sum::<f64>().abs() < 1e-10);
        }
    }
}

#[test]
fn wiener_attenuates_a_spectral_spike() {
    let n = 64;
    let base = plane(n, n, 9);
    let cosine = Plane::from_fn(n, n, |r, c| {
        5.0 * (std::f64::consts::TAU * (8.0 * r as f64 + 4.0 * c as f64) / n as f64).cos()
    });
    let fp = Fingerprint::from_plane(base.add(&cosine));
    let out = wiener_fft(&fp, 1.0).unwrap();
    // project onto the cosine to measure the surviving component
    let proj = |p: &Plane| {
        p.values()
            .iter()
            .zip(cosine.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / cosine.energy()
    };
    assert!(proj(&out.plane) < 0.1 * proj(&fp.plane));
    assert_eq!(out.post_flags, vec![PostFlag::WienerFft]);
    // without a dominant peak, a vanishing strength leaves the plane alone
    let plain = Fingerprint::from_plane(base);
    let near_identity = wiener_fft(&plain, 1e-6).unwrap();
    assert!(near_identity.plane.max_abs_diff(&plain.plane) < 1e-3);
}

#[test]
fn save_load_keeps_plane_and_metadata() {
    let spec = small_spec(8);
    let k = gen_prnu(&spec);
    let imgs = capture_set(&spec, &k, 3).unwrap();
    let fp = zero_mean(&estimate_fingerprint(&imgs, &EstimateConfig::default()).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.fpt");
    save_fingerprint(&fp, &path).unwrap();
    let back = load_fingerprint(&path).unwrap();
    assert!(back.plane.max_abs_diff(&fp.plane) < 1e-6 * 0.1);
    assert_eq!(back.post_flags, fp.post_flags);
    assert_eq!(back.provenance, fp.provenance);
    assert_eq!(back.eps, fp.eps);
}
