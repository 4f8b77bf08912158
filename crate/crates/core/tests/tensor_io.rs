use prnu_core::tensor_io::{
    crop_center, decode_fpt, encode_fpt, load_image, load_manifest, resize_bicubic, save_image,
    save_manifest, to_luma, DatasetManifest, FptTensor,
};
use prnu_core::{Image, Plane};
use proptest::prelude::*;

fn image_strategy() -> impl Strategy<Value = Image> {
    (
        1usize..20,
        1usize..20,
        prop::sample::select(vec![1usize, 3]),
        prop::sample::select(vec![8u8, 16]),
    )
        .prop_flat_map(|(h, w, ch, depth)| {
            let max = if depth == 8 { 255u16 } else { u16::MAX };
            prop::collection::vec(0..=max, h * w * ch)
                .prop_map(move |px| Image::new(h, w, ch, depth, px).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pnm_round_trip(img in image_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
        let path = dir.path().join(format!("x.{ext}"));
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        prop_assert_eq!(back.dims(), img.dims());
        prop_assert_eq!(back.channels(), img.channels());
        prop_assert_eq!(back.depth(), img.depth());
        prop_assert_eq!(back.pixels(), img.pixels());
    }

    #[test]
    fn fpt_round_trip(h in 1usize..16, w in 1usize..16, seed in any::<u64>()) {
        // values representable in f32 survive exactly
        let p = Plane::from_fn(h, w, |r, c| {
            let x = seed.wrapping_mul(31).wrapping_add((r * w + c) as u64) % 10_007;
            x as f32 as f64 / 8.0 - 600.0
        });
        let back = decode_fpt(&encode_fpt(&FptTensor::from_plane(&p))).unwrap().to_plane().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn luma_is_linear(px in prop::collection::vec(0u16..=85, 8 * 8 * 3), a in 1u16..=3) {
        let img = Image::new(8, 8, 3, 8, px.clone()).unwrap();
        let scaled = Image::new(8, 8, 3, 8, px.iter().map(|v| v * a).collect()).unwrap();
        let lhs = to_luma(&scaled).unwrap();
        let rhs = to_luma(&img).unwrap().scale(f64::from(a));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9);
    }

    #[test]
    fn crop_center_composes(
        h in 4usize..40, w in 4usize..40,
        dh1 in 0usize..10, dw1 in 0usize..10,
        dh2 in 0usize..10, dw2 in 0usize..10,
    ) {
        // even size differences only
        let (h0, w0) = (h + 2 * (dh1 + dh2), w + 2 * (dw1 + dw2));
        let p = Plane::from_fn(h0, w0, |r, c| (r * 1000 + c) as f64);
        let (h1, w1) = (h + 2 * dh2, w + 2 * dw2);
        let twice = crop_center(&crop_center(&p, h1, w1).unwrap(), h, w).unwrap();
        prop_assert_eq!(twice, crop_center(&p, h, w).unwrap());
    }

    #[test]
    fn resize_keeps_constants(h in 4usize..40, w in 4usize..40, th in 4usize..60, tw in 4usize..60, v in -100.0f64..100.0) {
        let out = resize_bicubic(&Plane::filled(h, w, v), th, tw).unwrap();
        prop_assert_eq!(out.dims(), (th, tw));
        prop_assert!(out.values().iter().all(|&x| (x - v).abs() <= 1e-12 * v.abs().max(1.0)));
    }

    #[test]
    fn resize_overshoot_is_bounded(
        vals in prop::collection::vec(-50.0f64..50.0, 12 * 12),
        th in 4usize..40, tw in 4usize..40,
    ) {
        let p = Plane::new(12, 12, vals).unwrap();
        let (lo, hi) = p.min_max();
        let slack = 0.25 * (hi - lo) + 1e-9;
        let out = resize_bicubic(&p, th, tw).unwrap();
        prop_assert!(out.values().iter().all(|&x| x >= lo - slack && x <= hi + slack));
    }
}

#[test]
fn step_edge_overshoot_stays_inside_bound() {
    // a hard step is the worst case for a Catmull-Rom kernel
    let p = Plane::from_fn(16, 16, |_, c| if c < 8 { 0.0 } else { 1.0 });
    for size in [5, 7, 23, 31, 47] {
        let out = resize_bicubic(&p, 16, size).unwrap();
        let (lo, hi) = out.min_max();
        assert!(lo >= -0.25 && hi <= 1.25, "{size}: {lo} {hi}");
    }
}

#[test]
fn manifest_round_trip() {
    let text = "ref/a.pgm\treference\tgenuine\t\n\
                test/b.pgm\ttest\timpostor\tmfp,zoom\n\
                test/c.pgm\ttest\tgenuine\traw\n";
    let m = DatasetManifest::parse(text).unwrap();
    assert_eq!(m.entries.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.tsv");
    save_manifest(&m, &path).unwrap();
    assert_eq!(load_manifest(&path).unwrap(), m);
}

#[test]
fn manifest_rejects_duplicates_and_unknown_words() {
    let dup = "a.pgm\treference\tgenuine\t\na.pgm\ttest\tgenuine\t\n";
    assert_eq!(
        DatasetManifest::parse(dup).unwrap_err().code(),
        "duplicate-path"
    );
    let bad = "a.pgm\treference\tmaybe\t\n";
    assert_eq!(
        DatasetManifest::parse(bad).unwrap_err().code(),
        "vocabulary"
    );
}

#[test]
fn images_below_pipeline_size_are_rejected() {
    let img = Image::new(32, 80, 1, 8, vec![0; 32 * 80]).unwrap();
    let err = prnu_core::residual(&img, &Default::default()).unwrap_err();
    assert_eq!(err.code(), "plane-too-small");
}
