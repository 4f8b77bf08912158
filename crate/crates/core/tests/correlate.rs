use prnu_core::{ncc_at, ncc_surface, pce, verify, Decision, Plane, SearchMode, VerifyConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gauss(h: usize, w: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Plane::from_fn(h, w, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Written straight from the definition, with no shared helpers.
fn brute(a: &Plane, b: &Plane, s1: usize, s2: usize) -> f64 {
    let (h, w) = a.dims();
    let n = (h * w) as f64;
    let ma: f64 = a.values().iter().sum::<f64>() / n;
    let mb: f64 = b.values().iter().sum::<f64>() / n;
    let (mut num, mut ea, mut eb) = (0.0, 0.0, 0.0);
    for i in 0..h {
        for j in 0..w {
            let x = a.get(i, j) - ma;
            let y = b.get((i + s1) % h, (j + s2) % w) - mb;
            num += x * y;
            ea += x * x;
        }
    }
    for v in b.values() {
        eb += (v - mb) * (v - mb);
    }
    num / (ea * eb).sqrt()
}

/// PCE from the definition: peak energy against the mean energy outside an
/// 11x11 neighborhood of the peak.
fn brute_pce(w: &Plane, t: &Plane) -> (f64, (usize, usize)) {
    let (h, wd) = w.dims();
    let surf: Vec<f64> = (0..h * wd).map(|i| brute(w, t, i / wd, i % wd)).collect();
    let best = (0..surf.len()).fold(0, |b, i| if surf[i] > surf[b] { i } else { b });
    let (pr, pc) = (best / wd, best % wd);
    let near = |r: usize, c: usize| {
        let dr = (r as isize - pr as isize).rem_euclid(h as isize);
        let dc = (c as isize - pc as isize).rem_euclid(wd as isize);
        let close = |d: isize, n: usize| n <= 11 || d <= 5 || d >= n as isize - 5;
        close(dr, h) && close(dc, wd)
    };
    let (mut rest, mut count) = (0.0, 0usize);
    for i in 0..surf.len() {
        if near(i / wd, i % wd) {
            count += 1;
        } else {
            rest += surf[i] * surf[i];
        }
    }
    let peak = surf[best];
    (
        (surf.len() - count) as f64 * peak.abs() * peak / rest,
        (pr, pc),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_matches_definition(h in 2usize..=32, w in 2usize..=32, seed in any::<u64>()) {
        let a = gauss(h, w, seed);
        let b = gauss(h, w, seed ^ 0xABCD).add(&a.scale(0.5));
        let s = ncc_surface(&a, &b).unwrap();
        for s1 in 0..h {
            for s2 in 0..w {
                prop_assert!((s.plane().get(s1, s2) - brute(&a, &b, s1, s2)).abs() <= 1e-8);
            }
        }
        prop_assert!((ncc_at(&a, &b, 1, -1).unwrap() - s.at(1, -1)).abs() <= 1e-8);
    }

    #[test]
    fn pce_matches_definition(h in 12usize..=24, w in 12usize..=24, seed in any::<u64>()) {
        let a = gauss(h, w, seed);
        let b = gauss(h, w, seed ^ 7).add(&a.shifted(2, 3).scale(0.4));
        let r = pce(&a, &b).unwrap();
        let (expected, _) = brute_pce(&a, &b);
        prop_assert!((r.pce - expected).abs() <= 1e-8 * expected.abs().max(1.0));
        prop_assert_eq!(r.excluded, 121);
    }

    #[test]
    fn scale_invariance(seed in any::<u64>(), a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
        let w = gauss(64, 64, seed);
        let t = gauss(64, 64, seed ^ 1).add(&w.shifted(-4, 9));
        let base = pce(&w, &t).unwrap();
        let scaled = pce(&w.scale(a), &t.scale(b)).unwrap();
        prop_assert!((scaled.pce - base.pce).abs() <= 1e-9 * base.pce.abs());
        prop_assert_eq!(scaled.peak_shift, base.peak_shift);
        prop_assert_eq!(scaled.pce.signum(), base.pce.signum());
    }

    #[test]
    fn shift_equivariance(seed in any::<u64>(), d1 in -20isize..20, d2 in -20isize..20) {
        let w = gauss(64, 64, seed);
        let t = w.scale(0.3).add(&gauss(64, 64, seed ^ 3));
        let base = pce(&w, &t).unwrap();
        prop_assert_eq!(base.peak_shift, (0, 0));
        // w'(i) = w(i + d) lines up with t(i + d), so the peak moves to d
        let moved = pce(&w.shifted(d1, d2), &t).unwrap();
        let wrap = |v: isize| { let m = v.rem_euclid(64); if m > 32 { m - 64 } else { m } };
        prop_assert_eq!(moved.peak_shift, (wrap(d1), wrap(d2)));
        prop_assert!((moved.pce - base.pce).abs() <= 1e-6 * base.pce.abs());
    }

    #[test]
    fn surface_is_bounded(h in 2usize..40, w in 2usize..40, seed in any::<u64>(), mix in 0.0f64..3.0) {
        let a = gauss(h, w, seed);
        let b = gauss(h, w, seed ^ 5).add(&a.scale(mix));
        let s = ncc_surface(&a, &b).unwrap();
        prop_assert!(s.plane().values().iter().all(|v| v.abs() <= 1.0 + 1e-9));
    }

    #[test]
    fn pce_sign_follows_peak(seed in any::<u64>()) {
        let w = gauss(48, 48, seed);
        let t = gauss(48, 48, seed ^ 9);
        let r = pce(&w, &t).unwrap();
        prop_assert_eq!(r.pce.signum(), r.rho_max.signum());
    }
}

#[test]
fn autocorrelation_peaks_at_one() {
    let a = gauss(32, 40, 1);
    let s = prnu_core::autocorr(&a).unwrap();
    assert!((s.at(0, 0) - 1.0).abs() < 1e-12);
}

#[test]
fn constant_inputs_are_degenerate() {
    let err = pce(&Plane::filled(16, 16, 2.0), &gauss(16, 16, 1)).unwrap_err();
    assert_eq!(err.code(), "degenerate-input");
    let err = pce(&gauss(16, 16, 1), &gauss(16, 17, 1)).unwrap_err();
    assert_eq!(err.code(), "dimension-mismatch");
}

#[test]
fn threshold_is_strict() {
    let w = gauss(64, 64, 3);
    let t = w.add(&gauss(64, 64, 4));
    let r = pce(&w, &t).unwrap();
    let at = VerifyConfig {
        tau: r.pce,
        ..VerifyConfig::default()
    };
    assert_eq!(verify(&r, &at), Decision::H0);
    let below = VerifyConfig {
        tau: r.pce - 1e-9,
        ..VerifyConfig::default()
    };
    assert_eq!(verify(&r, &below), Decision::H1);
    let zero_only = VerifyConfig {
        search: SearchMode::ZeroOnly,
        ..VerifyConfig::default()
    };
    assert_eq!(zero_only.statistic(&r), r.pce_zero);
}
