use std::path::{Path, PathBuf};

use prnu_core::correlate::{autocorr, pce, verify};
use prnu_core::denoise::working_luma;
use prnu_core::fingerprint::{
    estimate_with, load_fingerprint, save_fingerprint, wiener_fft, zero_mean, EstimateConfig,
};
use prnu_core::jpeg::detect_mfp;
use prnu_core::lattice::{cross_model_screen, detect_lattice, fit_window};
use prnu_core::local::{
    adapt_fingerprint, block_corr_map, block_shift_map, bokeh_mask, masked_pce,
};
use prnu_core::roc::{auc, rates_at, roc};
use prnu_core::synth::{capture, gen_prnu, pattern_plane, PRNG_NAME};
use prnu_core::tensor_io::{
    encode_fpt, load_image, load_manifest, save_image, save_manifest, save_plane, DatasetManifest,
    FptTensor, ManifestEntry, Role,
};
use prnu_core::{
    residual, BlockCorrMap, BokehMask, CorrSurface, Error, Fingerprint, Image, Label, Plane,
    ScoreSet, SearchMode, ShiftMap, SynthSpec, Threshold, VerifyConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{num, read_report, resolve, stem, Sink, TOOL, VERSION};
use crate::synth_config::SynthPlan;
use crate::{svg, Cli, CliError, CliResult, Command};

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Invalid(msg.into()))
}

fn check_tau(tau: f64) -> CliResult<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        invalid(format!("--tau must be positive and finite, got {tau}"))
    }
}

fn check_window(window: usize) -> CliResult<()> {
    if window >= 3 && window % 2 == 1 {
        Ok(())
    } else {
        invalid(format!("--window must be odd and at least 3, got {window}"))
    }
}

fn check_min_peak(v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("--min-peak must be non-negative, got {v}"))
    }
}

fn check_name(name: &str) -> CliResult<()> {
    let p = Path::new(name);
    if name.is_empty() || p.file_name().map(|f| f != p.as_os_str()).unwrap_or(true) {
        return invalid(format!("--name must be a plain file name, got '{name}'"));
    }
    Ok(())
}

fn check_threshold(t: Option<f64>) -> CliResult<()> {
    match t {
        Some(v) if !v.is_finite() => invalid(format!("--threshold must be finite, got {v}")),
        _ => Ok(()),
    }
}

fn check_corr_block(block: usize) -> CliResult<()> {
    if block >= 3 {
        Ok(())
    } else {
        invalid(format!("--block must be at least 3, got {block}"))
    }
}

/// Flag checks that need no I/O.
pub fn validate(cli: &Cli) -> CliResult<()> {
    if cli.out.is_none() {
        return Err(CliError::Usage("--out is required".into()));
    }
    if cli.threads == 0 {
        return invalid("--threads must be at least 1");
    }
    match &cli.command {
        Command::Fingerprint {
            name, eps, wiener, ..
        } => {
            check_name(name)?;
            if !(*eps > 0.0 && eps.is_finite()) {
                return invalid(format!("--eps must be positive, got {eps}"));
            }
            if let Some(s) = wiener {
                if !(*s >= 0.0 && s.is_finite()) {
                    return invalid(format!("--wiener must be non-negative, got {s}"));
                }
            }
        }
        Command::Verify { tau, .. } => check_tau(*tau)?,
        Command::Autocorr { window, .. } => check_window(*window)?,
        Command::Lattice {
            window, min_peak, ..
        } => {
            check_window(*window)?;
            check_min_peak(*min_peak)?;
        }
        Command::Collide {
            fingerprints,
            groups,
            tau,
            window,
            min_peak,
        } => {
            check_tau(*tau)?;
            check_window(*window)?;
            check_min_peak(*min_peak)?;
            if fingerprints.len() < 2 {
                return invalid("collide needs at least two --fingerprint");
            }
            if !groups.is_empty() && groups.len() != fingerprints.len() {
                return invalid(format!(
                    "{} --group labels for {} fingerprints",
                    groups.len(),
                    fingerprints.len()
                ));
            }
        }
        Command::HdrMap {
            block,
            stride,
            search_radius,
            ..
        } => {
            if *block == 0 {
                return invalid("--block must be positive");
            }
            let stride = stride.unwrap_or(*block);
            if stride == 0 || stride > *block {
                return invalid(format!("--stride must be in 1..={block}"));
            }
            if *search_radius > block / 4 {
                return invalid(format!(
                    "--search-radius must be at most block/4 = {}",
                    block / 4
                ));
            }
        }
        Command::Adapt { name, .. } => check_name(name)?,
        Command::BokehMap { block, .. } => check_corr_block(*block)?,
        Command::BokehMask { threshold, .. } => check_threshold(*threshold)?,
        Command::MaskedVerify {
            block,
            threshold,
            tau,
            ..
        } => {
            check_corr_block(*block)?;
            check_threshold(*threshold)?;
            check_tau(*tau)?;
        }
        Command::MfpScan { .. } | Command::SynthGen { .. } => {}
        Command::Roc { tau, .. } => {
            if tau.is_nan() {
                return invalid("--tau must not be NaN");
            }
        }
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let dir = cli.out.clone().expect("validated");
    std::fs::create_dir_all(&dir).map_err(|source| Error::Unwritable {
        path: dir.clone(),
        source,
    })?;
    let config = serde_json::to_value(cli).map_err(|e| CliError::Input(e.to_string()))?;
    let sink = Sink { dir, config };
    match &cli.command {
        Command::Fingerprint {
            manifest,
            name,
            eps,
            include_saturated,
            zero_mean,
            wiener,
        } => cmd_fingerprint(
            &sink,
            manifest,
            name,
            *eps,
            !include_saturated,
            *zero_mean,
            *wiener,
        ),
        Command::Verify {
            fingerprint,
            manifest,
            tau,
            zero_only,
        } => cmd_verify(&sink, fingerprint, manifest, *tau, *zero_only),
        Command::Autocorr {
            fingerprint,
            window,
        } => cmd_autocorr(&sink, fingerprint, *window),
        Command::Lattice {
            surface,
            fingerprint,
            window,
            min_peak,
        } => cmd_lattice(
            &sink,
            surface.as_deref(),
            fingerprint.as_deref(),
            *window,
            *min_peak,
        ),
        Command::Collide {
            fingerprints,
            groups,
            tau,
            window,
            min_peak,
        } => cmd_collide(&sink, fingerprints, groups, *tau, *window, *min_peak),
        Command::HdrMap {
            fingerprint,
            image,
            block,
            stride,
            search_radius,
        } => cmd_hdr_map(
            &sink,
            fingerprint,
            image,
            *block,
            stride.unwrap_or(*block),
            *search_radius,
        ),
        Command::Adapt {
            fingerprint,
            map,
            name,
        } => cmd_adapt(&sink, fingerprint, map, name),
        Command::BokehMap {
            fingerprint,
            image,
            block,
        } => cmd_bokeh_map(&sink, fingerprint, image, *block),
        Command::BokehMask { map, threshold, .. } => {
            cmd_bokeh_mask(&sink, map, threshold_of(*threshold))
        }
        Command::MaskedVerify {
            fingerprint,
            image,
            mask,
            block,
            threshold,
            tau,
            ..
        } => cmd_masked_verify(
            &sink,
            fingerprint,
            image,
            mask.as_deref(),
            *block,
            threshold_of(*threshold),
            *tau,
        ),
        Command::MfpScan { files } => cmd_mfp_scan(&sink, files),
        Command::SynthGen { spec } => cmd_synth_gen(&sink, spec, cli.seed),
        Command::Roc { scores, tau } => cmd_roc(&sink, scores, *tau),
    }?;
    let run_config = json!({
        "tool": TOOL,
        "version": VERSION,
        "threads": cli.threads,
        "luma": "bt601",
        "prng": PRNG_NAME,
        "config": sink.config,
    });
    let mut text =
        serde_json::to_string_pretty(&run_config).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    sink.bytes("run_config.json", text.as_bytes())
}

fn threshold_of(t: Option<f64>) -> Threshold {
    t.map(Threshold::Fixed).unwrap_or(Threshold::Auto)
}

fn parent(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn entries(manifest: &DatasetManifest, role: Role) -> Vec<&ManifestEntry> {
    manifest.with_role(role).collect()
}

/// Residual of `img` and the matching fingerprint term `K * Y`.
fn probe(fp: &Fingerprint, img: &Image) -> CliResult<(Plane, Plane)> {
    if img.dims() != fp.dims() {
        return Err(Error::DimensionMismatch {
            expected: fp.dims(),
            actual: img.dims(),
        }
        .into());
    }
    let res = residual(img, &fp.denoise.clone().unwrap_or_default())?;
    let y = working_luma(img)?;
    Ok((res.plane, fp.plane.hadamard(&y)))
}

fn cmd_fingerprint(
    sink: &Sink,
    manifest: &Path,
    name: &str,
    eps: f64,
    exclude_saturated: bool,
    zero: bool,
    wiener: Option<f64>,
) -> CliResult<()> {
    let m = load_manifest(manifest)?;
    let base = parent(manifest);
    let refs: Vec<PathBuf> = entries(&m, Role::Reference)
        .iter()
        .map(|e| resolve(&base, &e.path))
        .collect();
    let cfg = EstimateConfig {
        eps,
        exclude_saturated,
        ..EstimateConfig::default()
    };
    let mut fp = estimate_with(refs.len(), |i| load_image(&refs[i]), &cfg)?;
    if zero {
        fp = zero_mean(&fp);
    }
    if let Some(s) = wiener.filter(|&s| s > 0.0) {
        fp = wiener_fft(&fp, s)?;
    }
    save_fingerprint(&fp, sink.path(name))?;
    sink.json(
        "fingerprint.json",
        &json!({
            "file": name,
            "dims": fp.dims(),
            "references": refs.len(),
            "eps": fp.eps,
            "post_flags": fp.post_flags,
            "denoise": fp.denoise,
        }),
    )
}

fn cmd_verify(
    sink: &Sink,
    fingerprint: &Path,
    manifest: &Path,
    tau: f64,
    zero_only: bool,
) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let id = stem(fingerprint);
    let m = load_manifest(manifest)?;
    let base = parent(manifest);
    let cfg = VerifyConfig {
        tau,
        search: if zero_only {
            SearchMode::ZeroOnly
        } else {
            SearchMode::Full
        },
    };
    let tests = entries(&m, Role::Test);
    let results = tests
        .par_iter()
        .map(|e| {
            let img = load_image(resolve(&base, &e.path))?;
            let (w, term) = probe(&fp, &img)?;
            Ok(pce(&w, &term)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(tests.len());
    let mut scores = Vec::with_capacity(tests.len());
    for (e, r) in tests.iter().zip(&results) {
        let (stat, peak, rho) = match cfg.search {
            SearchMode::Full => (r.pce, r.peak_shift, r.rho_max),
            SearchMode::ZeroOnly => (r.pce_zero, (0, 0), r.rho_zero),
        };
        rows.push(vec![
            e.path.clone(),
            id.clone(),
            num(stat),
            peak.0.to_string(),
            peak.1.to_string(),
            num(rho),
            verify(r, &cfg).to_string(),
        ]);
        scores.push(vec![num(stat), e.label.to_string(), id.clone()]);
    }
    sink.csv(
        "verify.csv",
        &[
            "test_path",
            "fingerprint_id",
            "pce",
            "peak_s1",
            "peak_s2",
            "rho_max",
            "decision",
        ],
        &rows,
    )?;
    sink.csv("scores.csv", &["score", "label", "group"], &scores)
}

/// Largest `|rho|` outside the origin neighborhood, so the unit peak does
/// not wash out the heat map.
fn off_peak_scale(win: &Plane) -> f64 {
    let (h, w) = win.dims();
    let (cr, cc) = (h / 2, w / 2);
    let guard = prnu_core::correlate::PCE_NEIGHBORHOOD / 2;
    let mut m = 0.0f64;
    for r in 0..h {
        for c in 0..w {
            if r.abs_diff(cr) > guard || c.abs_diff(cc) > guard {
                m = m.max(win.get(r, c).abs());
            }
        }
    }
    m
}

fn cmd_autocorr(sink: &Sink, fingerprint: &Path, window: usize) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let surface = autocorr(&fp.plane)?;
    let fitted = fit_window(window, fp.dims());
    let win = surface.centered_window(fitted)?;
    save_plane(surface.plane(), sink.path("autocorr.fpt"))?;
    save_plane(&win, sink.path("autocorr_window.fpt"))?;
    sink.bytes(
        "autocorr.svg",
        svg::heatmap_scaled(&win, off_peak_scale(&win)).as_bytes(),
    )?;
    sink.json(
        "autocorr.json",
        &json!({ "dims": fp.dims(), "window": fitted, "requested_window": window }),
    )
}

fn cmd_lattice(
    sink: &Sink,
    surface: Option<&Path>,
    fingerprint: Option<&Path>,
    window: usize,
    min_peak: f64,
) -> CliResult<()> {
    let surface = match (surface, fingerprint) {
        (Some(s), _) => CorrSurface::from_plane(prnu_core::tensor_io::load_plane(s)?),
        (None, Some(f)) => autocorr(&load_fingerprint(f)?.plane)?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let report = detect_lattice(&surface, fit_window(window, surface.dims()), min_peak)?;
    sink.json("lattice.json", &report)
}

fn cmd_collide(
    sink: &Sink,
    paths: &[PathBuf],
    groups: &[String],
    tau: f64,
    window: usize,
    min_peak: f64,
) -> CliResult<()> {
    let fps = paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut fp = load_fingerprint(p)?;
            let group = groups.get(i).cloned().unwrap_or_else(|| stem(p));
            fp.provenance.insert(0, group);
            Ok(fp)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cfg = prnu_core::ScreenConfig {
        verify: VerifyConfig {
            tau,
            search: SearchMode::Full,
        },
        window,
        min_peak,
    };
    let screen = cross_model_screen(&fps, &cfg)?;
    let scatter = screen.scatter();
    let rows: Vec<Vec<String>> = scatter
        .iter()
        .map(|r| {
            vec![
                r.pair_id.clone(),
                r.group_a.clone(),
                r.group_b.clone(),
                num(r.pce),
                r.verdict.as_str().to_string(),
            ]
        })
        .collect();
    let points: Vec<(String, f64)> = scatter
        .iter()
        .map(|r| (format!("{} vs {}", r.group_a, r.group_b), r.pce))
        .collect();
    sink.json("collide.json", &screen)?;
    sink.csv(
        "scatter.csv",
        &["pair_id", "group_a", "group_b", "pce", "verdict"],
        &rows,
    )?;
    sink.bytes("scatter.svg", svg::scatter(&points, tau).as_bytes())
}

fn cmd_hdr_map(
    sink: &Sink,
    fingerprint: &Path,
    image: &Path,
    block: usize,
    stride: usize,
    radius: usize,
) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let img = load_image(image)?;
    let (w, term) = probe(&fp, &img)?;
    let map = block_shift_map(&w, &term, block, stride, radius)?;
    let cell =
        |f: &dyn Fn(usize) -> f64| Plane::from_fn(map.rows, map.cols, |r, c| f(r * map.cols + c));
    let d1 = cell(&|i| map.cells[i].shift.0 as f64);
    let d2 = cell(&|i| map.cells[i].shift.1 as f64);
    let conf = cell(&|i| map.cells[i].confidence);
    let magnitude = d1.zip_map(&d2, |a, b| a.hypot(b));
    sink.json("shift_map.json", &map)?;
    sink.bytes(
        "shift_map.fpt",
        &encode_fpt(&FptTensor::from_planes(&[&d1, &d2, &conf])?),
    )?;
    sink.bytes("shift_map.svg", svg::heatmap(&magnitude).as_bytes())
}

fn cmd_adapt(sink: &Sink, fingerprint: &Path, map: &Path, name: &str) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let map: ShiftMap = read_report(map)?;
    let adapted = adapt_fingerprint(&fp, &map)?;
    save_fingerprint(&adapted, sink.path(name))?;
    sink.json(
        "adapt.json",
        &json!({ "file": name, "dims": adapted.dims(), "post_flags": adapted.post_flags }),
    )
}

fn cmd_bokeh_map(sink: &Sink, fingerprint: &Path, image: &Path, block: usize) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let img = load_image(image)?;
    let (w, term) = probe(&fp, &img)?;
    let map = block_corr_map(&w, &term, block)?;
    let plane = map.to_plane();
    sink.json("corr_map.json", &map)?;
    save_plane(&plane, sink.path("corr_map.fpt"))?;
    sink.bytes("corr_map.svg", svg::heatmap(&plane).as_bytes())
}

fn mask_plane(mask: &BokehMask) -> Plane {
    Plane::from_fn(mask.rows, mask.cols, |r, c| {
        if mask.block_mask[r * mask.cols + c] {
            1.0
        } else {
            0.0
        }
    })
}

fn write_mask(sink: &Sink, mask: &BokehMask) -> CliResult<()> {
    let plane = mask_plane(mask);
    sink.json("mask.json", mask)?;
    save_plane(&plane, sink.path("mask.fpt"))?;
    sink.bytes("mask.svg", svg::heatmap(&plane).as_bytes())
}

fn cmd_bokeh_mask(sink: &Sink, map: &Path, threshold: Threshold) -> CliResult<()> {
    let map: BlockCorrMap = read_report(map)?;
    write_mask(sink, &bokeh_mask(&map, threshold))
}

#[derive(Serialize)]
struct MaskedVerifyReport {
    plain: prnu_core::PceResult,
    masked: prnu_core::PceResult,
    decision_plain: prnu_core::Decision,
    decision_masked: prnu_core::Decision,
    coverage: f64,
    threshold_used: f64,
}

fn cmd_masked_verify(
    sink: &Sink,
    fingerprint: &Path,
    image: &Path,
    mask: Option<&Path>,
    block: usize,
    threshold: Threshold,
    tau: f64,
) -> CliResult<()> {
    let fp = load_fingerprint(fingerprint)?;
    let img = load_image(image)?;
    let (w, term) = probe(&fp, &img)?;
    let mask = match mask {
        Some(p) => read_report::<BokehMask>(p)?,
        None => bokeh_mask(&block_corr_map(&w, &term, block)?, threshold),
    };
    let cfg = VerifyConfig {
        tau,
        search: SearchMode::Full,
    };
    let plain = pce(&w, &term)?;
    let masked = masked_pce(&w, &term, &mask)?;
    sink.json(
        "masked_verify.json",
        &MaskedVerifyReport {
            decision_plain: verify(&plain, &cfg),
            decision_masked: verify(&masked, &cfg),
            plain,
            masked,
            coverage: mask.coverage(),
            threshold_used: mask.threshold_used,
        },
    )
}

fn cmd_mfp_scan(sink: &Sink, files: &[PathBuf]) -> CliResult<()> {
    let rows = files
        .par_iter()
        .map(|path| {
            let bytes = std::fs::read(path).map_err(|source| Error::Unreadable {
                path: path.clone(),
                source,
            })?;
            let tags =
                detect_mfp(&bytes).map_err(|e| CliError::At(path.clone(), Error::Jpeg(e)))?;
            let (zn, zd) = match tags.zoom_ratio {
                Some(r) => (r.num.to_string(), r.den.to_string()),
                None => (String::new(), String::new()),
            };
            Ok(vec![
                path.display().to_string(),
                tags.mhdr.to_string(),
                tags.lhdr.to_string(),
                tags.mfp3.to_string(),
                tags.is_mfp.to_string(),
                zn,
                zd,
            ])
        })
        .collect::<CliResult<Vec<_>>>()?;
    sink.csv(
        "mfp.csv",
        &[
            "path", "mhdr", "lhdr", "mfp3", "is_mfp", "zoom_num", "zoom_den",
        ],
        &rows,
    )
}

fn cmd_synth_gen(sink: &Sink, spec_path: &Path, seed: u64) -> CliResult<()> {
    let text = std::fs::read_to_string(spec_path).map_err(|source| Error::Unreadable {
        path: spec_path.to_path_buf(),
        source,
    })?;
    let plan = SynthPlan::parse(&text, seed)?;
    let spec = &plan.spec;
    let k = gen_prnu(spec);

    struct Job {
        path: String,
        role: Role,
        label: Label,
        spec: SynthSpec,
        camera: Option<usize>,
        index: u64,
    }
    let mut jobs = Vec::new();
    for i in 0..plan.references {
        jobs.push(Job {
            path: format!("ref/ref_{i:04}.pgm"),
            role: Role::Reference,
            label: Label::Genuine,
            spec: spec.clone(),
            camera: None,
            index: i as u64,
        });
    }
    let test_spec = |i: usize| SynthSpec {
        scene: plan.test_scene(i),
        ..spec.clone()
    };
    for i in 0..plan.genuine {
        jobs.push(Job {
            path: format!("test/genuine_{i:04}.pgm"),
            role: Role::Test,
            label: Label::Genuine,
            spec: test_spec(i),
            camera: None,
            index: (plan.references + i) as u64,
        });
    }
    for j in 0..plan.impostors {
        jobs.push(Job {
            path: format!("test/impostor_{j:04}.pgm"),
            role: Role::Test,
            label: Label::Impostor,
            spec: SynthSpec {
                seed: plan.impostor_seed(j),
                ..test_spec(plan.genuine + j)
            },
            camera: Some(j),
            index: 0,
        });
    }
    for sub in ["ref", "test"] {
        let d = sink.path(sub);
        std::fs::create_dir_all(&d).map_err(|source| Error::Unwritable { path: d, source })?;
    }
    jobs.par_iter()
        .map(|job| {
            let k_other;
            let k_used = match job.camera {
                None => &k,
                Some(_) => {
                    k_other = gen_prnu(&job.spec);
                    &k_other
                }
            };
            let (img, _) = capture(&job.spec, k_used, job.index)?;
            save_image(&img, sink.path(&job.path))?;
            Ok(())
        })
        .collect::<CliResult<Vec<()>>>()?;
    save_plane(&k, sink.path("k_true.fpt"))?;
    if let Some(p) = &spec.pattern {
        save_plane(&pattern_plane(spec.dims, p), sink.path("pattern.fpt"))?;
    }
    let manifest = DatasetManifest {
        entries: jobs
            .iter()
            .map(|j| ManifestEntry {
                path: j.path.clone(),
                role: j.role,
                label: j.label,
                tags: Default::default(),
            })
            .collect(),
    };
    save_manifest(&manifest, sink.path("manifest.tsv"))?;
    sink.json("synth.json", &plan)
}

fn cmd_roc(sink: &Sink, scores: &Path, tau: f64) -> CliResult<()> {
    let bad = |m: String| CliError::Input(format!("{}: {m}", scores.display()));
    let mut reader = csv::Reader::from_path(scores).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Core(Error::Unreadable {
            path: scores.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        }),
        _ => bad(e.to_string()),
    })?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["score", "label", "group"] {
        return Err(bad("header must be score,label,group".into()));
    }
    let mut set = ScoreSet::default();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let score: f64 = rec[0]
            .trim()
            .parse()
            .map_err(|e| bad(format!("line {line}: score: {e}")))?;
        let label: Label = rec[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("line {line}: unknown label '{}'", &rec[1])))?;
        set.push(score, label, rec[2].trim());
    }
    let curve = roc(&set)?;
    let area = auc(&curve);
    let rates = rates_at(&set, tau)?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|p| vec![num(p.threshold), num(p.fpr), num(p.tpr)])
        .collect();
    let points: Vec<(f64, f64)> = curve.iter().map(|p| (p.fpr, p.tpr)).collect();
    let scatter: Vec<(String, f64)> = set
        .entries
        .iter()
        .map(|e| (format!("{} {}", e.group, e.label), e.score))
        .collect();
    let genuine = set
        .entries
        .iter()
        .filter(|e| e.label == Label::Genuine)
        .count();
    sink.csv("roc.csv", &["threshold", "fpr", "tpr"], &rows)?;
    sink.bytes("roc.svg", svg::roc_curve(&points, area).as_bytes())?;
    sink.bytes("scores.svg", svg::scatter(&scatter, tau).as_bytes())?;
    sink.json(
        "roc.json",
        &json!({
            "auc": area,
            "tau": tau,
            "tpr": rates.tpr,
            "fpr": rates.fpr,
            "genuine": genuine,
            "impostor": set.entries.len() - genuine,
        }),
    )
}
