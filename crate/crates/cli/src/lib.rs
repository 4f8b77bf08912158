//! The `prnu` command-line driver.
//!
//! Every subcommand validates its flags before touching the filesystem,
//! writes reports atomically into `--out`, and finishes with a
//! `run_config.json` describing the resolved invocation. Exit codes: 0 on
//! success, 1 on usage or validation errors, 2 on runtime errors. Errors go
//! to standard error as `ERR:<code>: <message>`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

mod commands;
mod output;
pub mod svg;
pub mod synth_config;

#[derive(Parser, Debug, Serialize)]
#[command(name = "prnu", version, about = "PRNU camera-fingerprint toolkit")]
pub struct Cli {
    /// Worker threads for data-parallel stages; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    #[serde(skip)]
    pub threads: usize,
    /// Seed for commands that draw random numbers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Estimate a fingerprint from the reference entries of a manifest.
    Fingerprint {
        #[arg(long)]
        manifest: PathBuf,
        /// File name of the FPT plane written under --out.
        #[arg(long, default_value = "fingerprint.fpt")]
        name: String,
        #[arg(long, default_value_t = prnu_core::fingerprint::DEFAULT_EPS)]
        eps: f64,
        /// Keep saturated pixels in the estimate.
        #[arg(long)]
        include_saturated: bool,
        /// Subtract row and column means.
        #[arg(long)]
        zero_mean: bool,
        /// Attenuate spectral peaks with this strength (0 disables).
        #[arg(long)]
        wiener: Option<f64>,
    },
    /// PCE of every test entry of a manifest against a fingerprint.
    Verify {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = prnu_core::correlate::DEFAULT_TAU, allow_negative_numbers = true)]
        tau: f64,
        /// Evaluate only the zero shift instead of the full search.
        #[arg(long)]
        zero_only: bool,
    },
    /// Fingerprint autocorrelation surface and a heat map of its center.
    Autocorr {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long, default_value_t = prnu_core::lattice::DEFAULT_WINDOW)]
        window: usize,
    },
    /// Periodic-peak lattice of an autocorrelation surface.
    Lattice {
        /// Surface FPT in raw order (zero shift at index 0), as written by `autocorr`.
        #[arg(
            long,
            required_unless_present = "fingerprint",
            conflicts_with = "fingerprint"
        )]
        surface: Option<PathBuf>,
        /// Compute the surface from this fingerprint instead.
        #[arg(long)]
        fingerprint: Option<PathBuf>,
        #[arg(long, default_value_t = prnu_core::lattice::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = prnu_core::lattice::DEFAULT_MIN_PEAK)]
        min_peak: f64,
    },
    /// Pairwise collision screening of two or more fingerprints.
    Collide {
        /// Repeat once per fingerprint.
        #[arg(long = "fingerprint", required = true)]
        fingerprints: Vec<PathBuf>,
        /// Group label per fingerprint, in the same order; defaults to file stems.
        #[arg(long = "group")]
        groups: Vec<String>,
        #[arg(long, default_value_t = prnu_core::correlate::DEFAULT_TAU, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = prnu_core::lattice::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = prnu_core::lattice::DEFAULT_MIN_PEAK)]
        min_peak: f64,
    },
    /// Block-wise shift map between a test image and a fingerprint.
    HdrMap {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = prnu_core::local::DEFAULT_SHIFT_BLOCK)]
        block: usize,
        /// Defaults to the block size.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long, default_value_t = prnu_core::local::DEFAULT_SEARCH_RADIUS)]
        search_radius: usize,
    },
    /// Shift a fingerprint block-wise according to a shift map.
    Adapt {
        #[arg(long)]
        fingerprint: PathBuf,
        /// `shift_map.json` written by `hdr-map`.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value = "adapted.fpt")]
        name: String,
    },
    /// Block-wise correlation map between a test image and a fingerprint.
    BokehMap {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = prnu_core::local::DEFAULT_CORR_BLOCK)]
        block: usize,
    },
    /// Threshold a correlation map into a bokeh mask.
    BokehMask {
        /// `corr_map.json` written by `bokeh-map`.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, conflicts_with = "auto", allow_negative_numbers = true)]
        threshold: Option<f64>,
        /// Otsu threshold (the default when --threshold is absent).
        #[arg(long)]
        auto: bool,
    },
    /// PCE with a bokeh mask excluded, next to the plain PCE.
    MaskedVerify {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        image: PathBuf,
        /// `mask.json` from `bokeh-mask`; computed on the fly when absent.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = prnu_core::local::DEFAULT_CORR_BLOCK)]
        block: usize,
        #[arg(long, conflicts_with = "auto", allow_negative_numbers = true)]
        threshold: Option<f64>,
        #[arg(long)]
        auto: bool,
        #[arg(long, default_value_t = prnu_core::correlate::DEFAULT_TAU, allow_negative_numbers = true)]
        tau: f64,
    },
    /// MFP tags and zoom ratio of JPEG files.
    MfpScan {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Synthetic captures from a flat key=value spec file.
    SynthGen {
        #[arg(long)]
        spec: PathBuf,
    },
    /// ROC curve and operating point from a `score,label,group` CSV.
    Roc {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = prnu_core::correlate::DEFAULT_TAU, allow_negative_numbers = true)]
        tau: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fingerprint { .. } => "fingerprint",
            Command::Verify { .. } => "verify",
            Command::Autocorr { .. } => "autocorr",
            Command::Lattice { .. } => "lattice",
            Command::Collide { .. } => "collide",
            Command::HdrMap { .. } => "hdr-map",
            Command::Adapt { .. } => "adapt",
            Command::BokehMap { .. } => "bokeh-map",
            Command::BokehMask { .. } => "bokeh-mask",
            Command::MaskedVerify { .. } => "masked-verify",
            Command::MfpScan { .. } => "mfp-scan",
            Command::SynthGen { .. } => "synth-gen",
            Command::Roc { .. } => "roc",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(String),
    Input(String),
    Core(prnu_core::Error),
    /// A core error tied to one input of a batch.
    At(PathBuf, prnu_core::Error),
}

impl CliError {
    pub fn code(&self) -> &str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "invalid-argument",
            CliError::Input(_) => "malformed-input",
            CliError::Core(e) | CliError::At(_, e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Input(_) | CliError::Core(_) | CliError::At(..) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Invalid(m) | CliError::Input(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::At(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<prnu_core::Error> for CliError {
    fn from(e: prnu_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let msg = text.trim_start_matches("error: ").trim_end();
            eprintln!("ERR:usage: {msg}");
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ERR:{}: {e}", e.code());
            e.exit_code()
        }
    }
}

/// Runs an already parsed invocation.
pub fn execute(cli: &Cli) -> CliResult<()> {
    commands::validate(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {} threads: {e}", cli.threads)))?;
    pool.install(|| commands::dispatch(cli))
}
