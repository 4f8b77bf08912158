//! PRNU camera-fingerprint toolkit: residual extraction, fingerprint
//! estimation, PCE verification, periodic-artifact detection, block-wise
//! analyses and a synthetic camera for ground truth.

pub mod correlate;
pub mod denoise;
pub mod error;
mod fft;
pub mod fingerprint;
pub mod jpeg;
pub mod lattice;
pub mod local;
pub mod roc;
pub mod synth;
pub mod tensor_io;

pub use correlate::{
    autocorr, ncc_at, ncc_surface, pce, verify, CorrSurface, Decision, PceResult, SearchMode,
    VerifyConfig,
};
pub use denoise::{denoise, residual, DenoiseConfig, Residual};
pub use error::{Error, Result};
pub use fingerprint::{Fingerprint, FingerprintAccumulator};
pub use lattice::{CollisionReport, LatticeReport, ScreenConfig, Verdict};
pub use local::{BlockCorrMap, BokehMask, ShiftMap, Threshold};
pub use roc::{Rates, RocPoint, ScoreSet};
pub use synth::SynthSpec;
pub use tensor_io::{Image, Label, Plane};
