//! The `synth-gen` spec file: flat `key = value` lines (TOML syntax, no
//! tables). Unknown keys are rejected. Keys and defaults:
//!
//! ```text
//! height = 512            width = 512
//! prnu_sigma = 0.02       noise_sigma = 3.0
//! scene = "flat"          # flat | gradient | texture (reference captures)
//! intensity = 128.0       # flat scenes only
//! scene_seed = 0          # texture scenes only
//! test_scene = "texture"  # scene of test captures; texture seeds vary per image
//! pattern = "none"        # none | cosine | tiled_noise
//! basis = [60, 65]        phase = [0, 0]
//! amplitude = 2.0         # 8-bit units, or instead:
//! ratio = 4.0             # pattern-to-PRNU energy ratio
//! tile_seed = 0
//! seed = 0                # camera seed; --seed is used when absent
//! references = 20         genuine = 0         impostors = 0
//! ```

use prnu_core::synth::{amplitude_for_ratio, PatternSpec, Scene, Waveform};
use prnu_core::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SynthFile {
    pub height: usize,
    pub width: usize,
    pub prnu_sigma: f64,
    pub noise_sigma: f64,
    pub scene: String,
    pub intensity: f64,
    pub scene_seed: u64,
    pub test_scene: String,
    pub pattern: String,
    pub basis: [usize; 2],
    pub phase: [usize; 2],
    pub amplitude: Option<f64>,
    pub ratio: Option<f64>,
    pub tile_seed: u64,
    pub seed: Option<u64>,
    pub references: usize,
    pub genuine: usize,
    pub impostors: usize,
}

impl Default for SynthFile {
    fn default() -> Self {
        SynthFile {
            height: 512,
            width: 512,
            prnu_sigma: 0.02,
            noise_sigma: 3.0,
            scene: "flat".into(),
            intensity: 128.0,
            scene_seed: 0,
            test_scene: "texture".into(),
            pattern: "none".into(),
            basis: [60, 65],
            phase: [0, 0],
            amplitude: None,
            ratio: None,
            tile_seed: 0,
            seed: None,
            references: 20,
            genuine: 0,
            impostors: 0,
        }
    }
}

/// A parsed spec file resolved into core types.
#[derive(Clone, Debug, Serialize)]
pub struct SynthPlan {
    pub spec: SynthSpec,
    pub test_scene: String,
    pub scene_seed: u64,
    pub references: usize,
    pub genuine: usize,
    pub impostors: usize,
}

fn scene(name: &str, intensity: f64, seed: u64) -> CliResult<Scene> {
    match name {
        "flat" => Ok(Scene::Flat(intensity)),
        "gradient" => Ok(Scene::Gradient),
        "texture" => Ok(Scene::Texture(seed)),
        other => Err(CliError::Input(format!("unknown scene '{other}'"))),
    }
}

impl SynthPlan {
    pub fn parse(text: &str, default_seed: u64) -> CliResult<Self> {
        let f: SynthFile =
            toml::from_str(text).map_err(|e| CliError::Input(format!("spec: {e}")))?;
        let mut spec = SynthSpec {
            dims: (f.height, f.width),
            prnu_sigma: f.prnu_sigma,
            noise_sigma: f.noise_sigma,
            scene: scene(&f.scene, f.intensity, f.scene_seed)?,
            pattern: None,
            seed: f.seed.unwrap_or(default_seed),
        };
        scene(&f.test_scene, f.intensity, 0)?;
        let waveform = match f.pattern.as_str() {
            "none" => None,
            "cosine" => Some(Waveform::Cosine),
            "tiled_noise" => Some(Waveform::TiledNoise(f.tile_seed)),
            other => return Err(CliError::Input(format!("unknown pattern '{other}'"))),
        };
        if let Some(waveform) = waveform {
            let amplitude = match (f.amplitude, f.ratio) {
                (Some(a), None) => a,
                (None, Some(r)) => amplitude_for_ratio(r, &spec, waveform),
                (None, None) => {
                    return Err(CliError::Input("pattern needs amplitude or ratio".into()))
                }
                (Some(_), Some(_)) => {
                    return Err(CliError::Input("give amplitude or ratio, not both".into()))
                }
            };
            spec.pattern = Some(PatternSpec {
                basis: (f.basis[0], f.basis[1]),
                amplitude,
                phase: (f.phase[0], f.phase[1]),
                waveform,
            });
        }
        spec.validate()?;
        if f.references + f.genuine + f.impostors == 0 {
            return Err(CliError::Input("nothing to generate".into()));
        }
        Ok(SynthPlan {
            spec,
            test_scene: f.test_scene,
            scene_seed: f.scene_seed,
            references: f.references,
            genuine: f.genuine,
            impostors: f.impostors,
        })
    }

    /// Scene of the `i`-th test capture.
    pub fn test_scene(&self, i: usize) -> Scene {
        let intensity = match self.spec.scene {
            Scene::Flat(v) => v,
            _ => 128.0,
        };
        let seed = self.scene_seed.wrapping_add(1 + i as u64);
        scene(&self.test_scene, intensity, seed).expect("checked in parse")
    }

    /// Camera seed of the `j`-th impostor device.
    pub fn impostor_seed(&self, j: usize) -> u64 {
        self.spec
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(j as u64 + 1)
    }
}
