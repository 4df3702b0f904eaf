//! Run manifest: everything needed to regenerate any output byte with the
//! same binary (configs are hashed, seeds and plans recorded verbatim).

use fetalsim_core::augment::{AugmentationConfig, AugmentationPlan, SkipNote};
use fetalsim_core::synth::{SynthConfig, SynthDraw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: u64,
    pub seed: u64,
    pub plan: AugmentationPlan,
    pub skips: Vec<SkipNote>,
    pub draw: SynthDraw,
    pub image: String,
    pub labels: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub input: String,
    pub master_seed: u64,
    /// SHA-256 over the serialized augmentation and synthesis configs.
    pub config_hash: String,
    pub samples: Vec<SampleRecord>,
    pub wall_ms: u64,
}

impl RunManifest {
    pub fn new(
        input: &Path,
        master_seed: u64,
        augment: &AugmentationConfig,
        synth: &SynthConfig,
        samples: Vec<SampleRecord>,
        wall_ms: u64,
    ) -> RunManifest {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(augment).unwrap());
        hasher.update(serde_json::to_vec(synth).unwrap());
        let config_hash = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input: input.display().to_string(),
            master_seed,
            config_hash,
            samples,
            wall_ms,
        }
    }
}
