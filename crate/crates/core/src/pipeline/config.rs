use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detect::{CropBounds, DetectParams};
use crate::error::{Error, Result};
use crate::grid::GridParams;
use crate::pbr::SynthParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub resize_long_edge: usize,
    pub min_crop_px: usize,
    pub max_crop_px: usize,
    pub generate_pbr: bool,
    pub mixes_per_material: usize,
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
    pub grid: GridParams,
    pub detect: DetectParams,
    pub synth: SynthParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input_dir: PathBuf::from("images"),
            output_dir: PathBuf::from("texmine-out"),
            seed: 0,
            resize_long_edge: 1600,
            min_crop_px: 240,
            max_crop_px: 1000,
            generate_pbr: true,
            mixes_per_material: 0,
            jobs: 0,
            grid: GridParams::default(),
            detect: DetectParams::default(),
            synth: SynthParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidParam(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn bounds(&self) -> CropBounds {
        CropBounds {
            min_px: self.min_crop_px,
            max_px: self.max_crop_px,
        }
    }

    pub fn settings(&self) -> DetectionSettings {
        DetectionSettings {
            resize_long_edge: self.resize_long_edge,
            grid: self.grid,
            detect: self.detect,
            bounds: self.bounds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dir.as_os_str().is_empty() || self.output_dir.as_os_str().is_empty() {
            return Err(Error::InvalidParam("input_dir and output_dir must be non-empty".into()));
        }
        if self.min_crop_px > self.max_crop_px {
            return Err(Error::InvalidParam("min_crop_px must be <= max_crop_px".into()));
        }
        if self.resize_long_edge == 0 {
            return Err(Error::InvalidParam("resize_long_edge must be >= 1".into()));
        }
        self.grid.validate()?;
        self.detect.validate()?;
        self.synth.validate()
    }

    /// The parameters that influence outputs; paths and worker count are left out
    /// so that the manifest does not depend on where or how fast a run happened.
    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            seed: self.seed,
            resize_long_edge: self.resize_long_edge,
            min_crop_px: self.min_crop_px,
            max_crop_px: self.max_crop_px,
            generate_pbr: self.generate_pbr,
            mixes_per_material: self.mixes_per_material,
            grid: self.grid,
            detect: self.detect,
            synth: self.synth,
        }
    }

    pub fn apply_snapshot(&mut self, s: &ConfigSnapshot) {
        self.seed = s.seed;
        self.resize_long_edge = s.resize_long_edge;
        self.min_crop_px = s.min_crop_px;
        self.max_crop_px = s.max_crop_px;
        self.generate_pbr = s.generate_pbr;
        self.mixes_per_material = s.mixes_per_material;
        self.grid = s.grid;
        self.detect = s.detect;
        self.synth = s.synth;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub seed: u64,
    pub resize_long_edge: usize,
    pub min_crop_px: usize,
    pub max_crop_px: usize,
    pub generate_pbr: bool,
    pub mixes_per_material: usize,
    pub grid: GridParams,
    pub detect: DetectParams,
    pub synth: SynthParams,
}

impl ConfigSnapshot {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("snapshot serializes");
        let d = Sha256::digest(&json);
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything needed to run detection on one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSettings {
    pub resize_long_edge: usize,
    pub grid: GridParams,
    pub detect: DetectParams,
    pub bounds: CropBounds,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        PipelineConfig::default().settings()
    }
}
