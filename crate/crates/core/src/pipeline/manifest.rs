use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ConfigSnapshot;
use crate::detect::PixelRect;
use crate::error::{Error, Result};
use crate::pbr::Provenance;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub cell_px: usize,
    pub cells_w: usize,
    pub cells_h: usize,
    pub cell_x: usize,
    pub cell_y: usize,
    pub side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureEntry {
    pub texture_id: String,
    /// Source image path relative to the input directory, `/`-separated.
    pub source_image: String,
    pub rect: PixelRect,
    pub grid: GridInfo,
    pub max_pair_distance: f64,
    /// Crop PNG relative to the output directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialEntry {
    pub material_id: String,
    pub texture_id: String,
    pub seed: u64,
    pub normal_strength: f64,
    pub provenance: Provenance,
    /// Map name -> PNG path relative to the output directory.
    pub maps: BTreeMap<String, String>,
    pub json: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub path: String,
    pub width: usize,
    pub height: usize,
    pub analyzed_width: usize,
    pub analyzed_height: usize,
    pub textures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub images: usize,
    pub skipped: usize,
    pub textures: usize,
    pub materials: usize,
}

/// Provenance record of a run: everything written under the output directory is listed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: ConfigSnapshot,
    pub config_hash: String,
    pub images: Vec<ImageEntry>,
    pub skipped: Vec<SkippedImage>,
    pub textures: Vec<TextureEntry>,
    pub materials: Vec<MaterialEntry>,
    pub counts: Counts,
}

impl Manifest {
    pub fn new(config: ConfigSnapshot) -> Self {
        Self {
            version: MANIFEST_VERSION,
            config_hash: config.hash(),
            config,
            images: Vec::new(),
            skipped: Vec::new(),
            textures: Vec::new(),
            materials: Vec::new(),
            counts: Counts::default(),
        }
    }

    pub fn recount(&mut self) {
        self.counts = Counts {
            images: self.images.len(),
            skipped: self.skipped.len(),
            textures: self.textures.len(),
            materials: self.materials.len(),
        };
    }

    pub fn texture(&self, id: &str) -> Option<&TextureEntry> {
        self.textures.iter().find(|t| t.texture_id == id)
    }

    pub fn material(&self, id: &str) -> Option<&MaterialEntry> {
        self.materials.iter().find(|m| m.material_id == id)
    }

    /// Inserts or replaces a material entry, keeping entries sorted by id.
    pub fn upsert_material(&mut self, entry: MaterialEntry) {
        match self
            .materials
            .binary_search_by(|m| m.material_id.cmp(&entry.material_id))
        {
            Ok(i) => self.materials[i] = entry,
            Err(i) => self.materials.insert(i, entry),
        }
        self.recount();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(s).map_err(|e| Error::ManifestInvalid(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    /// Structural checks that serde alone cannot express.
    pub fn check(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::ManifestInvalid(format!("unsupported version {}", self.version)));
        }
        let mut ids: Vec<&str> = self.textures.iter().map(|t| t.texture_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::ManifestInvalid(format!("duplicate texture id {}", w[0])));
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), self.to_json())?;
        Ok(())
    }

    /// Every file path (relative to the output directory) the manifest refers to.
    pub fn referenced_files(&self) -> Vec<String> {
        let mut v: Vec<String> = self.textures.iter().map(|t| t.file.clone()).collect();
        for m in &self.materials {
            v.extend(m.maps.values().cloned());
            v.push(m.json.clone());
        }
        v
    }
}

/// Sidecar written next to a material's maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialJson {
    pub material_id: String,
    pub texture_id: String,
    pub seed: u64,
    pub normal_strength: f64,
    pub provenance: Provenance,
    /// Map name -> file name inside the material directory.
    pub maps: BTreeMap<String, String>,
}
