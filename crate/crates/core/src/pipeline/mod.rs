//! Runs detection and synthesis over a directory of images and writes the
//! results plus `manifest.json`.

mod assets;
mod config;
mod manifest;
mod scan;
mod sheet;
mod stats;

pub use assets::{
    encode_map, load_texture_crop, read_material_json, regenerate_material, write_material, MATERIALS_DIR,
    MATERIAL_JSON, TEXTURES_DIR,
};
pub use config::{ConfigSnapshot, DetectionSettings, PipelineConfig};
pub use manifest::{
    Counts, GridInfo, ImageEntry, Manifest, MaterialEntry, MaterialJson, SkippedImage, TextureEntry, MANIFEST_FILE,
};
pub use scan::{analyze_file, analyze_raster, is_supported_image, list_images, scan_corpus, Analysis};
pub use sheet::{contact_sheet, material_sheet, DEFAULT_TILE};
pub use stats::{stats, DistanceSummary, ImageYield, SizeBucket, StatsReport};
