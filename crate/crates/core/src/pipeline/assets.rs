use std::collections::BTreeMap;
use std::path::Path;

use super::manifest::{Manifest, MaterialEntry, MaterialJson, TextureEntry};
use crate::detect::TextureCrop;
use crate::error::{Error, Result};
use crate::pbr::{mix_materials, realize_material, MapKind, PbrMaterial, Provenance};
use crate::raster::{load_raster, Raster};

pub const TEXTURES_DIR: &str = "textures";
pub const MATERIALS_DIR: &str = "materials";
pub const MATERIAL_JSON: &str = "material.json";

/// Encodes one map with its export format: albedo and normal as 8-bit RGB,
/// height as 16-bit gray, the other scalar maps as 8-bit gray.
pub fn encode_map(kind: MapKind, r: &Raster) -> Result<Vec<u8>> {
    match kind {
        MapKind::Albedo | MapKind::Normal => r.encode_png_rgb8(),
        MapKind::Height => r.encode_png_gray16(),
        MapKind::Roughness | MapKind::Metallic | MapKind::Transmission => r.encode_png_gray8(),
    }
}

fn io_at(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes `<out_dir>/<material_id>/` with six map PNGs and `material.json`.
/// Returns the manifest entry, with paths relative to `rel_base`.
pub fn write_material(m: &PbrMaterial, out_dir: &Path, rel_prefix: &str) -> Result<MaterialEntry> {
    let dir = out_dir.join(&m.material_id);
    std::fs::create_dir_all(&dir).map_err(|e| io_at(&dir, e))?;
    let mut maps = BTreeMap::new();
    let mut rel_maps = BTreeMap::new();
    for kind in MapKind::ALL {
        let file = format!("{}.png", kind.name());
        let path = dir.join(&file);
        std::fs::write(&path, encode_map(kind, m.map(kind))?).map_err(|e| io_at(&path, e))?;
        rel_maps.insert(
            kind.name().to_string(),
            join_rel(rel_prefix, &format!("{}/{file}", m.material_id)),
        );
        maps.insert(kind.name().to_string(), file);
    }
    let sidecar = MaterialJson {
        material_id: m.material_id.clone(),
        texture_id: m.texture_id.clone(),
        seed: m.seed,
        normal_strength: m.normal_strength,
        provenance: m.provenance.clone(),
        maps,
    };
    let json_path = dir.join(MATERIAL_JSON);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("material json serializes");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| io_at(&json_path, e))?;
    Ok(MaterialEntry {
        material_id: m.material_id.clone(),
        texture_id: m.texture_id.clone(),
        seed: m.seed,
        normal_strength: m.normal_strength,
        provenance: m.provenance.clone(),
        maps: rel_maps,
        json: join_rel(rel_prefix, &format!("{}/{MATERIAL_JSON}", m.material_id)),
    })
}

fn join_rel(prefix: &str, rest: &str) -> String {
    if prefix.is_empty() {
        rest.to_string()
    } else {
        format!("{prefix}/{rest}")
    }
}

pub fn read_material_json(path: &Path) -> Result<MaterialJson> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::ManifestInvalid(format!("{}: {e}", path.display())))
}

/// Rebuilds the crop of a manifest texture from its PNG.
pub fn load_texture_crop(out_dir: &Path, t: &TextureEntry) -> Result<TextureCrop> {
    let raster = load_raster(&out_dir.join(&t.file))?;
    Ok(TextureCrop {
        source_id: t.source_image.clone(),
        rect: t.rect,
        raster,
        max_pair_distance: t.max_pair_distance,
    })
}

/// Regenerates a material from the manifest: recipes are re-realized over the
/// stored crop, mixes are rebuilt from their (regenerated) inputs.
pub fn regenerate_material(out_dir: &Path, manifest: &Manifest, material_id: &str) -> Result<PbrMaterial> {
    regenerate_inner(out_dir, manifest, material_id, 0)
}

fn regenerate_inner(out_dir: &Path, manifest: &Manifest, material_id: &str, depth: usize) -> Result<PbrMaterial> {
    if depth > 32 {
        return Err(Error::ManifestInvalid(format!("mix chain too deep at {material_id}")));
    }
    let entry = manifest
        .material(material_id)
        .ok_or_else(|| Error::NotFound(format!("material {material_id}")))?;
    match &entry.provenance {
        Provenance::Recipes { recipes } => {
            recipes.validate()?;
            let t = manifest
                .texture(&entry.texture_id)
                .ok_or_else(|| Error::NotFound(format!("texture {}", entry.texture_id)))?;
            let crop = load_texture_crop(out_dir, t)?;
            Ok(realize_material(&crop.raster, recipes, &entry.texture_id, entry.seed))
        }
        Provenance::Mix { a, b, spec } => {
            let ma = regenerate_inner(out_dir, manifest, a, depth + 1)?;
            let mb = regenerate_inner(out_dir, manifest, b, depth + 1)?;
            Ok(mix_materials(&ma, &mb, spec))
        }
    }
}
