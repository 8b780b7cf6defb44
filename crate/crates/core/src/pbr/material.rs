use serde::{Deserialize, Serialize};

use super::mix::MixSpec;
use super::recipe::{sample_recipes_with, Augmentation, MapRecipe, Property, RecipeSet, SourceChannel, SynthParams};
use crate::detect::TextureCrop;
use crate::raster::{hsv_to_rgb_pixel, rgb_to_hsv, rgb_to_hsv_pixel, Raster};

/// How a material came to be: sampled recipes over a crop, or a mix of two materials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Provenance {
    Recipes { recipes: RecipeSet },
    Mix { a: String, b: String, spec: MixSpec },
}

/// Six-map material bundle. Scalar maps are 1-channel, albedo and normal 3-channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PbrMaterial {
    pub material_id: String,
    pub texture_id: String,
    pub seed: u64,
    pub albedo: Raster,
    pub roughness: Raster,
    pub metallic: Raster,
    pub height: Raster,
    pub transmission: Raster,
    pub normal: Raster,
    pub normal_strength: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    Albedo,
    Roughness,
    Metallic,
    Height,
    Normal,
    Transmission,
}

impl MapKind {
    pub const ALL: [MapKind; 6] = [
        MapKind::Albedo,
        MapKind::Roughness,
        MapKind::Metallic,
        MapKind::Height,
        MapKind::Normal,
        MapKind::Transmission,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MapKind::Albedo => "albedo",
            MapKind::Roughness => "roughness",
            MapKind::Metallic => "metallic",
            MapKind::Height => "height",
            MapKind::Normal => "normal",
            MapKind::Transmission => "transmission",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl PbrMaterial {
    pub fn map(&self, kind: MapKind) -> &Raster {
        match kind {
            MapKind::Albedo => &self.albedo,
            MapKind::Roughness => &self.roughness,
            MapKind::Metallic => &self.metallic,
            MapKind::Height => &self.height,
            MapKind::Normal => &self.normal,
            MapKind::Transmission => &self.transmission,
        }
    }

    pub fn property_map(&self, p: Property) -> &Raster {
        match p {
            Property::Albedo => &self.albedo,
            Property::Roughness => &self.roughness,
            Property::Metallic => &self.metallic,
            Property::Height => &self.height,
            Property::Transmission => &self.transmission,
        }
    }

    pub fn width(&self) -> usize {
        self.albedo.width()
    }

    pub fn height_px(&self) -> usize {
        self.albedo.height()
    }
}

pub fn material_id_for(texture_id: &str, seed: u64) -> String {
    format!("{texture_id}-{seed:016x}")
}

/// Applies one augmentation to every value of a single-channel map.
pub fn apply_augmentation(map: &Raster, a: &Augmentation) -> Raster {
    map.map(|v| a.apply(f64::from(v)) as f32)
}

/// Builds the map described by `recipe` from a 3-channel crop raster.
pub fn realize_map(crop: &Raster, recipe: &MapRecipe) -> Raster {
    assert_eq!(crop.channels(), 3, "crop must be RGB");
    let (w, h) = (crop.width(), crop.height());
    let base = match recipe.source {
        SourceChannel::Rgb => return albedo_map(crop, recipe.hue_rotation_deg),
        SourceChannel::R => crop.channel(0),
        SourceChannel::G => crop.channel(1),
        SourceChannel::B => crop.channel(2),
        SourceChannel::H => rgb_to_hsv(crop).0,
        SourceChannel::S => rgb_to_hsv(crop).1,
        SourceChannel::V => rgb_to_hsv(crop).2,
        SourceChannel::Uniform(u) => Raster::constant(w, h, 1, u as f32),
    };
    recipe.chain.iter().fold(base, |m, a| apply_augmentation(&m, a))
}

fn albedo_map(crop: &Raster, hue_rotation_deg: Option<f64>) -> Raster {
    let Some(deg) = hue_rotation_deg else {
        return crop.clone();
    };
    let turn = deg / 360.0;
    crop.to_rgb().map_pixels(|[r, g, b]| {
        let (h, s, v) = rgb_to_hsv_pixel(f64::from(r), f64::from(g), f64::from(b));
        let (r, g, b) = hsv_to_rgb_pixel(h + turn, s, v);
        [r as f32, g as f32, b as f32]
    })
}

/// Unit surface normals from central-difference slopes of a height map:
/// n = normalize(-strength * dh/dx, -strength * dh/dy, 1), edges replicated.
pub fn normal_vectors(height: &Raster, strength: f64) -> Vec<[f64; 3]> {
    assert_eq!(height.channels(), 1, "height map must be single-channel");
    let (w, h) = (height.width(), height.height());
    let at = |x: usize, y: usize| f64::from(height.get(x, y, 0));
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = (at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y)) / 2.0;
            let gy = (at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1))) / 2.0;
            let (nx, ny) = (-strength * gx, -strength * gy);
            let len = (nx * nx + ny * ny + 1.0).sqrt();
            out.push([nx / len, ny / len, 1.0 / len]);
        }
    }
    out
}

/// Tangent-space normal map encoded as (n + 1) / 2 per component.
pub fn height_to_normal(height: &Raster, strength: f64) -> Raster {
    let normals = normal_vectors(height, strength);
    let data = normals
        .iter()
        .flat_map(|n| n.map(|c| ((c + 1.0) * 0.5) as f32))
        .collect();
    Raster::from_parts(height.width(), height.height(), 3, data)
}

/// Decodes an encoded normal map back to vectors.
pub fn decode_normals(normal: &Raster) -> Vec<[f64; 3]> {
    normal
        .data()
        .chunks_exact(3)
        .map(|p| {
            [
                2.0 * f64::from(p[0]) - 1.0,
                2.0 * f64::from(p[1]) - 1.0,
                2.0 * f64::from(p[2]) - 1.0,
            ]
        })
        .collect()
}

/// Realizes every map of a recipe set over `crop`.
pub fn realize_material(crop: &Raster, recipes: &RecipeSet, texture_id: &str, seed: u64) -> PbrMaterial {
    let height = realize_map(crop, &recipes.height);
    let normal = height_to_normal(&height, recipes.normal_strength);
    PbrMaterial {
        material_id: material_id_for(texture_id, seed),
        texture_id: texture_id.to_string(),
        seed,
        albedo: realize_map(crop, &recipes.albedo),
        roughness: realize_map(crop, &recipes.roughness),
        metallic: realize_map(crop, &recipes.metallic),
        transmission: realize_map(crop, &recipes.transmission),
        height,
        normal,
        normal_strength: recipes.normal_strength,
        provenance: Provenance::Recipes {
            recipes: recipes.clone(),
        },
    }
}

pub fn generate_material(crop: &TextureCrop, seed: u64) -> PbrMaterial {
    generate_material_with(&SynthParams::default(), crop, seed)
}

/// Samples recipes keyed by (seed, texture id) and realizes them over the crop.
pub fn generate_material_with(p: &SynthParams, crop: &TextureCrop, seed: u64) -> PbrMaterial {
    let id = crop.texture_id();
    let recipes = sample_recipes_with(p, seed, &id);
    realize_material(&crop.raster, &recipes, &id, seed)
}
