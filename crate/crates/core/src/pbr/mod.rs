//! PBR material synthesis from texture crops.
//!
//! Each scalar property (roughness, metallic, height, transmission) is
//! driven by one randomly chosen image channel (R, G, B, H, S, V) or a
//! constant, passed through a short random augmentation chain. Albedo is the
//! crop color, occasionally hue-rotated; the normal map comes from the
//! height gradient. Everything is keyed by (seed, texture id), so a recipe
//! set stored next to the maps regenerates them exactly.

mod material;
mod mix;
mod recipe;

pub use material::{
    apply_augmentation, decode_normals, generate_material, generate_material_with, height_to_normal, material_id_for,
    normal_vectors, realize_map, realize_material, MapKind, PbrMaterial, Provenance,
};
pub use mix::{mix_materials, sample_mix_spec, sample_mix_spec_with, MixMode, MixSpec};
pub use recipe::{
    sample_recipes, sample_recipes_with, Augmentation, MapRecipe, Property, RecipeSet, SourceChannel, SynthParams,
    MAX_CHAIN,
};
