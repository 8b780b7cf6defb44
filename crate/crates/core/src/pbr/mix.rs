use rand::Rng;
use serde::{Deserialize, Serialize};

use super::material::{height_to_normal, PbrMaterial, Provenance};
use super::recipe::{Property, SynthParams};
use crate::raster::{resize_bilinear, Raster};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    PerProperty,
    Global,
}

/// Per-property mixing ratios; `r` is the weight of the second material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub mode: MixMode,
    pub albedo: f64,
    pub roughness: f64,
    pub metallic: f64,
    pub height: f64,
    pub transmission: f64,
}

impl MixSpec {
    pub fn global(r: f64) -> Self {
        let r = r.clamp(0.0, 1.0);
        Self {
            mode: MixMode::Global,
            albedo: r,
            roughness: r,
            metallic: r,
            height: r,
            transmission: r,
        }
    }

    pub fn per_property(albedo: f64, roughness: f64, metallic: f64, height: f64, transmission: f64) -> Self {
        let c = |v: f64| v.clamp(0.0, 1.0);
        Self {
            mode: MixMode::PerProperty,
            albedo: c(albedo),
            roughness: c(roughness),
            metallic: c(metallic),
            height: c(height),
            transmission: c(transmission),
        }
    }

    pub fn ratio(&self, p: Property) -> f64 {
        match p {
            Property::Albedo => self.albedo,
            Property::Roughness => self.roughness,
            Property::Metallic => self.metallic,
            Property::Height => self.height,
            Property::Transmission => self.transmission,
        }
    }
}

pub fn sample_mix_spec(seed: u64) -> MixSpec {
    sample_mix_spec_with(&SynthParams::default(), seed, "")
}

/// Per-property mode with probability `p_per_property_mix` (independent
/// U[0,1] ratios), otherwise one U[0,1] ratio for everything.
pub fn sample_mix_spec_with(p: &SynthParams, seed: u64, key: &str) -> MixSpec {
    let mut rng = seed::stream(seed, &["mix", key]);
    if rng.random_bool(p.p_per_property_mix) {
        let mut r = || rng.random::<f64>();
        MixSpec::per_property(r(), r(), r(), r(), r())
    } else {
        MixSpec::global(rng.random::<f64>())
    }
}

/// Linear interpolation that returns `a` at t = 0, `b` at t = 1 and `a` when a == b, exactly.
fn lerp(a: f32, b: f32, t: f64) -> f32 {
    let (a64, b64) = (f64::from(a), f64::from(b));
    if t == 1.0 {
        return b;
    }
    if a64 == 0.0 || b64 == 0.0 {
        return (t * b64 + (1.0 - t) * a64) as f32;
    }
    (a64 + t * (b64 - a64)) as f32
}

fn mix_maps(a: &Raster, b: &Raster, t: f64) -> Raster {
    let b = resize_bilinear(b, a.width(), a.height());
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| lerp(x, y, t).clamp(0.0, 1.0))
        .collect();
    Raster::from_parts(a.width(), a.height(), a.channels(), data)
}

/// Weighted average of two materials, map by map, at `a`'s resolution. The
/// normal map is re-derived from the mixed height using `a`'s strength.
pub fn mix_materials(a: &PbrMaterial, b: &PbrMaterial, spec: &MixSpec) -> PbrMaterial {
    let mixed = |p: Property| mix_maps(a.property_map(p), b.property_map(p), spec.ratio(p));
    let height = mixed(Property::Height);
    let normal = height_to_normal(&height, a.normal_strength);
    let spec_json = serde_json::to_string(spec).expect("mix spec serializes");
    let tag = seed::derive_seed(0, &[&a.material_id, &b.material_id, &spec_json]);
    PbrMaterial {
        material_id: format!("mix-{}-{:08x}", a.material_id, tag >> 32),
        texture_id: a.texture_id.clone(),
        seed: a.seed,
        albedo: mixed(Property::Albedo),
        roughness: mixed(Property::Roughness),
        metallic: mixed(Property::Metallic),
        transmission: mixed(Property::Transmission),
        height,
        normal,
        normal_strength: a.normal_strength,
        provenance: Provenance::Mix {
            a: a.material_id.clone(),
            b: b.material_id.clone(),
            spec: *spec,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{PixelRect, TextureCrop};
    use crate::pbr::generate_material;
    use crate::raster::to_u8;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn material(seed: u64, side: usize) -> PbrMaterial {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raster = Raster::from_fn(side, side, 3, |_, _| [rng.random(), rng.random(), rng.random()]);
        let crop = TextureCrop {
            source_id: format!("m{seed}"),
            rect: PixelRect {
                x: 0,
                y: 0,
                w: side,
                h: side,
            },
            raster,
            max_pair_distance: 0.0,
        };
        generate_material(&crop, seed)
    }

    #[test]
    fn lerp_endpoints_and_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (a, b, t): (f32, f32, f64) = (rng.random(), rng.random(), rng.random());
            assert_eq!(lerp(a, b, 0.0), a);
            assert_eq!(lerp(a, b, 1.0), b);
            assert_eq!(lerp(a, a, t), a);
        }
    }

    #[test]
    fn identity_mixes() {
        let a = material(1, 20);
        let b = material(2, 20);
        let zero = mix_materials(&a, &b, &MixSpec::global(0.0));
        for p in Property::ALL {
            assert_eq!(zero.property_map(p), a.property_map(p));
        }
        assert_eq!(zero.normal, a.normal);
        let one = mix_materials(&a, &b, &MixSpec::global(1.0));
        for p in Property::ALL {
            assert_eq!(one.property_map(p), b.property_map(p));
        }
        let selfmix = mix_materials(&a, &a, &sample_mix_spec(3));
        for p in Property::ALL {
            assert_eq!(selfmix.property_map(p), a.property_map(p));
        }
    }

    #[test]
    fn uniform_average() {
        let mut a = material(1, 8);
        let mut b = material(2, 8);
        a.roughness = Raster::constant(8, 8, 1, 0.2);
        b.roughness = Raster::constant(8, 8, 1, 0.6);
        let m = mix_materials(&a, &b, &MixSpec::global(0.5));
        assert!(m.roughness.data().iter().all(|&v| (v - 0.4).abs() < 1e-6));
    }

    #[test]
    fn affine_in_ratio() {
        let a = material(4, 16);
        let b = material(5, 16);
        let half = mix_materials(&a, &b, &MixSpec::global(0.5));
        for p in Property::ALL {
            for ((h, x), y) in half
                .property_map(p)
                .data()
                .iter()
                .zip(a.property_map(p).data())
                .zip(b.property_map(p).data())
            {
                let avg = (x + y) / 2.0;
                assert!((i32::from(to_u8(*h)) - i32::from(to_u8(avg))).abs() <= 1);
            }
        }
    }

    #[test]
    fn resamples_second_material() {
        let a = material(6, 16);
        let b = material(7, 24);
        let m = mix_materials(&a, &b, &sample_mix_spec(8));
        assert_eq!((m.width(), m.height_px()), (16, 16));
        assert!(matches!(m.provenance, Provenance::Mix { .. }));
    }

    #[test]
    fn spec_sampling() {
        assert_eq!(sample_mix_spec(10), sample_mix_spec(10));
        let n = 10_000;
        let mut per = 0;
        for s in 0..n {
            let spec = sample_mix_spec(s);
            for p in Property::ALL {
                assert!((0.0..=1.0).contains(&spec.ratio(p)));
            }
            if spec.mode == MixMode::PerProperty {
                per += 1;
            } else {
                assert!(Property::ALL.iter().all(|p| spec.ratio(*p) == spec.albedo));
            }
        }
        // 3 sd of a fair binomial over 10k draws = 0.015
        let frac = per as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.015, "{frac}");
    }
}
