use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Albedo,
    Roughness,
    Metallic,
    Height,
    Transmission,
}

impl Property {
    pub const SCALAR: [Property; 4] = [
        Property::Roughness,
        Property::Metallic,
        Property::Height,
        Property::Transmission,
    ];
    pub const ALL: [Property; 5] = [
        Property::Albedo,
        Property::Roughness,
        Property::Metallic,
        Property::Height,
        Property::Transmission,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Albedo => "albedo",
            Property::Roughness => "roughness",
            Property::Metallic => "metallic",
            Property::Height => "height",
            Property::Transmission => "transmission",
        }
    }
}

/// Image property a map is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SourceChannel {
    R,
    G,
    B,
    H,
    S,
    V,
    /// Constant map; scalar properties only.
    Uniform(f64),
    /// The crop's full color; albedo only.
    Rgb,
}

impl SourceChannel {
    pub const IMAGE_CHANNELS: [SourceChannel; 6] = [
        SourceChannel::R,
        SourceChannel::G,
        SourceChannel::B,
        SourceChannel::H,
        SourceChannel::S,
        SourceChannel::V,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Augmentation {
    Scale {
        factor: f64,
    },
    Offset {
        delta: f64,
    },
    Invert,
    SoftThreshold {
        threshold: f64,
        softness: f64,
    },
    HardThreshold {
        threshold: f64,
    },
    /// Piecewise-linear remap through `(x, y)` control points sorted by x.
    ColorRamp {
        points: Vec<[f64; 2]>,
    },
}

impl Augmentation {
    pub fn apply(&self, v: f64) -> f64 {
        let out = match self {
            Augmentation::Scale { factor } => factor * v,
            Augmentation::Offset { delta } => v + delta,
            Augmentation::Invert => 1.0 - v,
            Augmentation::HardThreshold { threshold } => {
                if v >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Augmentation::SoftThreshold { threshold, softness } => {
                let lo = threshold - softness;
                let u = ((v - lo) / (2.0 * softness)).clamp(0.0, 1.0);
                u * u * (3.0 - 2.0 * u)
            }
            Augmentation::ColorRamp { points } => ramp(points, v),
        };
        out.clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Augmentation::Scale { factor } => factor.is_finite() && *factor >= 0.0,
            Augmentation::Offset { delta } => delta.is_finite(),
            Augmentation::Invert => true,
            Augmentation::SoftThreshold { threshold, softness } => threshold.is_finite() && *softness > 0.0,
            Augmentation::HardThreshold { threshold } => threshold.is_finite(),
            Augmentation::ColorRamp { points } => {
                !points.is_empty()
                    && points.iter().flatten().all(|v| (0.0..=1.0).contains(v))
                    && points.windows(2).all(|w| w[0][0] <= w[1][0])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("invalid augmentation {self:?}")))
        }
    }
}

fn ramp(points: &[[f64; 2]], v: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if v <= first[0] {
        return first[1];
    }
    if v >= last[0] {
        return last[1];
    }
    for w in points.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if v <= x1 {
            if x1 <= x0 {
                return y1;
            }
            return y0 + (y1 - y0) * (v - x0) / (x1 - x0);
        }
    }
    last[1]
}

pub const MAX_CHAIN: usize = 3;

/// One sampled guess of how an image property maps onto a material property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecipe {
    pub property: Property,
    pub source: SourceChannel,
    #[serde(default)]
    pub chain: Vec<Augmentation>,
    /// Albedo only: hue rotation in degrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hue_rotation_deg: Option<f64>,
}

impl MapRecipe {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(format!("{} recipe: {msg}", self.property.name())));
        if self.chain.len() > MAX_CHAIN {
            return bad("augmentation chain longer than 3");
        }
        match (self.property, self.source) {
            (Property::Albedo, SourceChannel::Rgb) => {
                if !self.chain.is_empty() {
                    return bad("albedo takes no augmentation chain");
                }
            }
            (Property::Albedo, _) => return bad("albedo must use the RGB source"),
            (_, SourceChannel::Rgb) => return bad("RGB source is albedo-only"),
            (_, SourceChannel::Uniform(u)) if !(0.0..=1.0).contains(&u) => return bad("uniform value outside [0,1]"),
            _ => {}
        }
        if self.property != Property::Albedo && self.hue_rotation_deg.is_some() {
            return bad("hue rotation is albedo-only");
        }
        self.chain.iter().try_for_each(Augmentation::validate)
    }
}

/// Recipes for every property plus the normal-map strength: everything
/// needed to regenerate a material from its crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeSet {
    pub albedo: MapRecipe,
    pub roughness: MapRecipe,
    pub metallic: MapRecipe,
    pub height: MapRecipe,
    pub transmission: MapRecipe,
    pub normal_strength: f64,
}

impl RecipeSet {
    pub fn get(&self, p: Property) -> &MapRecipe {
        match p {
            Property::Albedo => &self.albedo,
            Property::Roughness => &self.roughness,
            Property::Metallic => &self.metallic,
            Property::Height => &self.height,
            Property::Transmission => &self.transmission,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in Property::ALL {
            let r = self.get(p);
            if r.property != p {
                return Err(Error::InvalidParam(format!(
                    "recipe for {} filed under {}",
                    r.property.name(),
                    p.name()
                )));
            }
            r.validate()?;
        }
        if !(self.normal_strength.is_finite() && self.normal_strength > 0.0) {
            return Err(Error::InvalidParam("normal_strength must be > 0".into()));
        }
        Ok(())
    }
}

/// Sampling probabilities and ranges for recipe generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub p_uniform: f64,
    pub p_augment: f64,
    pub p_hue_rotation: f64,
    pub p_per_property_mix: f64,
    pub strength_min: f64,
    pub strength_max: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            p_uniform: 0.2,
            p_augment: 0.25,
            p_hue_rotation: 0.1,
            p_per_property_mix: 0.5,
            strength_min: 0.5,
            strength_max: 8.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            self.p_uniform,
            self.p_augment,
            self.p_hue_rotation,
            self.p_per_property_mix,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParam("probabilities must be in [0, 1]".into()));
        }
        if !(self.strength_min > 0.0 && self.strength_min <= self.strength_max) {
            return Err(Error::InvalidParam("need 0 < strength_min <= strength_max".into()));
        }
        Ok(())
    }
}

pub fn sample_recipes(seed: u64, crop_id: &str) -> RecipeSet {
    sample_recipes_with(&SynthParams::default(), seed, crop_id)
}

/// Draws a full recipe set from the stream keyed by (seed, crop_id).
pub fn sample_recipes_with(p: &SynthParams, seed: u64, crop_id: &str) -> RecipeSet {
    let mut rng = seed::stream(seed, &["recipes", crop_id]);
    let hue = rng.random_bool(p.p_hue_rotation).then(|| rng.random_range(0.0..360.0));
    let albedo = MapRecipe {
        property: Property::Albedo,
        source: SourceChannel::Rgb,
        chain: Vec::new(),
        hue_rotation_deg: hue,
    };
    let mut scalar = |property| sample_scalar(p, &mut rng, property);
    let roughness = scalar(Property::Roughness);
    let metallic = scalar(Property::Metallic);
    let height = scalar(Property::Height);
    let transmission = scalar(Property::Transmission);
    let normal_strength = rng.random_range(p.strength_min..=p.strength_max);
    RecipeSet {
        albedo,
        roughness,
        metallic,
        height,
        transmission,
        normal_strength,
    }
}

fn sample_scalar<R: Rng>(p: &SynthParams, rng: &mut R, property: Property) -> MapRecipe {
    let source = if rng.random_bool(p.p_uniform) {
        SourceChannel::Uniform(rng.random::<f64>())
    } else {
        SourceChannel::IMAGE_CHANNELS[rng.random_range(0..SourceChannel::IMAGE_CHANNELS.len())]
    };
    let mut chain = Vec::new();
    if rng.random_bool(p.p_augment) {
        chain.push(Augmentation::Invert);
    }
    if rng.random_bool(p.p_augment) {
        chain.push(Augmentation::Scale {
            factor: rng.random_range(0.25..=2.5),
        });
    }
    if rng.random_bool(p.p_augment) {
        chain.push(Augmentation::Offset {
            delta: rng.random_range(-0.3..=0.3),
        });
    }
    if rng.random_bool(p.p_augment) {
        let tail = match rng.random_range(0..3) {
            0 => Augmentation::SoftThreshold {
                threshold: rng.random_range(0.2..=0.8),
                softness: rng.random_range(0.05..=0.2),
            },
            1 => Augmentation::HardThreshold {
                threshold: rng.random_range(0.2..=0.8),
            },
            _ => {
                let mut xs = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                xs.sort_by(f64::total_cmp);
                Augmentation::ColorRamp {
                    points: xs.iter().map(|&x| [x, rng.random::<f64>()]).collect(),
                }
            }
        };
        // the tail slot is dropped when the first three all fired
        if chain.len() < MAX_CHAIN {
            chain.push(tail);
        }
    }
    MapRecipe {
        property,
        source,
        chain,
        hue_rotation_deg: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmentation_examples() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(Augmentation::Invert.apply(0.3), 0.7));
        assert_eq!(Augmentation::Scale { factor: 2.0 }.apply(0.6), 1.0);
        assert_eq!(Augmentation::Offset { delta: -0.5 }.apply(0.2), 0.0);
        assert_eq!(Augmentation::HardThreshold { threshold: 0.5 }.apply(0.49), 0.0);
        assert_eq!(Augmentation::HardThreshold { threshold: 0.5 }.apply(0.5), 1.0);
        let soft = Augmentation::SoftThreshold {
            threshold: 0.5,
            softness: 0.1,
        };
        assert_eq!(soft.apply(0.39), 0.0);
        assert_eq!(soft.apply(0.61), 1.0);
        assert!(close(soft.apply(0.5), 0.5));
        let r = Augmentation::ColorRamp {
            points: vec![[0.2, 0.1], [0.5, 0.9], [0.8, 0.3]],
        };
        assert!(close(r.apply(0.0), 0.1));
        assert!(close(r.apply(0.35), 0.5));
        assert!(close(r.apply(0.65), 0.6));
        assert!(close(r.apply(1.0), 0.3));
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_recipes(42, "crop-a"), sample_recipes(42, "crop-a"));
        assert_ne!(sample_recipes(42, "crop-a"), sample_recipes(42, "crop-b"));
    }

    #[test]
    fn sampled_recipes_are_valid() {
        for i in 0..2000 {
            let set = sample_recipes(i, "x");
            set.validate().unwrap();
            assert_eq!(set.albedo.source, SourceChannel::Rgb);
            assert!((0.5..=8.0).contains(&set.normal_strength));
        }
    }

    #[test]
    fn uniform_fraction_matches_probability() {
        // binomial sd = sqrt(0.2 * 0.8 / 10000) = 0.004, 3 sd = 0.012
        let n = 10_000;
        let hits = (0..n)
            .filter(|i| {
                matches!(
                    sample_recipes(*i as u64, "crop").roughness.source,
                    SourceChannel::Uniform(_)
                )
            })
            .count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.2).abs() <= 0.012, "{frac}");
    }

    #[test]
    fn recipe_json_round_trip() {
        for i in 0..200 {
            let set = sample_recipes(i, "rt");
            let json = serde_json::to_string(&set).unwrap();
            let back: RecipeSet = serde_json::from_str(&json).unwrap();
            assert_eq!(back, set);
        }
    }

    #[test]
    fn invalid_recipes_rejected() {
        let bad_albedo = MapRecipe {
            property: Property::Albedo,
            source: SourceChannel::Uniform(0.5),
            chain: vec![],
            hue_rotation_deg: None,
        };
        assert!(bad_albedo.validate().is_err());
        let long = MapRecipe {
            property: Property::Height,
            source: SourceChannel::V,
            chain: vec![Augmentation::Invert; 4],
            hue_rotation_deg: None,
        };
        assert!(long.validate().is_err());
        let rgb_scalar = MapRecipe {
            property: Property::Metallic,
            source: SourceChannel::Rgb,
            chain: vec![],
            hue_rotation_deg: None,
        };
        assert!(rgb_scalar.validate().is_err());
    }
}
