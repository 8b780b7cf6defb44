use std::fmt::Write as _;

use serde::Serialize;

use super::manifest::{Counts, Manifest};

/// Crop-width bucket edges: a crop of width w lands in bucket #{edges <= w}.
pub const SIZE_EDGES: [usize; 6] = [240, 400, 600, 800, 1000, 1001];
const DISTANCE_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeBucket {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageYield {
    pub path: String,
    pub textures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Equal-width buckets over [0, threshold].
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub counts: Counts,
    pub mixes: usize,
    pub crop_sizes: Vec<SizeBucket>,
    pub min_crop_px: Option<usize>,
    pub max_crop_px: Option<usize>,
    pub per_image: Vec<ImageYield>,
    pub distance: Option<DistanceSummary>,
}

pub fn stats(m: &Manifest) -> StatsReport {
    let labels = ["<240", "240-399", "400-599", "600-799", "800-999", "1000", ">1000"];
    let mut crop_sizes: Vec<SizeBucket> = labels
        .iter()
        .map(|l| SizeBucket {
            label: l.to_string(),
            count: 0,
        })
        .collect();
    for t in &m.textures {
        crop_sizes[SIZE_EDGES.iter().filter(|&&e| e <= t.rect.w).count()].count += 1;
    }

    let distance = (!m.textures.is_empty()).then(|| {
        let d: Vec<f64> = m.textures.iter().map(|t| t.max_pair_distance).collect();
        let threshold = m.config.detect.threshold;
        let mut histogram = vec![0usize; DISTANCE_BUCKETS];
        for &v in &d {
            let i = ((v / threshold) * DISTANCE_BUCKETS as f64).floor() as usize;
            histogram[i.min(DISTANCE_BUCKETS - 1)] += 1;
        }
        DistanceSummary {
            min: d.iter().copied().fold(f64::INFINITY, f64::min),
            mean: d.iter().sum::<f64>() / d.len() as f64,
            max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            histogram,
        }
    });

    StatsReport {
        counts: Counts {
            images: m.images.len(),
            skipped: m.skipped.len(),
            textures: m.textures.len(),
            materials: m.materials.len(),
        },
        mixes: m
            .materials
            .iter()
            .filter(|e| matches!(e.provenance, crate::pbr::Provenance::Mix { .. }))
            .count(),
        crop_sizes,
        min_crop_px: m.textures.iter().map(|t| t.rect.w).min(),
        max_crop_px: m.textures.iter().map(|t| t.rect.w).max(),
        per_image: m
            .images
            .iter()
            .map(|i| ImageYield {
                path: i.path.clone(),
                textures: i.textures,
            })
            .collect(),
        distance,
    }
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.counts;
        let _ = writeln!(s, "images:    {} ({} skipped)", c.images, c.skipped);
        let _ = writeln!(s, "textures:  {}", c.textures);
        let _ = writeln!(s, "materials: {} ({} mixes)", c.materials, self.mixes);
        if let (Some(lo), Some(hi)) = (self.min_crop_px, self.max_crop_px) {
            let _ = writeln!(s, "crop size: {lo}..{hi} px");
        }
        let _ = writeln!(s, "crop sizes:");
        for b in &self.crop_sizes {
            let _ = writeln!(s, "  {:>10}  {}", b.label, b.count);
        }
        if let Some(d) = &self.distance {
            let _ = writeln!(
                s,
                "max pair distance: min {:.4} mean {:.4} max {:.4}",
                d.min, d.mean, d.max
            );
            let _ = writeln!(s, "  histogram {:?}", d.histogram);
        }
        if !self.per_image.is_empty() {
            let _ = writeln!(s, "per image:");
            for y in &self.per_image {
                let _ = writeln!(s, "  {:4}  {}", y.textures, y.path);
            }
        }
        s
    }
}
