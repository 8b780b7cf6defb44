//! Uniform-texture region search over a cell grid.
//!
//! A square window of cells is a texture candidate when every pair of cells
//! inside it is within `threshold` Jensen-Shannon distance (a clique in the
//! "similar cells" graph). For each top-left cell the largest qualifying side
//! is kept; overlapping candidates are then greedily suppressed, flat crops
//! are rejected and the survivors are cut out of the source raster.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{pairwise_distance_table, GridStats, PairwiseTable};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectParams {
    pub threshold: f64,
    pub min_cells: usize,
    pub max_cells: usize,
    pub flat_std: f64,
    pub overlap_iou: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            threshold: 0.10,
            min_cells: 6,
            max_cells: 24,
            flat_std: 0.02,
            overlap_iou: 0.30,
        }
    }
}

impl DetectParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParam("threshold must be in [0, 1]".into()));
        }
        if self.min_cells < 2 || self.min_cells > self.max_cells {
            return Err(Error::InvalidParam("need 2 <= min_cells <= max_cells".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_iou) {
            return Err(Error::InvalidParam("overlap_iou must be in [0, 1]".into()));
        }
        if self.flat_std.is_nan() || self.flat_std < 0.0 {
            return Err(Error::InvalidParam("flat_std must be >= 0".into()));
        }
        Ok(())
    }
}

/// Pixel-size bounds on emitted crops (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropBounds {
    pub min_px: usize,
    pub max_px: usize,
}

impl Default for CropBounds {
    fn default() -> Self {
        Self {
            min_px: 240,
            max_px: 1000,
        }
    }
}

impl CropBounds {
    pub fn contains(&self, px: usize) -> bool {
        (self.min_px..=self.max_px).contains(&px)
    }
}

/// Square window of `side` cells whose top-left cell is (cell_x, cell_y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCandidate {
    pub cell_x: usize,
    pub cell_y: usize,
    pub side: usize,
    pub max_pair_distance: f64,
}

impl RegionCandidate {
    pub fn iou(&self, other: &RegionCandidate) -> f64 {
        let ix =
            (self.cell_x + self.side).min(other.cell_x + other.side) as isize - self.cell_x.max(other.cell_x) as isize;
        let iy =
            (self.cell_y + self.side).min(other.cell_y + other.side) as isize - self.cell_y.max(other.cell_y) as isize;
        let inter = (ix.max(0) * iy.max(0)) as f64;
        let union = (self.side * self.side + other.side * other.side) as f64 - inter;
        inter / union
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

#[derive(Debug, Clone)]
pub struct TextureCrop {
    pub source_id: String,
    pub rect: PixelRect,
    pub raster: Raster,
    pub max_pair_distance: f64,
}

impl TextureCrop {
    /// Stable identifier derived from the source id and the crop rectangle.
    pub fn texture_id(&self) -> String {
        format!(
            "{}_x{}_y{}_s{}",
            sanitize_id(&self.source_id),
            self.rect.x,
            self.rect.y,
            self.rect.w
        )
    }
}

/// Maps an arbitrary path-like id onto `[A-Za-z0-9._-]`, turning separators into `__`.
pub fn sanitize_id(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '/' | '\\' => out.push_str("__"),
            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' => out.push(c),
            _ => out.push('-'),
        }
    }
    out
}

/// Largest qualifying window anchored at (x, y), if any.
fn best_window_at(t: &PairwiseTable, g: &GridStats, x: usize, y: usize, p: &DetectParams) -> Option<RegionCandidate> {
    let limit = p.max_cells.min(g.cells_w - x).min(g.cells_h - y);
    if limit < p.min_cells {
        return None;
    }
    let dist = |ax, ay, bx, by| t.get(ax, ay, bx, by).expect("pair inside max_cells window");
    let mut worst = 0.0f64;
    let mut best = None;
    for s in 2..=limit {
        // cells added when growing from side s-1 to s: new right column and new bottom row
        let (nx, ny) = (x + s - 1, y + s - 1);
        let added = (y..=ny).map(|cy| (nx, cy)).chain((x..nx).map(|cx| (cx, ny)));
        for (ax, ay) in added {
            for by in y..=ny {
                for bx in x..=nx {
                    worst = worst.max(dist(ax, ay, bx, by));
                }
            }
        }
        if worst > p.threshold {
            break;
        }
        if s >= p.min_cells {
            best = Some(RegionCandidate {
                cell_x: x,
                cell_y: y,
                side: s,
                max_pair_distance: worst,
            });
        }
    }
    best
}

/// Canonical candidate order: side descending, distance ascending, then (y, x).
pub fn sort_candidates(c: &mut [RegionCandidate]) {
    c.sort_by(|a, b| {
        b.side
            .cmp(&a.side)
            .then(a.max_pair_distance.total_cmp(&b.max_pair_distance))
            .then((a.cell_y, a.cell_x).cmp(&(b.cell_y, b.cell_x)))
    });
}

/// For every top-left cell, the largest square window (side in
/// `[min_cells, max_cells]`) in which all cell pairs are within `threshold`.
pub fn find_uniform_regions(g: &GridStats, p: &DetectParams) -> Result<Vec<RegionCandidate>> {
    p.validate()?;
    if g.cells_w < p.min_cells || g.cells_h < p.min_cells {
        return Err(Error::GridTooSmall {
            cells_w: g.cells_w,
            cells_h: g.cells_h,
            min: p.min_cells,
        });
    }
    let table = pairwise_distance_table(g, p.max_cells);
    find_uniform_regions_with(&table, g, p)
}

/// Same as [`find_uniform_regions`] but reuses a precomputed table (its window must cover `max_cells`).
pub fn find_uniform_regions_with(t: &PairwiseTable, g: &GridStats, p: &DetectParams) -> Result<Vec<RegionCandidate>> {
    if t.max_window() < p.max_cells {
        return Err(Error::InvalidParam(
            "pairwise table window smaller than max_cells".into(),
        ));
    }
    let mut out: Vec<RegionCandidate> = (0..g.cells_w * g.cells_h)
        .into_par_iter()
        .filter_map(|i| best_window_at(t, g, i % g.cells_w, i / g.cells_w, p))
        .collect();
    sort_candidates(&mut out);
    Ok(out)
}

/// Expands per-position maxima into every accepted (x, y, side) window.
/// Windows sharing a top-left cell are nested, so all sides from `min_cells`
/// up to the reported one qualify.
pub fn accepted_windows(cands: &[RegionCandidate], min_cells: usize) -> Vec<(usize, usize, usize)> {
    let mut v: Vec<_> = cands
        .iter()
        .flat_map(|c| (min_cells..=c.side).map(move |s| (c.cell_x, c.cell_y, s)))
        .collect();
    v.sort_unstable();
    v
}

/// Greedy non-maximum suppression in the given order.
pub fn suppress_overlaps(cands: &[RegionCandidate], p: &DetectParams) -> Vec<RegionCandidate> {
    let mut kept: Vec<RegionCandidate> = Vec::new();
    for c in cands {
        if kept.iter().all(|k| k.iou(c) <= p.overlap_iou) {
            kept.push(*c);
        }
    }
    kept
}

/// Mean over R, G, B of each channel's population standard deviation.
pub fn color_std(r: &Raster) -> f64 {
    let n = (r.width() * r.height()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ch = r.channels();
    let mut total = 0.0;
    for c in 0..ch {
        let vals = r.data().iter().skip(c).step_by(ch).map(|&v| f64::from(v));
        let mean = vals.clone().sum::<f64>() / n;
        let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        total += var.sqrt();
    }
    total / ch as f64
}

pub fn is_flat(crop: &Raster, p: &DetectParams) -> bool {
    color_std(crop) < p.flat_std
}

/// Cuts candidate windows out of `source`, dropping flat crops and crops outside `bounds`.
pub fn extract_crops(
    source: &Raster,
    g: &GridStats,
    regions: &[RegionCandidate],
    p: &DetectParams,
    bounds: &CropBounds,
    source_id: &str,
) -> Vec<TextureCrop> {
    regions
        .iter()
        .filter_map(|reg| {
            let px = reg.side * g.cell_px;
            let rect = PixelRect {
                x: reg.cell_x * g.cell_px,
                y: reg.cell_y * g.cell_px,
                w: px,
                h: px,
            };
            if !bounds.contains(px) || rect.x + px > source.width() || rect.y + px > source.height() {
                return None;
            }
            let raster = source.crop(rect.x, rect.y, rect.w, rect.h);
            if is_flat(&raster, p) {
                return None;
            }
            Some(TextureCrop {
                source_id: source_id.to_string(),
                rect,
                raster,
                max_pair_distance: reg.max_pair_distance,
            })
        })
        .collect()
}
