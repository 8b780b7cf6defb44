//! Cell grid over a feature stack: per-cell histograms and the Jensen-Shannon
//! distance between them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{FeatureStack, FEATURE_PLANES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub cell_px: usize,
    pub bins: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { cell_px: 40, bins: 32 }
    }
}

impl GridParams {
    pub const MIN_CELL_PX: usize = 8;
    pub const MIN_BINS: usize = 2;
    pub const MAX_BINS: usize = 256;

    pub fn validate(&self) -> Result<()> {
        if self.cell_px < Self::MIN_CELL_PX {
            return Err(Error::InvalidParam(format!("cell_px must be >= {}", Self::MIN_CELL_PX)));
        }
        if !(Self::MIN_BINS..=Self::MAX_BINS).contains(&self.bins) {
            return Err(Error::InvalidParam(format!(
                "bins must be in [{}, {}]",
                Self::MIN_BINS,
                Self::MAX_BINS
            )));
        }
        Ok(())
    }
}

/// Normalized histograms, one per feature channel, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistogram {
    bins: usize,
    mass: Vec<f64>,
}

impl CellHistogram {
    /// Builds a histogram from per-channel probability vectors. Each must be
    /// non-negative; they are renormalized to sum to 1.
    pub fn from_channels(channels: &[Vec<f64>]) -> Result<Self> {
        let bins = channels.first().map_or(0, Vec::len);
        if bins == 0 || channels.iter().any(|c| c.len() != bins) {
            return Err(Error::ShapeMismatch("channels must share a non-zero bin count".into()));
        }
        let mut mass = Vec::with_capacity(bins * channels.len());
        for c in channels {
            if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParam("histogram mass must be finite and >= 0".into()));
            }
            let total: f64 = c.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidParam("histogram channel has zero mass".into()));
            }
            mass.extend(c.iter().map(|v| v / total));
        }
        Ok(Self { bins, mass })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn num_channels(&self) -> usize {
        self.mass.len() / self.bins
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.mass[c * self.bins..(c + 1) * self.bins]
    }
}

/// Histograms for every complete cell of a grid, row-major by cell.
#[derive(Debug, Clone)]
pub struct GridStats {
    pub cells_w: usize,
    pub cells_h: usize,
    pub cell_px: usize,
    pub cells: Vec<CellHistogram>,
}

impl GridStats {
    pub fn cell(&self, cx: usize, cy: usize) -> &CellHistogram {
        &self.cells[cy * self.cells_w + cx]
    }
}

#[inline]
fn bucket(v: f32, bins: usize) -> usize {
    ((f64::from(v) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// Raw per-channel bucket counts for one cell. Each channel sums to `cell_px²`.
pub fn cell_counts(f: &FeatureStack, cx: usize, cy: usize, p: &GridParams) -> Vec<u32> {
    let mut counts = vec![0u32; FEATURE_PLANES * p.bins];
    let w = f.width();
    for c in 0..FEATURE_PLANES {
        let plane = f.plane(c);
        let hist = &mut counts[c * p.bins..(c + 1) * p.bins];
        for y in cy * p.cell_px..(cy + 1) * p.cell_px {
            let row = &plane[y * w + cx * p.cell_px..y * w + (cx + 1) * p.cell_px];
            for &v in row {
                hist[bucket(v, p.bins)] += 1;
            }
        }
    }
    counts
}

/// Splits the stack into `cell_px` squares (remainder strips discarded) and
/// histograms every feature channel of every cell.
pub fn build_grid_stats(f: &FeatureStack, p: &GridParams) -> Result<GridStats> {
    p.validate()?;
    if f.width() < p.cell_px || f.height() < p.cell_px {
        return Err(Error::ImageTooSmall {
            width: f.width(),
            height: f.height(),
            min: p.cell_px,
        });
    }
    let cells_w = f.width() / p.cell_px;
    let cells_h = f.height() / p.cell_px;
    let samples = (p.cell_px * p.cell_px) as f64;
    let cells = (0..cells_w * cells_h)
        .into_par_iter()
        .map(|i| {
            let counts = cell_counts(f, i % cells_w, i / cells_w, p);
            CellHistogram {
                bins: p.bins,
                mass: counts.iter().map(|&n| f64::from(n) / samples).collect(),
            }
        })
        .collect();
    Ok(GridStats {
        cells_w,
        cells_h,
        cell_px: p.cell_px,
        cells,
    })
}

/// Jensen-Shannon divergence in bits between two distributions over the same support.
fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = a + b;
        let term = |x: f64| if x > 0.0 { x * (2.0 * x / m).log2() } else { 0.0 };
        // summing the pair first keeps the result exactly symmetric in (p, q)
        acc += term(a) + term(b);
    }
    (acc * 0.5).clamp(0.0, 1.0)
}

/// Mean over feature channels of the per-channel Jensen-Shannon distance
/// (square root of the base-2 divergence). Always in [0,1].
pub fn js_distance(a: &CellHistogram, b: &CellHistogram) -> Result<f64> {
    if a.bins != b.bins || a.mass.len() != b.mass.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.num_channels(),
            a.bins,
            b.num_channels(),
            b.bins
        )));
    }
    Ok(js_distance_unchecked(a, b))
}

fn js_distance_unchecked(a: &CellHistogram, b: &CellHistogram) -> f64 {
    let channels = a.num_channels();
    let total: f64 = (0..channels)
        .map(|c| js_divergence(a.channel(c), b.channel(c)).sqrt())
        .sum();
    total / channels as f64
}

/// Memoized distances between every pair of cells whose coordinates differ by
/// less than `max_window` on both axes.
#[derive(Debug, Clone)]
pub struct PairwiseTable {
    cells_w: usize,
    cells_h: usize,
    max_window: usize,
    /// Per cell, a (max_window) x (2*max_window - 1) block of forward
    /// neighbours: dy in [0, max_window), dx in (-max_window, max_window).
    /// NaN marks pairs outside the grid or not stored.
    dist: Vec<f64>,
}

impl PairwiseTable {
    fn stride(&self) -> usize {
        self.max_window * (2 * self.max_window - 1)
    }

    fn slot(&self, cell: usize, dx: isize, dy: usize) -> usize {
        cell * self.stride() + dy * (2 * self.max_window - 1) + (dx + self.max_window as isize - 1) as usize
    }

    pub fn max_window(&self) -> usize {
        self.max_window
    }

    /// Distance between cells (ax, ay) and (bx, by), or `None` if the pair is out of range.
    pub fn get(&self, ax: usize, ay: usize, bx: usize, by: usize) -> Option<f64> {
        if ax >= self.cells_w || bx >= self.cells_w || ay >= self.cells_h || by >= self.cells_h {
            return None;
        }
        if (ax, ay) == (bx, by) {
            return Some(0.0);
        }
        let ((ox, oy), (tx, ty)) = if (ay, ax) < (by, bx) {
            ((ax, ay), (bx, by))
        } else {
            ((bx, by), (ax, ay))
        };
        let dx = tx as isize - ox as isize;
        let dy = ty - oy;
        if dy >= self.max_window || dx.unsigned_abs() >= self.max_window {
            return None;
        }
        let v = self.dist[self.slot(oy * self.cells_w + ox, dx, dy)];
        (!v.is_nan()).then_some(v)
    }

    /// Number of distinct stored pairs.
    pub fn len(&self) -> usize {
        self.dist.iter().filter(|v| !v.is_nan()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fills the pairwise table, one grid row per parallel task.
pub fn pairwise_distance_table(g: &GridStats, max_window: usize) -> PairwiseTable {
    let max_window = max_window.max(2);
    let mut table = PairwiseTable {
        cells_w: g.cells_w,
        cells_h: g.cells_h,
        max_window,
        dist: Vec::new(),
    };
    let stride = table.stride();
    let row_len = 2 * max_window - 1;
    let mw = max_window as isize;
    let mut dist = vec![f64::NAN; g.cells.len() * stride];
    dist.par_chunks_mut(stride * g.cells_w.max(1))
        .enumerate()
        .for_each(|(cy, row)| {
            for cx in 0..g.cells_w {
                let block = &mut row[cx * stride..(cx + 1) * stride];
                let a = g.cell(cx, cy);
                for dy in 0..max_window {
                    let by = cy + dy;
                    if by >= g.cells_h {
                        break;
                    }
                    for dx in -(mw - 1)..mw {
                        if dy == 0 && dx <= 0 {
                            continue;
                        }
                        let bx = cx as isize + dx;
                        if bx < 0 || bx >= g.cells_w as isize {
                            continue;
                        }
                        block[dy * row_len + (dx + mw - 1) as usize] =
                            js_distance_unchecked(a, g.cell(bx as usize, by));
                    }
                }
            }
        });
    table.dist = dist;
    table
}
