use crate::error::{Error, Result};
use crate::pbr::{MapKind, PbrMaterial};
use crate::raster::{resize_bilinear, Raster};

pub const DEFAULT_TILE: usize = 128;

/// Row-major montage of `items`, each resampled to `tile` x `tile`. The sheet
/// has min(columns, n) columns; unused trailing tiles stay black.
pub fn contact_sheet(items: &[Raster], columns: usize, tile: usize) -> Result<Raster> {
    if items.is_empty() {
        return Err(Error::EmptyInput);
    }
    if columns == 0 || tile == 0 {
        return Err(Error::InvalidParam("columns and tile size must be >= 1".into()));
    }
    let cols = columns.min(items.len());
    let rows = items.len().div_ceil(cols);
    let (w, h) = (cols * tile, rows * tile);
    let mut data = vec![0.0f32; w * h * 3];
    for (i, item) in items.iter().enumerate() {
        let t = resize_bilinear(&item.to_rgb(), tile, tile);
        let (ox, oy) = ((i % cols) * tile, (i / cols) * tile);
        for y in 0..tile {
            let dst = ((oy + y) * w + ox) * 3;
            let src = y * tile * 3;
            data[dst..dst + tile * 3].copy_from_slice(&t.data()[src..src + tile * 3]);
        }
    }
    Raster::new(w, h, 3, data)
}

/// One row per material, one tile per map in [`MapKind::ALL`] order.
pub fn material_sheet(materials: &[PbrMaterial], tile: usize) -> Result<Raster> {
    if materials.is_empty() {
        return Err(Error::EmptyInput);
    }
    let items: Vec<Raster> = materials
        .iter()
        .flat_map(|m| MapKind::ALL.map(|k| m.map(k).clone()))
        .collect();
    contact_sheet(&items, MapKind::ALL.len(), tile)
}
