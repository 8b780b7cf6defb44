use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;

use super::assets::{regenerate_material, write_material, MATERIALS_DIR, TEXTURES_DIR};
use super::config::{DetectionSettings, PipelineConfig};
use super::manifest::{GridInfo, ImageEntry, Manifest, MaterialEntry, SkippedImage, TextureEntry};
use crate::detect::{extract_crops, find_uniform_regions, suppress_overlaps, RegionCandidate, TextureCrop};
use crate::error::{Error, Result};
use crate::grid::build_grid_stats;
use crate::pbr::{generate_material_with, mix_materials, sample_mix_spec_with, PbrMaterial};
use crate::raster::{compute_features, load_raster, resize_longest_edge, Raster};
use crate::seed;

/// Detection outcome for one (already resized) image.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub width: usize,
    pub height: usize,
    pub cells_w: usize,
    pub cells_h: usize,
    /// Candidates surviving overlap suppression, in canonical order.
    pub regions: Vec<RegionCandidate>,
    /// Non-flat, size-bounded crops cut from `regions`, in the same order.
    pub crops: Vec<TextureCrop>,
}

/// Features -> grid -> regions -> suppression -> crops. Images too small for
/// a grid of `min_cells` yield an empty analysis rather than an error.
pub fn analyze_raster(r: &Raster, s: &DetectionSettings, source_id: &str) -> Result<Analysis> {
    s.grid.validate()?;
    s.detect.validate()?;
    let mut out = Analysis {
        width: r.width(),
        height: r.height(),
        cells_w: 0,
        cells_h: 0,
        regions: vec![],
        crops: vec![],
    };
    let features = match compute_features(r) {
        Ok(f) => f,
        Err(Error::ImageTooSmall { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    let grid = match build_grid_stats(&features, &s.grid) {
        Ok(g) => g,
        Err(Error::ImageTooSmall { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.cells_w = grid.cells_w;
    out.cells_h = grid.cells_h;
    let cands = match find_uniform_regions(&grid, &s.detect) {
        Ok(c) => c,
        Err(Error::GridTooSmall { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.regions = suppress_overlaps(&cands, &s.detect);
    out.crops = extract_crops(r, &grid, &out.regions, &s.detect, &s.bounds, source_id);
    Ok(out)
}

/// Loads, resizes and analyzes one image file.
pub fn analyze_file(path: &Path, s: &DetectionSettings, source_id: &str) -> Result<(Raster, Analysis)> {
    let raw = load_raster(path)?;
    let r = resize_longest_edge(&raw, s.resize_long_edge);
    let a = analyze_raster(&r, s, source_id)?;
    Ok((raw, a))
}

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
}

/// PNG/JPEG files under `dir`, sorted by path, as (relative `/`-joined id, absolute path).
pub fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::InputDirMissing(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        if entry.file_type().is_file() && is_supported_image(entry.path()) {
            let rel = entry.path().strip_prefix(dir).expect("walkdir yields children of dir");
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.push((id, entry.path().to_path_buf()));
        }
    }
    out.sort();
    Ok(out)
}

enum ImageOutcome {
    Done {
        image: ImageEntry,
        textures: Vec<TextureEntry>,
        materials: Vec<MaterialEntry>,
    },
    Skipped(SkippedImage),
}

fn process_image(cfg: &PipelineConfig, out: &Path, rel: &str, path: &Path) -> Result<ImageOutcome> {
    let settings = cfg.settings();
    let (raw, analysis) = match analyze_file(path, &settings, rel) {
        Ok(v) => v,
        Err(e @ (Error::CorruptImage(_) | Error::UnsupportedFormat)) => {
            warn!("skipping {rel}: {e}");
            return Ok(ImageOutcome::Skipped(SkippedImage {
                path: rel.to_string(),
                reason: e.to_string(),
            }));
        }
        Err(e) => return Err(e),
    };
    let mut textures = Vec::new();
    let mut materials = Vec::new();
    for crop in analysis.crops {
        // snap to 8 bits so the stored PNG reproduces the crop exactly
        let crop = TextureCrop {
            raster: crop.raster.quantize_8bit(),
            ..crop
        };
        let id = crop.texture_id();
        let file = format!("{TEXTURES_DIR}/{id}.png");
        std::fs::write(out.join(&file), crop.raster.encode_png_rgb8()?)?;
        let side = crop.rect.w / cfg.grid.cell_px;
        textures.push(TextureEntry {
            texture_id: id,
            source_image: rel.to_string(),
            rect: crop.rect,
            grid: GridInfo {
                cell_px: cfg.grid.cell_px,
                cells_w: analysis.cells_w,
                cells_h: analysis.cells_h,
                cell_x: crop.rect.x / cfg.grid.cell_px,
                cell_y: crop.rect.y / cfg.grid.cell_px,
                side,
            },
            max_pair_distance: crop.max_pair_distance,
            file,
        });
        if cfg.generate_pbr {
            let m = generate_material_with(&cfg.synth, &crop, cfg.seed);
            materials.push(write_material(&m, &out.join(MATERIALS_DIR), MATERIALS_DIR)?);
        }
    }
    let image = ImageEntry {
        path: rel.to_string(),
        width: raw.width(),
        height: raw.height(),
        analyzed_width: analysis.width,
        analyzed_height: analysis.height,
        textures: textures.len(),
    };
    Ok(ImageOutcome::Done {
        image,
        textures,
        materials,
    })
}

fn prepare_output(out: &Path) -> Result<()> {
    for sub in [TEXTURES_DIR, MATERIALS_DIR] {
        let p = out.join(sub);
        std::fs::create_dir_all(&p).map_err(|source| Error::OutputNotWritable {
            path: p.clone(),
            source,
        })?;
    }
    let probe = out.join(".texmine-write-probe");
    std::fs::write(&probe, b"").map_err(|source| Error::OutputNotWritable {
        path: out.to_path_buf(),
        source,
    })?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))
}

/// Runs detection (and optionally material synthesis) over every image under
/// `input_dir`, writes the assets and `manifest.json`, and returns the manifest.
pub fn scan_corpus(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let images = list_images(&cfg.input_dir)?;
    let out = cfg.output_dir.as_path();
    prepare_output(out)?;
    info!("scanning {} images from {}", images.len(), cfg.input_dir.display());

    let pool = thread_pool(cfg.jobs)?;
    let outcomes: Vec<Result<ImageOutcome>> = pool.install(|| {
        images
            .par_iter()
            .map(|(rel, path)| process_image(cfg, out, rel, path))
            .collect()
    });

    let mut manifest = Manifest::new(cfg.snapshot());
    for o in outcomes {
        match o? {
            ImageOutcome::Done {
                image,
                textures,
                materials,
            } => {
                manifest.images.push(image);
                manifest.textures.extend(textures);
                manifest.materials.extend(materials);
            }
            ImageOutcome::Skipped(s) => manifest.skipped.push(s),
        }
    }
    manifest.materials.sort_by(|a, b| a.material_id.cmp(&b.material_id));
    manifest.recount();
    manifest.check()?;

    if cfg.generate_pbr && cfg.mixes_per_material > 0 {
        let mixes = pool.install(|| plan_mixes(cfg, &manifest))?;
        for m in mixes {
            let entry = write_material(&m, &out.join(MATERIALS_DIR), MATERIALS_DIR)?;
            manifest.upsert_material(entry);
        }
    }
    manifest.recount();
    manifest.save(out)?;
    info!(
        "{} textures, {} materials, {} skipped images",
        manifest.counts.textures, manifest.counts.materials, manifest.counts.skipped
    );
    Ok(manifest)
}

/// Pairs every base material with `mixes_per_material` partners chosen from the seeded stream.
fn plan_mixes(cfg: &PipelineConfig, manifest: &Manifest) -> Result<Vec<PbrMaterial>> {
    let out = cfg.output_dir.as_path();
    let base: Vec<&str> = manifest.materials.iter().map(|m| m.material_id.as_str()).collect();
    if base.len() < 2 {
        return Ok(Vec::new());
    }
    let jobs: Vec<(usize, usize, usize)> = (0..base.len())
        .flat_map(|i| (0..cfg.mixes_per_material).map(move |k| (i, k)))
        .map(|(i, k)| {
            let mut rng = seed::stream(cfg.seed, &["mix-partner", base[i], &k.to_string()]);
            let mut j = rng.random_range(0..base.len() - 1);
            if j >= i {
                j += 1;
            }
            (i, j, k)
        })
        .collect();
    jobs.par_iter()
        .map(|&(i, j, k)| {
            let a = regenerate_material(out, manifest, base[i])?;
            let b = regenerate_material(out, manifest, base[j])?;
            let spec = sample_mix_spec_with(&cfg.synth, cfg.seed, &format!("{}|{}|{k}", base[i], base[j]));
            Ok(mix_materials(&a, &b, &spec))
        })
        .collect()
}
