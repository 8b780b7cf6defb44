use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use texmine::pbr::{generate_material_with, mix_materials, sample_mix_spec_with, MapKind};
use texmine::pipeline::{
    contact_sheet, load_texture_crop, regenerate_material, scan_corpus, stats, write_material, Manifest,
    PipelineConfig, DEFAULT_TILE, MATERIALS_DIR,
};
use texmine::raster::{load_raster, Raster};
use texmine::{serve, Error, Result};

/// Mine uniform texture crops from photographs and turn them into PBR materials.
#[derive(Parser)]
#[command(name = "texmine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory of images, extract texture crops and generate materials.
    Extract(ExtractArgs),
    /// (Re)generate materials for extracted textures with a given seed.
    Material(MaterialArgs),
    /// Blend two existing materials into a new one.
    Mix(MixArgs),
    /// Write a contact sheet of the extracted textures or materials.
    Sheet(SheetArgs),
    /// Summarize a finished run.
    Stats(StatsArgs),
    /// Run the HTTP service used by the tuning UI.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// TOML config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "cell-size")]
    cell_size: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long = "min-cells")]
    min_cells: Option<usize>,
    #[arg(long = "max-cells")]
    max_cells: Option<usize>,
    #[arg(long = "flat-std")]
    flat_std: Option<f64>,
    #[arg(long = "overlap-iou")]
    overlap_iou: Option<f64>,
    #[arg(long)]
    resize: Option<usize>,
    #[arg(long = "min-crop-px")]
    min_crop_px: Option<usize>,
    #[arg(long = "max-crop-px")]
    max_crop_px: Option<usize>,
    /// Skip material generation.
    #[arg(long = "no-pbr")]
    no_pbr: bool,
    /// Mixed materials to derive per base material.
    #[arg(long)]
    mixes: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
}

/// Locates the output directory of an earlier `extract` run.
#[derive(Args)]
struct RunDir {
    /// Output directory of the run (defaults to the config's output_dir).
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunDir {
    fn resolve(&self) -> Result<PathBuf> {
        if let Some(d) = &self.dir {
            return Ok(d.clone());
        }
        Ok(match &self.config {
            Some(c) => PipelineConfig::load(c)?.output_dir,
            None => PipelineConfig::default().output_dir,
        })
    }
}

#[derive(Args)]
struct MaterialArgs {
    #[command(flatten)]
    run: RunDir,
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    texture: Option<String>,
    #[arg(long)]
    all: bool,
    /// Defaults to the seed recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MixArgs {
    #[command(flatten)]
    run: RunDir,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SheetArgs {
    #[command(flatten)]
    run: RunDir,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    columns: usize,
    #[arg(long, default_value_t = DEFAULT_TILE)]
    tile: usize,
    /// One row of maps per material instead of one tile per texture.
    #[arg(long)]
    materials: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    run: RunDir,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory with the built tuning UI, served at `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn extract(a: ExtractArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.input {
        cfg.input_dir = v;
    }
    if let Some(v) = a.out {
        cfg.output_dir = v;
    }
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.grid.cell_px = a.cell_size.unwrap_or(cfg.grid.cell_px);
    cfg.grid.bins = a.bins.unwrap_or(cfg.grid.bins);
    cfg.detect.threshold = a.threshold.unwrap_or(cfg.detect.threshold);
    cfg.detect.min_cells = a.min_cells.unwrap_or(cfg.detect.min_cells);
    cfg.detect.max_cells = a.max_cells.unwrap_or(cfg.detect.max_cells);
    cfg.detect.flat_std = a.flat_std.unwrap_or(cfg.detect.flat_std);
    cfg.detect.overlap_iou = a.overlap_iou.unwrap_or(cfg.detect.overlap_iou);
    cfg.resize_long_edge = a.resize.unwrap_or(cfg.resize_long_edge);
    cfg.min_crop_px = a.min_crop_px.unwrap_or(cfg.min_crop_px);
    cfg.max_crop_px = a.max_crop_px.unwrap_or(cfg.max_crop_px);
    cfg.mixes_per_material = a.mixes.unwrap_or(cfg.mixes_per_material);
    cfg.jobs = a.jobs.unwrap_or(cfg.jobs);
    if a.no_pbr {
        cfg.generate_pbr = false;
    }
    let m = scan_corpus(&cfg)?;
    println!(
        "{} images, {} textures, {} materials, {} skipped -> {}",
        m.counts.images,
        m.counts.textures,
        m.counts.materials,
        m.counts.skipped,
        cfg.output_dir.display()
    );
    Ok(())
}

/// Config of the run in `dir`, rebuilt from its manifest.
fn run_config(dir: &Path, m: &Manifest) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        output_dir: dir.to_path_buf(),
        ..Default::default()
    };
    cfg.apply_snapshot(&m.config);
    cfg
}

fn material(a: MaterialArgs) -> Result<()> {
    let dir = a.run.resolve()?;
    let mut m = Manifest::load(&dir)?;
    let cfg = run_config(&dir, &m);
    let seed = a.seed.unwrap_or(cfg.seed);
    let ids: Vec<String> = match &a.texture {
        Some(id) if m.texture(id).is_none() => return Err(Error::NotFound(format!("texture {id}"))),
        Some(id) => vec![id.clone()],
        None => m.textures.iter().map(|t| t.texture_id.clone()).collect(),
    };
    for id in ids {
        let t = m.texture(&id).expect("id taken from manifest");
        let crop = load_texture_crop(&dir, t)?;
        let mat = generate_material_with(&cfg.synth, &crop, seed);
        let entry = write_material(&mat, &dir.join(MATERIALS_DIR), MATERIALS_DIR)?;
        println!("{}", entry.material_id);
        m.upsert_material(entry);
    }
    m.recount();
    m.save(&dir)
}

fn mix(a: MixArgs) -> Result<()> {
    let dir = a.run.resolve()?;
    let mut m = Manifest::load(&dir)?;
    let cfg = run_config(&dir, &m);
    let ma = regenerate_material(&dir, &m, &a.a)?;
    let mb = regenerate_material(&dir, &m, &a.b)?;
    let spec = sample_mix_spec_with(&cfg.synth, a.seed.unwrap_or(cfg.seed), &format!("{}|{}", a.a, a.b));
    let mixed = mix_materials(&ma, &mb, &spec);
    let entry = write_material(&mixed, &dir.join(MATERIALS_DIR), MATERIALS_DIR)?;
    println!("{}", entry.material_id);
    m.upsert_material(entry);
    m.recount();
    m.save(&dir)
}

fn sheet(a: SheetArgs) -> Result<()> {
    let dir = a.run.resolve()?;
    let m = Manifest::load(&dir)?;
    let (items, columns): (Vec<Raster>, usize) = if a.materials {
        let mut items = Vec::new();
        for e in &m.materials {
            for kind in MapKind::ALL {
                items.push(load_raster(&dir.join(&e.maps[kind.name()]))?);
            }
        }
        (items, MapKind::ALL.len())
    } else {
        let items = m
            .textures
            .iter()
            .map(|t| load_raster(&dir.join(&t.file)))
            .collect::<Result<_>>()?;
        (items, a.columns)
    };
    let s = contact_sheet(&items, columns, a.tile)?;
    std::fs::write(&a.out, s.encode_png_rgb8()?)?;
    info!("wrote {}x{} sheet to {}", s.width(), s.height(), a.out.display());
    Ok(())
}

fn stats_cmd(a: StatsArgs) -> Result<()> {
    let r = stats(&Manifest::load(&a.run.resolve()?)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    } else {
        print!("{}", r.to_text());
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(v) = a.input {
        cfg.input_dir = v;
    }
    cfg.validate()?;
    if !cfg.input_dir.is_dir() {
        return Err(Error::InputDirMissing(cfg.input_dir));
    }
    serve::serve_tuning(cfg, a.port, a.ui)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Material(a) => material(a),
        Command::Mix(a) => mix(a),
        Command::Sheet(a) => sheet(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
