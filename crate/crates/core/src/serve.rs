//! HTTP service behind the parameter-tuning UI.
//!
//! Detection requests re-run the same analysis path as `texmine extract`
//! with request-supplied parameters, so region lists match the CLI exactly.
//! Only decoded and resized images are cached between requests.

use std::collections::{BTreeMap, HashMap};
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::detect::{sanitize_id, CropBounds, DetectParams, TextureCrop};
use crate::error::{Error, Result};
use crate::grid::GridParams;
use crate::pbr::{generate_material_with, MapKind};
use crate::pipeline::{analyze_raster, encode_map, list_images, Analysis, PipelineConfig};
use crate::raster::{load_raster, resize_longest_edge, Raster};
use crate::seed::derive_seed;

const CACHE_LIMIT: usize = 16;
const PREVIEW_LIMIT: usize = 64;

/// Parameter overrides accepted by the detection endpoints. Missing fields
/// fall back to the server's configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    pub cell_px: Option<usize>,
    pub bins: Option<usize>,
    pub threshold: Option<f64>,
    pub min_cells: Option<usize>,
    pub max_cells: Option<usize>,
    pub flat_std: Option<f64>,
    pub overlap_iou: Option<f64>,
    pub resize: Option<usize>,
    pub min_crop_px: Option<usize>,
    pub max_crop_px: Option<usize>,
}

impl TuningParams {
    /// Overlays these parameters on `base`.
    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut c = base.clone();
        let d = &mut c.detect;
        d.threshold = self.threshold.unwrap_or(d.threshold);
        d.min_cells = self.min_cells.unwrap_or(d.min_cells);
        d.max_cells = self.max_cells.unwrap_or(d.max_cells);
        d.flat_std = self.flat_std.unwrap_or(d.flat_std);
        d.overlap_iou = self.overlap_iou.unwrap_or(d.overlap_iou);
        c.grid.cell_px = self.cell_px.unwrap_or(c.grid.cell_px);
        c.grid.bins = self.bins.unwrap_or(c.grid.bins);
        c.resize_long_edge = self.resize.unwrap_or(c.resize_long_edge);
        c.min_crop_px = self.min_crop_px.unwrap_or(c.min_crop_px);
        c.max_crop_px = self.max_crop_px.unwrap_or(c.max_crop_px);
        c
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct DetectRequest {
    pub image_id: String,
    #[serde(flatten)]
    pub params: TuningParams,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PreviewRequest {
    pub image_id: String,
    pub region_index: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub params: TuningParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub max_pair_distance: f64,
}

impl From<&TextureCrop> for RegionJson {
    fn from(c: &TextureCrop) -> Self {
        Self {
            x: c.rect.x,
            y: c.rect.y,
            w: c.rect.w,
            h: c.rect.h,
            max_pair_distance: c.max_pair_distance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectResponse {
    pub regions: Vec<RegionJson>,
    pub timing_ms: f64,
    /// Size of the analyzed (resized) image the region coordinates refer to.
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: String,
    pub path: String,
    pub w: usize,
    pub h: usize,
}

struct AppState {
    config: PipelineConfig,
    images: Mutex<HashMap<(PathBuf, usize), Arc<Raster>>>,
    previews: Mutex<HashMap<String, Vec<u8>>>,
}

struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::InvalidParam(_) | Error::GridTooSmall { .. } | Error::ImageTooSmall { .. } => {
                StatusCode::BAD_REQUEST
            }
            Error::CorruptImage(_) | Error::UnsupportedFormat => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

impl AppState {
    fn resolve(&self, image_id: &str) -> Result<PathBuf> {
        list_images(&self.config.input_dir)?
            .into_iter()
            .find(|(rel, _)| sanitize_id(rel) == image_id)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::NotFound(format!("image {image_id}")))
    }

    fn source_id(&self, path: &Path) -> String {
        let rel = path.strip_prefix(&self.config.input_dir).unwrap_or(path);
        rel.components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }

    fn raster(&self, path: &Path, resize: usize) -> Result<Arc<Raster>> {
        let key = (path.to_path_buf(), resize);
        if let Some(r) = self.images.lock().expect("cache lock").get(&key) {
            return Ok(r.clone());
        }
        let r = Arc::new(resize_longest_edge(&load_raster(path)?, resize));
        let mut cache = self.images.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, r.clone());
        Ok(r)
    }

    fn analyze(&self, image_id: &str, params: &TuningParams) -> Result<(Arc<Raster>, Analysis, PipelineConfig)> {
        let cfg = params.apply(&self.config);
        cfg.validate()?;
        let path = self.resolve(image_id)?;
        let raster = self.raster(&path, cfg.resize_long_edge)?;
        let a = analyze_raster(&raster, &cfg.settings(), &self.source_id(&path))?;
        Ok((raster, a, cfg))
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn list_images_handler(State(st): State<Arc<AppState>>) -> ApiResult<Json<Vec<ImageInfo>>> {
    blocking(move || {
        let mut out = Vec::new();
        for (rel, path) in list_images(&st.config.input_dir)? {
            if let Ok((w, h)) = image::image_dimensions(&path) {
                out.push(ImageInfo {
                    id: sanitize_id(&rel),
                    path: rel,
                    w: w as usize,
                    h: h as usize,
                });
            }
        }
        Ok(Json(out))
    })
    .await
}

async fn detect_handler(
    State(st): State<Arc<AppState>>,
    Json(req): Json<DetectRequest>,
) -> ApiResult<Json<DetectResponse>> {
    blocking(move || {
        let start = Instant::now();
        let (_, a, _) = st.analyze(&req.image_id, &req.params)?;
        Ok(Json(DetectResponse {
            regions: a.crops.iter().map(RegionJson::from).collect(),
            timing_ms: start.elapsed().as_secs_f64() * 1000.0,
            width: a.width,
            height: a.height,
        }))
    })
    .await
}

/// Draws a 2px outline of each rectangle onto an RGB copy of `r`.
pub fn draw_overlay(r: &Raster, rects: &[RegionJson]) -> Raster {
    let (w, h) = (r.width(), r.height());
    let mut data = r.to_rgb().into_data();
    let mut paint = |x: usize, y: usize| {
        if x < w && y < h {
            data[(y * w + x) * 3..(y * w + x) * 3 + 3].copy_from_slice(&[1.0, 0.1, 0.1]);
        }
    };
    for rect in rects {
        for t in 0..2 {
            for x in rect.x..rect.x + rect.w {
                paint(x, rect.y + t);
                paint(x, (rect.y + rect.h).saturating_sub(1 + t));
            }
            for y in rect.y..rect.y + rect.h {
                paint(rect.x + t, y);
                paint((rect.x + rect.w).saturating_sub(1 + t), y);
            }
        }
    }
    Raster::new(w, h, 3, data).expect("overlay keeps raster shape")
}

async fn overlay_handler(
    State(st): State<Arc<AppState>>,
    UrlPath(image_id): UrlPath<String>,
    Query(params): Query<TuningParams>,
) -> ApiResult<Response> {
    blocking(move || {
        let (raster, a, _) = st.analyze(&image_id, &params)?;
        let rects: Vec<RegionJson> = a.crops.iter().map(RegionJson::from).collect();
        Ok(png(draw_overlay(&raster, &rects).encode_png_rgb8()?))
    })
    .await
}

async fn crop_handler(
    State(st): State<Arc<AppState>>,
    UrlPath((image_id, index)): UrlPath<(String, usize)>,
    Query(params): Query<TuningParams>,
) -> ApiResult<Response> {
    blocking(move || {
        let (_, a, _) = st.analyze(&image_id, &params)?;
        let crop = a
            .crops
            .get(index)
            .ok_or_else(|| Error::NotFound(format!("region {index}")))?;
        Ok(png(crop.raster.encode_png_rgb8()?))
    })
    .await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PreviewResponse {
    pub maps: BTreeMap<String, String>,
}

async fn preview_handler(
    State(st): State<Arc<AppState>>,
    Json(req): Json<PreviewRequest>,
) -> ApiResult<Json<PreviewResponse>> {
    blocking(move || {
        let (_, a, cfg) = st.analyze(&req.image_id, &req.params)?;
        let crop = a
            .crops
            .get(req.region_index)
            .ok_or_else(|| Error::NotFound(format!("region {}", req.region_index)))?;
        let crop = TextureCrop {
            raster: crop.raster.quantize_8bit(),
            ..crop.clone()
        };
        let m = generate_material_with(&cfg.synth, &crop, req.seed);
        let params_json = serde_json::to_string(&req.params).expect("params serialize");
        let key = format!(
            "{:016x}",
            derive_seed(req.seed, &[&req.image_id, &params_json, &req.region_index.to_string()])
        );
        let mut maps = BTreeMap::new();
        let mut encoded = Vec::new();
        for kind in MapKind::ALL {
            encoded.push((format!("{key}/{}.png", kind.name()), encode_map(kind, m.map(kind))?));
            maps.insert(
                kind.name().to_string(),
                format!("/api/preview/{key}/{}.png", kind.name()),
            );
        }
        let mut store = st.previews.lock().expect("preview lock");
        if store.len() + encoded.len() > PREVIEW_LIMIT * MapKind::ALL.len() {
            store.clear();
        }
        store.extend(encoded);
        Ok(Json(PreviewResponse { maps }))
    })
    .await
}

async fn preview_file_handler(
    State(st): State<Arc<AppState>>,
    UrlPath((key, file)): UrlPath<(String, String)>,
) -> ApiResult<Response> {
    let store = st.previews.lock().expect("preview lock");
    store
        .get(&format!("{key}/{file}"))
        .map(|b| png(b.clone()))
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no preview {key}/{file}")))
}

async fn export_config_handler(
    State(st): State<Arc<AppState>>,
    body: Option<Json<TuningParams>>,
) -> ApiResult<Response> {
    let params = body.map(|Json(p)| p).unwrap_or_default();
    let cfg = params.apply(&st.config);
    cfg.validate()?;
    Ok(([(header::CONTENT_TYPE, "application/toml")], cfg.to_toml()).into_response())
}

#[derive(Debug, Serialize)]
struct Bound<T> {
    min: T,
    max: T,
    default: T,
}

async fn schema_handler(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let g = st.config.grid;
    let d: DetectParams = st.config.detect;
    let b: CropBounds = st.config.bounds();
    Json(serde_json::json!({
        "cell_px": Bound { min: GridParams::MIN_CELL_PX, max: 512, default: g.cell_px },
        "bins": Bound { min: GridParams::MIN_BINS, max: GridParams::MAX_BINS, default: g.bins },
        "threshold": Bound { min: 0.0, max: 1.0, default: d.threshold },
        "min_cells": Bound { min: 2, max: 64, default: d.min_cells },
        "max_cells": Bound { min: 2, max: 64, default: d.max_cells },
        "flat_std": Bound { min: 0.0, max: 0.5, default: d.flat_std },
        "overlap_iou": Bound { min: 0.0, max: 1.0, default: d.overlap_iou },
        "resize": Bound { min: 1, max: 8192, default: st.config.resize_long_edge },
        "min_crop_px": Bound { min: 1, max: 8192, default: b.min_px },
        "max_crop_px": Bound { min: 1, max: 8192, default: b.max_px },
    }))
}

/// Builds the API router. Static UI files are served from `ui_dir` when given.
pub fn router(config: PipelineConfig, ui_dir: Option<&Path>) -> Router {
    let state = Arc::new(AppState {
        config,
        images: Mutex::default(),
        previews: Mutex::default(),
    });
    let api = Router::new()
        .route("/api/images", get(list_images_handler))
        .route("/api/detect", post(detect_handler))
        .route("/api/overlay/{image_id}", get(overlay_handler))
        .route("/api/crop/{image_id}/{region_index}", get(crop_handler))
        .route("/api/preview_pbr", post(preview_handler))
        .route("/api/preview/{key}/{file}", get(preview_file_handler))
        .route("/api/export_config", post(export_config_handler))
        .route("/api/schema", get(schema_handler))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `port` on all interfaces, failing fast with [`Error::PortInUse`].
pub fn bind(port: u16) -> Result<TcpListener> {
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    TcpListener::bind(addr).map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => Error::PortInUse(port),
        _ => Error::Io(e),
    })
}

/// Serves the tuning API until the process is stopped.
pub fn serve_tuning(config: PipelineConfig, port: u16, ui_dir: Option<PathBuf>) -> Result<()> {
    let listener = bind(port)?;
    listener.set_nonblocking(true)?;
    let app = router(config, ui_dir.as_deref());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        log::info!("tuning service on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await
    })?;
    Ok(())
}
