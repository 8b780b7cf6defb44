mod common;

use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use texmine::pipeline::{scan_corpus, PipelineConfig};
use texmine::serve::{router, DetectResponse, ImageInfo, RegionJson};

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Vec<u8>) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

fn config(input: &Path) -> PipelineConfig {
    PipelineConfig {
        input_dir: input.into(),
        ..Default::default()
    }
}

#[tokio::test]
async fn images_on_empty_dir() {
    let d = tempfile::tempdir().unwrap();
    let app = router(config(d.path()), None);
    let (s, body) = get(&app, "/api/images").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Vec<ImageInfo>>(&body).unwrap(), vec![]);
}

#[tokio::test]
async fn detect_matches_cli_and_exported_config_reproduces_it() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("in");
    common::save(&common::quadrant_mosaic(1024, 12), &input.join("set/mosaic.png"));
    common::save(
        &common::noise_image(common::QUADRANTS[2], 640, 400, 1),
        &input.join("wide.png"),
    );
    let app = router(config(&input), None);

    let (_, body) = get(&app, "/api/images").await;
    let images: Vec<ImageInfo> = serde_json::from_slice(&body).unwrap();
    assert_eq!(images.len(), 2);
    assert_eq!(images[0].id, "set__mosaic.png");
    assert_eq!((images[0].w, images[0].h), (1024, 1024));

    let params = json!({"cell_px": 40, "bins": 32, "threshold": 0.15, "min_cells": 6, "max_cells": 24,
                        "flat_std": 0.02, "overlap_iou": 0.3, "resize": 1600});
    let mut req = params.clone();
    req["image_id"] = json!("set__mosaic.png");
    let (s, body) = post(&app, "/api/detect", req).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let det: DetectResponse = serde_json::from_slice(&body).unwrap();
    assert!(det.regions.len() >= 4);
    assert!(det.timing_ms >= 0.0);

    let (s, toml) = post(&app, "/api/export_config", params.clone()).await;
    assert_eq!(s, StatusCode::OK);
    let mut cfg = PipelineConfig::from_toml_str(std::str::from_utf8(&toml).unwrap()).unwrap();
    assert_eq!(cfg.detect.threshold, 0.15);
    cfg.output_dir = d.path().join("out");
    cfg.generate_pbr = false;
    let m = scan_corpus(&cfg).unwrap();
    let cli: Vec<RegionJson> = m
        .textures
        .iter()
        .filter(|t| t.source_image == "set/mosaic.png")
        .map(|t| RegionJson {
            x: t.rect.x,
            y: t.rect.y,
            w: t.rect.w,
            h: t.rect.h,
            max_pair_distance: t.max_pair_distance,
        })
        .collect();
    assert_eq!(det.regions, cli);

    // same request served from the cache gives the same answer
    let mut again = params.clone();
    again["image_id"] = json!("set__mosaic.png");
    let (_, body) = post(&app, "/api/detect", again).await;
    assert_eq!(
        serde_json::from_slice::<DetectResponse>(&body).unwrap().regions,
        det.regions
    );
}

#[tokio::test]
async fn zero_threshold_finds_nothing_on_noise() {
    let d = tempfile::tempdir().unwrap();
    common::save(
        &common::noise_image(common::QUADRANTS[0], 600, 600, 4),
        &d.path().join("n.png"),
    );
    let app = router(config(d.path()), None);
    let (s, body) = post(&app, "/api/detect", json!({"image_id": "n.png", "threshold": 0.0})).await;
    assert_eq!(s, StatusCode::OK);
    assert!(serde_json::from_slice::<DetectResponse>(&body)
        .unwrap()
        .regions
        .is_empty());
    let (_, body) = post(&app, "/api/detect", json!({"image_id": "n.png"})).await;
    assert!(!serde_json::from_slice::<DetectResponse>(&body)
        .unwrap()
        .regions
        .is_empty());
}

#[tokio::test]
async fn images_overlay_crop_and_preview() {
    let d = tempfile::tempdir().unwrap();
    common::save(
        &common::noise_image(common::QUADRANTS[1], 900, 600, 4),
        &d.path().join("n.png"),
    );
    let app = router(config(d.path()), None);

    let (s, png) = get(&app, "/api/overlay/n.png?resize=450&cell_px=30").await;
    assert_eq!(s, StatusCode::OK);
    let overlay = image::load_from_memory(&png).unwrap();
    assert_eq!((overlay.width(), overlay.height()), (450, 300));

    let (_, body) = post(&app, "/api/detect", json!({"image_id": "n.png"})).await;
    let det: DetectResponse = serde_json::from_slice(&body).unwrap();
    let r = &det.regions[0];
    let (s, png) = get(&app, "/api/crop/n.png/0").await;
    assert_eq!(s, StatusCode::OK);
    let crop = image::load_from_memory(&png).unwrap();
    assert_eq!((crop.width() as usize, crop.height() as usize), (r.w, r.h));
    assert_eq!(get(&app, "/api/crop/n.png/999").await.0, StatusCode::NOT_FOUND);

    let (s, body) = post(
        &app,
        "/api/preview_pbr",
        json!({"image_id": "n.png", "region_index": 0, "seed": 3}),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v: Value = serde_json::from_slice(&body).unwrap();
    let maps = v["maps"].as_object().unwrap();
    assert_eq!(maps.len(), 6);
    for url in maps.values() {
        let (s, png) = get(&app, url.as_str().unwrap()).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(image::load_from_memory(&png).unwrap().width() as usize, r.w);
    }
}

#[tokio::test]
async fn bad_requests() {
    let d = tempfile::tempdir().unwrap();
    common::save(
        &common::noise_image(common::QUADRANTS[1], 300, 300, 4),
        &d.path().join("n.png"),
    );
    let app = router(config(d.path()), None);
    assert_eq!(
        post(&app, "/api/detect", json!({"image_id": "missing.png"})).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        post(&app, "/api/detect", json!({"image_id": "n.png", "min_cells": 1}))
            .await
            .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        post(&app, "/api/export_config", json!({"threshold": 2.0})).await.0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(get(&app, "/api/preview/none/albedo.png").await.0, StatusCode::NOT_FOUND);
    let (s, body) = get(&app, "/api/schema").await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["threshold"]["default"], 0.1);
}
