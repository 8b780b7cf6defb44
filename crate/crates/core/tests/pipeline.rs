mod common;

use std::collections::BTreeSet;
use std::path::Path;

use texmine::pbr::MapKind;
use texmine::pipeline::{
    read_material_json, regenerate_material, scan_corpus, stats, write_material, Manifest, PipelineConfig,
    MANIFEST_FILE,
};
use texmine::raster::load_raster;
use texmine::Error;

fn config(input: &Path, output: &Path) -> PipelineConfig {
    let mut c = PipelineConfig {
        input_dir: input.into(),
        output_dir: output.into(),
        seed: 9,
        jobs: 2,
        ..Default::default()
    };
    c.detect.threshold = 0.15;
    c
}

fn files_under(dir: &Path) -> BTreeSet<String> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.path().strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/"))
        .collect()
}

#[test]
fn empty_input_gives_empty_manifest() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("in")).unwrap();
    let m = scan_corpus(&config(&d.path().join("in"), &d.path().join("out"))).unwrap();
    assert_eq!((m.counts.images, m.counts.textures, m.counts.materials), (0, 0, 0));
    assert!(d.path().join("out").join(MANIFEST_FILE).is_file());
}

#[test]
fn missing_input_dir_is_reported() {
    let d = tempfile::tempdir().unwrap();
    let r = scan_corpus(&config(&d.path().join("nope"), &d.path().join("out")));
    assert!(matches!(r, Err(Error::InputDirMissing(_))));
}

#[test]
fn unwritable_output_is_reported() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("in")).unwrap();
    let blocker = d.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let r = scan_corpus(&config(&d.path().join("in"), &blocker.join("out")));
    assert!(matches!(r, Err(Error::OutputNotWritable { .. })), "{r:?}");
}

#[test]
fn constant_image_yields_nothing() {
    let d = tempfile::tempdir().unwrap();
    common::save(
        &common::constant_image(600, 600, [10, 200, 30]),
        &d.path().join("in/c.png"),
    );
    let m = scan_corpus(&config(&d.path().join("in"), &d.path().join("out"))).unwrap();
    assert_eq!((m.counts.images, m.counts.textures), (1, 0));
}

#[test]
fn corrupt_image_only_drops_its_own_contribution() {
    let d = tempfile::tempdir().unwrap();
    let clean = d.path().join("clean");
    common::save(
        &common::noise_image(common::QUADRANTS[0], 600, 500, 1),
        &clean.join("a.png"),
    );
    common::save(
        &common::noise_image(common::QUADRANTS[2], 500, 500, 2),
        &clean.join("z.png"),
    );
    let dirty = d.path().join("dirty");
    common::save(
        &common::noise_image(common::QUADRANTS[0], 600, 500, 1),
        &dirty.join("a.png"),
    );
    common::save(
        &common::noise_image(common::QUADRANTS[2], 500, 500, 2),
        &dirty.join("z.png"),
    );
    std::fs::write(dirty.join("m.png"), b"\x89PNG\r\n\x1a\ngarbage").unwrap();
    std::fs::write(dirty.join("n.jpg"), b"").unwrap();

    let a = scan_corpus(&config(&clean, &d.path().join("o1"))).unwrap();
    let b = scan_corpus(&config(&dirty, &d.path().join("o2"))).unwrap();
    assert_eq!(
        b.skipped.iter().map(|s| s.path.as_str()).collect::<Vec<_>>(),
        ["m.png", "n.jpg"]
    );
    assert_eq!(a.images, b.images);
    assert_eq!(a.textures, b.textures);
    assert_eq!(a.materials, b.materials);
    assert!(a.counts.textures > 0);
}

#[test]
fn manifest_references_exactly_the_files_on_disk() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("in");
    common::save(&common::quadrant_mosaic(1024, 4), &input.join("sub/mosaic.png"));
    common::save(
        &common::noise_image(common::QUADRANTS[1], 500, 500, 5),
        &input.join("b.jpg"),
    );
    let mut cfg = config(&input, &d.path().join("out"));
    cfg.mixes_per_material = 1;
    let m = scan_corpus(&cfg).unwrap();
    assert!(m.counts.textures >= 4);
    assert_eq!(m.counts.materials, 2 * m.counts.textures);

    let mut referenced: Vec<String> = m.referenced_files();
    referenced.push(MANIFEST_FILE.into());
    let unique: BTreeSet<String> = referenced.iter().cloned().collect();
    assert_eq!(unique.len(), referenced.len(), "a file is referenced twice");
    assert_eq!(unique, files_under(&cfg.output_dir));

    let ids: BTreeSet<_> = m.textures.iter().map(|t| &t.texture_id).collect();
    assert_eq!(ids.len(), m.textures.len());
    assert!(m.textures.iter().any(|t| t.texture_id.starts_with("sub__mosaic.png_")));

    let reloaded = Manifest::load(&cfg.output_dir).unwrap();
    assert_eq!(reloaded, m);
    let report = stats(&m);
    assert_eq!(
        report.crop_sizes.iter().map(|b| b.count).sum::<usize>(),
        m.counts.textures
    );
    assert!(m.textures.iter().all(|t| (240..=1000).contains(&t.rect.w)));
}

#[test]
fn material_files_roundtrip_and_regenerate_bit_exactly() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("in");
    common::save(
        &common::noise_image(common::QUADRANTS[3], 640, 480, 8),
        &input.join("n.png"),
    );
    let mut cfg = config(&input, &d.path().join("out"));
    cfg.mixes_per_material = 1;
    common::save(
        &common::noise_image(common::QUADRANTS[0], 480, 480, 6),
        &input.join("o.png"),
    );
    let m = scan_corpus(&cfg).unwrap();
    assert!(m.counts.materials >= 2);

    for e in &m.materials {
        let dir = cfg.output_dir.join("materials").join(&e.material_id);
        let names: BTreeSet<String> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|f| f.unwrap().file_name().into_string().unwrap())
            .collect();
        let mut want: BTreeSet<String> = MapKind::ALL.iter().map(|k| format!("{}.png", k.name())).collect();
        want.insert("material.json".into());
        assert_eq!(names, want);

        let side = read_material_json(&dir.join("material.json")).unwrap();
        assert_eq!(side.provenance, e.provenance);
        assert_eq!(side.seed, e.seed);
        assert_eq!(side.texture_id, e.texture_id);

        let height = image::open(dir.join("height.png")).unwrap();
        assert!(matches!(height, image::DynamicImage::ImageLuma16(_)));
        let albedo = image::open(dir.join("albedo.png")).unwrap();
        assert!(matches!(albedo, image::DynamicImage::ImageRgb8(_)));
        assert!(matches!(
            image::open(dir.join("roughness.png")).unwrap(),
            image::DynamicImage::ImageLuma8(_)
        ));
        assert!(matches!(
            image::open(dir.join("normal.png")).unwrap(),
            image::DynamicImage::ImageRgb8(_)
        ));

        // regenerate from material.json + crop and compare against the written PNGs
        let regen = regenerate_material(&cfg.output_dir, &m, &e.material_id).unwrap();
        let again = tempfile::tempdir().unwrap();
        write_material(&regen, again.path(), "").unwrap();
        for k in MapKind::ALL {
            let f = format!("{}.png", k.name());
            assert_eq!(
                std::fs::read(dir.join(&f)).unwrap(),
                std::fs::read(again.path().join(&e.material_id).join(&f)).unwrap(),
                "{} {f}",
                e.material_id
            );
            let r = load_raster(&dir.join(&f)).unwrap();
            assert_eq!((r.width(), r.height()), (regen.width(), regen.height_px()));
        }
    }
}
