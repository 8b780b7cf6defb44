mod common;

use std::path::Path;
use std::process::{Command, Output};

use texmine::pipeline::Manifest;

fn texmine(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texmine"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&texmine(&["frobnicate"], d.path())), 1);
    assert_eq!(code(&texmine(&["extract", "--threshold", "abc"], d.path())), 1);
    assert_eq!(
        code(&texmine(&["material", "--dir", "x"], d.path())),
        1,
        "needs --texture or --all"
    );
    std::fs::create_dir(d.path().join("in")).unwrap();
    assert_eq!(
        code(&texmine(&["extract", "--input", "in", "--min-cells", "1"], d.path())),
        1
    );
    std::fs::write(d.path().join("bad.toml"), "no_such_key = 3\n").unwrap();
    assert_eq!(code(&texmine(&["extract", "--config", "bad.toml"], d.path())), 1);
    assert_eq!(code(&texmine(&["--help"], d.path())), 0);
}

#[test]
fn io_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&texmine(&["extract", "--input", "missing"], d.path())), 2);
    assert_eq!(code(&texmine(&["stats", "--dir", "missing"], d.path())), 2);
    assert_eq!(code(&texmine(&["extract", "--config", "missing.toml"], d.path())), 2);
}

#[test]
fn zero_yield_run_succeeds() {
    let d = tempfile::tempdir().unwrap();
    common::save(&common::constant_image(400, 400, [1, 2, 3]), &d.path().join("in/c.png"));
    let o = texmine(&["extract", "--input", "in", "--out", "out"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = texmine(&["stats", "--dir", "out"], d.path());
    assert_eq!(code(&s), 0);
    assert!(String::from_utf8_lossy(&s.stdout).contains("textures:  0"));
    // nothing to put on a sheet
    assert_eq!(
        code(&texmine(&["sheet", "--dir", "out", "--out", "s.png"], d.path())),
        1
    );
}

#[test]
fn full_workflow() {
    let d = tempfile::tempdir().unwrap();
    common::save(&common::quadrant_mosaic(1024, 2), &d.path().join("in/m.png"));
    std::fs::write(
        d.path().join("cfg.toml"),
        "input_dir = \"in\"\noutput_dir = \"out\"\nseed = 3\n\n[detect]\nthreshold = 0.15\n",
    )
    .unwrap();
    // flags override the file
    let o = texmine(
        &["extract", "--config", "cfg.toml", "--seed", "5", "--jobs", "2"],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    let m = Manifest::load(&out).unwrap();
    assert_eq!(m.config.seed, 5);
    assert_eq!(m.config.detect.threshold, 0.15);
    assert!(m.counts.textures >= 4);

    let tex = m.textures[0].texture_id.clone();
    let o = texmine(
        &["material", "--config", "cfg.toml", "--texture", &tex, "--seed", "77"],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let new_id = String::from_utf8_lossy(&o.stdout).trim().to_string();
    assert_eq!(new_id, format!("{tex}-{:016x}", 77));
    let m2 = Manifest::load(&out).unwrap();
    assert_eq!(m2.counts.materials, m.counts.materials + 1);

    let a = &m.materials[0].material_id;
    let b = &m.materials[1].material_id;
    let o = texmine(&["mix", "--dir", "out", "--a", a, "--b", b, "--seed", "1"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(Manifest::load(&out).unwrap().counts.materials, m.counts.materials + 2);
    assert_eq!(
        code(&texmine(&["mix", "--dir", "out", "--a", a, "--b", "nope"], d.path())),
        1
    );
    assert_eq!(
        code(&texmine(&["material", "--dir", "out", "--texture", "nope"], d.path())),
        1
    );

    let o = texmine(&["material", "--dir", "out", "--all", "--seed", "77"], d.path());
    assert_eq!(code(&o), 0);
    assert_eq!(
        Manifest::load(&out).unwrap().counts.materials,
        m.counts.materials + 1 + m.counts.textures
    );

    let o = texmine(
        &[
            "sheet",
            "--dir",
            "out",
            "--out",
            "sheet.png",
            "--columns",
            "3",
            "--tile",
            "16",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sheet = image::open(d.path().join("sheet.png")).unwrap();
    assert_eq!(sheet.width(), 48);
    assert_eq!(sheet.height() as usize, m.counts.textures.div_ceil(3) * 16);
    let o = texmine(
        &[
            "sheet",
            "--dir",
            "out",
            "--out",
            "mats.png",
            "--materials",
            "--tile",
            "8",
        ],
        d.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(image::open(d.path().join("mats.png")).unwrap().width(), 48);

    let o = texmine(&["stats", "--dir", "out", "--json"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["counts"]["textures"], m.counts.textures);
}

#[test]
fn serve_reports_busy_port() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("in")).unwrap();
    let held = std::net::TcpListener::bind("0.0.0.0:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let o = texmine(&["serve", "--input", "in", "--port", &port], d.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("in use"));
}
