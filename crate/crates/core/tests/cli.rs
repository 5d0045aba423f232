use std::path::Path;
use std::process::Command;

use lexstereo::io::{read_pfm, write_color_f64, write_pfm};
use lexstereo::synthetic::three_plane_scene;
use lexstereo::View;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexstereo"))
}

fn write_inputs(dir: &Path) {
    let scene = three_plane_scene(40, 30, 1).render().unwrap();
    write_color_f64(&scene.left, &dir.join("l.png")).unwrap();
    write_color_f64(&scene.right, &dir.join("r.png")).unwrap();
    write_pfm(&scene.gt_disparity(View::Left), &dir.join("gt.pfm")).unwrap();
    std::fs::write(
        dir.join("fast.cfg"),
        "window_radius = 4\ncells = 4 8\nk_prop = 1 1\nk_rand = 3 0\nouter_iterations = 2\nmedian_radius = 3\n",
    )
    .unwrap();
}

#[test]
fn print_config_round_trips() {
    let out = bin().arg("--print-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cells = 5 15 25"));
    let mut s = lexstereo::config::Settings::default();
    s.apply_text(&text).unwrap();
    assert_eq!(s, lexstereo::config::Settings::default());
}

#[test]
fn missing_left_image_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let missing = dir.path().join("missing_left.png");
    let out = bin()
        .args(["--left", missing.to_str().unwrap()])
        .args(["--right", dir.path().join("r.png").to_str().unwrap()])
        .args(["--ndisp", "25", "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_left.png"));
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "lambda = 1\nwindow = 3\n").unwrap();
    let out = bin()
        .args(["--print-config", "--config", dir.path().join("bad.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn full_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let run = |out: &str, workers: &str| {
        let status = bin()
            .args(["--left", &p("l.png"), "--right", &p("r.png"), "--ndisp", "25"])
            .args(["--gt", &p("gt.pfm"), "--config", &p("fast.cfg"), "--ransac"])
            .args(["--seed", "5", "--workers", workers, "--out", &p(out)])
            .status()
            .unwrap();
        assert!(status.success());
    };
    run("a", "1");
    run("b", "2");
    for f in ["disp_left.pfm", "disp_right.pfm"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let d = read_pfm(&dir.path().join("a/disp_left.pfm")).unwrap();
    assert_eq!((d.width(), d.height()), (40, 30));
    let metrics = std::fs::read_to_string(dir.path().join("a/metrics.txt")).unwrap();
    assert!(metrics.contains("bad0.5_nonocc="));
}
