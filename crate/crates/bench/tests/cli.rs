//! CLI behaviors: exit codes, checkpoint passthrough, render determinism.

use std::path::Path;
use std::process::Output;

fn silrrt(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_silrrt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn gen_tiny_data(out: &Path) {
    let status = silrrt(&[
        "gen-data",
        "--env",
        "2d",
        "--workspaces",
        "1",
        "--scenarios-per",
        "2",
        "--obstacles",
        "2",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
}

#[test]
fn missing_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    gen_tiny_data(&dir.path().join("d"));
    let out = silrrt(&[
        "evaluate",
        "--scenarios",
        dir.path().join("d/scenarios.json").to_str().unwrap(),
        "--planners",
        "silrrt",
        "--checkpoint",
        dir.path().join("nope.ckpt").to_str().unwrap(),
        "--out-csv",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn corrupt_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    gen_tiny_data(&dir.path().join("d"));
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"definitely not a checkpoint").unwrap();
    let out = silrrt(&[
        "evaluate",
        "--scenarios",
        dir.path().join("d/scenarios.json").to_str().unwrap(),
        "--planners",
        "silrrt",
        "--checkpoint",
        bad.to_str().unwrap(),
        "--out-csv",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    // --out points below a regular file: directory creation must fail
    let out = silrrt(&[
        "gen-data",
        "--env",
        "2d",
        "--workspaces",
        "1",
        "--scenarios-per",
        "1",
        "--obstacles",
        "1",
        "--seed",
        "1",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn unsupported_render_dimension_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("weird.json");
    std::fs::write(
        &scenario,
        r#"{"space":"2d","bounds":[[0,10],[0,10],[0,10],[0,10]],"obstacles":[],
            "agent":{"kind":"point_mass"},"start":[1,1],"goal":[8,8],
            "goal_radius":1.0,"seed":0}"#,
    )
    .unwrap();
    let out = silrrt(&[
        "render",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().join("o.svg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn unknown_planner_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    gen_tiny_data(&dir.path().join("d"));
    let out = silrrt(&[
        "evaluate",
        "--scenarios",
        dir.path().join("d/scenarios.json").to_str().unwrap(),
        "--planners",
        "teleport",
        "--out-csv",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn pretrain_zero_iters_is_checkpoint_passthrough() {
    let dir = tempfile::tempdir().unwrap();
    gen_tiny_data(&dir.path().join("d"));
    let first = dir.path().join("a.ckpt");
    let out = silrrt(&[
        "pretrain",
        "--data",
        dir.path().join("d/dataset.json").to_str().unwrap(),
        "--iters",
        "1",
        "--seed",
        "3",
        "--d-model",
        "8",
        "--latent-len",
        "4",
        "--n-heads",
        "2",
        "--encoder-layers",
        "1",
        "--decoder-layers",
        "1",
        "--point-cloud-size",
        "16",
        "--out-checkpoint",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let second = dir.path().join("b.ckpt");
    let out = silrrt(&[
        "pretrain",
        "--data",
        dir.path().join("d/dataset.json").to_str().unwrap(),
        "--iters",
        "0",
        "--seed",
        "9",
        "--checkpoint",
        first.to_str().unwrap(),
        "--out-checkpoint",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap(),
        "zero-iteration pretrain must pass the checkpoint through unchanged"
    );
}

#[test]
fn render_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    gen_tiny_data(&dir.path().join("d"));
    for name in ["x.svg", "y.svg"] {
        let out = silrrt(&[
            "render",
            "--scenario",
            dir.path().join("d/scenarios.json").to_str().unwrap(),
            "--index",
            "0",
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
    }
    assert_eq!(
        std::fs::read(dir.path().join("x.svg")).unwrap(),
        std::fs::read(dir.path().join("y.svg")).unwrap()
    );
}
