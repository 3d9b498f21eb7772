//! End-to-end runs of the `lumafuse` binary on a temp workspace.

use std::path::Path;
use std::process::{Command, Output};

fn lumafuse(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lumafuse"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dataset_synth_fuse_merge_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Small dataset of two scenes.
    let out = lumafuse(
        &[
            "dataset", "gen", "--scenes", "2", "--seed", "7", "--width", "64", "--height", "64",
            "--out", "data",
        ],
        root,
    );
    assert_ok(&out);
    assert!(root.join("data/scene_00/z1.png").exists());
    assert!(root.join("data/scene_01/radiance.pfm").exists());

    // Synthesize both exposures from the mid capture.
    let out = lumafuse(
        &[
            "synth",
            "--input",
            "data/scene_00/z1.png",
            "--crf",
            "gamma:2.2",
            "--dt1",
            "1",
            "--ratio",
            "4",
            "--mode",
            "verbatim",
            "--out-dark",
            "z0.png",
            "--out-bright",
            "z2.png",
            "--dump-gamma-map",
            "gamma.pfm",
        ],
        root,
    );
    assert_ok(&out);

    // Masks.
    let out = lumafuse(
        &[
            "masks",
            "--input",
            "data/scene_00/z1.png",
            "--out-m0",
            "m0.png",
            "--out-m2",
            "m2.png",
        ],
        root,
    );
    assert_ok(&out);

    // Fuse the triplet.
    let out = lumafuse(
        &[
            "fuse",
            "--inputs",
            "z0.png",
            "data/scene_00/z1.png",
            "z2.png",
            "--out",
            "fused.png",
            "--levels-extra",
            "1",
        ],
        root,
    );
    assert_ok(&out);

    // Merge to radiance.
    let out = lumafuse(
        &[
            "merge",
            "--inputs",
            "z0.png",
            "data/scene_00/z1.png",
            "z2.png",
            "--times",
            "0.25",
            "1",
            "4",
            "--crf",
            "gamma:2.2",
            "--out",
            "merged.pfm",
        ],
        root,
    );
    assert_ok(&out);
    assert!(lumafuse::pfm::read(root.join("merged.pfm")).is_ok());
    assert!(lumafuse::pfm::read(root.join("gamma.pfm")).is_ok());

    // MEF-SSIM of the fused image against the ground-truth stack.
    let out = lumafuse(
        &[
            "metrics",
            "--test",
            "fused.png",
            "--refs",
            "data/scene_00/zt0.png",
            "data/scene_00/z1.png",
            "data/scene_00/zt2.png",
            "--metric",
            "mefssim",
            "--json",
        ],
        root,
    );
    assert_ok(&out);
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("json output parses");
    let score = parsed["mefssim"].as_f64().unwrap();
    assert!(score > 0.8 && score <= 1.0, "mefssim {score}");

    // Pairwise metric with multiple references reports one value each.
    let out = lumafuse(
        &[
            "metrics",
            "--test",
            "fused.png",
            "--refs",
            "data/scene_00/z1.png",
            "data/scene_00/zt2.png",
            "--metric",
            "psnr",
            "--json",
        ],
        root,
    );
    assert_ok(&out);
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.as_object().unwrap().len(), 2);
}

#[test]
fn synth_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&lumafuse(
        &[
            "dataset", "gen", "--scenes", "1", "--seed", "3", "--width", "48", "--height", "48",
            "--out", "data",
        ],
        root,
    ));
    for name in ["a", "b"] {
        assert_ok(&lumafuse(
            &[
                "synth",
                "--input",
                "data/scene_00/z1.png",
                "--crf",
                "gamma:2.2",
                "--out-dark",
                &format!("{name}_dark.png"),
                "--out-bright",
                &format!("{name}_bright.png"),
            ],
            root,
        ));
    }
    let a = std::fs::read(root.join("a_dark.png")).unwrap();
    let b = std::fs::read(root.join("b_dark.png")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn restore_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    assert_ok(&lumafuse(
        &[
            "dataset", "gen", "--scenes", "1", "--seed", "5", "--width", "64", "--height", "64",
            "--out", "data",
        ],
        root,
    ));
    let out = lumafuse(
        &[
            "restore",
            "--input",
            "data/scene_00/z1.png",
            "--crf",
            "gamma:2.2",
            "--refiner",
            "identity",
            "--out-dir",
            "restored",
            "--hdr",
        ],
        root,
    );
    assert_ok(&out);
    for name in ["z0.png", "z2.png", "fused.png", "m0.png", "m2.png", "hdr.pfm"] {
        assert!(root.join("restored").join(name).exists(), "missing {name}");
    }

    // Gain-bias refiner against the ground-truth dark exposure.
    let out = lumafuse(
        &[
            "restore",
            "--input",
            "data/scene_00/z1.png",
            "--crf",
            "gamma:2.2",
            "--refiner",
            "gainbias:data/scene_00/zt0.png",
            "--out-dir",
            "restored_gb",
        ],
        root,
    );
    assert_ok(&out);
}

#[test]
fn experiment_reports_and_strict_gate() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // 256x256: large enough that the suite-level strict thresholds make
    // sense (tiny scenes have much steeper per-pixel structure and score
    // lower on the fusion metric by design).
    std::fs::write(
        root.join("exp.cfg"),
        "scenes = 2\nseed = 11\nwidth = 256\nheight = 256\n",
    )
    .unwrap();
    let out = lumafuse(
        &[
            "experiment",
            "--config",
            "exp.cfg",
            "--report",
            "report.json",
            "--strict",
        ],
        root,
    );
    assert_ok(&out);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(root.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert!(report["strict"]["passed"].as_bool().unwrap());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("mef_ssim"), "table header missing: {table}");

    // Heavy sensor noise breaks the case-1 fidelity gate; strict mode
    // must exit nonzero while still writing the report.
    std::fs::write(
        root.join("noisy.cfg"),
        "scenes = 1\nseed = 11\nwidth = 64\nheight = 64\nnoise_read_sigma = 0.05\n",
    )
    .unwrap();
    let out = lumafuse(
        &[
            "experiment",
            "--config",
            "noisy.cfg",
            "--report",
            "noisy.json",
            "--strict",
        ],
        root,
    );
    assert!(!out.status.success(), "strict gate should fail under noise");
    assert!(root.join("noisy.json").exists());

    // Without --strict the same run exits zero.
    let out = lumafuse(
        &[
            "experiment",
            "--config",
            "noisy.cfg",
            "--report",
            "noisy2.json",
        ],
        root,
    );
    assert_ok(&out);
}
