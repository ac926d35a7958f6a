//! End-to-end behaviour of the `axlesim` binary: outputs, determinism and
//! exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axlesim::dataset::Dataset;
use axlesim::surrogate::{write_checkpoint, InputScaler, Layer, ModelKind, MtlNetwork, TargetScaler, TaskMask};

const SHORT_SIM: &str = "[sim]\nduration = 3.0\nwarmup = 0.5\n";

fn axlesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axlesim"))
        .args(args)
        .env_remove("AXLESIM_THREADS")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, format!("{SHORT_SIM}{extra}")).unwrap();
    p
}

#[test]
fn flat_road_gives_zero_metrics_and_undefined_sdpi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("resp.csv");
    let o = axlesim(&["simulate", "--config", s(&cfg), "--flat", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["a_rms", "theta_ddot_rms", "theta_rms", "sws_max_sum", "dtl_rms_sum"] {
        assert!(text.contains(&format!("{name} = 0.0000000000000000e0")), "{text}");
    }
    assert!(text.contains("sdpi = undefined"), "{text}");
    assert!(dir.path().join("resp.manifest.json").exists());
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = axlesim(&["simulate", "--config", s(&cfg), "--road-seed", "5", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let header = std::fs::read_to_string(&a).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 5 + 4 * 4);
}

#[test]
fn missing_key_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[vehicle]\nn_axles = 4\nI_y = 1.0\nm_us = 1.0\nk_s = 1.0\nc_s = 1.0\nk_t = 1.0\nwb = 4.0\n",
    )
    .unwrap();
    let o = axlesim(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("r.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("m_s"));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[vehicle]\nn_axles = 4\nm_s = 20337.8\nI_y = 562239.6\nm_us = 458.4\nk_s = 128710.0\nc_s = 11522.5\nk_t = 1.0e11\nwb = 4.85\n",
    );
    let o = axlesim(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("r.csv"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_input_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = axlesim(&[
        "train",
        "--dataset",
        s(&dir.path().join("nope.csv")),
        "--out",
        s(&dir.path().join("m.ckpt")),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn single_zero_range_sample_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("d.csv");
    let o = axlesim(&[
        "gen-dataset",
        "--config",
        s(&cfg),
        "--samples",
        "1",
        "--range",
        "0",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = Dataset::read_csv(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(ds.len(), 1);
    assert!((ds.rows[0].targets[5] - 1.0).abs() < 1e-12);
}

#[test]
fn dataset_bytes_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let mut files = Vec::new();
    for w in ["1", "8"] {
        let out = dir.path().join(format!("d{w}.csv"));
        let o = axlesim(&[
            "gen-dataset",
            "--config",
            s(&cfg),
            "--samples",
            "24",
            "--workers",
            w,
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(0));
        files.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn train_zero_epochs_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let data = dir.path().join("d.csv");
    assert_eq!(
        axlesim(&["gen-dataset", "--config", s(&cfg), "--samples", "60", "--out", s(&data)])
            .status
            .code(),
        Some(0)
    );

    let ck0 = dir.path().join("zero.ckpt");
    let tr0 = dir.path().join("zero.csv");
    let o = axlesim(&[
        "train",
        "--dataset",
        s(&data),
        "--epochs",
        "0",
        "--out",
        s(&ck0),
        "--trace",
        s(&tr0),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&tr0).unwrap().lines().count(), 1);
    assert!(std::fs::metadata(&ck0).unwrap().len() > 0);

    let mut ckpts = Vec::new();
    for name in ["a", "b"] {
        let ck = dir.path().join(format!("{name}.ckpt"));
        let o = axlesim(&[
            "train",
            "--dataset",
            s(&data),
            "--epochs",
            "3",
            "--seed",
            "11",
            "--out",
            s(&ck),
        ]);
        assert_eq!(o.status.code(), Some(0));
        ckpts.push(std::fs::read(&ck).unwrap());
    }
    assert_eq!(ckpts[0], ckpts[1]);
    assert_ne!(ckpts[0], std::fs::read(&ck0).unwrap());
}

#[test]
fn constant_checkpoint_gives_zero_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let widths = [6, 4, 8, 6];
    let layers: Vec<Layer> = widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
    let mask = TaskMask {
        tasks: 6,
        window: 3,
        stride: 1,
    };
    let net = MtlNetwork::new(
        ModelKind::Mtl,
        layers,
        Some(mask),
        InputScaler::identity(6),
        TargetScaler {
            min: vec![0.0; 6],
            max: vec![1.0; 6],
        },
    )
    .unwrap();
    let ck = dir.path().join("stub.ckpt");
    write_checkpoint(&net, std::fs::File::create(&ck).unwrap()).unwrap();
    let out = dir.path().join("m.csv");
    let png = dir.path().join("m.png");
    let o = axlesim(&[
        "sensitivity",
        "--checkpoint",
        s(&ck),
        "--out",
        s(&out),
        "--image",
        s(&png),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        assert!(
            line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0),
            "{line}"
        );
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("DISCREPANCY"));
    assert!(std::fs::metadata(&png).unwrap().len() > 0);
}

#[test]
fn exact_sensitivity_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("m.csv");
    let o = axlesim(&[
        "sensitivity",
        "--exact",
        "--config",
        s(&cfg),
        "--grid",
        "3",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("a_rms: dominant input"), "{text}");

    let heat = dir.path().join("h.png");
    assert_eq!(
        axlesim(&["plot", "heatmap", "--matrix", s(&out), "--out", s(&heat)])
            .status
            .code(),
        Some(0)
    );

    let resp = dir.path().join("r.csv");
    assert_eq!(
        axlesim(&["simulate", "--config", s(&cfg), "--out", s(&resp)])
            .status
            .code(),
        Some(0)
    );
    let rp = dir.path().join("r.png");
    let o = axlesim(&[
        "plot",
        "response",
        "--response",
        s(&resp),
        "--channels",
        "z_s[m],theta[rad]",
        "--out",
        s(&rp),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = axlesim(&[
        "plot",
        "response",
        "--response",
        s(&resp),
        "--channels",
        "nope",
        "--out",
        s(&rp),
    ]);
    assert_eq!(o.status.code(), Some(2));
    for p in [&heat, &rp] {
        assert_eq!(&std::fs::read(p).unwrap()[1..4], b"PNG");
    }
}

#[test]
fn help_documents_every_subcommand() {
    let o = axlesim(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["simulate", "gen-road", "gen-dataset", "train", "sensitivity", "plot"] {
        assert!(text.contains(cmd), "{cmd}");
    }
    let o = axlesim(&["gen-dataset", "--help"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("AXLESIM_THREADS"));
}
