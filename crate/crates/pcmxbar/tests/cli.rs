use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcmxbar::binfmt::{read_matrix, write_matrix};
use pcmxbar::model::save_model;
use pcmxbar_core::inference::MlpModel;
use pcmxbar_core::mapping::Activation;
use pcmxbar_core::Matrix;
use tempfile::TempDir;

fn pcmxbar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcmxbar"))
        .args(args)
        .env_remove("PCMXBAR_MNIST_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn idx_header(magic: u32, dims: &[u32]) -> Vec<u8> {
    let mut b = magic.to_be_bytes().to_vec();
    for d in dims {
        b.extend_from_slice(&d.to_be_bytes());
    }
    b
}

/// Tiny 4x4 "digits" where the class is coded by which pixel is lit.
fn fake_mnist(dir: &Path, n: usize) {
    fs::create_dir_all(dir).unwrap();
    let mut images = idx_header(0x803, &[n as u32, 4, 4]);
    let mut labels = idx_header(0x801, &[n as u32]);
    for k in 0..n {
        let class = (k % 10) as u8;
        for p in 0..16u8 {
            images.push(if p == class { 255 } else { (p * 7 + k as u8) % 40 });
        }
        labels.push(class);
    }
    for prefix in ["train", "t10k"] {
        fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), &images).unwrap();
        fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), &labels).unwrap();
    }
}

fn tiny_model(dir: &Path) {
    let w1 = Matrix::from_fn(12, 16, |h, i| if h == i { 1.0 } else { 0.01 * ((h + 2 * i) % 5) as f64 - 0.02 });
    let w2 = Matrix::from_fn(10, 12, |o, h| if o == h { 1.0 } else { -0.1 });
    let m = MlpModel::new(w1, w2, [Activation::Relu, Activation::Identity], [1.0, 1.2]).unwrap();
    save_model(dir, &m, None).unwrap();
}

struct Fixture {
    tmp: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture { tmp: TempDir::new().unwrap() };
        fake_mnist(&f.p("mnist"), 40);
        tiny_model(&f.p("model"));
        fs::write(
            f.p("fast.json"),
            r#"{"schema": 1, "schedule": {"points": 4}, "cohort": {"log_points": 50}}"#,
        )
        .unwrap();
        f
    }

    fn p(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&pcmxbar(&["frobnicate"])), 64);
    assert_eq!(code(&pcmxbar(&["mvm"])), 64);
    assert_eq!(code(&pcmxbar(&["cohort", "--devices", "many"])), 64);
    assert_eq!(code(&pcmxbar(&["--help"])), 0);
    assert_eq!(code(&pcmxbar(&["--version"])), 0);
}

#[test]
fn config_errors_exit_2() {
    let f = Fixture::new();
    let out = f.p("out");
    fs::write(f.p("noschema.json"), r#"{"drift": {"nu_mean": 0.06}}"#).unwrap();
    fs::write(f.p("unknown.json"), r#"{"schema": 1, "drfit": {}}"#).unwrap();
    fs::write(f.p("negative.json"), r#"{"schema": 1, "drift": {"nu_mean": -0.1}}"#).unwrap();
    for bad in ["noschema.json", "unknown.json", "negative.json"] {
        let o = pcmxbar(&["--config", s(&f.p(bad)), "--out", s(&out), "cell-trace", "--duration", "0.01"]);
        assert_eq!(code(&o), 2, "{bad}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = pcmxbar(&["--out", s(&out), "--threads", "0", "cell-trace"]);
    assert_eq!(code(&o), 2);
    let o = pcmxbar(&["--out", s(&out), "infer", "--mnist", s(&f.p("mnist"))]);
    assert_eq!(code(&o), 2, "missing model is a configuration error");
}

#[test]
fn data_errors_exit_3() {
    let f = Fixture::new();
    let out = f.p("out");
    let o = pcmxbar(&["--out", s(&out), "fit-drift", "--input", s(&f.p("nowhere"))]);
    assert_eq!(code(&o), 3);
    fs::write(f.p("garbage.xbarg"), b"not a matrix").unwrap();
    let o = pcmxbar(&[
        "--out",
        s(&out),
        "mvm",
        "--conductances",
        s(&f.p("garbage.xbarg")),
        "--voltages",
        s(&f.p("garbage.xbarg")),
    ]);
    assert_eq!(code(&o), 3);
    let o = pcmxbar(&["--out", s(&out), "infer", "--model", s(&f.p("model")), "--mnist", s(&f.p("nowhere"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn noiseless_trace_fits_its_own_exponent() {
    let f = Fixture::new();
    let store = f.p("store");
    let o = pcmxbar(&[
        "--config", s(&f.p("fast.json")), "--out", s(&store),
        "cell-trace", "--nu", "0.05", "--duration", "2", "--fs", "1000", "--no-noise",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fit = f.p("fit");
    let o = pcmxbar(&["--out", s(&fit), "fit-drift", "--input", s(&store)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("nu_hat = 0.0500"));
    let mut rows = csv::Reader::from_path(fit.join("drift_fit.csv")).unwrap();
    let rec = rows.records().next().unwrap().unwrap();
    let nu: f64 = rec[1].parse().unwrap();
    assert!((nu - 0.05).abs() < 1e-9);
}

#[test]
fn every_command_writes_a_manifest() {
    let f = Fixture::new();
    let out = f.p("manifested");
    let o = pcmxbar(&["--seed", "11", "--threads", "2", "--out", s(&out), "encode", "--model", s(&f.p("model"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["tool"], "pcmxbar");
    assert_eq!(m["command"], "encode");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["threads"], 2);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"conductances.xbarg"));
    let g = read_matrix(&out.join("conductances.xbarg")).unwrap();
    // 16 + 12 rows, 2·12 + 2·10 columns.
    assert_eq!(g.shape(), (28, 44));
}

#[test]
fn mvm_from_files_matches_ohms_law() {
    let f = Fixture::new();
    let g = Matrix::from_fn(3, 2, |r, c| (r + 2 * c) as f64);
    let v = Matrix::from_fn(3, 1, |r, _| 0.05 * (r + 1) as f64);
    write_matrix(&f.p("g.xbarg"), &g).unwrap();
    write_matrix(&f.p("v.xbarg"), &v).unwrap();
    let out = f.p("mvm");
    let o = pcmxbar(&[
        "--out", s(&out), "mvm", "--conductances", s(&f.p("g.xbarg")), "--voltages", s(&f.p("v.xbarg")), "--no-noise",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let i = read_matrix(&out.join("currents.xbarg")).unwrap();
    assert_eq!(i.shape(), (2, 1));
    for c in 0..2 {
        let want: f64 = (0..3).map(|r| g.get(r, c) * v.get(r, 0) * 1e-6).sum();
        assert!((i.get(c, 0) - want).abs() < 1e-18);
    }
}

#[test]
fn same_seed_gives_identical_accuracy_files() {
    let f = Fixture::new();
    let run = |dir: &str, seed: &str, threads: &str| {
        let out = f.p(dir);
        let o = pcmxbar(&[
            "--config", s(&f.p("fast.json")), "--seed", seed, "--threads", threads, "--out", s(&out),
            "infer", "--model", s(&f.p("model")), "--mnist", s(&f.p("mnist")), "--seeds", "2",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("accuracy.csv")).unwrap()
    };
    let a = run("a", "3", "1");
    let b = run("b", "3", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t_seconds,accuracy,n_images,seed");
    assert_eq!(text.lines().count(), 1 + 4 * 2);
    assert!(f.p("a").join("accuracy_band.csv").exists());
}

#[test]
fn snapshot_writes_one_histogram_per_time() {
    let f = Fixture::new();
    let out = f.p("snap");
    let o = pcmxbar(&["--out", s(&out), "snapshot", "--model", s(&f.p("model")), "--t", "2.3e-5,1,100", "--bins", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..3 {
        assert!(out.join(format!("histogram_{k:02}.csv")).exists());
    }
    let means = fs::read_to_string(out.join("group_means.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 3 * 3);
}

#[test]
fn train_then_infer_round_trip() {
    let f = Fixture::new();
    let out = f.p("trained");
    let o = pcmxbar(&[
        "--out", s(&out), "train", "--mnist", s(&f.p("mnist")), "--epochs", "2", "--hidden", "8", "--batch", "4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model = out.join("model");
    for name in ["model.json", "w1.xbarg", "w2.xbarg"] {
        assert!(model.join(name).exists(), "{name}");
    }
    let o = pcmxbar(&[
        "--config", s(&f.p("fast.json")), "--out", s(&f.p("inferred")),
        "infer", "--model", s(&model), "--mnist", s(&f.p("mnist")), "--limit", "10",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(f.p("inferred").join("infer.json")).unwrap()).unwrap();
    assert_eq!(report["n_images"], 10);
}
