mod common;

use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use common::{arp_frame, http, ipv4_frame, pcap_bytes, Server, BIN};
use tempfile::TempDir;

fn camscope(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run camscope")
}

fn ok(args: &[&str]) -> Output {
    let out = camscope(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

/// Tiny planted-motif bundle plus a briefly trained model.
fn trained(dir: &TempDir) -> (String, String) {
    let data = p(dir, "data.json");
    let weights = p(dir, "w.json");
    ok(&["synth", "--classes", "3", "--per-class", "20", "--length", "64", "--seed", "5", "--out", &data]);
    ok(&["train", "--data", &data, "--out", &weights, "--epochs", "3", "--channels", "4,8", "--seed", "1"]);
    (data, weights)
}

fn write_captures(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let web: Vec<_> = (0..12).map(|i| (i, 0, ipv4_frame(60 + i as usize, 0x11))).collect();
    let mut dns: Vec<_> = (0..5).map(|i| (i, 5, ipv4_frame(80, 0x22))).collect();
    dns.push((9, 0, arp_frame()));
    fs::write(dir.join("web.pcap"), pcap_bytes(false, &web)).unwrap();
    fs::write(dir.join("dns.pcap"), pcap_bytes(true, &dns)).unwrap();
    fs::write(
        dir.join("manifest.json"),
        r#"{ "files": { "web.pcap": "web", "dns.pcap": "dns" } }"#,
    )
    .unwrap();
}

#[test]
fn prepare_from_captures() {
    let dir = TempDir::new().unwrap();
    let caps = dir.path().join("caps");
    write_captures(&caps);
    let manifest = caps.join("manifest.json").to_string_lossy().into_owned();
    let caps = caps.to_string_lossy().into_owned();

    let a = p(&dir, "a.csds");
    let out = ok(&["prepare", "--pcap-dir", &caps, "--manifest", &manifest, "--out", &a, "--per-class", "4", "--seed", "3"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_samples"], 8);
    assert_eq!(report["class_names"], serde_json::json!(["dns", "web"]));
    assert_eq!(report["ingest"]["packets"], 18);
    assert_eq!(report["summary"]["classes"][1]["before"], 12);

    let b = p(&dir, "b.csds");
    ok(&["prepare", "--pcap-dir", &caps, "--manifest", &manifest, "--out", &b, "--per-class", "4", "--seed", "3"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "same seed, same bytes");

    // a target above every class keeps all samples
    let c = p(&dir, "c.json");
    let out = ok(&["prepare", "--pcap-dir", &caps, "--manifest", &manifest, "--out", &c, "--per-class", "100"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n_samples"], 17);
    for class in report["summary"]["classes"].as_array().unwrap() {
        assert_eq!(class["before"], class["after"]);
    }
}

#[test]
fn prepare_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let manifest = p(&dir, "m.json");
    fs::write(&manifest, r#"{"files": {"x.pcap": "x"}}"#).unwrap();
    let out = camscope(&["prepare", "--pcap-dir", empty.to_str().unwrap(), "--manifest", &manifest, "--out", &p(&dir, "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no samples"));

    // a pcapng file is reported with its name
    let caps = dir.path().join("caps");
    fs::create_dir(&caps).unwrap();
    fs::write(caps.join("x.pcap"), [0x0a, 0x0d, 0x0d, 0x0a, 0, 0, 0, 0]).unwrap();
    let out = camscope(&["prepare", "--pcap-dir", caps.to_str().unwrap(), "--manifest", &manifest, "--out", &p(&dir, "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x.pcap"));

    assert_eq!(camscope(&["prepare", "--out", &p(&dir, "o")]).status.code(), Some(2));
    assert_eq!(camscope(&["prepare", "--csv", &p(&dir, "missing.csv"), "--out", &p(&dir, "o")]).status.code(), Some(2));
    assert_eq!(camscope(&["train", "--out", &p(&dir, "w.json")]).status.code(), Some(2));
}

#[test]
fn prepare_from_csv() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "t.csv");
    fs::write(&csv, "a,b,label\n1,10,x\n3,20,y\n2,30,x\n").unwrap();
    let out_path = p(&dir, "t.json");
    ok(&["prepare", "--csv", &csv, "--out", &out_path]);
    let bundle: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(bundle["input_length"], 2);
    assert_eq!(bundle["samples"][1]["input"], serde_json::json!([1.0, 0.5]));
}

#[test]
fn training_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (data, w1) = trained(&dir);
    let w2 = p(&dir, "w2.json");
    ok(&["train", "--data", &data, "--out", &w2, "--epochs", "3", "--channels", "4,8", "--seed", "1"]);
    assert_eq!(fs::read(&w1).unwrap(), fs::read(&w2).unwrap());

    let metrics = fs::read_to_string(p(&dir, "w.metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    let header = lines.next().unwrap();
    for col in ["loss", "accuracy", "macro_f1", "precision_0", "recall_2", "f1_1"] {
        assert!(header.split(',').any(|h| h == col), "missing column {col}");
    }
    assert_eq!(lines.count(), 3);
}

#[test]
fn zero_epochs_writes_initialization() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "d.csds");
    ok(&["synth", "--per-class", "4", "--length", "32", "--out", &data]);
    let w = p(&dir, "w0.json");
    let metrics = p(&dir, "m.csv");
    ok(&["train", "--data", &data, "--out", &w, "--epochs", "0", "--channels", "2", "--seed", "9", "--metrics", &metrics]);
    assert_eq!(fs::read_to_string(&metrics).unwrap().lines().count(), 1);
    let model = camscope_core::nn::load_weights(&w).unwrap();
    let init = camscope_core::nn::Model::initialize(model.config().clone(), 9).unwrap();
    assert_eq!(model.weights(), init.weights());
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "d.json");
    let config = p(&dir, "camscope.toml");
    fs::write(
        &config,
        format!("[synth]\nper-class = 3\nlength = 40\nout = {data:?}\n\n[train]\nepochs = 0\nchannels = [2]\n"),
    )
    .unwrap();
    ok(&["--config", &config, "synth", "--classes", "2"]);
    let bundle: serde_json::Value = serde_json::from_str(&fs::read_to_string(&data).unwrap()).unwrap();
    assert_eq!(bundle["samples"].as_array().unwrap().len(), 6);
    assert_eq!(bundle["input_length"], 40);

    // the flag wins over the config value
    let w = p(&dir, "w.json");
    ok(&["--config", &config, "train", "--data", &data, "--out", &w, "--channels", "3"]);
    let model = camscope_core::nn::load_weights(&w).unwrap();
    assert_eq!(model.config().conv_channels, vec![3]);

    fs::write(&config, "[train]\nepoch = 1\n").unwrap();
    assert_eq!(camscope(&["--config", &config, "train", "--data", &data, "--out", &w]).status.code(), Some(2));
}

#[test]
fn export_cam_json_and_svg() {
    let dir = TempDir::new().unwrap();
    let (data, weights) = trained(&dir);
    let predictions = String::from_utf8(ok(&["predict", "--data", &data, "--weights", &weights]).stdout).unwrap();
    assert_eq!(predictions.lines().count(), 61);
    let first_class: usize = predictions.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();

    let cam = p(&dir, "cam.json");
    let svg = p(&dir, "cam.svg");
    let class = first_class.to_string();
    ok(&["export-cam", "--data", &data, "--weights", &weights, "--class", &class, "--agg", "median", "--var", "gini",
        "--out", &cam, "--svg", &svg, "--wrap", "16"]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cam).unwrap()).unwrap();
    assert_eq!(json["impact"].as_array().unwrap().len(), 64);
    assert_eq!(json["agg_method"], "median");
    let svg = fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<rect").count(), 64);
    assert!(svg.contains(r#"height="40""#), "4 rows of 10 px");

    let out = camscope(&["export-cam", "--data", &data, "--weights", &weights, "--class", "7", "--out", &cam]);
    assert_eq!(out.status.code(), Some(2));
    let out = camscope(&["export-cam", "--data", &data, "--weights", &weights, "--class", "0", "--var", "range", "--out", &cam]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_length_packets_wrap_into_ten_rows() {
    let dir = TempDir::new().unwrap();
    let caps = dir.path().join("caps");
    write_captures(&caps);
    let bundle = p(&dir, "b.csds");
    ok(&["prepare", "--pcap-dir", caps.to_str().unwrap(), "--manifest", caps.join("manifest.json").to_str().unwrap(),
        "--out", &bundle]);
    let w = p(&dir, "w.json");
    ok(&["train", "--data", &bundle, "--out", &w, "--epochs", "0", "--channels", "2", "--kernel-size", "3"]);
    let predictions = String::from_utf8(ok(&["predict", "--data", &bundle, "--weights", &w]).stdout).unwrap();
    let class = predictions.lines().nth(1).unwrap().split(',').nth(2).unwrap().to_owned();
    let svg = p(&dir, "c.svg");
    ok(&["export-cam", "--data", &bundle, "--weights", &w, "--class", &class, "--out", &p(&dir, "c.json"), "--svg", &svg]);
    let svg = fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<rect").count(), 1500);
    assert!(svg.contains(r#"width="1500" height="100""#));
}

#[test]
fn serve_lifecycle() {
    let dir = TempDir::new().unwrap();
    let (data, weights) = trained(&dir);

    let out = camscope(&["serve", "--data", &data, "--weights", &p(&dir, "nope.json"), "--listen", "127.0.0.1:0"]);
    assert_eq!(out.status.code(), Some(2), "missing weights fail before binding");

    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let out = camscope(&["serve", "--data", &data, "--weights", &weights, "--listen", &addr]);
    assert_eq!(out.status.code(), Some(1), "port in use is a runtime failure");

    let server = Server::spawn(&["--data", &data, "--weights", &weights, "--listen", "127.0.0.1:0"]);
    let resp = http(server.addr, "GET", "/api/classes", None);
    assert_eq!(resp.status, 200);
    assert!(!resp.json().as_array().unwrap().is_empty());
    assert_eq!(server.terminate(), Some(0));
}
