use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn metlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const LINE4: &str = r#"{"labels":["a","b","c","d"],
  "matrix":[[0,1,2,3],[1,0,1,2],[2,1,0,1],[3,2,1,0]],"flavor":"metric"}"#;

#[test]
fn validate_reports_the_witness_triple() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.json", LINE4);
    let bad = write(
        &dir,
        "bad.json",
        r#"{"labels":["x","y","z"],"matrix":[[0,1,5],[1,0,1],[5,1,0]],"flavor":"metric"}"#,
    );

    let out = metlab(&["validate", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["valid"], true);

    let out = metlab(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["valid"], false);
    assert!(v["detail"].as_str().unwrap().contains("i: 0, j: 2, k: 1"));

    // a path metric is not an ultrametric
    let out = metlab(&["validate", s(&good), "--flavor", "ultrametric"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn moduli_of_a_progression() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "line.json", LINE4);
    let out = metlab(&["moduli", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["ud"]["delta_star"], 1.0 / 3.0);
    assert_eq!(v["types"]["measured"]["c_star"], 0.5);
    assert_eq!(v["doubling"]["mode"], "exhaustive");

    let out = metlab(&["moduli", s(&f), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "type,doubling_constant,doubling_mode,delta_star,c_star,r_min"
    );
    assert!(lines.next().unwrap().starts_with("\"(1,1,1)\""));
}

#[test]
fn amalgamate_glues_at_basepoints() {
    let dir = TempDir::new().unwrap();
    let host = write(&dir, "host.json", LINE4);
    let part = write(
        &dir,
        "part.json",
        r#"{"pieces":[[0,1],[2,3]],"basepoints":[0,2]}"#,
    );
    let p1 = write(
        &dir,
        "p1.json",
        r#"{"labels":["a","b"],"matrix":[[0,0.1],[0.1,0]],"flavor":"metric"}"#,
    );
    let p2 = write(
        &dir,
        "p2.json",
        r#"{"labels":["c","d"],"matrix":[[0,0.2],[0.2,0]],"flavor":"metric"}"#,
    );
    let out = metlab(&["amalgamate", s(&host), s(&part), s(&p1), s(&p2)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    // b -> a -> c -> d: 0.1 + 2 + 0.2
    assert_eq!(v["space"]["matrix"][1][3], 2.3);
    // worst pair is b, c: host 1, glued 0.1 + 2
    assert_eq!(v["distance_to_host"]["value"], 1.1);

    let swapped = metlab(&["amalgamate", s(&host), s(&part), s(&p2), s(&p1)]);
    assert_eq!(swapped.status.code(), Some(2));
}

#[test]
fn approximate_meets_its_bound() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "line.json", LINE4);
    for property in ["doubling", "ud", "up"] {
        let out = metlab(&[
            "approximate",
            s(&f),
            "--property",
            property,
            "--epsilon",
            "0.5",
        ]);
        assert_eq!(out.status.code(), Some(0), "{property}");
        let v = json_of(&out);
        assert!(v["achieved"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());
    }
    let out = metlab(&["approximate", s(&f), "--property", "ultrametric"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cantor_types_and_sequences() {
    let dir = TempDir::new().unwrap();
    let out = metlab(&["cantor", "gen", "--type", "111", "--depth", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["space"]["labels"].as_array().unwrap().len(), 32);
    assert_eq!(v["meta"]["target"]["recipe"], "geometric_sequential");

    let seq = write(&dir, "seq.json", r#"{"values":[1.0,0.25,0.0625]}"#);
    let out = metlab(&["cantor", "gen", "--sequence", s(&seq), "--depth", "3"]);
    let v = json_of(&out);
    assert_eq!(v["space"]["flavor"], "ultrametric");
    assert_eq!(v["space"]["matrix"][0][1], 0.0625);

    // generated reports feed straight back in
    let slow = dir.path().join("slow.json");
    let out = metlab(&[
        "cantor",
        "gen",
        "--type",
        "011",
        "--depth",
        "6",
        "--out",
        s(&slow),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = metlab(&["moduli", s(&slow)]);
    assert_eq!(out.status.code(), Some(0));
    let types = &json_of(&out)["types"];
    assert_eq!(
        [&types["u1"], &types["u2"], &types["u3"]],
        [false, true, true]
    );

    let out = metlab(&["cantor", "gen", "--type", "12x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rangeset_windows_and_sequences() {
    let dir = TempDir::new().unwrap();
    let de = write(
        &dir,
        "de.json",
        r#"{"kind":"double_exponential","base":0.5}"#,
    );
    let out = metlab(&[
        "rangeset",
        "check",
        s(&de),
        "--a",
        "0.5",
        "--M",
        "2",
        "--max-n",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["window"]["first_failure"], 6);

    let g = write(
        &dir,
        "g.json",
        r#"{"kind":"geometric","scale":1.0,"ratio":0.5}"#,
    );
    let out = metlab(&[
        "rangeset",
        "check",
        s(&g),
        "--a",
        "0.5",
        "--M",
        "1",
        "--c",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["up_obstructions"], serde_json::json!([]));

    let out = metlab(&[
        "rangeset",
        "sequence",
        s(&g),
        "--b",
        "0.5",
        "--M",
        "2",
        "--len",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        json_of(&out)["values"],
        serde_json::json!([0.5, 0.0625, 0.0078125])
    );
}

#[test]
fn experiments_are_deterministic_and_formats_agree() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"experiment":"dense_doubling","trials":6,"seed":11,"mode":"points_linf","n":24}"#,
    );
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        metlab(&["experiment", s(&cfg), "--out", s(&a)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        metlab(&["experiment", s(&cfg), "--out", s(&b)])
            .status
            .code(),
        Some(0)
    );
    let (ja, jb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ja, jb);

    let report: Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(report["total"], 6);
    assert_eq!(report["all_pass"], true);
    assert!(report["note"]
        .as_str()
        .unwrap()
        .contains("do not demonstrate denseness"));

    let out = metlab(&["experiment", s(&cfg), "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    for (row, trial) in rdr.records().zip(report["trials"].as_array().unwrap()) {
        let row = row.unwrap();
        let achieved: f64 = row[col("achieved")].parse().unwrap();
        assert_eq!(achieved, trial["achieved"].as_f64().unwrap());
        assert_eq!(&row[col("digest")], trial["digest"].as_str().unwrap());
    }

    // the seed flag overrides the config
    let out = metlab(&["experiment", s(&cfg), "--seed", "12", "--trials", "2"]);
    let v = json_of(&out);
    assert_eq!(v["seed"], 12);
    assert_eq!(v["total"], 2);
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"experiment":"dense_ud","trials":0}"#);
    let out = metlab(&["experiment", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials"));
}
