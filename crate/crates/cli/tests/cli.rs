use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use murmurforge::features::{MurmurationTable, Normalization};
use murmurforge::io::read_path;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_murmurforge"))
        .args(args)
        .env("MURMURFORGE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(
        code(&o),
        0,
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Four well-separated orders, 60 records each, tagged ECNF and G2Q in rotation.
fn synth(dir: &TempDir) -> PathBuf {
    let out = p(dir, "synth.csv");
    ok(&[
        "gen-synth",
        "--classes",
        "4",
        "--per-class",
        "60",
        "--separation",
        "0.8",
        "--sigma",
        "0.02",
        "--seed",
        "3",
        "--origins",
        "ECNF,G2Q",
        "--out",
        s(&out),
    ]);
    out
}

#[test]
fn help_and_version_exit_zero() {
    assert!(ok(&["--help"]).contains("murmurate"));
    assert!(ok(&["--version"]).contains("murmurforge"));
    assert!(ok(&["summarize", "--help"]).contains("rmax"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["summarize"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    assert_eq!(
        code(&run(&[
            "summarize",
            "--in",
            "x.csv",
            "--filter",
            "colour=red"
        ])),
        2
    );
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_murmurforge"))
        .args(["gen-ec", "--out", "/dev/null"])
        .env("MURMURFORGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn data_errors_exit_one_without_partial_output() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "m.csv");
    let o = run(&[
        "murmurate",
        "--in",
        s(&p(&dir, "missing.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());

    let broken = p(&dir, "broken.csv");
    fs::write(&broken, "label,degree\nx,1\n").unwrap();
    assert_eq!(
        code(&run(&["murmurate", "--in", s(&broken), "--out", s(&out)])),
        1
    );
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn generated_curves_summarize() {
    let dir = TempDir::new().unwrap();
    let ec = p(&dir, "ec.json");
    ok(&["gen-ec", "--out", s(&ec)]);
    let ds = read_path(&ec).unwrap();
    assert!(ds.get("11a1").is_some());
    let table = ok(&["summarize", "--in", s(&ec)]);
    assert!(table.contains(&format!("total: {}", ds.len())));
    let json: serde_json::Value =
        serde_json::from_str(&ok(&["summarize", "--in", s(&ec), "--json"])).unwrap();
    assert_eq!(json["total"], ds.len());
}

#[test]
fn murmurate_single_class_csv() {
    let dir = TempDir::new().unwrap();
    let ec = p(&dir, "ec.csv");
    ok(&[
        "gen-ec",
        "--curve",
        "11a1:0,-1,1,-10,-20:11:0",
        "--curve",
        "14a1:1,0,1,4,-6:14:0",
        "--out",
        s(&ec),
    ]);
    let out = p(&dir, "m.csv");
    ok(&[
        "murmurate",
        "--in",
        s(&ec),
        "--normalization",
        "atilde",
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p,order_0");
    assert_eq!(rows.len(), 169);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 2));
    assert!(text.lines().last().unwrap().starts_with("# counts: r0=2"));

    let back = MurmurationTable::read_csv(text.as_bytes(), Normalization::Atilde).unwrap();
    let want = MurmurationTable::build(&read_path(&ec).unwrap(), Normalization::Atilde).unwrap();
    for (a, b) in back.means.iter().flatten().zip(want.means.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn murmurate_classes_ascend() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = p(&dir, "m.csv");
    ok(&[
        "murmurate",
        "--in",
        s(&data),
        "--normalization",
        "abar",
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "p,order_0,order_1,order_2,order_3"
    );
}

#[test]
fn filter_writes_matching_subset() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = p(&dir, "g2q.json");
    ok(&[
        "filter",
        "--in",
        s(&data),
        "--filter",
        "origin=G2Q,rmax=1",
        "--out",
        s(&out),
    ]);
    let ds = read_path(&out).unwrap();
    assert!(!ds.is_empty());
    assert!(ds
        .iter()
        .all(|r| r.order <= 1 && r.origins.to_string().contains("G2Q")));
}

#[test]
fn lda_and_pca_reports() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let report = p(&dir, "lda.json");
    let table = ok(&[
        "lda",
        "--in",
        s(&data),
        "--normalization",
        "abar",
        "--out",
        s(&report),
    ]);
    assert!(table.contains("Accuracy") && table.contains("Explained Variance"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(
        json[0]["n_train"].as_u64().unwrap() + json[0]["n_test"].as_u64().unwrap(),
        240
    );
    assert!(json[0]["accuracy"].as_f64().unwrap() >= 0.99);

    let weights = p(&dir, "w.csv");
    let svg = p(&dir, "pc.svg");
    ok(&[
        "pca",
        "--in",
        s(&data),
        "--k",
        "2",
        "--out",
        s(&weights),
        "--scatter",
        s(&svg),
    ]);
    let w = fs::read_to_string(&weights).unwrap();
    assert_eq!(w.lines().count(), 169);
    let svg = fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<circle").count(), 240);
    assert_eq!(svg.matches(r#"class="legend-entry""#).count(), 4);

    assert_eq!(
        code(&run(&[
            "pca",
            "--in",
            s(&data),
            "--k",
            "0",
            "--out",
            s(&weights)
        ])),
        2
    );
}

#[test]
fn nn_train_then_eval() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let (report, model, curves) = (
        p(&dir, "r.json"),
        p(&dir, "model.json"),
        p(&dir, "curves.csv"),
    );
    ok(&[
        "nn-train",
        "--in",
        s(&data),
        "--arch",
        "fnn",
        "--features",
        "PC_4",
        "--normalization",
        "abar",
        "--hidden",
        "16,16",
        "--epochs",
        "20",
        "--learning-rate",
        "0.01",
        "--batch-size",
        "32",
        "--subset",
        "G2Q=origin=G2Q",
        "--out",
        s(&report),
        "--model-out",
        s(&model),
        "--curves",
        s(&curves),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pca_fit"], "train");
    let c = fs::read_to_string(&curves).unwrap();
    assert_eq!(c.lines().next().unwrap(), "epoch,subset,accuracy");
    assert_eq!(c.lines().count(), 1 + 20 * 2);

    let eval = p(&dir, "eval.json");
    ok(&[
        "nn-eval",
        "--in",
        s(&data),
        "--model",
        s(&model),
        "--out",
        s(&eval),
    ]);
    let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(&eval).unwrap()).unwrap();
    assert!(e["accuracy"].as_f64().unwrap() >= 0.9);

    fs::write(&model, "{\"format\":\"other\"}").unwrap();
    assert_eq!(
        code(&run(&["nn-eval", "--in", s(&data), "--model", s(&model)])),
        1
    );
}

#[test]
fn split_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let (a, b, train) = (p(&dir, "a.json"), p(&dir, "b.json"), p(&dir, "train.csv"));
    ok(&[
        "split",
        "--in",
        s(&data),
        "--seed",
        "9",
        "--out",
        s(&a),
        "--train-out",
        s(&train),
    ]);
    ok(&["split", "--in", s(&data), "--seed", "9", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(read_path(&train).unwrap().len(), 192);
}

#[test]
fn dirichlet_generation() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "dir.json");
    ok(&[
        "gen-dirichlet",
        "--discriminants",
        "-4,5,-3",
        "--out",
        s(&out),
    ]);
    assert_eq!(read_path(&out).unwrap().len(), 3);
    assert_eq!(
        code(&run(&[
            "gen-dirichlet",
            "--discriminants",
            "12,8",
            "--out",
            s(&out)
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "gen-dirichlet",
            "--discriminants",
            "9",
            "--out",
            s(&out)
        ])),
        2
    );
}
