use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stpl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("running stpl")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Trains the blobs fixture into `dir`, returning the model path.
fn train_blobs(dir: &Path, extra: &[&str]) -> PathBuf {
    let model = dir.join("blobs.stpl");
    let metrics = dir.join("blobs.tsv");
    let config = repo().join("configs/blobs.toml");
    let mut args = vec![
        "train",
        "--config",
        path_str(&config),
        "--out",
        path_str(&model),
        "--metrics",
        path_str(&metrics),
    ];
    args.extend_from_slice(extra);
    let out = stpl(&args);
    assert!(out.status.success(), "train failed: {}", stderr(&out));
    model
}

#[test]
fn train_eval_predict_on_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_blobs(dir.path(), &[]);

    let train_csv = repo().join("data/blobs/train.csv");
    let out = stpl(&[
        "eval",
        "--model",
        path_str(&model),
        "--test",
        path_str(&train_csv),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("accuracy\t100.00"));

    let input = dir.path().join("three.csv");
    std::fs::write(&input, "-4.0,0.0\n4.0,0.5\n-3.5,-0.2\n").unwrap();
    let predictions = dir.path().join("pred.txt");
    let out = stpl(&[
        "predict",
        "--model",
        path_str(&model),
        "--input",
        path_str(&input),
        "--output",
        path_str(&predictions),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let lines: Vec<String> = std::fs::read_to_string(&predictions)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(lines, vec!["0", "1", "0"]);

    let metrics = std::fs::read_to_string(dir.path().join("blobs.tsv")).unwrap();
    assert!(metrics.lines().any(|l| l.starts_with("test_accuracy\t")));
}

#[test]
fn wrong_feature_count_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_blobs(dir.path(), &[]);
    let wide = dir.path().join("wide.csv");
    std::fs::write(&wide, "1,2,3,0\n4,5,6,1\n").unwrap();
    let out = stpl(&[
        "eval",
        "--model",
        path_str(&model),
        "--test",
        path_str(&wide),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("dimension mismatch"),
        "{}",
        stderr(&out)
    );

    let out = stpl(&[
        "predict",
        "--model",
        path_str(&model),
        "--input",
        path_str(&wide),
        "--output",
        path_str(&dir.path().join("p.txt")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn invalid_sampling_ratio_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo().join("configs/blobs.toml"))
        .unwrap()
        .replace("sampling_ratio = 0.8", "sampling_ratio = 1.5")
        .replace("../data/", &format!("{}/data/", repo().display()));
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, text).unwrap();
    let out = stpl(&[
        "train",
        "--config",
        path_str(&config),
        "--out",
        path_str(&dir.path().join("m")),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("sampling_ratio"), "{}", stderr(&out));
}

#[test]
fn base_seed_controls_the_model_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = std::fs::read(train_blobs(a.path(), &["--base-seed", "5"])).unwrap();
    let again = std::fs::read(train_blobs(b.path(), &["--base-seed", "5"])).unwrap();
    let other = std::fs::read(train_blobs(c.path(), &["--base-seed", "6"])).unwrap();
    assert_eq!(first, again);
    assert_ne!(first, other);
}

#[test]
fn corrupted_model_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_blobs(dir.path(), &[]);
    let mut bytes = std::fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&model, bytes).unwrap();
    let test_csv = repo().join("data/blobs/test.csv");
    let out = stpl(&[
        "eval",
        "--model",
        path_str(&model),
        "--test",
        path_str(&test_csv),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).to_lowercase().contains("checksum"),
        "{}",
        stderr(&out)
    );
}
