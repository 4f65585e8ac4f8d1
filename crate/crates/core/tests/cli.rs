use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tvgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvgan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn bundled_config() -> String {
    fs::read_to_string(config_path("train_mixture.toml")).unwrap()
}

#[test]
fn train_missing_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = dir.path().join("out");
    let o = tvgan(&[
        "train",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"), "{}", stderr(&o));
}

#[test]
fn train_invalid_config_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, bundled_config().replace("alpha = 1.0", "alpha = 0.9")).unwrap();
    let out = dir.path().join("out");
    let o = tvgan(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("datasets.alpha"), "{}", stderr(&o));
}

#[test]
fn train_unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, bundled_config().replace("seed = 7\n", "seed = 7\nkk = 2\n")).unwrap();
    let out = dir.path().join("out");
    let o = tvgan(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kk") && err.contains("line"), "{err}");
}

#[test]
fn train_zero_epochs_writes_header_only_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    fs::write(&cfg, bundled_config().replace("epochs = 5", "epochs = 0")).unwrap();
    let out = dir.path().join("out");
    let o = tvgan(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics, "step,d_loss,g_loss,d_real,d_fake,tv,jsd\n");
    for f in [
        "generator.json",
        "generator.bin",
        "discriminator.json",
        "discriminator.bin",
        "samples.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(
        manifest["config_text"],
        fs::read_to_string(&cfg).unwrap().as_str()
    );
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 6);
}

#[test]
fn train_bundled_config_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = tvgan(&[
        "train",
        "--config",
        config_path("train_mixture.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let last = metrics.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "5000");
    for v in &fields[1..5] {
        assert!(v.parse::<f64>().unwrap().is_finite(), "{last}");
    }
}

#[test]
fn train_seed_override_is_recorded_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    fs::write(
        &cfg,
        bundled_config()
            .replace("epochs = 5", "epochs = 1")
            .replace("total_samples_n = 128000", "total_samples_n = 1280")
            .replace("eval_every = 1000", "eval_every = 5"),
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = tvgan(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "99",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = run("a");
    let b = run("b");
    let ma = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read_to_string(b.join("metrics.csv")).unwrap());
    assert_eq!(ma.lines().count(), 11);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 99);
    assert!(manifest["resolved_config"]
        .as_str()
        .unwrap()
        .contains("seed = 99"));
}

#[test]
fn oracle_clean_instance_passes() {
    let o = tvgan(&[
        "oracle",
        "--instance",
        config_path("oracle_clean.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.starts_with("check,lhs,rhs,slack,holds\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn oracle_shift_instance_reports_tight_channel() {
    let o = tvgan(&[
        "oracle",
        "--instance",
        config_path("oracle_shift.toml").to_str().unwrap(),
        "--check",
        "channel",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "channel[0]");
    assert!((row[1].parse::<f64>().unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(row[2].parse::<f64>().unwrap(), 0.3);
    assert_eq!(row[4], "true");
}

#[test]
fn oracle_every_bundled_instance_passes_all_checks() {
    for name in [
        "oracle_clean.toml",
        "oracle_shift.toml",
        "oracle_mixture.toml",
    ] {
        let o = tvgan(&["oracle", "--instance", config_path(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
}

#[test]
fn oracle_budget_below_channel_weight_is_rejected() {
    let o = tvgan(&[
        "oracle",
        "--instance",
        config_path("oracle_shift.toml").to_str().unwrap(),
        "--check",
        "chain",
        "--delta",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_weights_not_summing_to_one_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = fs::read_to_string(config_path("oracle_mixture.toml"))
        .unwrap()
        .replace("alpha = 0.4", "alpha = 0.3");
    fs::write(&path, text).unwrap();
    let o = tvgan(&["oracle", "--instance", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn sample_ring_has_requested_shape() {
    let o = tvgan(&["sample", "--kind", "ring", "--n", "100", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 100);
    for l in lines {
        let cols: Vec<f64> = l.split_whitespace().map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols.len(), 2);
        let r = (cols[0] * cols[0] + cols[1] * cols[1]).sqrt();
        assert!((r - 1.0).abs() < 0.5, "{r}");
    }
}

#[test]
fn sample_from_spec_file_to_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ring.txt");
    let o = tvgan(&[
        "sample",
        "--spec",
        config_path("ring.toml").to_str().unwrap(),
        "--n",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 50);
}

#[test]
fn sample_zero_count_is_usage_error() {
    let o = tvgan(&["sample", "--kind", "gaussian", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_of_file_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    let o = tvgan(&[
        "sample",
        "--kind",
        "two-gaussians",
        "--n",
        "2000",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = tvgan(&["divergence", p.to_str().unwrap(), p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tv,jsd_nats,method,n_p,n_q"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(row[0].parse::<f64>().unwrap().abs() < 1e-12);
    assert!(row[1].parse::<f64>().unwrap().abs() < 1e-12);
    assert_eq!(&row[2..], &["histogram", "2000", "2000"]);
}

#[test]
fn divergence_with_explicit_bounds_and_bad_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.txt");
    let q = dir.path().join("q.txt");
    fs::write(&p, "0.1\n0.2\n0.3\n").unwrap();
    fs::write(&q, "0.7\n0.8\n0.9\n").unwrap();
    let o = tvgan(&[
        "divergence",
        p.to_str().unwrap(),
        q.to_str().unwrap(),
        "--bounds=0:1",
        "--bins",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let tv: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!((tv - 1.0).abs() < 1e-6, "{row}");
    let o = tvgan(&[
        "divergence",
        p.to_str().unwrap(),
        q.to_str().unwrap(),
        "--bounds=0-1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_missing_file_is_usage_error() {
    let o = tvgan(&["divergence", "/definitely/not/here.txt", "/nor/here.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.txt"));
}

#[test]
fn gradcheck_default_passes() {
    let o = tvgan(&["gradcheck"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let err: f64 = last
        .strip_prefix("max_rel_error=")
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(tvgan(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tvgan(&[]).status.code(), Some(2));
    assert_eq!(tvgan(&["--help"]).status.code(), Some(0));
}
