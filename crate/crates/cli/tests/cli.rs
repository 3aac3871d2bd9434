use std::path::Path;
use std::process::Command;

use streamad::{AurocMetric, DetectorSpec, Pipeline};
use streamad_cli::{parse_config, prequential, run, CliError, InputSpec, Overrides, RunOptions};

const BIN: &str = env!("CARGO_BIN_EXE_streamad");

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn synthetic_config(detector: &str, dir: &Path) -> String {
    format!(
        r#"
seed = 42

[input]
kind = "synthetic"
n = 1000
m = 2
rate = 0.05

[[pipeline.detectors]]
kind = "{detector}"

[output]
scores = "{scores}"
report = "{report}"
"#,
        scores = dir.join("scores.csv").display(),
        report = dir.join("report.toml").display(),
    )
}

#[test]
fn minimal_config_fills_defaults() {
    let c = parse_config(
        r#"
seed = 7
[input]
kind = "synthetic"
n = 100
m = 2
rate = 0.1
[[pipeline.detectors]]
kind = "meandev"
"#,
    )
    .unwrap();
    assert_eq!(c.seed, 7);
    assert!(!c.shuffle);
    assert_eq!(c.pipeline.detectors, vec![DetectorSpec::meandev()]);
    assert_eq!(c.metric.window, None);
    assert_eq!(c.output.scores, None);

    let c = parse_config(
        "seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.0\n\
         [[pipeline.detectors]]\nkind = \"loda\"\nbins = 7\n",
    )
    .unwrap();
    match &c.pipeline.detectors[0] {
        DetectorSpec::Loda { k, bins, warmup } => assert_eq!((*k, *bins, *warmup), (100, 7, 256)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn misspelled_detector_names_the_field() {
    let err = parse_config(
        "seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.1\n\
         [[pipeline.detectors]]\nkind = \"lodaa\"\n",
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, CliError::Config(_)));
    assert!(msg.contains("pipeline.detectors"), "{msg}");
    assert!(msg.contains("lodaa"), "{msg}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_config(
        "seed = 1\ncolour = 3\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.1\n\
         [[pipeline.detectors]]\nkind = \"knn\"\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");

    let err = parse_config(
        "seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.1\n\
         [[pipeline.detectors]]\nkind = \"knn\"\nwindw = 5\n",
    )
    .unwrap_err();
    assert!(err.to_string().contains("windw"), "{err}");
}

#[test]
fn two_detectors_need_an_ensemble() {
    let base = "seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.1\n\
                [[pipeline.detectors]]\nkind = \"knn\"\n[[pipeline.detectors]]\nkind = \"meandev\"\n";
    let err = parse_config(base).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let ok = format!("{base}[pipeline.ensemble]\nstrategy = \"median\"\n");
    assert!(parse_config(&ok).is_ok());
}

#[test]
fn invalid_parameters_are_config_errors() {
    for body in [
        "[[pipeline.detectors]]\nkind = \"knn\"\nk = 0\n",
        "[[pipeline.detectors]]\nkind = \"meandev\"\n[[pipeline.postprocessors]]\nkind = \"ewma\"\nalpha = 1.5\n",
        "[[pipeline.detectors]]\nkind = \"meandev\"\n[metric]\nwindow = 0\n",
    ] {
        let text = format!("seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 0.1\n{body}");
        assert_eq!(parse_config(&text).unwrap_err().exit_code(), 1, "{body}");
    }
    let text = "seed = 1\n[input]\nkind = \"synthetic\"\nn = 10\nm = 1\nrate = 2.0\n\
                [[pipeline.detectors]]\nkind = \"meandev\"\n";
    assert_eq!(parse_config(text).unwrap_err().exit_code(), 1);
}

#[test]
fn synthetic_loda_run_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        &synthetic_config("loda", dir.path()),
    );

    let first = Command::new(BIN).arg(&cfg).output().unwrap();
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert!(stdout.contains("Area under ROC metric is"), "{stdout}");
    let scores_a = std::fs::read(dir.path().join("scores.csv")).unwrap();
    let report_a = std::fs::read(dir.path().join("report.toml")).unwrap();

    let second = Command::new(BIN).arg(&cfg).output().unwrap();
    assert!(second.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("scores.csv")).unwrap(),
        scores_a
    );
    assert_eq!(
        std::fs::read(dir.path().join("report.toml")).unwrap(),
        report_a
    );

    let text = String::from_utf8(scores_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,raw_score,final_score,label"));
    assert_eq!(lines.count(), 1000);

    let report: toml::Table = toml::from_str(&String::from_utf8(report_a).unwrap()).unwrap();
    assert_eq!(report["n"].as_integer(), Some(1000));
    assert_eq!(report["metric_name"].as_str(), Some("auroc"));
    assert_eq!(report["seed"].as_integer(), Some(42));
    assert!(!report.contains_key("seconds"));
    let auc = report["metric_value"].as_float().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert_eq!(report["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(
        report["config"]["pipeline"]["detectors"][0]["kind"].as_str(),
        Some("loda")
    );
}

#[test]
fn report_echo_reparses_to_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(&synthetic_config("hst", dir.path())).unwrap();
    assert_eq!(parse_config(&config.echo()).unwrap(), config);
}

#[test]
fn runner_matches_library_loop() {
    let dir = tempfile::tempdir().unwrap();
    let text = synthetic_config("knn", dir.path()).replace(
        "[output]",
        "[[pipeline.postprocessors]]\nkind = \"ewma\"\nalpha = 0.3\n\
         [pipeline.calibrator]\nkind = \"gaussian_tail\"\n[output]",
    );
    let config = parse_config(&text).unwrap();
    let summary = run(&config, &RunOptions::default()).unwrap();

    let mut pipeline = Pipeline::new(&config.pipeline, config.seed).unwrap();
    let mut metric = AurocMetric::new();
    for x in streamad::generate_synthetic(1000, 2, 0.05, 42).unwrap() {
        let out = pipeline.fit_score_partial(&x.features, x.label).unwrap();
        metric.push(x.label.unwrap(), out.score).unwrap();
    }
    assert_eq!(summary.n, 1000);
    assert_eq!(summary.metric, Some(metric.get().unwrap()));

    let mut rows = Vec::new();
    let mut again = Pipeline::new(&config.pipeline, config.seed).unwrap();
    let mut m2 = AurocMetric::new();
    prequential(config.open_stream().unwrap(), &mut again, &mut m2, |r| {
        rows.push(r.clone());
        Ok(())
    })
    .unwrap();
    let scores = std::fs::read_to_string(dir.path().join("scores.csv")).unwrap();
    for (line, r) in scores.lines().skip(1).zip(&rows) {
        let expected = format!(
            "{},{},{},{}",
            r.index,
            streamad_cli::format_score(r.raw),
            streamad_cli::format_score(r.score),
            r.label.unwrap()
        );
        assert_eq!(line, expected);
    }
}

#[test]
fn unlabeled_csv_reports_undefined_metric() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "x,y\n0.1,0.2\n0.3,0.1\n5.0,4.0\n");
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!(
            "seed = 3\n[input]\nkind = \"csv\"\npath = \"{}\"\nlabel_column = \"none\"\nhas_header = true\n\
             [[pipeline.detectors]]\nkind = \"meandev\"\n[output]\nscores = \"{}\"\nreport = \"{}\"\n",
            data.display(),
            dir.path().join("s.csv").display(),
            dir.path().join("r.toml").display()
        ),
    );
    let out = Command::new(BIN).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Area under ROC metric is undefined"));
    let report: toml::Table =
        toml::from_str(&std::fs::read_to_string(dir.path().join("r.toml")).unwrap()).unwrap();
    assert_eq!(report["metric_value"].as_str(), Some("undefined"));
    assert_eq!(report["n"].as_integer(), Some(3));
    let scores = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(scores.lines().skip(1).all(|l| l.ends_with(',')));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        "seed = 3\n[input]\nkind = \"csv\"\npath = \"/nonexistent/data.csv\"\n\
         [[pipeline.detectors]]\nkind = \"meandev\"\n",
    );
    let out = Command::new(BIN).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("io error") && stderr.contains("/nonexistent/data.csv"),
        "{stderr}"
    );

    let out = Command::new(BIN)
        .arg(dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "seed = \"x\"\n");
    let out = Command::new(BIN).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stage_error_flushes_partial_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "0,0\n1,1\n1e300,1e300\n2,2\n");
    let scores = dir.path().join("s.csv");
    let cfg = write(
        dir.path(),
        "run.toml",
        &format!(
            "seed = 1\n[input]\nkind = \"csv\"\npath = \"{}\"\nlabel_column = \"none\"\n\
             [[pipeline.detectors]]\nkind = \"knn\"\n[pipeline.calibrator]\nkind = \"conformal\"\nwindow = 10\n\
             [output]\nscores = \"{}\"\n",
            data.display(),
            scores.display()
        ),
    );
    let out = Command::new(BIN).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance 2"));
    let text = std::fs::read_to_string(&scores).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn malformed_csv_row_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "0,0,1\n1,x,0\n");
    let text = format!(
        "seed = 1\n[input]\nkind = \"csv\"\npath = \"{}\"\n[[pipeline.detectors]]\nkind = \"meandev\"\n",
        data.display()
    );
    let err = run(&parse_config(&text).unwrap(), &RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn flags_override_paths_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        &synthetic_config("meandev", dir.path()),
    );
    let other = dir.path().join("other.csv");
    let out = Command::new(BIN)
        .arg(&cfg)
        .args(["--seed", "7", "--scores"])
        .arg(&other)
        .arg("--timing")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(other.exists());
    let report: toml::Table =
        toml::from_str(&std::fs::read_to_string(dir.path().join("report.toml")).unwrap()).unwrap();
    assert_eq!(report["seed"].as_integer(), Some(7));
    assert!(report["seconds"].as_float().unwrap() >= 0.0);

    let mut config = parse_config(&synthetic_config("meandev", dir.path())).unwrap();
    let before = config.digest();
    Overrides {
        seed: Some(7),
        ..Overrides::default()
    }
    .apply(&mut config)
    .unwrap();
    assert_ne!(config.digest(), before);
    let err = Overrides {
        input: Some("x.csv".into()),
        ..Overrides::default()
    }
    .apply(&mut config)
    .unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(matches!(config.input, InputSpec::Synthetic { .. }));
}

#[test]
fn shuffle_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        synthetic_config("meandev", dir.path()).replace("seed = 42", "seed = 42\nshuffle = true");
    let config = parse_config(&text).unwrap();
    let a: Vec<_> = config.open_stream().unwrap().map(|x| x.unwrap()).collect();
    let b: Vec<_> = config.open_stream().unwrap().map(|x| x.unwrap()).collect();
    assert_eq!(a, b);
    let plain = streamad::generate_synthetic(1000, 2, 0.05, 42).unwrap();
    assert_ne!(a, plain);
    assert!(a.iter().enumerate().all(|(i, x)| x.index == i as u64));
}

#[test]
fn bundled_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            streamad_cli::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
