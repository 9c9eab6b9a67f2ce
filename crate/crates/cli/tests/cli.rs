use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use macau_cli::config::Vary;
use macau_cli::{parse_config, parse_config_str, run, split_file, validate, CliError};
use macau_core::synthetic::low_rank_tensor;
use macau_core::{load_observations, save_observations, RngStream};

const MINIMAL: &str = r#"
[sampler]
latent_dim = 4

[[entity]]
name = "rows"
count = 30

[[entity]]
name = "cols"
count = 20

[[relation]]
name = "r"
entities = ["rows", "cols"]
observations = "obs.txt"
alpha = 50.0
"#;

fn write_data(dir: &Path, n_obs: usize) {
    let mut rng = RngStream::new(1, 0).rng();
    let data = low_rank_tensor(&[30, 20], 2, n_obs, 0.1, &mut rng);
    save_observations(dir.join("obs.txt"), &data.observations).unwrap();
}

fn config_with(extra_sampler: &str, options: &str, relation_extra: &str) -> String {
    MINIMAL
        .replace(
            "latent_dim = 4",
            &format!("latent_dim = 4\n{extra_sampler}"),
        )
        .replace("alpha = 50.0", &format!("alpha = 50.0\n{relation_extra}"))
        + options
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config_str(MINIMAL, Path::new("/data")).unwrap();
    assert_eq!(
        (c.sampler.total, c.sampler.burnin, c.sampler.seed),
        (1000, 800, 0)
    );
    assert_eq!(c.options.repetitions, 1);
    assert_eq!(c.options.vary, Vary::Seed);
    assert!(!c.options.center);
    assert_eq!(c.resolve(Path::new("obs.txt")), Path::new("/data/obs.txt"));
}

#[test]
fn burnin_not_below_total_names_both_keys() {
    let err = parse_config_str(
        &config_with("total = 10\nburnin = 10", "", ""),
        Path::new("."),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("sampler.burnin") && msg.contains("sampler.total"),
        "{msg}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn alpha_is_mandatory() {
    let text = MINIMAL.replace("alpha = 50.0\n", "");
    let msg = parse_config_str(&text, Path::new("."))
        .unwrap_err()
        .to_string();
    assert!(
        msg.contains("relation[0]") && msg.contains("alpha"),
        "{msg}"
    );
}

#[test]
fn unknown_keys_rejected_with_path() {
    let text = MINIMAL.replace("count = 30", "count = 30\ncuont = 3");
    let msg = parse_config_str(&text, Path::new("."))
        .unwrap_err()
        .to_string();
    assert!(msg.contains("entity[0]") && msg.contains("cuont"), "{msg}");
    let text = MINIMAL.replace("latent_dim = 4", "latent_dim = 4\nburn_in = 3");
    assert!(parse_config_str(&text, Path::new("."))
        .unwrap_err()
        .to_string()
        .contains("sampler"));
}

#[test]
fn constraint_violations_are_reported() {
    let cases = [
        (
            MINIMAL.replace("latent_dim = 4", "latent_dim = 0"),
            "latent_dim",
        ),
        (config_with("", "", "holdout = 1.5"), "holdout"),
        (
            config_with("", "", "holdout = 0.2\ntest = \"t.txt\""),
            "mutually exclusive",
        ),
        (MINIMAL.replace("alpha = 50.0", "alpha = -1.0"), "alpha"),
        (
            MINIMAL.replace("[\"rows\", \"cols\"]", "[\"rows\", \"colz\"]"),
            "colz",
        ),
        (
            config_with("", "\n[options]\nrepetitions = 0\n", ""),
            "repetitions",
        ),
        (
            config_with("", "\n[options]\nclamp = [5.0, 1.0]\n", ""),
            "clamp",
        ),
    ];
    for (text, needle) in cases {
        let msg = parse_config_str(&text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(msg.contains(needle), "{needle}: {msg}");
    }
}

#[test]
fn split_file_partitions_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("ten.txt");
    let text: String = (1..=10).map(|i| format!("{i} 1 {i}.5\n")).collect();
    fs::write(&obs, text).unwrap();
    let (train, test) = split_file(&obs, 0.5, 3, None).unwrap();
    let (a, b) = (
        load_observations(&train, 2).unwrap(),
        load_observations(&test, 2).unwrap(),
    );
    assert_eq!((a.len(), b.len()), (5, 5));
    let all: HashSet<usize> = a.iter().chain(&b).map(|o| o.index[0]).collect();
    assert_eq!(all.len(), 10);
    let first = fs::read(&test).unwrap();
    split_file(&obs, 0.5, 3, None).unwrap();
    assert_eq!(fs::read(&test).unwrap(), first);
    assert!(split_file(&obs, 1.0, 3, None).is_err());
}

fn run_dir(dir: &Path, text: &str) -> macau_cli::RunReport {
    fs::write(dir.join("run.toml"), text).unwrap();
    run(&parse_config(&dir.join("run.toml")).unwrap()).unwrap()
}

fn csv_rmse(path: &Path) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "error").unwrap();
    let errs: Vec<f64> = lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
}

#[test]
fn repeated_run_reports_recomputable_statistics() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 300);
    let text = config_with(
        "total = 40\nburnin = 20\nseed = 5",
        "\n[options]\nrepetitions = 3\n",
        "holdout = 0.2",
    );
    let report = run_dir(dir.path(), &text);
    assert_eq!(report.repetitions.len(), 3);
    let s = &report.summary["r"];
    assert_eq!(s.values.len(), 3);
    let from_files: Vec<f64> = report
        .repetitions
        .iter()
        .map(|r| csv_rmse(&r.prediction_files["r"]))
        .collect();
    let mean = from_files.iter().sum::<f64>() / 3.0;
    let sd = (from_files.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
    assert!((mean - s.mean).abs() < 1e-9 && (sd - s.std.unwrap()).abs() < 1e-9);
    for r in &report.repetitions {
        assert_eq!(r.test_cells["r"], 60);
        assert_eq!(r.samples, 20);
        assert_eq!(r.sweep_seconds.len(), 40);
    }
    assert!(dir.path().join("output/report.json").exists());
    // seeds differ, split is shared
    assert_ne!(report.repetitions[0].seed, report.repetitions[1].seed);
    let cells = |k: usize| {
        let t = fs::read_to_string(&report.repetitions[k].prediction_files["r"]).unwrap();
        t.lines()
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
    };
    assert_eq!(cells(0), cells(1));
}

#[test]
fn vary_split_changes_test_cells() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 300);
    let text = config_with(
        "total = 6\nburnin = 3",
        "\n[options]\nrepetitions = 2\nvary = \"split\"\n",
        "holdout = 0.3",
    );
    let report = run_dir(dir.path(), &text);
    let a = fs::read_to_string(&report.repetitions[0].prediction_files["r"]).unwrap();
    let b = fs::read_to_string(&report.repetitions[1].prediction_files["r"]).unwrap();
    assert_ne!(a.lines().nth(1), b.lines().nth(1));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 300);
    let text = config_with(
        "total = 20\nburnin = 10\nseed = 9",
        "\n[options]\nrepetitions = 2\nparallel_repetitions = true\n",
        "holdout = 0.25",
    );
    let a = run_dir(dir.path(), &text);
    let first = fs::read(&a.repetitions[1].prediction_files["r"]).unwrap();
    let b = run_dir(dir.path(), &text);
    assert_eq!(
        fs::read(&b.repetitions[1].prediction_files["r"]).unwrap(),
        first
    );
    assert_eq!(a.summary, b.summary);
    for (x, y) in a.repetitions.iter().zip(&b.repetitions) {
        assert_eq!(
            (x.seed, &x.rmse, x.final_train_rmse, &x.cg),
            (y.seed, &y.rmse, y.final_train_rmse, &y.cg)
        );
    }

    // sequential execution gives the same predictions
    let seq = text.replace(
        "parallel_repetitions = true",
        "parallel_repetitions = false",
    );
    let c = run_dir(dir.path(), &seq);
    assert_eq!(
        fs::read(&c.repetitions[1].prediction_files["r"]).unwrap(),
        first
    );
}

#[test]
fn test_file_must_be_disjoint_from_training() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 100);
    let obs = load_observations(dir.path().join("obs.txt"), 2).unwrap();
    save_observations(dir.path().join("test.txt"), &obs[..3]).unwrap();
    fs::write(
        dir.path().join("run.toml"),
        config_with("total = 4\nburnin = 2", "", "test = \"test.txt\""),
    )
    .unwrap();
    let err = run(&parse_config(&dir.path().join("run.toml")).unwrap()).unwrap_err();
    assert!(matches!(err, CliError::Validation(_)), "{err}");
}

#[test]
fn centering_and_clamp_apply_to_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = RngStream::new(2, 0).rng();
    let mut data = low_rank_tensor(&[30, 20], 2, 300, 0.1, &mut rng);
    for o in &mut data.observations {
        o.value += 3.0;
    }
    save_observations(dir.path().join("obs.txt"), &data.observations).unwrap();
    let text = config_with(
        "total = 30\nburnin = 15",
        "\n[options]\ncenter = true\nclamp = [2.0, 4.0]\n",
        "holdout = 0.2",
    );
    let report = run_dir(dir.path(), &text);
    let csv = fs::read_to_string(&report.repetitions[0].prediction_files["r"]).unwrap();
    for line in csv.lines().skip(1) {
        let mean: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((2.0..=4.0).contains(&mean));
    }
}

const PARALLEL: &str = r#"
[sampler]
latent_dim = 2
total = 4
burnin = 2

[[entity]]
name = "rows"
count = 30

[[entity]]
name = "cols"
count = 20

[[relation]]
name = "r"
entities = ["rows", "cols"]
observations = "obs.txt"
alpha = 1.0

[[relation]]
name = "s"
entities = ["rows", "cols"]
observations = "obs.txt"
alpha = 1.0
holdout = 0.5
"#;

#[test]
fn parallel_relations_fail_validation_before_sampling() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 50);
    fs::write(dir.path().join("run.toml"), PARALLEL).unwrap();
    let config = parse_config(&dir.path().join("run.toml")).unwrap();
    assert!(!validate(&config).unwrap().ok());
    let err = run(&config).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("not factorizable"), "{err}");
    assert!(!dir.path().join("output").exists());
}

fn macau(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_macau"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 200);
    let d = dir.path();
    fs::write(
        d.join("ok.toml"),
        config_with("total = 6\nburnin = 3", "", "holdout = 0.2"),
    )
    .unwrap();
    fs::write(
        d.join("bad.toml"),
        config_with("total = 3\nburnin = 3", "", ""),
    )
    .unwrap();
    fs::write(d.join("parallel.toml"), PARALLEL).unwrap();

    let out = macau(&["--threads", "2", "run", "ok.toml", "--seed", "4"], d);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("test RMSE"));
    assert!(d.join("output/predictions_r_rep1.csv").exists());

    assert_eq!(macau(&["validate", "ok.toml"], d).status.code(), Some(0));
    assert_eq!(macau(&["run", "bad.toml"], d).status.code(), Some(2));
    assert_eq!(macau(&["run", "missing.toml"], d).status.code(), Some(2));
    let out = macau(&["validate", "parallel.toml"], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not factorizable"));

    let out = macau(&["split", "obs.txt", "0.25", "7"], d);
    assert!(out.status.success());
    assert_eq!(
        load_observations(d.join("obs.test.txt"), 2).unwrap().len(),
        50
    );
    assert_eq!(
        load_observations(d.join("obs.train.txt"), 2).unwrap().len(),
        150
    );
}

#[test]
fn feature_files_are_loaded_and_split_with_observations() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), 120);
    let d = dir.path();
    let dense: String = (0..30)
        .map(|i| format!("{},{}\n", i as f64 * 0.1, 1.0 - i as f64 * 0.05))
        .collect();
    fs::write(d.join("rows.csv"), dense).unwrap();
    let sparse: String = std::iter::once("%%shape 20 3\n".to_string())
        .chain((1..=20).map(|i| format!("{i} {} 1.0\n", i % 3 + 1)))
        .collect();
    fs::write(d.join("cols.txt"), sparse).unwrap();
    let rel: String = (0..120)
        .map(|i| format!("{}\n", (i % 7) as f64 * 0.2))
        .collect();
    fs::write(d.join("rel.csv"), rel).unwrap();
    let text = MINIMAL
        .replace(
            "count = 30",
            "count = 30\nfeatures = \"rows.csv\"\nsolver = \"direct\"",
        )
        .replace(
            "count = 20",
            "count = 20\nfeatures = \"cols.txt\"\nfeature_format = \"sparse\"\nsolver = \"cg\"",
        )
        .replace(
            "alpha = 50.0",
            "alpha = 50.0\nholdout = 0.25\nfeatures = \"rel.csv\"",
        )
        .replace("latent_dim = 4", "latent_dim = 3\ntotal = 8\nburnin = 4");
    let report = run_dir(d, &text);
    let rep = &report.repetitions[0];
    assert_eq!(rep.test_cells["r"], 30);
    assert!(rep.cg.solves > 0);
    assert!(rep.rmse["r"].is_finite());
}
