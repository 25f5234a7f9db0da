use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stein_core::density::spec::DensitySpec;
use stein_core::metrics::{
    fisher_info_distance, kolmogorov_distance, sup_density_distance, tv_l1_distance, wasserstein1_distance,
};
use stein_core::Density;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stein-info"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn density(s: &str) -> Density {
    s.parse::<DensitySpec>().unwrap().build().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn gaussian_and_quartic_configs_pass() {
    for name in ["gaussian.json", "quartic.json"] {
        let o = run(&["verify", "--config", config(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().skip(1).all(|l| l.contains(",true,")), "{name}");
    }
}

#[test]
fn exponential_config_flags_the_kappa1_counterexample() {
    let o = run(&["verify", "--config", config("exponential.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let err = stderr(&o);
    let fails: Vec<&str> = err.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(fails.len(), 1, "{err}");
    assert!(
        fails[0].contains("kappa1") && fails[0].contains("exponential(0.5)"),
        "{err}"
    );
}

#[test]
fn verify_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gaussian.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("report{i}.csv"));
        let o = run(&[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let head = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(head.starts_with("name,target,alternative,observable,lhs,rhs,slack,tolerance,pass,quad_error\n"));
}

#[test]
fn support_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"target": "exp:1", "alternatives": ["exp:2", "gauss:0,1"]}"#,
    );
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("support mismatch"), "{}", stderr(&o));
}

#[test]
fn divergent_fisher_distance_exits_3() {
    // Cauchy alternative: the score difference grows like x, and x² is not Cauchy-integrable.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"target": "gauss:0,1", "alternatives": [{"unnormalized": "1/(1+x^2)", "support": ["-inf", "inf"]}]}"#,
    );
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("fisher"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"target": "exp:1", "alternatives": [], "bogus": 1}"#);
    assert_eq!(
        run(&["verify", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
    let cfg = write_config(dir.path(), r#"{"target": "exp:1", "alternatives": []}"#);
    assert_eq!(
        run(&["verify", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["distance", "--target", "exp:-1", "--alt", "exp:2"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["distance", "--target", "exp:1"]).status.code(), Some(2));
}

#[test]
fn distance_examples() {
    let o = run(&["distance", "--target", "exp:1", "--alt", "exp:2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let value = |metric: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(metric)).unwrap();
        line.rsplit(',').nth(2).unwrap().parse().unwrap()
    };
    for (metric, want) in [
        ("fisher_J", 1.0),
        ("tv_l1", 0.5),
        ("kolmogorov", 0.25),
        ("wasserstein1", 0.5),
        ("sup_density", 1.0),
    ] {
        assert!((value(metric) - want).abs() < 1e-8, "{metric}: {}", value(metric));
    }

    let o = run(&[
        "distance",
        "--target",
        "gauss:0,1",
        "--alt",
        "gauss:0,1",
        "--format",
        "json",
    ]);
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r["value"].as_f64().unwrap().abs() <= 1e-9, "{r}");
    }
}

#[test]
fn json_round_trip_is_bit_identical() {
    let (t, a) = ("gauss:0,1", "gauss:1,1.2");
    let o = run(&["distance", "--target", t, "--alt", a, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let (p, q) = (density(t), density(a));
    let (at, sup) = sup_density_distance(&p, &q).unwrap();
    let want = [
        ("fisher_J", fisher_info_distance(&p, &q).unwrap().value),
        ("tv_l1", tv_l1_distance(&p, &q).unwrap().value),
        ("kolmogorov", kolmogorov_distance(&p, &q).unwrap()),
        ("wasserstein1", wasserstein1_distance(&p, &q).unwrap().value),
        ("sup_density", sup),
    ];
    for (row, (metric, v)) in rows.iter().zip(want) {
        assert_eq!(row["metric"], metric);
        assert_eq!(row["value"].as_f64().unwrap().to_bits(), v.to_bits(), "{metric}");
    }
    assert_eq!(rows[4]["at"].as_f64().unwrap().to_bits(), at.to_bits());
}

#[test]
fn csv_numbers_round_trip() {
    let o = run(&["distance", "--target", "gauss:0,1", "--alt", "gauss:1,1.2"]);
    let text = String::from_utf8(o.stdout).unwrap();
    // Labels such as `gaussian(0,1)` are quoted and hold commas; value is third from the end.
    let tv: f64 = text
        .lines()
        .find(|l| l.starts_with("tv_l1"))
        .unwrap()
        .rsplit(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    let want = tv_l1_distance(&density("gauss:0,1"), &density("gauss:1,1.2"))
        .unwrap()
        .value;
    assert_eq!(tv.to_bits(), want.to_bits());
}

#[test]
fn solve_examples() {
    let value = |args: &[&str]| -> Vec<f64> {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let f = value(&["solve", "--target", "exp:1", "--obs", "poly:0,1", "--at", "1.0"]);
    assert!((f[0] + 1.0).abs() < 1e-9, "{f:?}");
    let f = value(&["solve", "--target", "gauss:0,1", "--obs", "poly:0,1", "--at", "7.3"]);
    assert!((f[0] + 1.0).abs() < 1e-9, "{f:?}");
    let f = value(&["solve", "--target", "gauss:0,1", "--obs", "poly:3", "--at", "-1,0,2.5"]);
    assert_eq!(f.len(), 3);
    assert!(f.iter().all(|v| v.abs() < 1e-12), "{f:?}");
}

#[test]
fn ingest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "# header\n1.0\n2.0\nabc\n").unwrap();
    let o = run(&["ingest", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let flat = dir.path().join("flat.txt");
    std::fs::write(&flat, "3.0\n".repeat(20)).unwrap();
    let o = run(&["ingest", flat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate bandwidth"), "{}", stderr(&o));

    let few = dir.path().join("few.txt");
    std::fs::write(&few, "1\n2\n3\n").unwrap();
    assert_eq!(run(&["ingest", few.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn kde_of_seeded_normals_is_close_in_fisher_distance() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("normals.txt");
    let path = samples.to_str().unwrap();
    let o = run(&[
        "ingest",
        path,
        "--generate",
        "gauss:0,1",
        "--count",
        "100000",
        "--seed",
        "20240611",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["ingest", path, "--target", "gauss:0,1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let j = rows.iter().find(|r| r["metric"] == "fisher_J").unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((0.0..=0.05).contains(&j), "J = {j}");

    // The sample file is usable as an alternative anywhere a density is.
    let o = run(&["distance", "--target", "gauss:0,1", "--alt", &format!("file:{path}")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn generated_samples_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let o = run(&[
            "ingest",
            p.to_str().unwrap(),
            "--generate",
            "exp:2",
            "--count",
            "500",
            "--seed",
            seed,
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(read("a.txt", "7"), read("b.txt", "7"));
    assert_ne!(read("c.txt", "7"), read("d.txt", "8"));
}

#[test]
fn characterize_target_against_itself() {
    let o = run(&["characterize", "--target", "semicircle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["characterize", "--target", "gauss:0,1", "--alt", "quartic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("separation"));
}
