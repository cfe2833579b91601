use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use pcma::io::{load_dataset, read_table, write_dataset, DataPaths};
use pcma::options::{Ci, CovariateMode, Resample, Standardize};
use pcma::report::{render, Coefficient, ComponentReport, DataSummary, Diagnostics, FitReport, Settings};
use pcma_core::simgen::PathCoefficients;
use pcma_core::{generate, SimScenario};

fn pcma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcma")).args(args).output().unwrap()
}

fn toy(dir: &Path) -> DataPaths {
    let paths = vec![PathCoefficients::new(2.0, 1.5, 1.0)];
    let sc = SimScenario::new(50, paths, vec![4.0, 2.0, 1.0], vec![3.0, 2.0, 1.5, 1.0], 5).unwrap();
    write_dataset(dir, &generate(&sc).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fit_args<'a>(paths: &'a DataPaths, out: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "fit",
        "--exposures",
        s(&paths.exposures),
        "--mediators",
        s(&paths.mediators),
        "--outcome",
        s(&paths.outcome),
        "--bootstrap",
        "200",
        "--out",
        s(out),
    ];
    v.extend_from_slice(extra);
    v
}

fn load_report(p: &Path) -> FitReport {
    FitReport::from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn toy_fit_has_a_component_with_finite_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("r.json");
    let o = pcma(&fit_args(&paths, &out, &[]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = load_report(&out);
    assert!(!r.components.is_empty());
    assert_eq!((r.data.n, r.data.p, r.data.q, r.data.s), (50, 3, 4, 1));
    for c in r.all_components() {
        assert_eq!(c.coefficients.len(), 4);
        for k in &c.coefficients {
            assert!(k.ci_lower.is_finite() && k.ci_upper.is_finite());
            assert!(k.ci_lower <= k.ci_upper);
        }
    }
}

#[test]
fn non_numeric_outcome_cell_cites_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let text = std::fs::read_to_string(&paths.outcome).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[7] = "abc".into(); // data row 7 follows the header
    std::fs::write(&paths.outcome, lines.join("\n") + "\n").unwrap();
    let o = pcma(&fit_args(&paths, &dir.path().join("r.json"), &[]));
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("row 7"), "{msg}");
    assert!(msg.contains("Y.csv"), "{msg}");
}

#[test]
fn zero_components_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("r.json");
    let o = pcma(&fit_args(&paths, &out, &["--components", "0"]));
    assert_eq!(o.status.code(), Some(0));
    let r = load_report(&out);
    assert!(r.components.is_empty() && r.excluded.is_empty());
}

#[test]
fn fit_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(pcma(&fit_args(&paths, &a, &["--seed", "9", "--threads", "1"])).status.success());
    assert!(pcma(&fit_args(&paths, &b, &["--seed", "9", "--threads", "4"])).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    assert!(pcma(&fit_args(&paths, &c, &["--seed", "10"])).status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pcma(&[
            "simulate", "--scenario", "small", "--n", "100", "--replicates", "2", "--seed", "1", "--out", s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("method,component,p,q,n,replicates,identified_pct,sim_phi_mean"));
    assert!(lines[1].starts_with("PCA-HP,1,5,10,100,2,"));
    assert!(lines[3].starts_with("PCMA,1,5,10,100,2,"));
}

#[test]
fn simulate_rejects_bad_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sc.json");
    std::fs::write(&f, r#"{"n": 1, "paths": [], "exposure_spectrum": [1], "mediator_spectrum": [1]}"#).unwrap();
    assert_eq!(pcma(&["simulate", "--scenario", s(&f), "--replicates", "1"]).status.code(), Some(2));
    std::fs::write(&f, "{not json").unwrap();
    assert_eq!(pcma(&["simulate", "--scenario", s(&f), "--replicates", "1"]).status.code(), Some(2));
    assert_eq!(pcma(&["simulate", "--replicates", "0"]).status.code(), Some(2));
}

#[test]
fn scenario_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sc.json");
    std::fs::write(
        &f,
        r#"{"n": 120, "p": 3, "q": 4,
            "paths": [{"alpha": 2, "beta": 2, "gamma": 1}],
            "exposure_spectrum": {"leading": 4, "ratio": 0.5},
            "mediator_spectrum": [30, 20, 10, 5]}"#,
    )
    .unwrap();
    let o = pcma(&["simulate", "--scenario", s(&f), "--replicates", "2", "--methods", "pcma", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["method"], "PCMA");
    assert_eq!(rows[0]["n"], 120);
}

#[test]
fn dataset_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let sc = SimScenario::small(40, 3).unwrap();
    let mut data = generate(&sc).unwrap();
    data.x[(0, 0)] = 0.1 + 0.2;
    data.x[(1, 0)] = -1e-300;
    data.m[(0, 1)] = f64::MAX;
    data.m[(1, 1)] = 5e-324;
    let paths = write_dataset(dir.path(), &data).unwrap();
    let back = load_dataset(&paths).unwrap();
    assert_eq!(back.data, data);
    assert_eq!(back.exposure_names, vec!["x1", "x2", "x3", "x4", "x5"]);
}

#[test]
fn intercept_is_added_to_covariates() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = toy(dir.path());
    let w = dir.path().join("age.csv");
    std::fs::write(&w, (0..50).fold("age\n".to_owned(), |acc, i| acc + &format!("{}\n", 40 + (i * 7) % 23))).unwrap();
    paths.covariates = Some(w);
    let d = load_dataset(&paths).unwrap();
    assert_eq!(d.data.s(), 2);
    assert_eq!(d.covariate_names, vec!["(intercept)", "age"]);
    assert!(d.data.w.column(0).iter().all(|&v| v == 1.0));
    assert_eq!(d.data.w[(1, 1)], 47.0);

    for mode in ["in-model", "pre-adjust"] {
        let out = dir.path().join(format!("{mode}.json"));
        let mut args = fit_args(&paths, &out, &["--covariate-mode", mode]);
        args.extend(["--covariates", s(paths.covariates.as_ref().unwrap())]);
        let o = pcma(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let r = load_report(&out);
        let s_want = if mode == "in-model" { 2 } else { 1 };
        assert_eq!(r.data.s, s_want);
    }
}

#[test]
fn input_shape_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("r.json");

    let short = dir.path().join("short.csv");
    let text = std::fs::read_to_string(&paths.outcome).unwrap();
    std::fs::write(&short, text.lines().take(30).collect::<Vec<_>>().join("\n")).unwrap();
    let bad = DataPaths {
        outcome: short.clone(),
        ..paths.clone()
    };
    let o = pcma(&fit_args(&bad, &out, &[]));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("short.csv"));

    let wide = DataPaths {
        outcome: paths.exposures.clone(),
        ..paths.clone()
    };
    assert_eq!(pcma(&fit_args(&wide, &out, &[])).status.code(), Some(2));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3\n").unwrap();
    let e = read_table(&ragged).unwrap_err();
    assert!(e.to_string().contains("row 2"), "{e}");

    let missing = DataPaths {
        exposures: PathBuf::from("/no/such/x.csv"),
        ..paths.clone()
    };
    assert_eq!(pcma(&fit_args(&missing, &out, &[])).status.code(), Some(2));
    assert_eq!(pcma(&fit_args(&paths, &out, &["--components", "9"])).status.code(), Some(2));
    assert_eq!(pcma(&fit_args(&paths, &out, &["--level", "1.5"])).status.code(), Some(2));
    assert_eq!(pcma(&fit_args(&paths, &out, &["--bootstrap", "10"])).status.code(), Some(2));
    assert_eq!(pcma(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn strict_mode_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("r.json");
    let o = pcma(&fit_args(&paths, &out, &["--max-sweeps", "1", "--strict", "--exhaustive"]));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let r = load_report(&out);
    assert!(r.non_converged() > 0);
    let o = pcma(&fit_args(&paths, &out, &["--max-sweeps", "1", "--exhaustive"]));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn csv_exports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("coef.csv");
    assert!(pcma(&fit_args(&paths, &out, &["--format", "csv", "--exhaustive"])).status.success());
    let coef = std::fs::read_to_string(&out).unwrap();
    assert!(coef.starts_with("component,significant,quantity,estimate"));
    assert_eq!(coef.lines().count(), 1 + 3 * 4);
    let loadings = std::fs::read_to_string(dir.path().join("coef.loadings.csv")).unwrap();
    assert_eq!(loadings.lines().count(), 1 + 3 * (3 + 4));
}

#[test]
fn report_rendering_matches_serialized_values() {
    let dir = tempfile::tempdir().unwrap();
    let paths = toy(dir.path());
    let out = dir.path().join("r.json");
    assert!(pcma(&fit_args(&paths, &out, &["--exhaustive"])).status.success());
    let r = load_report(&out);
    let o = pcma(&["report", "--input", s(&out), "--top-k", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, render(&r, 3));

    // Every coefficient row, read back from the text, equals the report.
    let mut rows = text.lines().map(str::split_whitespace).filter_map(|mut f| {
        let name = f.next()?;
        ["alpha", "beta", "IE", "DE"].contains(&name).then(|| f.map(str::to_owned).collect::<Vec<_>>())
    });
    for c in r.all_components() {
        for k in &c.coefficients {
            let got = rows.next().unwrap();
            let num = |i: usize| got[i].parse::<f64>().unwrap();
            assert_eq!(num(0), k.estimate);
            assert_eq!(num(1), k.se_bootstrap);
            if let Some(a) = k.se_asymptotic {
                assert_eq!(num(2), a);
            }
            assert_eq!(num(3), k.ci_lower);
            assert_eq!(num(4), k.ci_upper);
        }
    }
    assert!(rows.next().is_none());

    // JSON survives a parse/serialize cycle unchanged.
    let again = pcma(&["report", "--input", s(&out), "--format", "json"]);
    assert_eq!(again.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn report_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pcma(&["report", "--input", "/no/such/report.json"]).status.code(), Some(2));
    let f = dir.path().join("bad.json");
    std::fs::write(&f, r#"{"settings": 3}"#).unwrap();
    let o = pcma(&["report", "--input", s(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

fn synthetic_report(phi: Vec<f64>) -> FitReport {
    let k = Coefficient {
        quantity: "alpha".into(),
        estimate: 1.0,
        se_bootstrap: 0.1,
        se_asymptotic: None,
        ci_lower: 0.8,
        ci_upper: 1.2,
    };
    let names = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    FitReport {
        settings: Settings {
            max_components: 1,
            bootstrap: 100,
            ci: Ci::Bc,
            level: 0.95,
            resample: Resample::Scores,
            standardize: Standardize::Zscore,
            covariates: CovariateMode::InModel,
            max_sweeps: 10,
            exhaustive: false,
            seed: 0,
        },
        data: DataSummary {
            n: 10,
            p: phi.len(),
            q: 1,
            s: 1,
            exposures: names("x", phi.len()),
            mediators: names("m", 1),
            covariates: vec!["(intercept)".into()],
            outcome: "y".into(),
        },
        components: vec![ComponentReport {
            index: 1,
            significant: true,
            phi,
            psi: vec![1.0],
            coefficients: vec![k],
            theta1: vec![0.0],
            theta2: vec![0.0],
            sigma2: 1.0,
            tau2: 1.0,
            diagnostics: Diagnostics {
                converged: true,
                sweeps: 3,
                objective: 1.0,
                kkt_residual: 0.0,
                lambda1: 0.0,
                lambda2: 0.0,
                max_lambda_residual: 0.0,
                degenerate_updates: 0,
                bootstrap_redraws: 0,
                objective_trace: vec![2.0, 1.0],
            },
        }],
        excluded: vec![],
    }
}

#[test]
fn loading_listing_sorts_by_magnitude_and_splits_sign() {
    let r = synthetic_report(vec![0.5, -0.7, 0.1]);
    let text = render(&r, 2);
    let section = text.split("Exposure loadings").nth(1).unwrap();
    let section = section.split("Mediator loadings").next().unwrap();
    let neg = section.find("-0.7").unwrap();
    let pos = section.find("0.5").unwrap();
    assert!(neg < pos);
    assert!(!section.contains("0.1"));
    let lines: Vec<&str> = section.lines().collect();
    let header = lines[1];
    // -0.7 sits under "negative", 0.5 under "positive".
    assert_eq!(lines[2].find("-0.7"), header.find("negative"));
    assert_eq!(lines[3].find("0.5"), header.find("positive"));

    let bare = render(&r, 0);
    assert!(!bare.contains("loadings"));
    assert!(bare.contains("alpha"));
}

#[test]
fn table_io_rejects_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("e.csv");
    std::fs::write(&f, "a,b\n").unwrap();
    assert!(read_table(&f).is_err());
    std::fs::write(&f, "a\nNaN\n").unwrap();
    assert!(read_table(&f).unwrap_err().to_string().contains("row 1"));
    std::fs::write(&f, "a,b\n1.5,2\n").unwrap();
    assert_eq!(read_table(&f).unwrap().values, DMatrix::from_row_slice(1, 2, &[1.5, 2.0]));
}
