use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn occulp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occulp"))
        .args(args)
        .env("OCCULP_THREADS", "2")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn build(dir: &TempDir, file: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(file);
    let mut full = vec!["build"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = occulp(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn solve_shipped_unbounded_model() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("report.json");
    let out = occulp(&[
        "solve",
        "--model",
        &data("ex4_ii.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out_path);
    assert_eq!(r["status"], "optimal");
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["tool"]["name"], "occulp");
    assert_eq!(r["model_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let infeasible = build(
        &dir,
        "inf.json",
        &[
            "random",
            "--seed",
            "3",
            "--n-states",
            "4",
            "--n-actions",
            "3",
            "--m",
            "1",
            "--margin",
            "-100",
        ],
    );
    assert_eq!(
        code(&occulp(&["solve", "--model", infeasible.to_str().unwrap()])),
        2
    );
    assert_eq!(
        code(&occulp(&[
            "oracle",
            "--model",
            infeasible.to_str().unwrap()
        ])),
        2
    );

    let minus_inf = dir.path().join("neg.json");
    fs::write(
        &minus_inf,
        r#"{"n_states": 1, "actions": [[{"label": "safe"}, {"label": "risky"}]],
            "transition": [[0, 0, 0, 1], [0, 1, 0, 1]],
            "rewards": [[[0, 1, "-inf"]], [[0, 1, 1]]],
            "beta": 0.5, "mu": [1], "bounds": [1]}"#,
    )
    .unwrap();
    let out = occulp(&["solve", "--model", minus_inf.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["status"], "minus_infinity_objective");
    assert_eq!(r["value"], "-inf");

    let malformed = dir.path().join("bad.json");
    fs::write(&malformed, "{\"n_states\": 2,").unwrap();
    let out = occulp(&["solve", "--model", malformed.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());

    let invalid = dir.path().join("invalid.json");
    fs::write(
        &invalid,
        r#"{"n_states": 1, "actions": [[{"label": "a"}]], "transition": [[0, 0, 0, 0.5]],
            "rewards": [[]], "beta": 0.5, "mu": [1]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&occulp(&["solve", "--model", invalid.to_str().unwrap()])),
        1
    );
    assert_eq!(
        code(&occulp(&["solve", "--model", "/nonexistent/model.json"])),
        1
    );
    assert_eq!(code(&occulp(&["solve", "--bogus"])), 1);
}

#[test]
fn built_models_round_trip_byte_identical() {
    let dir = TempDir::new().unwrap();
    for (file, args) in [
        (
            "g.json",
            vec!["growth", "--n-states", "31", "--n-actions", "7"],
        ),
        (
            "n.json",
            vec![
                "noisy-growth",
                "--n-states",
                "21",
                "--c",
                "25",
                "--quad-nodes",
                "8",
            ],
        ),
        (
            "r.json",
            vec![
                "repair",
                "--n-states",
                "11",
                "--s-max",
                "1",
                "--n-actions",
                "4",
                "--d1",
                "3",
            ],
        ),
        (
            "u.json",
            vec!["unbounded", "--variant", "i", "--n-trunc", "10"],
        ),
        (
            "x.json",
            vec![
                "random",
                "--seed",
                "5",
                "--m",
                "2",
                "--n-states",
                "6",
                "--n-actions",
                "3",
            ],
        ),
    ] {
        let path = build(&dir, file, &args);
        let text = fs::read_to_string(&path).unwrap();
        let again = dir.path().join(format!("again_{file}"));
        let out = occulp(&[
            "solve",
            "--model",
            path.to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ]);
        assert!(
            matches!(code(&out), 0 | 2 | 3),
            "{file}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let reparsed =
            occulp_cli::format::serialize_model(&occulp_cli::format::parse_model(&text).unwrap());
        assert_eq!(reparsed, text, "{file}");
    }
}

#[test]
fn decompose_and_simulate() {
    let dir = TempDir::new().unwrap();
    let model = build(
        &dir,
        "m.json",
        &[
            "random",
            "--seed",
            "12",
            "--m",
            "1",
            "--n-states",
            "4",
            "--n-actions",
            "3",
        ],
    );
    let dec_path = dir.path().join("dec.json");
    assert_eq!(
        code(&occulp(&[
            "decompose",
            "--model",
            model.to_str().unwrap(),
            "--out",
            dec_path.to_str().unwrap()
        ])),
        0
    );
    let dec = report(&dec_path);
    assert!(dec["n_selectors"].as_u64().unwrap() <= 2);
    assert!(dec["verification"]["deviation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(dec["policy"]["kind"], "chattering");

    let run = |seed: &str, file: &str| {
        let p = dir.path().join(file);
        let out = occulp(&[
            "simulate",
            "--model",
            model.to_str().unwrap(),
            "--policy",
            dec_path.to_str().unwrap(),
            "--seed",
            seed,
            "--episodes",
            "20000",
            "--epsilon",
            "1e-6",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        report(&p)
    };
    let a = run("9", "a.json");
    let b = run("9", "b.json");
    assert_eq!(a["estimates"], b["estimates"]);
    assert_eq!(a["std_errors"], b["std_errors"]);
    let target = dec["value"].as_f64().unwrap();
    let est = a["estimates"][0].as_f64().unwrap();
    assert!((est - target).abs() <= 4.0 * a["std_errors"][0].as_f64().unwrap());

    let single = dir.path().join("single.json");
    assert_eq!(
        code(&occulp(&[
            "decompose",
            "--model",
            &data("ex4_ii.json"),
            "--out",
            single.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(report(&single)["n_selectors"], 1);
}

#[test]
fn check_growth_model() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("g.json");
    let weight = dir.path().join("w.json");
    let out = occulp(&[
        "build",
        "growth",
        "--c",
        "4",
        "--n-states",
        "101",
        "--n-actions",
        "11",
        "--out",
        model.to_str().unwrap(),
        "--weight-out",
        weight.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let rep = dir.path().join("check.json");
    let out = occulp(&[
        "check",
        "--model",
        model.to_str().unwrap(),
        "--w",
        weight.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&rep);
    assert_eq!(r["bound"]["holds"], true);
    assert_eq!(r["bound_two_sided"]["holds"], false);
    assert!(r["delta"]["beta_delta"].as_f64().unwrap() < 1.0);
    assert_eq!(r["tail"]["status"], "verified");

    let out = occulp(&[
        "check",
        "--model",
        &data("ex4_ii.json"),
        "--w",
        &data("ex4_ii.weight.json"),
    ]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["tail"]["status"], "inconclusive");
}

#[test]
fn oracle_agrees_with_solve() {
    let dir = TempDir::new().unwrap();
    let model = build(
        &dir,
        "m.json",
        &[
            "random",
            "--seed",
            "4",
            "--m",
            "1",
            "--n-states",
            "3",
            "--n-actions",
            "3",
        ],
    );
    let s = occulp(&["solve", "--model", model.to_str().unwrap()]);
    let o = occulp(&["oracle", "--model", model.to_str().unwrap()]);
    assert_eq!(code(&s), 0);
    assert_eq!(code(&o), 0);
    let s: Value = serde_json::from_slice(&s.stdout).unwrap();
    let o: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((s["value"].as_f64().unwrap() - o["value"].as_f64().unwrap()).abs() <= 1e-8);
}

#[test]
fn thread_cap_does_not_change_results() {
    let model = data("ex4_ii.json");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_occulp"))
            .args(["oracle", "--model", &model])
            .env("OCCULP_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(code(&run("zero")), 1);
}
