use serde_json::Value;
use shapesearch::oracles::sphere_eval;
use shapesearch::search::{Trace, TrialSetup};
use shapesearch_cli::formats::{read_trace_file, write_pool_csv, write_target_csv};
use shapesearch_cli::session::SessionState;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapesearch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_line(s: &str) -> Value {
    serde_json::from_str(s.trim()).unwrap()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn synthetic(dir: &Path, strategy: &str, extra: &[&str]) {
    let mut args = vec![
        "run-synthetic",
        "--problem",
        "triangle",
        "--strategy",
        strategy,
        "--out-dir",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn repeated_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["--budget", "8", "--trials", "1", "--seed", "11", "--pool-size", "30"];
    synthetic(a.path(), "random", &extra);
    synthetic(b.path(), "random", &extra);
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
    let trace = read_trace_file(&a.path().join("trace_random_trial0.jsonl")).unwrap();
    assert_eq!(trace.records.len(), 8);
}

#[test]
fn summary_has_a_row_per_strategy_and_iteration() {
    let dir = tempfile::tempdir().unwrap();
    synthetic(dir.path(), "all", &["--budget", "3", "--trials", "2", "--seed", "5", "--pool-size", "20"]);
    let mut rdr = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["strategy", "iteration", "mean_log10_regret", "std_log10_regret"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4 * 4);
    for s in ["ei", "pi", "mean-mse", "random"] {
        assert_eq!(rows.iter().filter(|r| &r[0] == s).count(), 4);
        for k in 0..2 {
            assert!(dir.path().join(format!("trace_{s}_trial{k}.jsonl")).exists());
        }
    }
}

#[test]
fn ask_tell_replays_the_autonomous_run() {
    let dir = tempfile::tempdir().unwrap();
    synthetic(dir.path(), "ei", &["--budget", "6", "--trials", "1", "--seed", "7", "--pool-size", "40"]);
    let setups: Vec<TrialSetup> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trials.json")).unwrap()).unwrap();
    let recorded = read_trace_file(&dir.path().join("trace_ei_trial0.jsonl")).unwrap();
    let state = dir.path().join("session.json");
    let seed = setups[0].loop_seed.to_string();
    ok(&[
        "import-dataset",
        "--pool",
        dir.path().join("pool_trial0.csv").to_str().unwrap(),
        "--target",
        dir.path().join("target_trial0.csv").to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
        "--strategy",
        "ei",
        "--budget",
        "6",
        "--seed",
        &seed,
    ]);
    let state_s = state.to_str().unwrap();
    for rec in &recorded.records {
        let proposal = json_line(&ok(&["ask", "--state", state_s]));
        assert_eq!(proposal["index"].as_u64().unwrap() as usize, rec.index);
        ok(&["tell", "--state", state_s, "--y", &join(&rec.observation)]);
    }
    assert_eq!(json_line(&ok(&["ask", "--state", state_s]))["done"], Value::Bool(true));
    let exported = dir.path().join("exported.jsonl");
    ok(&["export-trace", "--state", state_s, "--out", exported.to_str().unwrap()]);
    let replayed: Trace = read_trace_file(&exported).unwrap();
    assert_eq!(replayed, recorded);
}

#[test]
fn session_state_machine_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.csv");
    let target = dir.path().join("target.csv");
    let xs: Vec<Vec<f64>> = (0..100).map(|i| vec![-5.0 + 0.1 * i as f64]).collect();
    let observed = vec![(10, sphere_eval(xs[10][0]).to_vec()), (80, sphere_eval(xs[80][0]).to_vec())];
    write_pool_csv(&pool, &xs, &observed, 20).unwrap();
    let f0 = sphere_eval(xs[42][0]).to_vec();
    write_target_csv(&target, &f0).unwrap();
    let state = dir.path().join("s.json");
    let s = state.to_str().unwrap();
    let info = json_line(&ok(&[
        "import-dataset",
        "--pool",
        pool.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--state",
        s,
        "--strategy",
        "mean-mse",
    ]));
    assert_eq!(info["candidates"], 98);

    let bytes = std::fs::read_to_string(&state).unwrap();
    assert_eq!(SessionState::from_json(&bytes).unwrap().to_json().unwrap(), bytes);

    assert_eq!(run(&["tell", "--state", s, "--y", &join(&f0)]).status.code(), Some(3));
    let mut prev = f64::INFINITY;
    for step in 0..5 {
        let p = json_line(&ok(&["ask", "--state", s]));
        let idx = p["index"].as_u64().unwrap() as usize;
        assert!(idx != 10 && idx != 80);
        if step == 0 {
            assert_eq!(run(&["ask", "--state", s]).status.code(), Some(3));
            let before = std::fs::read(&state).unwrap();
            let short = run(&["tell", "--state", s, "--y", "1,2,3"]);
            assert_eq!(short.status.code(), Some(3));
            assert_eq!(std::fs::read(&state).unwrap(), before);
        }
        let y = sphere_eval(p["input"][0].as_f64().unwrap());
        let told = json_line(&ok(&["tell", "--state", s, "--y", &join(&y)]));
        let inc = told["incumbent_value"].as_f64().unwrap();
        assert!(inc <= prev);
        prev = inc;
    }
    let bytes = std::fs::read_to_string(&state).unwrap();
    assert_eq!(SessionState::from_json(&bytes).unwrap().to_json().unwrap(), bytes);

    ok(&["ask", "--state", s]);
    let told = json_line(&ok(&["tell", "--state", s, "--y", &join(&f0)]));
    assert_eq!(told["incumbent_value"], 0.0);
    assert_eq!(told["converged"], Value::Bool(true));
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run-synthetic", "--problem", "triangle", "--strategy", "ucb", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = run(&[
        "import-dataset",
        "--pool",
        empty.to_str().unwrap(),
        "--target",
        empty.to_str().unwrap(),
        "--state",
        dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 0"));
    let missing = run(&["ask", "--state", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
}
