//! End-to-end runs of the `ptflab` binary: pipelines, exit codes, and the
//! byte-identical-rerun contract.

use std::path::Path;
use std::process::{Command, Output};

use ptflab::dataset::{write_examples, DatasetHeader};
use ptflab::gadgets::LabeledExample;
use ptflab::gauss::RngSeed;
use ptflab::reduction::{intended_ug_ptf, Instance, InstanceDocument};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ptflab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ptflab")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "ptflab {:?} exited {:?}:\n{}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_reduce_solve_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let data = dir.path().join("data.csv");
    let solved = dir.path().join("solved.json");

    run_ok(&[
        "gen", "ug", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "3", "--eta", "0",
        "--planted", "--seed", "11", "--out", inst.to_str().unwrap(),
    ]);
    let doc = InstanceDocument::read(&inst).unwrap();
    assert!(doc.planted.is_some());

    run_ok(&[
        "reduce", "--instance", inst.to_str().unwrap(), "--d", "1", "--samples", "60",
        "--seed", "12", "--out", data.to_str().unwrap(),
    ]);
    let header: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(&data).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    assert_eq!(header["dim"], 12);
    assert_eq!(header["count"], 60);
    assert_eq!(header["seed"]["seed"], 12);
    assert_eq!(header["source"]["command"], "reduce");
    assert!(header["source"]["beta"].as_f64().unwrap() > 0.0);

    run_ok(&[
        "solve", "--instance", data.to_str().unwrap(), "--d", "1", "--lp", "--out",
        solved.to_str().unwrap(),
    ]);
    let v = read_json(&solved);
    assert_eq!(v["examples"], 60);
    assert_eq!(v["dataset"]["dim"], 12);
    let outcome = v["lp"]["outcome"].as_str().unwrap();
    assert!(outcome == "feasible" || outcome == "infeasible");
    if outcome == "feasible" {
        assert!(v["lp"]["agreement"].as_f64().unwrap() >= 0.5);
    }

    let rep_i = run_ok(&["report", "--instance", inst.to_str().unwrap()]);
    let ri: serde_json::Value = serde_json::from_slice(&rep_i.stdout).unwrap();
    assert_eq!(ri["kind"], "ug");
    assert_eq!(ri["planted"], true);
    assert_eq!(ri["example_dimension"], 12);
    assert_eq!(ri["instance"].as_str().unwrap().len(), 64);

    let rep_d = run_ok(&["report", "--instance", data.to_str().unwrap()]);
    let rd: serde_json::Value = serde_json::from_slice(&rep_d.stdout).unwrap();
    assert_eq!(rd["kind"], "examples");
    assert_eq!(rd["rows"], 60);
    let frac = rd["positive_fraction"].as_f64().unwrap();
    assert!(frac > 0.0 && frac < 1.0);
}

#[test]
fn decode_edge_and_instance_modes() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("dict.json");
    std::fs::write(
        &poly,
        r#"{"dim":12,"degree":2,"terms":[{"vars":[1],"coeff":1.0},{"vars":[7,7],"coeff":-1.0}]}"#,
    )
    .unwrap();
    let out = run_ok(&["decode", "--poly", &format!("file:{}", poly.display()), "--beta", "0.33"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mode"], "edge");
    assert_eq!(v["within_caps"], true);
    assert_eq!(v["decoded"]["u_sets"], serde_json::json!([[1]]));
    assert_eq!(v["decoded"]["v_sets"], serde_json::json!([[1]]));

    let inst_path = dir.path().join("inst.json");
    run_ok(&[
        "gen", "ug", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "3", "--eta", "0",
        "--planted", "--seed", "11", "--out", inst_path.to_str().unwrap(),
    ]);
    let doc = InstanceDocument::read(&inst_path).unwrap();
    let Instance::Ug(ug) = &doc.instance else { panic!("expected ug") };
    let planted = doc.planted.as_ref().unwrap();
    let f = intended_ug_ptf(ug, planted, 2).unwrap();
    let intended = dir.path().join("intended.json");
    std::fs::write(&intended, serde_json::to_string(&f).unwrap()).unwrap();

    let out = run_ok(&[
        "decode", "--poly", &format!("file:{}", intended.display()), "--instance",
        inst_path.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mode"], "ug_instance");
    assert_eq!(v["within_caps"], true);
    for (u, &lu) in planted.u_labels.iter().enumerate() {
        let set = v["decoded"]["u_sets"][u].as_array().unwrap();
        assert!(set.contains(&serde_json::json!(lu)), "u{u} missing planted label {lu}");
    }
}

#[test]
fn solve_exact_on_xor_and_capacity_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let xor = dir.path().join("xor.csv");
    let pts = [([1.0, 1.0], 1i8), ([1.0, -1.0], -1), ([-1.0, 1.0], -1), ([-1.0, -1.0], 1)];
    let examples: Vec<LabeledExample> = pts
        .iter()
        .map(|(y, b)| LabeledExample::new(y.to_vec(), *b).unwrap())
        .collect();
    let header = DatasetHeader {
        dim: 2,
        seed: RngSeed::new(0),
        count: examples.len(),
        source: serde_json::json!({"command": "handmade", "name": "xor"}),
    };
    write_examples(&xor, &header, &examples).unwrap();

    let out = run_ok(&[
        "solve", "--instance", xor.to_str().unwrap(), "--degree", "2", "--lp", "--exact",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["lp"]["outcome"], "feasible");
    assert_eq!(v["lp"]["agreement"], 1.0);
    assert_eq!(v["exact"]["max_agreement"], 1.0);

    let out = run_ok(&["solve", "--instance", xor.to_str().unwrap(), "--d", "1", "--exact"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exact"]["max_agreement"], 0.75);
    assert!(v.get("lp").is_none());

    // Lifted width 13 at any example count blows the n^(D'+1) cap.
    let inst = dir.path().join("inst.json");
    let wide = dir.path().join("wide.csv");
    run_ok(&[
        "gen", "ug", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "3", "--seed", "11",
        "--out", inst.to_str().unwrap(),
    ]);
    run_ok(&[
        "reduce", "--instance", inst.to_str().unwrap(), "--samples", "12", "--seed", "12",
        "--out", wide.to_str().unwrap(),
    ]);
    let out = run(&["solve", "--instance", wide.to_str().unwrap(), "--d", "1", "--exact"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn verify_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out_pass = dir.path().join("pass.json");
    let ok = run(&[
        "verify", "--suite", "solvers", "--n", "8", "--samples", "2000", "--seed", "9",
        "--out", out_pass.to_str().unwrap(),
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let v = read_json(&out_pass);
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"][0]["id"], "c13");
    assert!(String::from_utf8_lossy(&ok.stderr).contains("c13"));

    // 100 samples cannot land the constant-calibration estimate within ±0.01.
    let out_fail = dir.path().join("fail.json");
    let failing = run(&[
        "verify", "--suite", "completeness", "--n", "8", "--samples", "100", "--seed", "3",
        "--out", out_fail.to_str().unwrap(),
    ]);
    assert_eq!(failing.status.code(), Some(1));
    let v = read_json(&out_fail);
    assert_eq!(v["pass"], false);
    let c03 = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "c03")
        .unwrap();
    assert_eq!(c03["pass"], false);

    assert_eq!(run(&["verify", "--suite", "bogus"]).status.code(), Some(2));
}

#[test]
fn same_argv_gives_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();

    let rerun = |args: &[&str], path: &Path| -> Vec<u8> {
        run_ok(args);
        let first = std::fs::read(path).unwrap();
        std::fs::remove_file(path).unwrap();
        run_ok(args);
        let second = std::fs::read(path).unwrap();
        assert_eq!(first, second, "rerun of {args:?} changed bytes");
        first
    };

    let test_out = dir.path().join("test.json");
    let test_args = [
        "test", "--variant", "t2", "--n", "8", "--samples", "3000", "--seed", "21",
        "--poly", "dictator:2", "--out", test_out.to_str().unwrap(),
    ];
    let baseline = rerun(&test_args, &test_out);

    // A thread cap must not change the drawn stream or the report bytes.
    let out = bin()
        .args(test_args)
        .env("PTFLAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&test_out).unwrap(), baseline);

    let inst = dir.path().join("inst.json");
    rerun(
        &[
            "gen", "lc", "--nu", "2", "--nv", "2", "--deg", "2", "--k", "2", "--m", "4",
            "--seed", "5", "--out", inst.to_str().unwrap(),
        ],
        &inst,
    );
    let data = dir.path().join("data.csv");
    rerun(
        &[
            "reduce", "--instance", inst.to_str().unwrap(), "--samples", "50", "--seed", "6",
            "--out", data.to_str().unwrap(),
        ],
        &data,
    );
    let verify_out = dir.path().join("verify.json");
    rerun(
        &[
            "verify", "--suite", "solvers", "--n", "8", "--samples", "2000", "--seed", "9",
            "--out", verify_out.to_str().unwrap(),
        ],
        &verify_out,
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--instance", "/does/not/exist.csv"]).status.code(), Some(2));
    assert_eq!(run(&["test", "--variant", "t9"]).status.code(), Some(2));
    assert_eq!(run(&["decode", "--poly", "dictator:1"]).status.code(), Some(2));
    let out = run(&["reduce", "--instance", "/tmp/x.json", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CSV"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
