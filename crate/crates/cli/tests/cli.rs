use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use plkks::dynamics::flow_via_double;
use plkks::{Coupling, MuWeights, PhasePoint, Tolerances};
use serde_json::Value;

fn plkks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plkks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn rows(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(floats).collect()
}

const GOLDEN: [&str; 18] = [
    "simulate",
    "--n",
    "2",
    "--x",
    "0.8",
    "--q0",
    "1.2,0.4",
    "--p0",
    "0.3,-0.3",
    "--mu",
    "1:1,-1:-1",
    "--t-end",
    "1",
    "--samples",
    "11",
    "--engine",
    "all",
    "--format",
];

fn golden_run(dir: &Path) -> (Value, Vec<u8>) {
    let out = dir.join("run.json");
    let mut args = GOLDEN.to_vec();
    args.extend(["json", "--out", out.to_str().unwrap()]);
    let res = plkks(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let bytes = std::fs::read(&out).unwrap();
    (serde_json::from_slice(&bytes).unwrap(), bytes)
}

#[test]
fn golden_simulation_matches_library_engines() {
    let dir = tempfile::tempdir().unwrap();
    let (json, _) = golden_run(dir.path());
    let blocks = json.as_array().unwrap();
    let engines: Vec<&str> = blocks.iter().map(|b| b["meta"]["engine"].as_str().unwrap()).collect();
    assert_eq!(engines, ["double", "projection", "ode"]);

    let tol = Tolerances::default();
    let start = PhasePoint::new(vec![1.2, 0.4], vec![0.3, -0.3], &tol).unwrap();
    let times: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let reference = flow_via_double(
        &start,
        Coupling::new(0.8).unwrap(),
        &MuWeights::relativistic(),
        &times,
        &tol,
    )
    .unwrap();

    for block in blocks {
        assert_eq!(block["meta"]["n"], 2);
        assert_eq!(block["meta"]["truncated"], false);
        assert_eq!(floats(&block["times"]), times);
        let q = rows(&block["q"]);
        for (a, b) in q.iter().flatten().zip(reference.q.iter().flatten()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert_eq!(rows(&block["lax_spectrum"]).len(), 11);
        let energy = floats(&block["energy"]);
        assert!(energy.iter().all(|e| (e - reference.energy[0]).abs() < 1e-6));
    }
    assert_eq!(rows(&blocks[0]["q"]), reference.q);
    assert!(blocks[0]["deviations"].is_null());
    assert!(blocks[1]["p"].is_null());
    assert!(blocks[1]["constraint_residual"].is_null());
    assert!(blocks[1]["deviations"]["q_max_abs"].as_f64().unwrap() < 1e-7);
    assert!(blocks[2]["deviations"]["q_max_abs"].as_f64().unwrap() < 1e-5);
    assert!(blocks[2]["deviations"]["p_max_abs"].as_f64().unwrap() < 1e-5);
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(golden_run(a.path()).1, golden_run(b.path()).1);
    let random = ["simulate", "--n", "3", "--x", "1.1", "--seed", "17", "--engine", "all"];
    assert_eq!(plkks(&random).stdout, plkks(&random).stdout);
}

#[test]
fn one_particle_moves_freely() {
    // H = cosh p, so q(t) = q0 + t·sinh p0 taken modulo π
    let (q0, p0) = (0.4f64, 0.9f64);
    for engine in ["double", "projection", "ode"] {
        let out = plkks(&[
            "simulate",
            "--n",
            "1",
            "--x",
            "0.5",
            "--q0",
            "0.4",
            "--p0",
            "0.9",
            "--t-end",
            "2",
            "--samples",
            "5",
            "--engine",
            engine,
        ]);
        assert!(out.status.success(), "{engine}");
        let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
        for (t, q) in floats(&json["times"]).iter().zip(rows(&json["q"])) {
            let expected = (q0 + t * p0.sinh()).rem_euclid(PI);
            assert!((q[0] - expected).abs() < 1e-8, "{engine} t={t}");
        }
    }
}

#[test]
fn missing_x_exits_two_and_names_the_flag() {
    let out = plkks(&["simulate", "--n", "2", "--q0", "1.2,0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--x"));
}

#[test]
fn bad_configs_exit_two() {
    for args in [
        vec!["simulate", "--n", "2", "--x", "0"],
        vec!["simulate", "--x", "1", "--q0", "0.4,1.2"],
        vec!["simulate", "--n", "2", "--x", "1", "--samples", "1"],
        vec!["simulate", "--n", "2", "--x", "1", "--mu", "0:1"],
        vec!["simulate", "--n", "2", "--x", "1", "--engine", "warp"],
        vec!["show", "lax", "--n", "2", "--x", "1"],
        vec!["verify", "--n-max", "9"],
    ] {
        assert_eq!(plkks(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# two particles\nn = 2\nx = 0.8\nq0 = 1.2, 0.4\np0 = 0.3, -0.3\nsamples = 4\nt_end = 0.5\n",
    )
    .unwrap();
    let out = plkks(&["simulate", "--config", cfg.to_str().unwrap(), "--x", "1.5"]);
    assert!(out.status.success());
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["meta"]["x"], 1.5);
    assert_eq!(floats(&json["times"]), [0.0, 0.5 / 3.0, 1.0 / 3.0, 0.5]);
}

#[test]
fn degenerate_start_is_a_config_error() {
    for q0 in ["1.0,1.0", "0.4,1.0", "3.14159265,0.000000001"] {
        let out = plkks(&["simulate", "--n", "2", "--x", "0.5", "--q0", q0, "--p0", "0,0"]);
        assert_eq!(out.status.code(), Some(2), "{q0}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
    }
}

#[test]
fn json_and_csv_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (json, _) = golden_run(dir.path());
    let csv_out = dir.path().join("run.csv");
    let mut args = GOLDEN.to_vec();
    args.extend(["csv", "--out", csv_out.to_str().unwrap()]);
    assert!(plkks(&args).status.success());

    let tol = Tolerances::default();
    let start = PhasePoint::new(vec![1.2, 0.4], vec![0.3, -0.3], &tol).unwrap();
    let times: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
    let traj = flow_via_double(
        &start,
        Coupling::new(0.8).unwrap(),
        &MuWeights::relativistic(),
        &times,
        &tol,
    )
    .unwrap();

    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&floats(&json[0]["energy"])), bits(&traj.energy));

    let text = std::fs::read_to_string(dir.path().join("run.double.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q1,q2,p1,p2,energy,res"));
    for (i, line) in lines.enumerate() {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0].to_bits(), traj.times[i].to_bits());
        assert_eq!(bits(&cells[1..3]), bits(&traj.q[i]));
        assert_eq!(bits(&cells[3..5]), bits(&traj.p.as_ref().unwrap()[i]));
        assert_eq!(cells[5].to_bits(), traj.energy[i].to_bits());
    }
    let projection = std::fs::read_to_string(dir.path().join("run.projection.csv")).unwrap();
    assert!(projection.lines().nth(1).unwrap().contains(",,,"));
    let deviations = std::fs::read_to_string(dir.path().join("run.deviations.csv")).unwrap();
    assert_eq!(deviations.lines().count(), 3);
}

#[test]
fn show_examples() {
    let nu = stdout(&plkks(&["show", "nu", "--n", "3", "--x", "1.3862943611198906"]));
    let first: Vec<f64> = nu
        .lines()
        .next()
        .unwrap()
        .trim_matches(['[', ']'])
        .split(", ")
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((first[1] - 1.5).abs() < 1e-14);

    let rs = stdout(&plkks(&[
        "show", "rslax", "--n", "1", "--x", "0.5", "--q0", "0.7", "--p0", "0.0",
    ]));
    assert_eq!(rs.trim(), "[1.00000000000000]");

    let h = stdout(&plkks(&[
        "show",
        "hamiltonian",
        "--n",
        "2",
        "--x",
        "1",
        "--q0",
        "1.0,0.2",
        "--p0",
        "0,0",
    ]));
    let expected = 2.0 * (1.0 + 0.5f64.sinh().powi(2) / 0.8f64.sin().powi(2)).sqrt();
    assert!((h.trim().parse::<f64>().unwrap() - expected).abs() < 1e-13);

    let json: Value = serde_json::from_str(&stdout(&plkks(&[
        "show", "v", "--n", "3", "--x", "1", "--format", "json",
    ])))
    .unwrap();
    let v = floats(&json["values"]);
    assert!((v.iter().map(|c| c * c).sum::<f64>() - 3.0).abs() < 1e-12);
}

#[test]
fn verify_passes_and_catches_mutations() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = plkks(&["verify", "--json", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let json: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let results = json["results"].as_array().unwrap();
    assert!(results.len() >= 20);
    assert!(results.iter().all(|r| r["passed"] == true));

    assert_eq!(plkks(&["verify", "--n-max", "2"]).status.code(), Some(0));
    for m in ["zeta-half", "zeta-sign", "nu-offdiag"] {
        let out = plkks(&["verify", "--n-max", "2", "--mutate", m]);
        assert_eq!(out.status.code(), Some(1), "{m}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("failed:"));
    }
}
