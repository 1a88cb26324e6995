use std::path::PathBuf;

use serde_json::Value;
use weylchamber::cli::{execute, run, Command, ExperimentSpec, MinlawArgs, SystemArgs};
use weylchamber::io::{read_csv_table, Format};
use weylchamber::roots::RootKind;

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("weylchamber-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run_to(args: &[&str], out: &PathBuf) -> (i32, String) {
    let mut argv = vec!["weylchamber"];
    argv.extend_from_slice(args);
    argv.extend(["--output", out.to_str().unwrap()]);
    let code = run(argv);
    (code, std::fs::read_to_string(out).unwrap_or_default())
}

#[test]
fn weyl_table_for_a2_has_six_rows() {
    let (code, text) = run_to(&["weyl", "--system", "A2"], &tmp("weyl.csv"));
    assert_eq!(code, 0);
    let t = read_csv_table(&text).unwrap();
    assert_eq!(t.rows.len(), 6);
    let sig: i32 = t.rows.iter().map(|r| r[3].parse::<i32>().unwrap()).sum();
    assert_eq!(sig, 0);
}

#[test]
fn minlaw_rank_one_matches_closed_form() {
    let (code, text) = run_to(&["minlaw", "--system", "A1", "--nu", "1", "--m", "-1", "--samples", "0"], &tmp("minlaw.csv"));
    assert_eq!(code, 0);
    let t = read_csv_table(&text).unwrap();
    let exact: f64 = t.rows[0][1].parse().unwrap();
    assert!((exact - (1.0 - (-2.0f64).exp())).abs() < 1e-14);
}

#[test]
fn refl_row_matches_rank_one_formula() {
    let (code, text) = run_to(
        &["refl", "--system", "A1", "--gamma", "1", "--alpha-shift", "-0.4", "--format", "json"],
        &tmp("refl.json"),
    );
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    let row = &v["rows"][1];
    assert_eq!(row["element"], "s1");
    let r = row["refl"].as_f64().unwrap();
    let l = row["liouville"].as_f64().unwrap();
    assert!((r / l - 1.0).abs() < 1e-10);
    assert_eq!(v["spec"]["command"], "refl");
}

#[test]
fn outputs_carry_provenance_lines() {
    let (_, text) = run_to(&["roots", "--system", "B2", "--seed", "9"], &tmp("roots.csv"));
    let lines: Vec<&str> = text.lines().take(3).collect();
    assert!(lines[0].starts_with("# spec: {"));
    assert_eq!(lines[1], "# seed: 9");
    assert!(lines[2].starts_with("# build: weylchamber "));
}

#[test]
fn same_spec_and_seed_give_identical_files() {
    let args = ["minlaw", "--system", "A2", "--samples", "3000", "--seed", "17"];
    let (_, a) = run_to(&args, &tmp("det_a.csv"));
    let (_, b) = run_to(&args, &tmp("det_b.csv"));
    assert_eq!(a, b);
    let (_, c) = run_to(&["minlaw", "--system", "A2", "--samples", "3000", "--seed", "18"], &tmp("det_c.csv"));
    assert_ne!(a, c);
}

#[test]
fn spec_file_reproduces_flag_run() {
    let (_, direct) = run_to(&["decompose", "--samples", "300", "--seed", "4", "--times", "0.5"], &tmp("dec_a.csv"));
    let spec_line = direct.lines().next().unwrap().trim_start_matches("# spec: ").to_string();
    let spec_path = tmp("dec.json");
    std::fs::write(&spec_path, spec_line).unwrap();
    let (code, replay) = run_to(&["--spec", spec_path.to_str().unwrap()], &tmp("dec_b.csv"));
    assert_eq!(code, 0);
    assert_eq!(direct, replay);
}

#[test]
fn partial_spec_file_takes_flag_defaults() {
    let spec: ExperimentSpec = serde_json::from_str(r#"{"command": "minlaw", "samples": 0}"#).unwrap();
    match &spec.command {
        Command::Minlaw(MinlawArgs { drift, samples, .. }) => {
            assert_eq!(*samples, 0);
            assert_eq!(drift.system, RootKind::A2);
            assert_eq!(drift.nu, "rho");
        }
        other => panic!("parsed as {}", other.name()),
    }
    assert_eq!(spec.format, Format::Csv);
    let out = execute(&spec).unwrap();
    assert_eq!(out.table.rows.len(), 9);
}

#[test]
fn exit_codes_name_the_failure() {
    let (code, _) = run_to(&["refl", "--gamma", "1.5"], &tmp("e1.csv"));
    assert_eq!(code, 2);
    let (code, _) = run_to(&["refl", "--system", "A1", "--alpha-shift", "0.5"], &tmp("e2.csv"));
    assert_eq!(code, 4);
    let (code, _) = run_to(&["roots", "--system", "E9"], &tmp("e3.csv"));
    assert_eq!(code, 2);
    let (code, _) = run_to(&["--spec", "/nonexistent/spec.json"], &tmp("e4.csv"));
    assert_eq!(code, 1);
    let spec = ExperimentSpec { command: Command::Weyl(SystemArgs { system: RootKind::G2 }), seed: 0, format: Format::Json };
    assert_eq!(execute(&spec).unwrap().table.rows.len(), 12);
}

#[test]
fn gmc_probe_table_has_twenty_pairs() {
    let (code, text) = run_to(&["gmc", "--task", "probe"], &tmp("probe.csv"));
    assert_eq!(code, 0);
    let t = read_csv_table(&text).unwrap();
    assert_eq!(t.rows.len(), 20);
    assert!(t.rows.iter().all(|r| r[6].parse::<f64>().unwrap() < 0.01));
}
