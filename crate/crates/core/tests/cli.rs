use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sumproduct"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn census_emits_the_rank_row() {
    let out = run(&["census", "--n", "2", "--t", "2", "--q", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("n,t,q,k,exact,bound,ratio\n"));
    assert!(text.lines().any(|l| l.starts_with("2,2,3,2,48,")));
    assert!(text.contains("n,t,q,m,k,T_exact,T_bound,ratio\n"));
    assert!(text.lines().any(|l| l == "2,2,3,2,1,1536,2187,0.7023319615912208"));
}

#[test]
fn census_json_embeds_resolved_config() {
    let v = json(&run(&["census", "--q", "9", "--n", "1", "--t", "2", "--format", "json", "--table", "rank"]));
    assert_eq!(v["command"], "census");
    assert_eq!(v["config"]["p"], 3);
    assert_eq!(v["config"]["poly"], serde_json::json!([1, 0, 1]));
    assert_eq!(v["config"]["t"], 2);
    assert_eq!(v["report"]["rank_census"][1]["exact"], 80);
    assert!(v["timing"]["total_seconds"].is_number());
}

#[test]
fn invalid_field_is_a_config_error() {
    assert_eq!(run(&["census", "--q", "6"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--q", "5", "--poly", "1,1"]).status.code(), Some(2));
    assert_eq!(run(&["census", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["graph", "audit", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(run(&["census", "--bogus"]).status.code(), Some(2));
}

#[test]
fn caps_and_budgets_exit_4() {
    let out = run(&["census", "--n", "2", "--t", "2", "--table", "pairs", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["spectrum", "--q", "3", "--n", "2", "--spectral-cap", "1000"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["spectrum", "--q", "5", "--n", "2", "--dense-oracle"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["solve", "--sizes", "81", "--budget", "1000"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn no_convergence_exits_3() {
    let out = run(&["spectrum", "--q", "3", "--n", "2", "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not converge"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = scratch("run.conf");
    std::fs::write(&path, "# audit settings\nq = 5\nn = 1\nd = 2\npair-sample = 50\nvertex_sample = 7\n").unwrap();
    let v = json(&run(&["graph", "audit", "--config", path.to_str().unwrap(), "--q", "3"]));
    assert_eq!(v["config"]["q"], 3);
    assert_eq!(v["config"]["d"], 2);
    assert_eq!(v["report"]["audit"]["vertices_checked"], 7);
    assert_eq!(v["report"]["audit"]["normality_violations"], 0);

    std::fs::write(&path, "colour = red\n").unwrap();
    assert_eq!(run(&["census", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn audit_reports_tallies() {
    let v = json(&run(&["graph", "audit", "--vertex-sample", "20", "--pair-sample", "200", "--seed", "4"]));
    let audit = &v["report"]["audit"];
    assert_eq!(audit["out_degree_min"], 81);
    assert_eq!(audit["normality_pairs_checked"], 220);
    assert!(audit["case_tallies"]["SamePair"].as_u64().unwrap() >= 20);
    let exhaustive = json(&run(&["graph", "audit", "--q", "2", "--n", "1", "--d", "2", "--exhaustive"]));
    assert_eq!(exhaustive["report"]["audit"]["exhaustive_vertices"], true);
    assert_eq!(exhaustive["report"]["extrapolation"], true);
}

#[test]
fn spectrum_report_fields() {
    let v = json(&run(&["spectrum", "--q", "3", "--n", "1", "--d", "1"]));
    let s = &v["report"]["spectrum"];
    assert!((s["lambda_est"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
    assert_eq!(s["paper_exponent"], 0.5);
    assert!(s["residual"].as_f64().unwrap() <= 1e-9);
    let dense = json(&run(&["spectrum", "--q", "3", "--n", "1", "--dense-oracle"]));
    assert_eq!(dense["report"]["spectrum"]["method"], "dense");
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let strip = |out: Output| {
        let mut v = json(&out);
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string(&v).unwrap()
    };
    let args = ["solve", "--sizes", "12", "--seed", "11", "--workers", "2"];
    assert_eq!(strip(run(&args)), strip(run(&args)));
    let args = ["incidence", "--sizes", "200,300", "--seed", "5"];
    assert_eq!(strip(run(&args)), strip(run(&args)));
}

#[test]
fn solve_with_a_family_file() {
    let path = scratch("family.txt");
    let mut text = String::from("# full A, B, E; F = {0}\n[A1]\n");
    (0..81).for_each(|i| text += &format!("{i}\n"));
    text += "[B1]\n";
    (0..81).for_each(|i| text += &format!("{i} "));
    text += "\n[E]\n";
    (0..81).for_each(|i| text += &format!("{i}\n"));
    text += "[F]\n0\n";
    std::fs::write(&path, text).unwrap();
    let v = json(&run(&["solve", "--family", path.to_str().unwrap(), "--lambda", "27.000027"]));
    let r = &v["report"]["result"];
    // For every (A, B) exactly one E gives AB - E = 0.
    assert_eq!(r["count"], 6561);
    assert_eq!(r["main_term"], 6561.0);
    assert_eq!(r["holds_measured"], true);
    assert_eq!(v["report"]["lambda_source"], "given");

    std::fs::write(&path, "[A1]\n81\n[B1]\n[E]\n[F]\n").unwrap();
    assert_eq!(run(&["solve", "--family", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn incidence_with_point_and_line_files() {
    let points = scratch("points.txt");
    let lines = scratch("lines.txt");
    // Identity has index 3^3 + 1 = 28 in M_2(F_3); zero is 0.
    std::fs::write(&points, "28 28\n28 0\n0 0\n").unwrap();
    std::fs::write(&lines, "# Y = I X\n28 0\n").unwrap();
    let v = json(&run(&[
        "incidence",
        "--points",
        points.to_str().unwrap(),
        "--lines",
        lines.to_str().unwrap(),
    ]));
    let r = &v["report"]["result"];
    assert_eq!(r["count"], 2);
    assert_eq!(r["holds_paper"], true);
    assert_eq!(r["holds_measured"], true);
    assert_eq!(v["report"]["lambda_source"], "measured");
}
