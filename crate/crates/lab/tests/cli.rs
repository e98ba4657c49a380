#![allow(clippy::approx_constant)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kylepriv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kylepriv"))
        .args(args)
        .output()
        .unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = kylepriv(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn equilibrium_values_and_envelope() {
    let r = report(&["equilibrium", "--sigma-v", "1", "--sigma-u", "1", "--sigma-eps", "1"]);
    assert_eq!(r["tool"], "kylepriv");
    assert_eq!(r["command"], "equilibrium");
    assert!(r["version"].is_string());
    assert!((num(&r["result"]["lambda"]) - 0.7071068).abs() < 1e-7);
    assert!((num(&r["result"]["c"]) - 1.4142136).abs() < 1e-7);
    assert_eq!(r["config"]["sigma-eps"], 1.0);
    assert!(r["formulas"]["lambda"].is_string());
    let samples = r["result"]["samples"].as_array().unwrap();
    assert_eq!(num(&samples.last().unwrap()["Sigma"]), 0.0);
    assert!(samples.last().unwrap()["beta"].is_null());

    let r = report(&["equilibrium", "--sigma-v", "1", "--sigma-u", "1", "--sigma-eps", "0"]);
    assert_eq!(num(&r["result"]["lambda"]), 1.0);
}

#[test]
fn validation_errors_exit_2() {
    let out = kylepriv(&["equilibrium", "--sigma-eps", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_eps"));

    assert_eq!(kylepriv(&["simulate", "--paths", "0"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["simulate", "--paths", "1", "--steps", "20"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["welfare", "--horizon", "0"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["dp", "inverse", "--delta", "2"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["fee", "--volume", "-3"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["nonsense"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["schedule"]).status.code(), Some(2));
    assert_eq!(kylepriv(&["--help"]).status.code(), Some(0));
}

#[test]
fn welfare_report() {
    let r = report(&["welfare", "--sigma-eps", "1"]);
    let w = &r["result"];
    assert!((num(&w["pi_i"]) - 1.4142136).abs() < 1e-7);
    assert!((num(&w["delta_pi_n"]) - 0.2928932).abs() < 1e-7);
    assert!((num(&w["single_period_subsidy"]) - 0.3535534).abs() < 1e-7);
}

#[test]
fn dp_commands() {
    let r = report(&[
        "dp", "inverse", "--epsilon-joint", "10", "--delta", "1e-5", "--blocks", "100",
        "--composition", "basic",
    ]);
    assert_eq!(r["command"], "dp inverse");
    assert!((num(&r["result"]["epsilon_block"]) - 0.1).abs() < 1e-15);
    assert!((num(&r["result"]["implied_sigma_eps"]) - 571.68591).abs() < 1e-4);

    let sigma_eps = num(&r["result"]["implied_sigma_eps"]).to_string();
    let delta_block = num(&r["result"]["delta_block"]).to_string();
    let m = report(&[
        "dp", "map", "--sigma-eps", &sigma_eps, "--blocks", "100", "--delta-block", &delta_block,
    ]);
    assert!((num(&m["result"]["budget"]["epsilon_joint"]) - 10.0).abs() < 1e-9);
    assert!((num(&m["result"]["budget"]["delta_joint"]) - 1e-5).abs() < 1e-18);

    let a = report(&["dp", "map", "--composition", "advanced"]);
    assert_eq!(a["result"]["budget"]["composition"], "advanced");
}

#[test]
fn fee_modes() {
    let r = report(&["fee", "--volume", "10"]);
    assert_eq!(r["result"]["volume_mode"], "given");
    assert!((num(&r["result"]["break_even_fee"]) - 0.07071068).abs() < 1e-8);

    let r = report(&["fee", "--sigma-eps", "0", "--volume", "3"]);
    assert_eq!(num(&r["result"]["break_even_fee"]), 0.0);

    let r = report(&["fee", "--blocks", "100"]);
    assert_eq!(r["result"]["volume_mode"], "analytic");

    let r = report(&["fee", "--volume-mode", "mc", "--blocks", "50", "--paths", "500"]);
    assert_eq!(r["result"]["volume_mode"], "mc");
    assert!(num(&r["result"]["volume_se"]) > 0.0);
    let analytic = report(&["fee", "--blocks", "50"]);
    let (q_mc, se) = (num(&r["result"]["volume_q"]), num(&r["result"]["volume_se"]));
    assert!((q_mc - num(&analytic["result"]["volume_q"])).abs() < 4.0 * se + 0.05 * q_mc);
    assert_eq!(r["result"]["net_of_fee"]["net"].as_array().unwrap().len(), 3);

    let out = kylepriv(&["fee", "--volume-mode", "given"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schedule_files() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.csv", "t_start,t_end,variance\n0,1,1\n");
    let back = write(dir.path(), "back.csv", "t_start,t_end,variance\n0,0.5,0\n0.5,1,2\n");
    let front = write(dir.path(), "front.csv", "t_start,t_end,variance\n0,0.25,4\n0.25,1,0\n");
    let r = report(&["schedule", "--file", &flat, "--file", &back, "--file", &front]);
    let rows = r["result"]["schedules"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!((num(&row["subsidy"]) - 0.7071068).abs() < 1e-7);
        assert_eq!(row["subsidy"], rows[0]["subsidy"]);
    }
    assert!(r["flags"].as_array().unwrap().is_empty());
    let rates = rows[2]["segment_rates"].as_array().unwrap();
    assert!((num(&rates[0]["rate"]) - 4.0 * num(&rows[2]["lambda"])).abs() < 1e-12);
    assert_eq!(num(&rates[1]["rate"]), 0.0);

    let gap = write(dir.path(), "gap.csv", "t_start,t_end,variance\n0,0.4,1\n0.5,1,1\n");
    assert_eq!(kylepriv(&["schedule", "--file", &gap]).status.code(), Some(2));
    let header = write(dir.path(), "header.csv", "start,end,var\n0,1,1\n");
    assert_eq!(kylepriv(&["schedule", "--file", &header]).status.code(), Some(2));
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        kylepriv(&["schedule", "--file", missing.to_str().unwrap()]).status.code(),
        Some(3)
    );
}

#[test]
fn simulate_reports_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    let r = report(&[
        "simulate", "--paths", "200", "--steps", "50", "--seed", "3", "--record-paths", "2",
        "--out-csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["result"]["sim"]["clearing"], "post");
    let rows = r["result"]["welfare"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!((num(&rows[2]["closed_form"]) + 0.7071068).abs() < 1e-7);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path_id,step,t,v,p,dx,du,deps,dy_obs,sigma_post,profit_I,profit_N,profit_M"
    );
    assert_eq!(lines.count(), 100);

    let pre = report(&[
        "simulate", "--convention", "pre", "--sigma-eps", "0", "--paths", "2000", "--steps", "200",
    ]);
    let flags = pre["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| f.as_str().unwrap().starts_with("pi_M: pre-trade clearing")));
    let pi_m = &pre["result"]["welfare"]["rows"][2];
    assert!((num(&pi_m["closed_form"]) + 1.0).abs() < 1e-12);
}

#[test]
fn simulate_with_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let front = write(dir.path(), "front.csv", "t_start,t_end,variance\n0,0.25,4\n0.25,1,0\n");
    let r = report(&[
        "simulate", "--paths", "300", "--steps", "40", "--schedule-file", &front,
    ]);
    assert_eq!(num(&r["result"]["schedule"]["mean_variance"]), 1.0);
    let pi_m = &r["result"]["welfare"]["rows"][2];
    assert!((num(&pi_m["closed_form"]) + 0.7071068).abs() < 1e-7);

    let out = kylepriv(&["simulate", "--horizon", "2", "--schedule-file", &front]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lvr_and_correspondence() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lvr.csv");
    let r = report(&["lvr", "--paths", "200", "--steps", "100", "--out-csv", csv.to_str().unwrap()]);
    assert!(num(&r["result"]["min_step_lvr"]) >= 0.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "path_id,step,t,q,V,lvr_step");
    assert_eq!(text.lines().count(), 101);

    let flat = report(&["lvr", "--sigma", "0", "--paths", "5", "--steps", "10"]);
    assert_eq!(num(&flat["result"]["mc_lvr"]["mean"]), 0.0);

    let drift = report(&["lvr", "--mu", "0.1", "--paths", "20", "--steps", "10"]);
    assert!(!drift["flags"].as_array().unwrap().is_empty());

    let t = report(&["report", "correspondence", "--sigma-eps", "0.1"]);
    assert_eq!(t["result"]["rows"].as_array().unwrap().len(), 6);
    assert!((num(&t["result"]["privacy"]["rate"]) - 0.0099504).abs() < 1e-7);
    assert_eq!(t["result"]["regime"], "small_noise");
    let t = report(&["report", "correspondence", "--sigma-eps", "100"]);
    assert!((num(&t["result"]["privacy"]["rate"]) - 99.995).abs() < 1e-3);
    assert_eq!(t["result"]["regime"], "large_noise");
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"sigma-v": 2, "sigma-eps": 0.5, "horizon": 1}"#);
    let r = report(&["welfare", "--config", &cfg]);
    assert!((num(&r["result"]["subsidy"]) - 0.4472136).abs() < 1e-7);
    let r = report(&["--config", &cfg, "welfare", "--sigma-eps", "0"]);
    assert_eq!(num(&r["result"]["subsidy"]), 0.0);
    assert_eq!(r["config"]["sigma-v"], 2.0);

    let bad = write(dir.path(), "bad.json", r#"{"sigma-w": 1}"#);
    assert_eq!(kylepriv(&["welfare", "--config", &bad]).status.code(), Some(2));
    let neg = write(dir.path(), "neg.json", r#"{"sigma-eps": -1}"#);
    assert_eq!(kylepriv(&["welfare", "--config", &neg]).status.code(), Some(2));
}

#[test]
fn embedded_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = kylepriv(&[
        "simulate", "--paths", "300", "--steps", "60", "--seed", "9", "--sigma-eps", "0.7",
        "--convention", "pre", "--threads", "2",
    ]);
    assert!(first.status.success());
    let r: Value = serde_json::from_slice(&first.stdout).unwrap();
    let cfg = write(dir.path(), "rerun.json", &r["config"].to_string());
    let second = kylepriv(&["simulate", "--config", &cfg]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);

    let lvr = kylepriv(&["lvr", "--paths", "50", "--steps", "30", "--seed", "4", "--k", "400"]);
    let r: Value = serde_json::from_slice(&lvr.stdout).unwrap();
    let cfg = write(dir.path(), "lvr.json", &r["config"].to_string());
    assert_eq!(kylepriv(&["lvr", "--config", &cfg]).stdout, lvr.stdout);
}
