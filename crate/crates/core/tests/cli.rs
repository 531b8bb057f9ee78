use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use capsweep::report::RunReport;

fn capsweep(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capsweep"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CAPSWEEP_SCENARIO_DIR")
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, extra: &str) -> String {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let text = format!(
        "branch_file = {}\nload_file = {}\nbase_kv = 11\ncsa_max_iter = 30\npso_max_iter = 30\n{extra}",
        data.join("ieee33_branches.csv").display(),
        data.join("ieee33_loads.csv").display(),
    );
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn base_writes_report_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "feeder.scenario", "");
    let out = capsweep(&["base", "--scenario", &scenario, "--out", "o", "--quiet"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let o = dir.path().join("o");
    let v = csv_rows(&o.join("base_voltages.csv"));
    assert_eq!(v[0], "bus,v_pu");
    assert_eq!(v.len(), 34);
    let b = csv_rows(&o.join("base_branch_losses.csv"));
    assert_eq!(b[0], "branch,from_bus,to_bus,p_kw,q_kvar");
    assert_eq!(b.len(), 33);
    let report = RunReport::read(&o.join("base_report.json")).unwrap();
    assert_eq!(report.scenario.name, "feeder");
    assert_eq!(report.flow.min_voltage.bus, 18);
    assert!(report.plan.is_empty());
    assert!(!o.join("base_convergence.csv").exists());

    // the CSVs alone reproduce the totals
    let p: f64 = b[1..].iter().map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert!((p - report.flow.totals.p_loss_kw).abs() < 1e-9 * p);
}

#[test]
fn optimize_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "s.scenario", "seed = 5\n");
    for opt in ["csa", "pso"] {
        let out = capsweep(&["optimize", "-s", &scenario, "-o", "o", "--optimizer", opt, "--seed", "8"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("reduction"), "{stdout}");
    }
    let o = dir.path().join("o");
    let conv = csv_rows(&o.join("csa_convergence.csv"));
    assert_eq!(conv[0], "iter,best_cost");
    assert_eq!(conv.len(), 31);
    let costs: Vec<f64> = conv[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[1] <= w[0]));
    let csa = RunReport::read(&o.join("csa_report.json")).unwrap();
    assert_eq!(csa.scenario.seed, 8);
    assert_eq!(csa.best_cost, Some(*costs.last().unwrap()));
    assert!(csa.convergence_history_path.as_deref().unwrap().ends_with("csa_convergence.csv"));

    let out = capsweep(&["base", "-s", &scenario, "-o", "o", "-q"], dir.path());
    assert!(out.status.success());
    let out = capsweep(
        &["compare", "o/base_report.json", "o/csa_report.json", "o/pso_report.json", "--csv", "table.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = csv_rows(&dir.path().join("table.csv"));
    assert_eq!(table[0], "case,source,ploss_kw,qloss_kvar,vd,vsi,cap_mvar,location,best_cost");
    let sources: Vec<&str> = table[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(&sources[..3], ["computed"; 3]);
    assert!(sources[3..].iter().all(|s| *s == "cited"));
    assert_eq!(table.len(), 1 + 3 + 9);
}

#[test]
fn compare_refuses_different_networks() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_scenario(dir.path(), "a.scenario", "");
    let b = write_scenario(dir.path(), "b.scenario", "");
    let b_text = fs::read_to_string(&b).unwrap().replace("base_kv = 11", "base_kv = 12.66");
    fs::write(&b, b_text).unwrap();
    assert!(capsweep(&["base", "-s", &a, "-o", "a", "-q"], dir.path()).status.success());
    assert!(capsweep(&["base", "-s", &b, "-o", "b", "-q"], dir.path()).status.success());
    let out = capsweep(&["compare", "a/base_report.json", "b/base_report.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different network"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    fs::write(&bad, "base_kv = eleven\n").unwrap();
    let out = capsweep(&["base", "-s", bad.to_str().unwrap(), "-o", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let cyc = dir.path().join("cyc.csv");
    let branches = format!("{}18,33,0.5,0.5\n", capsweep::data::IEEE33_BRANCHES);
    fs::write(&cyc, branches).unwrap();
    let loads = dir.path().join("loads.csv");
    fs::write(&loads, capsweep::data::IEEE33_LOADS).unwrap();
    let s = dir.path().join("cyc.scenario");
    fs::write(&s, "branch_file = cyc.csv\nload_file = loads.csv\n").unwrap();
    let out = capsweep(&["base", "-s", s.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loop"), "{}", String::from_utf8_lossy(&out.stderr));

    let slow = write_scenario(dir.path(), "slow.scenario", "max_iterations = 2\ntolerance_pu = 1e-12\n");
    let out = capsweep(&["base", "-s", &slow, "-o", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max |dV|"));

    let out = capsweep(&["base", "-s", "does-not-exist.scenario"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_scenario(dir.path(), "feeder12.scenario", "name = twelve\n");
    let work = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_capsweep"))
        .args(["base", "--scenario", "feeder12", "-o", "o", "-q"])
        .current_dir(work.path())
        .env("CAPSWEEP_SCENARIO_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::read(&work.path().join("o/base_report.json")).unwrap();
    assert_eq!(report.scenario.name, "twelve");
}

#[test]
fn no_scenario_uses_built_in_feeder() {
    let dir = tempfile::tempdir().unwrap();
    let out = capsweep(&["base", "-o", "o"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("at bus 18"), "{stdout}");
}
