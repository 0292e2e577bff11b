use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bergman-osc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn configuration_errors_exit_2() {
    for args in [
        &["profile", "--symbol", "bogus(", "--functional", "vwmo"][..],
        &["profile", "--symbol", "zk(1)", "--functional", "nope"],
        &["profile", "--symbol", "zk(1)", "--functional", "vwmo", "--radii", "0.5,1.2"],
        &["profile", "--symbol", "zk(1)", "--functional", "vwmo", "--radii", "0.9,0.8"],
        &["index", "--symbol", "zk(1)", "--angles", "0"],
        &["spectrum", "--symbol", "zk(1)", "--n", "9999"],
        &["profile", "--symbol", "zk(1)", "--functional", "vwmo", "--grid", "8"],
        &["no-such-command"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn numerical_failures_exit_3() {
    // a tolerance below the rounding floor of the section entries
    let o = run(&["spectrum", "--symbol", "example45(b=1.5,beta=1)", "--n", "32", "--tolerance", "1e-17"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance not reached"));
}

#[test]
fn help_documents_grammar_and_exit_codes() {
    let o = run(&["profile", "--help"]);
    let s = stdout(&o);
    assert!(s.contains("example45(b=..., beta=...)"));
    let o = run(&["--help"]);
    assert!(stdout(&o).contains("Exit codes"));
}

#[test]
fn profile_verdicts() {
    let o = run(&["profile", "--symbol", "example45(b=1,beta=1)", "--functional", "vwmo"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let line = s.lines().last().unwrap();
    assert!(line.starts_with("VWMO proxy: PASS, slope "), "{line}");
    let slope: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() < 0.2);

    let o = run(&["profile", "--symbol", "const(2)", "--functional", "bwmo"]);
    assert!(stdout(&o).lines().last().unwrap().contains("PASS (zero)"));

    let o = run(&["profile", "--symbol", "example45(b=1.5,beta=1)", "--functional", "bmo1"]);
    let s = stdout(&o);
    let line = s.lines().last().unwrap();
    assert!(line.starts_with("BMO1: FAIL (unbounded)"), "{line}");
    let slope: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((slope + 0.5).abs() < 0.15);
}

#[test]
fn index_reports() {
    assert!(stdout(&run(&["index", "--symbol", "zk(2)"])).starts_with("index -2"));
    assert!(stdout(&run(&["index", "--symbol", "const(1)"])).starts_with("index 0"));
    let o = run(&["index", "--symbol", "example45(b=1,beta=1)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("NotFredholm"));
}

#[test]
fn spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["spectrum", "--symbol", "const(3)", "--n", "12", "--out", "c"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("c.eigenvalues.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# bergman-osc/1 "));
    assert_eq!(lines.next(), Some("k,re,im"));
    for l in lines {
        let re: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((re - 3.0).abs() < 1e-12);
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "bergman-osc/1");
    assert_eq!(json["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(json["config"]["symbol"], "const(3)");
    assert_eq!(json["config"]["n"], 12);
    assert_eq!(json["result"]["eigenvalues"].as_array().unwrap().len(), 12);
    // no temporary files left behind
    let names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.ends_with(".tmp")), "{names:?}");
}

#[test]
fn format_selects_files() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["profile", "--symbol", "abs2()", "--functional", "fhat", "--out", "p", "--format", "json"]);
    assert!(dir.path().join("p.json").exists());
    assert!(!dir.path().join("p.csv").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["profile", "--symbol", "rand(3)", "--functional", "averaging", "--n-radii", "6", "--angles", "6", "--out", "p"];
    let mut one = vec!["--threads", "1"];
    one.extend(args);
    let mut four = vec!["--threads", "4"];
    four.extend(args);
    assert_eq!(run_in(a.path(), &one).status.code(), Some(0));
    assert_eq!(run_in(b.path(), &four).status.code(), Some(0));
    for f in ["p.csv", "p.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn check_fast_and_fault_injection() {
    let o = run(&["check", "--fast"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS geometry.box_area_formula"));
    let o = run(&["check", "--fast", "--inject-fault", "area-formula"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL geometry.box_area_formula"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry.box_area_formula"));
}

#[test]
fn anchors_regenerate_without_diff() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["anchors", "--fast", "--table", "a.json"]);
    assert_eq!(o.status.code(), Some(0));
    let first = std::fs::read(dir.path().join("a.json")).unwrap();
    let o = run_in(dir.path(), &["anchors", "--fast", "--table", "a.json"]);
    assert!(stdout(&o).contains("anchors unchanged"));
    assert_eq!(std::fs::read(dir.path().join("a.json")).unwrap(), first);
    // the committed table matches a fresh run
    let committed = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/anchors.json");
    let ours: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let theirs: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(committed).unwrap()).unwrap();
    for (x, y) in ours["anchors"].as_array().unwrap().iter().zip(theirs["anchors"].as_array().unwrap()) {
        assert_eq!(x["quantity"], y["quantity"]);
        let (vx, vy) = (x["value"].as_f64().unwrap(), y["value"].as_f64().unwrap());
        assert!((vx - vy).abs() <= 1e-6 * vy.abs().max(1e-12), "{}", x["quantity"]);
    }
}
