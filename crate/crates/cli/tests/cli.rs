use std::path::Path;
use std::process::{Command, Output};

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relhem")).arg("--cache-dir").arg(cache).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn geometry_counts_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--format", "json", "geometry", "--q", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["counts"]["external_lines"], 240);
    assert_eq!(v["counts"]["external_points"], 1020);
    assert!(dir.path().join("geometry-q4.json").exists());
    // second run loads the cache and produces the same digest
    let again = run(dir.path(), &["--format", "json", "geometry", "--q", "4"]);
    let w: serde_json::Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(v["digest"], w["digest"]);
}

#[test]
fn family_output_verifies_and_bad_sets_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h");
    let o = run(dir.path(), &["family", "--q", "4", "--name", "pw", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for s in ["0", "1"] {
        let file = out.join(format!("pw-q4-{s}.json"));
        let v = run(dir.path(), &["verify", "--q", "4", file.to_str().unwrap()]);
        assert_eq!(v.status.code(), Some(0));
        assert!(stdout(&v).starts_with("true"));
    }
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[0, 1, 2]").unwrap();
    let v = run(dir.path(), &["verify", "--q", "4", bad.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
    assert!(stdout(&v).starts_with("false, witness point"));
}

#[test]
fn usage_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["family", "--q", "4", "--name", "cossidente1"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["family", "--q", "4", "--name", "nope"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["geometry", "--q", "3"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(4));
}

#[test]
fn raw_classify_budget_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["classify", "--q", "4", "--mode", "raw", "--budget-nodes", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("classify-raw-q4.checkpoint.json").exists());
    let out = dir.path().join("raw.jsonl");
    let o = run(dir.path(), &["classify", "--q", "4", "--mode", "raw", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("240 hemisystems"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 240);
}

#[test]
fn orbit_reps_classify_q4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["classify", "--q", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("240 hemisystems, 1 equivalence class"));
}

#[test]
fn ilp_roundtrip_via_files() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("m.lp");
    assert_eq!(run(dir.path(), &["export-ilp", "--q", "2", "--out", lp.to_str().unwrap()]).status.code(), Some(0));
    let model = std::fs::read_to_string(&lp).unwrap();
    assert!(model.contains("Subject To") && model.trim_end().ends_with("End"));

    let raw = dir.path().join("raw.jsonl");
    run(dir.path(), &["classify", "--q", "2", "--mode", "raw", "--out", raw.to_str().unwrap()]);
    let first: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&raw).unwrap().lines().next().unwrap()).unwrap();
    let members: Vec<u64> = first["line_indices"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    let sol: String = (0..12).map(|l| format!("l{l} {}\n", u8::from(members.contains(&l)))).collect();
    let sol_file = dir.path().join("m.sol");
    std::fs::write(&sol_file, format!("# solver output\n{sol}")).unwrap();
    let o = run(dir.path(), &["import-ilp", "--q", "2", sol_file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn enumerate_invariant_and_stabilizer() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["enumerate-invariant", "--q", "4", "--name", "pw"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("h");
    run(dir.path(), &["family", "--q", "2", "--name", "pw", "--sigma", "0", "--out", out.to_str().unwrap()]);
    let o = run(dir.path(), &["--format", "json", "stabilizer", "--q", "2", out.join("pw-q2-0.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
