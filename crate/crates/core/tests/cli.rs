mod common;

use assert_cmd::Command;
use common::corpus_path;

fn claw() -> Command {
    Command::cargo_bin("claw").unwrap()
}

fn stdout(args: &[&str]) -> (i32, String) {
    let out = claw().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn check_multiplier_passes_with_exit_zero() {
    let file = corpus_path("gkdv");
    let (code, out) = stdout(&["check", "multiplier", file.to_str().unwrap(), "--name", "Q1"]);
    assert_eq!(code, 0);
    assert!(out.contains("Q1: PASS"), "{out}");
}

#[test]
fn act_reports_homogeneity_eigenvalue() {
    let file = corpus_path("gkdv");
    let (code, out) = stdout(&["act", file.to_str().unwrap(), "--symmetry", "X3", "--multiplier", "Q5", "--param", "p=3"]);
    assert_eq!(code, 0);
    assert!(out.contains("Homogeneous λ = 1/3"), "{out}");
}

#[test]
fn homog_with_fixed_a_solves_for_lambda() {
    let file = corpus_path("gmt");
    let (code, out) = stdout(&["homog", file.to_str().unwrap(), "--a", "1,0,0"]);
    assert_eq!(code, 0);
    assert!(out.contains("λ = (2*c1 + 2*c4)"), "{out}");
    assert!(out.contains("c2 = 0, c3 = 0"), "{out}");
}

#[test]
fn failing_check_exits_one() {
    let file = corpus_path("gkdv");
    let (code, out) = stdout(&["check", "multiplier", file.to_str().unwrap(), "--name", "Q3"]);
    assert_eq!(code, 1, "{out}");
}

#[test]
fn json_output_is_deterministic() {
    let file = corpus_path("gmt");
    let args = ["regress", file.to_str().unwrap(), "--json", "--seed", "7"];
    let first = claw().args(args).output().unwrap().stdout;
    let second = claw().args(args).output().unwrap().stdout;
    assert_eq!(first, second);
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["command"], "regress");
    assert_eq!(v["seed"], 7);
    let text = String::from_utf8(first).unwrap();
    let at: Vec<usize> = ["\"command\"", "\"system\"", "\"results\"", "\"seed\"", "\"params\""].iter().map(|k| text.find(k).unwrap()).collect();
    assert!(at.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn malformed_document_exits_two() {
    let dir = std::env::temp_dir().join(format!("claw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.claw");
    std::fs::write(&file, "[system]\nname = s\nindep = t, x\ndep = u\neq.G = u_^2\nlead.G = u_t\n").unwrap();
    claw().args(["regress", file.to_str().unwrap()]).assert().code(2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_flag_exits_two() {
    claw().args(["check", "multiplier", "--bogus"]).assert().code(2);
}

#[test]
fn every_corpus_file_regresses_cleanly() {
    for name in common::CORPUS {
        let file = corpus_path(name);
        claw().args(["regress", file.to_str().unwrap()]).assert().code(0);
    }
}
