use std::path::Path;
use std::process::{Command, Output};

use halving_lab::construction::recursive::build;
use halving_lab::io::{read_json, to_json};
use halving_lab::artifact::{PointSetArtifact, Provenance};
use halving_lab::exact::Point;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halving-lab"))
        .args(args)
        .env("HALVING_LAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct1_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = run(&["construct1", "--order", "1", "--index", "1", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let doc = read_json(&out).unwrap();
    assert_eq!(doc, build(1, 1).unwrap().to_artifact().unwrap());
    assert_eq!(doc.len(), 6);
}

#[test]
fn counts_table() {
    let o = run(&["counts", "--max", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().last(), Some("3,8,290,765"));
}

#[test]
fn verify_unit_square() {
    let dir = tempfile::tempdir().unwrap();
    let sq = dir.path().join("sq.json");
    let square = PointSetArtifact::new(
        2,
        [(0, 0), (1, 0), (1, 1), (0, 1)].iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect(),
        Provenance::new("square"),
    )
    .unwrap();
    std::fs::write(&sq, to_json(&square).unwrap()).unwrap();
    let o = run(&["verify", "--input", path_str(&sq), "--oracle", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("naive halving_count 2"));
    assert!(text.contains("sweep halving_count 2"));
}

#[test]
fn failed_verification_exits_one_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let report = dir.path().join("report.json");
    let square = PointSetArtifact::new(
        2,
        [(0, 0), (1, 0), (1, 1), (0, 1)].iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect(),
        Provenance::new("square"),
    )
    .unwrap()
    .with_claims(vec![vec![0, 1]])
    .unwrap();
    std::fs::write(&bad, to_json(&square).unwrap()).unwrap();
    let o = run(&["--report", path_str(&report), "verify", "--input", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let written = std::fs::read_to_string(&report).unwrap();
    assert!(written.contains("\"passed\": false"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["construct1", "--order", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--input", "/nonexistent/file.json"]).status.code(), Some(2));
    assert_eq!(run(&["construct1", "--order", "1", "--index", "2"]).status.code(), Some(2));
}

#[test]
fn plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("s.json");
    assert_eq!(
        run(&["construct1", "--order", "1", "--index", "1", "--out", path_str(&doc)]).status.code(),
        Some(0)
    );
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    assert_eq!(run(&["plot", "--input", path_str(&doc), "--out", path_str(&a)]).status.code(), Some(0));
    assert_eq!(run(&["plot", "--input", path_str(&doc), "--out", path_str(&b)]).status.code(), Some(0));
    let svg = std::fs::read(&a).unwrap();
    assert_eq!(svg, std::fs::read(&b).unwrap());
    let text = String::from_utf8(svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 6);
    assert_eq!(text.matches("fill=\"black\"").count(), 1);
    assert_eq!(text.matches("<line").count(), 5);
}

#[test]
fn block_pipeline_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("base.json");
    let blocks = dir.path().join("blocks.json");
    let o = run(&["construct1", "--order", "1", "--index", "1", "--finalize", "--out", path_str(&base)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "construct2", "--base", path_str(&base), "--blocks", "1", "--quant-exp", "9", "--out", path_str(&blocks),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&blocks).unwrap().claimed_halving.len(), 15);
    // the block set is far from dense
    assert_eq!(run(&["density", "--input", path_str(&blocks), "--gamma", "4"]).status.code(), Some(1));
    assert_eq!(run(&["density", "--input", path_str(&blocks), "--gamma", "1000000"]).status.code(), Some(0));
}

#[test]
fn highdim_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = run(&["highdim", "--dim", "3", "--m", "2", "--seed", "1", "--format", "csv", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("idx,x_num,x_den,y_num,y_den,z_num,z_den\n"));
}
