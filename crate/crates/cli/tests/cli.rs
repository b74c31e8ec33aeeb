use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gogtool_core::counts::ThresholdReport;
use gogtool_core::gog::GogFile;
use gogtool_core::patches::{CaretTable, ViralReport};
use gogtool_core::simplicial::{HomologyReport, SimplicialComplex};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect()
}

fn gogtool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gogtool")).args(args).output().expect("runs")
}

fn ok(args: &[&str]) -> String {
    let out = gogtool(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_and_syntax_errors() {
    let v: Value = serde_json::from_str(&ok(&["validate", path(&data("bs23.gog"))])).unwrap();
    assert_eq!(v["valid"], true);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gog");
    std::fs::write(&bad, "vertex v\nedge e : v => v index 2 3\n").unwrap();
    let out = gogtool(&["validate", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(&bad, "vertex v\nedge e : v -> w index 2 3\n").unwrap();
    let out = gogtool(&["validate", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown vertex `w`"));
}

#[test]
fn caret_table_of_augmented_bs23() {
    let text = ok(&["carets", path(&data("bs23_aug.gog")), "--default-gates"]);
    let t: CaretTable = serde_json::from_str(&text).unwrap();
    assert_eq!(t.m, vec![vec![9, 8], vec![5, 6]]);
    assert_eq!(serde_json::to_string_pretty(&t).unwrap() + "\n", text);
}

#[test]
fn viral_negative_control() {
    let out = gogtool(&["viral", path(&data("z_line.gog"))]);
    assert_eq!(out.status.code(), Some(1));
    let r: ViralReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.reasons.iter().any(|s| s == "M_11 = 1"));
    let out = gogtool(&["viral", path(&data("bs23.gog"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("M_22 = 2"));
    ok(&["viral", path(&data("bs23_aug.gog"))]);
}

#[test]
fn inadmissible_gates_exit_one() {
    let out = gogtool(&["gates", path(&data("loop33.gog")), "--gates", "e.iota"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["certificate"]["verdict"], "inadmissible");
    assert_eq!(v["certificate"]["cycle"][0], "e.tau");
    let v: Value = serde_json::from_str(&ok(&["gates", path(&data("tri_multi.gog"))])).unwrap();
    assert_eq!(v["certificate"]["verdict"], "admissible");
}

#[test]
fn augment_and_glue_emit_valid_gog() {
    let aug = GogFile::parse(&ok(&["augment", path(&data("bs23.gog"))])).unwrap();
    let e = &aug.graph.edges()[0];
    assert_eq!(e.index, [6, 9]);
    let glued = ok(&[
        "glue",
        path(&data("loop33.gog")),
        path(&data("amalgam33.gog")),
        "--at",
        "v",
        "--to",
        "w",
        "--index-at",
        "2",
        "--index-to",
        "3",
    ]);
    let g = GogFile::parse(&glued).unwrap().graph;
    assert_eq!(g.vertex_count(), 3);
    assert_eq!(g.edge_count(), 3);
    assert_eq!(GogFile::bare(g).serialize(), glued);
}

#[test]
fn enumerate_and_sf() {
    let v: Value = serde_json::from_str(&ok(&["enumerate", path(&data("loop33.gog")), "--max-expansions", "1"])).unwrap();
    assert_eq!(v["count"], 7);
    let v: Value = serde_json::from_str(&ok(&["sf", path(&data("loop33.gog")), "--height", "10"])).unwrap();
    assert_eq!(v[0]["counts"]["interior"], 2);
    assert_eq!(v[0]["counts"]["leaves"], serde_json::json!([5, 5]));
    let v: Value = serde_json::from_str(&ok(&["sf", path(&data("loop33.gog")), "--height", "7"])).unwrap();
    assert_eq!(v, serde_json::json!([]));
}

#[test]
fn desclink_artifacts_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path());
    ok(&["desclink", path(&data("loop33.gog")), "--height", "10", "--oracle", "--out", out]);
    let verts: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("link_2_5_5_vertices.json")).unwrap()).unwrap();
    assert_eq!(verts.len(), 200);
    let faces = std::fs::read_to_string(dir.path().join("link_2_5_5.json")).unwrap();
    let cx = SimplicialComplex::from_json(&faces).unwrap();
    assert_eq!(cx.f_vector(), vec![200]);
    let csv = std::fs::read_to_string(dir.path().join("links.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("10,\"(2,(5,5))\",200,0,200,200"));

    let h: Value = serde_json::from_str(&ok(&["homology", "--in", path(&dir.path().join("link_2_5_5.json"))])).unwrap();
    let report: HomologyReport = serde_json::from_value(h["homology"].clone()).unwrap();
    assert_eq!(report.betti, vec![200]);
}

#[test]
fn caps_exit_two() {
    let out = gogtool(&["desclink", path(&data("loop33.gog")), "--height", "14", "--max-link-vertices", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeded cap of 100"));
}

#[test]
fn thresholds_require_viral_property() {
    let v: Value = serde_json::from_str(&ok(&["threshold", path(&data("loop33.gog")), "-m", "1"])).unwrap();
    let t: ThresholdReport = serde_json::from_value(v["threshold"].clone()).unwrap();
    assert_eq!((t.beta, t.c), (5, 32));
    assert_eq!(t.r, 2 * (t.alpha + t.c));
    assert!(v["note"].as_str().unwrap().contains("beyond the construction caps"));
    assert_eq!(gogtool(&["threshold", path(&data("bs23.gog")), "-m", "0"]).status.code(), Some(1));
}

#[test]
fn random_complex_lemma_and_homology() {
    let args = ["random-complex", "--seed", "11", "-n", "8", "--edge", "0.9", "--fill", "0.9", "--plant", "5"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    std::fs::write(&file, &a).unwrap();
    let h: Value = serde_json::from_str(&ok(&["homology", "--in", path(&file)])).unwrap();
    assert!(h["caveat"].as_str().unwrap().contains("not sufficient"));

    let sphere = dir.path().join("s.json");
    std::fs::write(&sphere, "[[0,1,2],[0,1,3],[0,2,3],[1,2,3]]").unwrap();
    let out = gogtool(&["lemma-check", "--in", path(&sphere), "--sigma", "0,1,2,3", "-m", "3", "-k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a 3-pseudosimplex"));
    let v: Value = serde_json::from_str(&ok(&["lemma-check", "--in", path(&sphere), "--sigma", "0,1,2,3", "-m", "1", "-k", "1"])).unwrap();
    assert_eq!(v["outcome"]["bound"], 0);
}

#[test]
fn report_is_reproducible() {
    let input = data("loop33.gog");
    let args = ["report", path(&input), "--heights", "6,10,14", "--m-max", "1"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["thresholds"][0]["r"], 36);
    assert_eq!(v["heights"][1]["links"][0]["vertices"], 200);
    assert!(v.get("timing_ms").is_none());
    let timed: Value = serde_json::from_str(&ok(&["report", path(&data("loop33.gog")), "--heights", "6", "--timing"])).unwrap();
    assert!(timed["timing_ms"].is_object());

    let capped: Value = serde_json::from_str(&ok(&[
        "report",
        path(&data("loop33.gog")),
        "--heights",
        "14",
        "--max-link-vertices",
        "10",
    ]))
    .unwrap();
    assert!(capped["heights"][0]["links"][0]["error"].as_str().unwrap().contains("cap"));
}

#[test]
fn usage_errors_are_not_cap_errors() {
    let out = gogtool(&["sf", path(&data("loop33.gog"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--height"));
    assert_eq!(gogtool(&["--help"]).status.code(), Some(0));
}

#[test]
fn dot_export() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["carets", path(&data("loop33.gog")), "--dot", "--out", path(dir.path())]);
    let dot = std::fs::read_to_string(dir.path().join("caret_e.iota.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
}
