use std::path::PathBuf;
use std::process::{Command, Output};

fn linkage(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../linkages")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkage"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(name: &str) -> String {
    linkage(name).to_string_lossy().into_owned()
}

#[test]
fn describe_heptagon_reports_type() {
    let o = run(&["describe", &path("heptagon.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dim M = 4, type (2,2)"), "{}", stdout(&o));
}

#[test]
fn describe_three_piece_and_hexagon() {
    let o = run(&["describe", &path("three_piece.json")]);
    assert!(stdout(&o).contains("dim M = 4, type (3,1)"));
    let o = run(&["describe", &path("hexagon.json")]);
    assert!(stdout(&o).contains("dim M = 3, type (2,1)"));
}

#[test]
fn describe_complete_graph_finds_one_redundant_bar() {
    let o = run(&["describe", &path("k4.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1 redundant bar"), "{}", stdout(&o));
}

#[test]
fn malformed_and_invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"vertices\": [\"A\",\n  \"B\"], \"edges\": [oops]}").unwrap();
    let o = run(&["describe", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let invalid = dir.path().join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{"vertices": ["A", "B"], "edges": [{"a": "A", "b": "B", "length": -1.0}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["describe", invalid.to_str().unwrap()]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["solve", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        run(&["flow", &path("fourbar.json"), "--dt=-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["flow", &path("fourbar.json"), "--unknown"]).status.code(),
        Some(2)
    );
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("triangle.json");
    std::fs::write(
        &file,
        r#"{"vertices": ["A", "B", "C"], "edges": [
            {"a": "A", "b": "B", "length": 1.0},
            {"a": "B", "b": "C", "length": 1.0},
            {"a": "C", "b": "A", "length": 5.0}]}"#,
    )
    .unwrap();
    assert_eq!(run(&["solve", file.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn commute_on_hexagon() {
    let o = run(&["commute", &path("hexagon.json"), "--s", "0.2", "--t", "0.2", "--dt", "1e-3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("max defect")).unwrap();
    let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(value <= 1e-6);
}

#[test]
fn critical_table_matches_listed_values() {
    let o = run(&["critical", &path("hexagon.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for v in ["max 3.400000", "saddle 0.800000", "saddle 2.500000", "min 0.000000"] {
        assert!(text.contains(v), "{text}");
    }
    assert!(text.contains("numeric values match the listed values"));
}

#[test]
fn svg_of_pinned_triangle() {
    let o = run(&["svg", &path("triangle345.json")]);
    assert_eq!(o.status.code(), Some(0));
    let svg = stdout(&o);
    assert_eq!(svg.matches(r#"<line class="bar""#).count(), 2);
    assert_eq!(svg.matches("stroke-dasharray").count(), 0);
    assert_eq!(svg.matches(r#"<rect class="base""#).count(), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["flow", "linkages", "--piece", "1", "--t", "0.3", "--seed", "7"],
        vec!["svg", "linkages", "--seed", "7"],
    ] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{}-{k}", args[0]));
            let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
            full[1] = path("heptagon.json");
            full.push("--out".into());
            full.push(out.to_string_lossy().into_owned());
            let refs: Vec<&str> = full.iter().map(String::as_str).collect();
            assert_eq!(run(&refs).status.code(), Some(0));
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}

#[test]
fn flow_writes_csv_header() {
    let o = run(&["flow", &path("fourbar.json"), "--t", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("time,residual,F_1,x_1,y_1,x_2,y_2\n"));
    assert_eq!(text.lines().count(), 12);
}
