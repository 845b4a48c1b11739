use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasicross"))
        .args(args)
        .env_remove("QUASICROSS_PALETTE")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn err_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn count_on_convex_k6() {
    let out = run(&["count", path(&fixture("convex_k6.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["triple_count"], 1);
    assert_eq!(v["crossing_pair_count"], 15);
    assert_eq!(
        v["triples"],
        serde_json::json!([[["1", "4"], ["2", "5"], ["3", "6"]]])
    );
    assert_eq!(v["bounds"]["best_integer_lower_bound"], "0");
}

#[test]
fn verify_exit_codes() {
    let ok = run(&["verify", path(&fixture("convex_k6.json"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["is_valid"], true);
    for (name, kind) in [
        ("invalid_double_crossing.json", "MultipleMeetings"),
        ("invalid_edge_through_vertex.json", "EdgeThroughVertex"),
        ("invalid_collinear_overlap.json", "DegenerateContact"),
        ("invalid_concurrent.json", "ConcurrentCrossings"),
    ] {
        let out = run(&["verify", path(&fixture(name))]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        let v = json(&out);
        assert_eq!(v["is_valid"], false);
        assert!(
            v["violations"]
                .as_array()
                .unwrap()
                .iter()
                .any(|x| x["kind"] == kind),
            "{name}"
        );
    }
}

#[test]
fn count_on_invalid_drawing_exits_one_with_report() {
    let out = run(&["count", path(&fixture("invalid_concurrent.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["validation"]["is_valid"], false);
    assert_eq!(v["triple_count"], Value::Null);
    assert_eq!(err_json(&out)["error"], "invalid_drawing");
}

#[test]
fn bounds_for_complete_graphs() {
    let v = json(&run(&["bounds", "--complete", "11"]));
    assert_eq!(v["eq1"], "7/2");
    assert_eq!(v["best_integer_lower_bound"], "4");
    let v = json(&run(&["bounds", "--complete", "10"]));
    assert_eq!(v["best_integer_lower_bound"], "0");
    let v = json(&run(&["bounds", "--n", "11", "--e", "55"]));
    assert_eq!(v["best_integer_lower_bound"], "4");
}

#[test]
fn table_rows_are_exact() {
    let out = run(&["table", "--complete-range", "11", "14"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out)["rows"].as_array().unwrap().clone();
    let got: Vec<(u64, String, String)> = rows
        .iter()
        .map(|r| {
            (
                r["n"].as_u64().unwrap(),
                r["eq1"].as_str().unwrap().to_string(),
                r["eq1_ceil"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let want = [
        (11, "7/2", "4"),
        (12, "8", "8"),
        (13, "27/2", "14"),
        (14, "20", "20"),
    ];
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!((g.0, g.1.as_str(), g.2.as_str()), w);
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["bounds"][..],
        &["bounds", "--n", "11"],
        &["frobnicate"],
        &["table", "--complete-range", "9"],
        &["subsample", "x.json", "--p", "1/2"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
    let out = run(&["bounds", "--n", "3", "--e", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"], "bounds");
    assert_eq!(
        run(&["table", "--complete-range", "9", "5"]).status.code(),
        Some(2)
    );
}

#[test]
fn input_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"format_version": 1, "vertices": [{"id": "a", "x": "1/0", "y": "0"}], "edges": []}"#,
    )
    .unwrap();
    let out = run(&["count", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let e = err_json(&out);
    assert_eq!(e["error"], "parse");
    assert!(
        e["message"].as_str().unwrap().contains("zero denominator"),
        "{e}"
    );

    let out = run(&["verify", path(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"], "io");
}

#[test]
fn gen_convex_writes_the_canonical_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("k6.json");
    let out = run(&["gen-convex", "6", "--out", path(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["e"], 15);
    assert_eq!(
        std::fs::read_to_string(&out_path).unwrap(),
        std::fs::read_to_string(fixture("convex_k6.json")).unwrap()
    );
    assert_eq!(
        run(&["gen-convex", "0", "--out", path(&out_path)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn subsample_is_seeded() {
    let k6 = fixture("convex_k6.json");
    let args = [
        "subsample",
        path(&k6),
        "--p",
        "1/2",
        "--trials",
        "300",
        "--seed",
        "9",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["vertices"]["expected"], "3");
    assert_eq!(v["edges"]["expected"], "15/4");
    assert_eq!(v["triples"]["expected"], "1/64");
    let out = run(&[
        "subsample",
        path(&fixture("convex_k6.json")),
        "--p",
        "3/2",
        "--trials",
        "3",
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "subsample",
        path(&fixture("invalid_concurrent.json")),
        "--p",
        "1/2",
        "--trials",
        "3",
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn svg_export() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    for p in [&a, &b] {
        let out = run(&["svg", path(&fixture("convex_k6.json")), "--out", path(p)]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&out)["triple_circles"], 1);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.matches("class=\"triple\"").count(), 1);

    let out = run(&[
        "svg",
        path(&fixture("invalid_double_crossing.json")),
        "--out",
        path(&a),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "svg",
        path(&fixture("convex_k6.json")),
        "--out",
        path(&dir.path().join("no/such/dir.svg")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn svg_palette_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let drawing = dir.path().join("tagged.json");
    let mut text = std::fs::read_to_string(fixture("convex_k6.json")).unwrap();
    text = text.replacen(
        r#"{"u": "1", "v": "2", "bends": []}"#,
        r#"{"u": "1", "v": "2", "bends": [], "tag": "pink"}"#,
        1,
    );
    std::fs::write(&drawing, text).unwrap();
    let out_path = dir.path().join("t.svg");
    let run_with = |palette: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_quasicross"));
        c.args(["svg", path(&drawing), "--out", path(&out_path)])
            .env_remove("QUASICROSS_PALETTE");
        if let Some(p) = palette {
            c.env("QUASICROSS_PALETTE", p);
        }
        let out = c.output().unwrap();
        (
            out.status.code(),
            std::fs::read_to_string(&out_path).unwrap_or_default(),
        )
    };
    let (code, svg) = run_with(None);
    assert_eq!(code, Some(0));
    assert!(svg.contains("stroke=\"#ff69b4\""));
    let (code, svg) = run_with(Some("pink=#010203"));
    assert_eq!(code, Some(0));
    assert!(svg.contains("stroke=\"#010203\"") && !svg.contains("#ff69b4"));
    assert_eq!(run_with(Some("garbage")).0, Some(2));
}

fn search_config(dir: &std::path::Path, iterations: u64, checkpoint_every: u64) -> PathBuf {
    let cfg = serde_json::json!({
        "seed": 3,
        "max_iterations": iterations,
        "initial_temperature": "2",
        "cooling_factor": "999/1000",
        "move_weights": {"perturb_vertex": 1, "add_bend": 2, "move_bend": 2, "remove_bend": 1},
        "max_bends_per_edge": 2,
        "perturbation_radius": "6",
        "checkpoint_every": checkpoint_every,
    });
    let p = dir.join(format!("cfg_{iterations}_{checkpoint_every}.json"));
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

#[test]
fn search_writes_best_drawing_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = search_config(dir.path(), 2000, 0);
    let (best, trace) = (dir.path().join("best.json"), dir.path().join("trace.jsonl"));
    let out = run(&[
        "search",
        path(&fixture("convex_k6.json")),
        "--config",
        path(&cfg),
        "--out",
        path(&best),
        "--trace",
        path(&trace),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["initial_objective"]["triples"], 1);
    assert_eq!(v["best_objective"]["triples"], 0);
    assert_eq!(v["best"]["triple_count"], 0);
    assert_eq!(v["best"]["validation"]["is_valid"], true);

    let recount = json(&run(&["count", path(&best)]));
    assert_eq!(recount["triple_count"], 0);
    assert_eq!(
        recount["crossing_pair_count"],
        v["best_objective"]["crossing_pairs"]
    );

    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2000);
    assert!(lines
        .iter()
        .all(|l| l["restart"] == 0 && l["temperature"].is_string()));
}

#[test]
fn search_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("convex_k6.json");
    let direct = json(&run(&[
        "search",
        path(&input),
        "--config",
        path(&search_config(dir.path(), 1200, 0)),
    ]));

    let ckpt = dir.path().join("ckpt.json");
    let first = run(&[
        "search",
        path(&input),
        "--config",
        path(&search_config(dir.path(), 600, 200)),
        "--checkpoint",
        path(&ckpt),
    ]);
    assert_eq!(first.status.code(), Some(0));
    assert!(dir.path().join("ckpt.json.state.json").exists());
    let resumed = run(&[
        "search",
        path(&input),
        "--config",
        path(&search_config(dir.path(), 1200, 200)),
        "--resume",
        path(&ckpt),
    ]);
    assert_eq!(
        resumed.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&resumed.stderr)
    );
    let resumed = json(&resumed);
    assert_eq!(resumed["best_objective"], direct["best_objective"]);
    assert_eq!(resumed["best_drawing"], direct["best_drawing"]);

    let mut other = serde_json::from_str::<Value>(
        &std::fs::read_to_string(search_config(dir.path(), 1200, 200)).unwrap(),
    )
    .unwrap();
    other["seed"] = 4.into();
    let other_cfg = dir.path().join("other.json");
    std::fs::write(&other_cfg, other.to_string()).unwrap();
    let out = run(&[
        "search",
        path(&input),
        "--config",
        path(&other_cfg),
        "--resume",
        path(&ckpt),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = search_config(dir.path(), 10, 0);
    let out = run(&[
        "search",
        path(&fixture("invalid_double_crossing.json")),
        "--config",
        path(&cfg),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let bad = dir.path().join("bad_cfg.json");
    std::fs::write(&bad, r#"{"seed": 1}"#).unwrap();
    let out = run(&[
        "search",
        path(&fixture("convex_k6.json")),
        "--config",
        path(&bad),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"], "config");
}

#[test]
fn serve_answers_health_over_tcp() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_quasicross"))
        .args(["serve", "--port", "0"])
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().rsplit("http://").next().unwrap().to_string();
    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /api/health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().ok();
    child.wait().ok();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(
        response.contains(&format!("\"version\":\"{}\"", env!("CARGO_PKG_VERSION"))),
        "{response}"
    );
}
