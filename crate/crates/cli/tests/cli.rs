use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mallows-dpm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_dataset(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("gen");
    ok(&[
        "gen",
        "--k",
        "2",
        "--n",
        "6",
        "--t",
        "3",
        "--per-cluster",
        "15",
        "--seed",
        "9",
        "--out",
        p(&out),
    ]);
    out
}

#[test]
fn fit_defaults_follow_the_unit_prior_setup() {
    let dir = TempDir::new().unwrap();
    let d = small_dataset(dir.path());
    let out = dir.path().join("fit");
    ok(&[
        "fit",
        p(&d.join("data.txt")),
        "--sweeps",
        "4",
        "--out-dir",
        p(&out),
    ]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let cfg = &m["config"];
    assert_eq!(cfg["prior"]["alpha"], 1.0);
    assert_eq!(cfg["prior"]["nu"], 1.0);
    assert_eq!(cfg["prior"]["r"], serde_json::json!([1.0, 1.0, 1.0]));
    assert_eq!(cfg["k_init"], 20);
    assert_eq!(cfg["t_gibbs"], 10);
    assert_eq!(cfg["slice"]["t_slices"], 3);
    assert_eq!(m["points"], 30);
    assert_eq!(m["data_sha256"].as_str().unwrap().len(), 64);
    // one snapshot line per recorded sweep, one summary row per sweep
    let trace = fs::read_to_string(out.join("trace_chain0.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["assignments"].as_array().unwrap().len(), 30);
    let summary = fs::read_to_string(out.join("summary_chain0.csv")).unwrap();
    assert_eq!(
        summary.lines().next().unwrap(),
        "sweep,n_clusters,largest_fraction,elapsed_secs"
    );
    assert_eq!(summary.lines().count(), 1 + 5);
}

#[test]
fn chains_get_separate_streams_and_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let d = small_dataset(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "fit",
        p(&d.join("data.txt")),
        "--sampler",
        "beta",
        "--sweeps",
        "6",
        "--chains",
        "4",
        "--items",
        p(&d.join("items.json")),
        "--out-dir",
        p(&a),
    ]);
    let traces: Vec<Vec<u8>> = (0..4)
        .map(|c| fs::read(a.join(format!("trace_chain{c}.jsonl"))).unwrap())
        .collect();
    assert!(!a.join("trace_chain4.jsonl").exists());
    for i in 0..4 {
        for j in i + 1..4 {
            assert_ne!(traces[i], traces[j], "chains {i} and {j} coincide");
        }
    }
    ok(&[
        "fit",
        "--manifest",
        p(&a.join("manifest.json")),
        "--out-dir",
        p(&b),
    ]);
    for (c, trace) in traces.iter().enumerate() {
        let name = format!("trace_chain{c}.jsonl");
        assert_eq!(
            &fs::read(b.join(&name)).unwrap(),
            trace,
            "{name} differs on rerun"
        );
    }
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );

    // a changed data file is refused
    fs::write(d.join("data.txt"), "#n=6\n0 1 2\n").unwrap();
    let out = run(&[
        "fit",
        "--manifest",
        p(&a.join("manifest.json")),
        "--out-dir",
        p(&b),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn truth_against_itself_scores_zero() {
    let dir = TempDir::new().unwrap();
    let d = small_dataset(dir.path());
    let labels: Vec<usize> = fs::read_to_string(d.join("labels.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let k = labels.iter().max().unwrap() + 1;
    let cluster =
        serde_json::json!({"size": 1, "sigma": [0, 1, 2, 3, 4, 5], "theta": [1.0, 1.0, 1.0]});
    let lines: Vec<String> = (1..=3)
        .map(|s| serde_json::json!({"sweep": s, "assignments": labels, "clusters": vec![cluster.clone(); k]}).to_string())
        .collect();
    let trace = dir.path().join("truth.jsonl");
    fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let csv = ok(&[
        "eval",
        "--trace",
        p(&trace),
        "--truth",
        p(&d.join("labels.txt")),
    ]);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "sweep,vi_nats,n_clusters");
    assert_eq!(&rows[1..], &["1,0.0,2", "2,0.0,2", "3,0.0,2"]);
    let csv = ok(&["eval", "--trace", p(&trace), "--trace2", p(&trace)]);
    assert_eq!(csv.lines().nth(1), Some("3,0.0,2"));

    let short = dir.path().join("short.txt");
    fs::write(&short, "0\n1\n").unwrap();
    let out = run(&["eval", "--trace", p(&trace), "--truth", p(&short)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["eval", "--trace", p(&trace)]).status.code(), Some(2));
}

#[test]
fn malformed_lines_are_reported_with_their_location() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.txt");
    fs::write(&data, "a b c\nb a\n\nc c a\n").unwrap();
    let out = run(&[
        "fit",
        p(&data),
        "--sweeps",
        "2",
        "--out-dir",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(&format!("{}:4:", data.display())), "{err}");
    assert!(
        !dir.path().join("o").exists(),
        "nothing is written on bad input"
    );
}

#[test]
fn invalid_flags_are_rejected_before_sampling() {
    let dir = TempDir::new().unwrap();
    let d = small_dataset(dir.path());
    let data = d.join("data.txt");
    let o = dir.path().join("o");
    for args in [
        vec!["--r", "1,2"],
        vec!["--alpha", "0"],
        vec!["--k-init", "0"],
        vec!["--chains", "0"],
        vec!["--sampler", "gibbs"],
        vec!["--burn-in", "9", "--sweeps", "5"],
    ] {
        let mut full = vec!["fit", p(&data), "--out-dir", p(&o)];
        full.extend(&args);
        assert_eq!(run(&full).status.code(), Some(2), "{args:?}");
    }
    assert!(!o.exists());
    // per-rank r of the right length is accepted
    ok(&[
        "fit",
        p(&data),
        "--r",
        "1,0.5,2",
        "--sweeps",
        "1",
        "--out-dir",
        p(&o),
    ]);
}

#[test]
fn uniform_trace_gives_the_uniform_likelihood() {
    let dir = TempDir::new().unwrap();
    let (n, t) = (6usize, 2usize);
    let cluster =
        |size| serde_json::json!({"size": size, "sigma": [5, 4, 3, 2, 1, 0], "theta": [0.0, 0.0]});
    let lines = [
        serde_json::json!({"sweep": 1, "assignments": [0, 0, 1], "clusters": [cluster(2), cluster(1)]}),
        serde_json::json!({"sweep": 2, "assignments": [0, 0, 0], "clusters": [cluster(3)]}),
    ];
    let trace = dir.path().join("t.jsonl");
    fs::write(&trace, lines.map(|l| l.to_string()).join("\n")).unwrap();
    let test = dir.path().join("test.txt");
    fs::write(&test, "0 1\n3 2\n5 0\n2 4\n").unwrap();
    let report = ok(&["loglik", "--trace", p(&trace), "--test-file", p(&test)]);
    let per_point: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("per_point "))
        .unwrap()
        .parse()
        .unwrap();
    let expected = -((n - t + 1)..=n).map(|k| (k as f64).ln()).sum::<f64>();
    assert!(
        (per_point - expected).abs() < 1e-12,
        "{per_point} vs {expected}"
    );
    assert!(report.contains("samples 2"));

    // line order does not matter
    let shuffled = dir.path().join("shuffled.txt");
    fs::write(&shuffled, "2 4\n5 0\n0 1\n3 2\n").unwrap();
    let again = ok(&["loglik", "--trace", p(&trace), "--test-file", p(&shuffled)]);
    let total = |r: &str| -> f64 {
        r.lines()
            .find_map(|l| l.strip_prefix("total "))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((total(&report) - total(&again)).abs() < 1e-12);

    // items outside the trace's range
    fs::write(&test, "0 9\n").unwrap();
    let out = run(&["loglik", "--trace", p(&trace), "--test-file", p(&test)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8(out.stderr).unwrap().contains(":1:"));
}

#[test]
fn fitted_trace_scores_close_to_the_truth() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("d");
    ok(&[
        "gen",
        "--preset",
        "fig8",
        "--total",
        "300",
        "--test-points",
        "300",
        "--seed",
        "4",
        "--out",
        p(&d),
    ]);
    let f = dir.path().join("f");
    ok(&[
        "fit",
        p(&d.join("data.txt")),
        "--items",
        p(&d.join("items.json")),
        "--sampler",
        "beta",
        "--sweeps",
        "40",
        "--out-dir",
        p(&f),
    ]);
    let report = ok(&[
        "loglik",
        "--trace",
        p(&f.join("trace_chain0.jsonl")),
        "--test-file",
        p(&d.join("test.txt")),
    ]);
    let per_point: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("per_point "))
        .unwrap()
        .parse()
        .unwrap();
    // far above the uniform baseline ln(7!/12!)
    let uniform = -(8..=12).map(|k| (k as f64).ln()).sum::<f64>();
    assert!(
        per_point > uniform + 3.0,
        "{per_point} vs uniform {uniform}"
    );
    let centers = ok(&[
        "centers",
        "--trace",
        p(&f.join("trace_chain0.jsonl")),
        "--top",
        "3",
    ]);
    assert!(
        centers.starts_with("sweep 40\ncluster 0 size "),
        "{centers}"
    );
}

#[test]
fn gen_presets_match_their_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ds3");
    ok(&[
        "gen",
        "--preset",
        "ds3",
        "--per-cluster",
        "5",
        "--seed",
        "1",
        "--out",
        p(&out),
    ]);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["spec"]["n"], 20);
    assert_eq!(truth["spec"]["t"], 10);
    let theta: Vec<f64> = serde_json::from_value(truth["truth"]["thetas"][0].clone()).unwrap();
    for (i, th) in theta.iter().enumerate() {
        assert!((th - (1.5 - i as f64 * 0.1)).abs() < 1e-12);
    }
    let data = fs::read_to_string(out.join("data.txt")).unwrap();
    assert_eq!(data.lines().next(), Some("#n=20"));
    assert_eq!(data.lines().count(), 1 + 50);
    assert!(data
        .lines()
        .skip(1)
        .all(|l| l.split_whitespace().count() == 10));

    let again = dir.path().join("again");
    ok(&[
        "gen",
        "--preset",
        "ds3",
        "--per-cluster",
        "5",
        "--seed",
        "1",
        "--out",
        p(&again),
    ]);
    assert_eq!(
        fs::read(out.join("data.txt")).unwrap(),
        fs::read(again.join("data.txt")).unwrap()
    );

    let fig8 = dir.path().join("fig8");
    ok(&[
        "gen",
        "--preset",
        "fig8",
        "--total",
        "30",
        "--out",
        p(&fig8),
    ]);
    let truth: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fig8.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["truth"]["centers"].as_array().unwrap().len(), 3);
    assert_eq!(truth["spec"]["n"], 12);
    assert_eq!(
        run(&["gen", "--k", "2", "--out", p(&fig8)]).status.code(),
        Some(2)
    );
}

#[test]
fn approx_error_default_grid() {
    let csv = ok(&["approx-error", "--a-steps", "5"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,a,b,error"));
    let rows: Vec<(usize, f64, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(rows.len(), 3 * 5 * 5);
    let ns: Vec<usize> = rows.iter().map(|r| r.0).collect();
    assert!(ns.contains(&10) && ns.contains(&20) && ns.contains(&50));
    for &(_, _, b, e) in &rows {
        assert!(e > -1e-9 && e < 1.0);
        if b == 1.0 {
            assert!(e.abs() < 1e-9);
        }
    }
    assert_eq!(
        run(&["approx-error", "--b-list", "0"]).status.code(),
        Some(2)
    );
}
