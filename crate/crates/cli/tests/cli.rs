use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_SWEEP: &str = r#"
moduli = [15, 31]
shifts = [1, 2]
precisions = [8]
epsilon = [0.0, 0.8]
sigma = [0.0, 2.0]
lambda = [0.0, 0.7]
shots = [2000]
replicates = 3
seed = 11
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_order-recovery"));
    cmd.env_remove("ORDER_RECOVERY_OUT_DIR");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_probs(path: &Path, t: u32, mass: &[(usize, f64)]) {
    let mut probs = vec![0.0; 1 << t];
    for &(y, p) in mass {
        probs[y] = p;
    }
    let json = serde_json::json!({ "t": t, "probs": probs });
    fs::write(path, json.to_string()).unwrap();
}

#[test]
fn ideal_comb_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &[
            "simulate",
            "--N",
            "15",
            "--a",
            "2",
            "--t",
            "8",
            "--epsilon",
            "0",
            "--sigma0",
            "0",
            "--lambda",
            "0",
            "--out",
            "comb.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Q=256"));
    assert!(stdout(&o).contains("H_norm=0.250000"));

    let o = run(
        dir.path(),
        &["decode", "comb.json", "--N", "15", "--a", "2", "--t", "8"],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.trim_end()
            .ends_with("recoverable: true (r_calc=4, r_true=4)"),
        "{out}"
    );
    let json_end = out.rfind('}').unwrap() + 1;
    let decoded: serde_json::Value = serde_json::from_str(&out[..json_end]).unwrap();
    assert_eq!(decoded["r_calc"], 4);
    // y = 0 and y = 128 give unverified candidates 1 and 2.
    assert_eq!(decoded["M_ver"], 0.5);

    let o = run(
        dir.path(),
        &["features", "comb.json", "--N", "15", "--a", "2", "--t", "8"],
    );
    let fv: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fv["h_norm"], 0.25);
    assert_eq!(fv["m1_frac"], 1.0);
    assert_eq!(fv["margin_frac"], 1.0);
    assert!((fv["a_peak"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn decode_verdicts() {
    let dir = TempDir::new().unwrap();
    write_probs(&dir.path().join("fail.json"), 8, &[(32, 0.6), (128, 0.4)]);
    write_probs(&dir.path().join("zero.json"), 8, &[(0, 1.0)]);
    let o = run(
        dir.path(),
        &["decode", "fail.json", "--N", "15", "--a", "4", "--t", "8"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("recoverable: false (r_calc=8, r_true=2)"));
    let o = run(
        dir.path(),
        &["decode", "zero.json", "--N", "15", "--a", "4", "--t", "8"],
    );
    assert!(stdout(&o).contains("recoverable: false (M_ver=0)"));
    let o = run(
        dir.path(),
        &["decode", "zero.json", "--N", "15", "--a", "4", "--t", "9"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--t"));
}

#[test]
fn finite_shots_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| {
        vec![
            "simulate",
            "--N",
            "31",
            "--a",
            "2",
            "--t",
            "8",
            "--epsilon",
            "0.5",
            "--sigma0",
            "2",
            "--lambda",
            "0.3",
            "--shots",
            "4000",
            "--seed",
            "7",
            "--out",
            out,
        ]
    };
    assert!(run(dir.path(), &args("a.json")).status.success());
    assert!(run(dir.path(), &args("b.json")).status.success());
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["shots"], 4000);
    let total: u64 = v["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 4000);
}

#[test]
fn validation_errors_name_the_flag() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&[&str], &str)] = &[
        (
            &["simulate", "--N", "15", "--a", "3", "--t", "8"],
            "a=3 not coprime",
        ),
        (
            &[
                "simulate",
                "--N",
                "15",
                "--a",
                "2",
                "--t",
                "8",
                "--epsilon",
                "1.5",
            ],
            "--epsilon",
        ),
        (
            &[
                "simulate", "--N", "15", "--a", "2", "--t", "8", "--lambda", "-0.1",
            ],
            "--lambda",
        ),
        (&["simulate", "--N", "15", "--a", "2", "--t", "0"], "--t"),
        (&["simulate", "--N", "1", "--a", "1", "--t", "8"], "--N"),
        (
            &[
                "simulate",
                "--N",
                "15",
                "--a",
                "2",
                "--t",
                "8",
                "--epsilon",
                "0.2",
                "--sectors",
                "0:0.5:0,2:0.4:0",
            ],
            "--sectors",
        ),
        (
            &[
                "simulate", "--N", "15", "--a", "2", "--t", "8", "--shots", "0",
            ],
            "--shots",
        ),
    ];
    for (args, needle) in cases {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn io_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["decode", "nope.json", "--N", "15", "--a", "2", "--t", "8"],
    );
    assert_eq!(o.status.code(), Some(4));
    let o = run(dir.path(), &["dataset", "summarize", "--in", "nope.jsonl"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn default_output_directory_from_env() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .current_dir(dir.path())
        .env("ORDER_RECOVERY_OUT_DIR", "results")
        .args(["simulate", "--N", "7", "--a", "2", "--t", "6"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("results/spectrum.json").exists());
}

#[test]
fn import_and_summarize() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("hist.csv"),
        "# backend=sim\ny,count\n0,250\n64,250\n128,250\n192,250\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "dataset",
            "import",
            "--in",
            "hist.csv",
            "--N",
            "15",
            "--a",
            "2",
            "--t",
            "8",
            "--out",
            "imported.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("recoverable: true (r_calc=4, r_true=4)"));
    let o = run(
        dir.path(),
        &["dataset", "summarize", "--in", "imported.jsonl"],
    );
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("Recoverable runs        1 (100.0%)"),
        "{}",
        stdout(&o)
    );
    assert!(stdout(&o).contains("By meta.backend"));

    fs::write(dir.path().join("bad.csv"), "0,10\n300,5\n").unwrap();
    let o = run(
        dir.path(),
        &[
            "dataset", "import", "--in", "bad.csv", "--N", "15", "--a", "2", "--t", "8",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.csv:2"), "{}", stderr(&o));
}

#[test]
fn single_class_dataset_exits_3() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("sweep.toml"),
        "moduli = [7]\nshifts = [1]\nprecisions = [8]\nepsilon = [0.0]\nsigma = [0.0]\n\
         lambda = [0.0]\nshots = [0]\nreplicates = 2\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "dataset",
            "generate",
            "--config",
            "sweep.toml",
            "--out",
            "ds.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(
        dir.path(),
        &["analyze", "--in", "ds.jsonl", "--out", "r.json"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("AUROC undefined for single-class data"));
}

#[test]
fn generate_and_analyze_are_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("sweep.toml"), SMALL_SWEEP).unwrap();
    let analyze = |ds: &str, report: &str, plots: &str| {
        let o = run(
            dir.path(),
            &[
                "analyze",
                "--in",
                ds,
                "--seed",
                "3",
                "--trees",
                "40",
                "--repeats",
                "3",
                "--out",
                report,
                "--plots",
                plots,
                "--svg",
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        o
    };
    for out in ["a.jsonl", "b.jsonl"] {
        let o = run(
            dir.path(),
            &[
                "dataset",
                "generate",
                "--config",
                "sweep.toml",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.jsonl"), read("b.jsonl"));

    let o = analyze("a.jsonl", "ra.json", "plots_a");
    assert!(stdout(&o).contains("Single-feature AUROC"));
    analyze("b.jsonl", "rb.json", "plots_b");
    assert_eq!(read("ra.json"), read("rb.json"));

    let report: serde_json::Value = serde_json::from_slice(&read("ra.json")).unwrap();
    let names: Vec<&str> = report["features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert_eq!(names, ["a_peak", "h_norm", "m1_frac", "margin_frac"]);
    for row in report["single_feature_auroc"].as_array().unwrap() {
        let v = row["auroc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    for file in [
        "scatter_hnorm_vs_apeak.csv",
        "scatter_m1_vs_margin.csv",
        "hist_a_peak.csv",
        "hist_margin_frac.svg",
        "permutation_importance.csv",
        "tree_nodes.csv",
        "tree_edges.csv",
    ] {
        let a = read(&format!("plots_a/{file}"));
        assert!(!a.is_empty(), "{file}");
        assert_eq!(a, read(&format!("plots_b/{file}")), "{file}");
    }
    let scatter = String::from_utf8(read("plots_a/scatter_m1_vs_margin.csv")).unwrap();
    assert!(scatter.starts_with("x,y,label\n"));
    let hist = String::from_utf8(read("plots_a/hist_h_norm.csv")).unwrap();
    assert!(hist.starts_with("bin_left,bin_right,density_neg,density_pos\n"));
    assert!(hist.contains("\nmedian,"));
}

#[test]
fn analysis_sections_are_selectable() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("sweep.toml"), SMALL_SWEEP).unwrap();
    run(
        dir.path(),
        &[
            "dataset",
            "generate",
            "--config",
            "sweep.toml",
            "--out",
            "d.jsonl",
        ],
    );
    let o = run(
        dir.path(),
        &["analyze", "--in", "d.jsonl", "--auroc", "--out", "r.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(report["single_feature_auroc"].is_array());
    assert!(report["forest"].is_null());
    assert!(report["tree"].is_null());
    let o = run(dir.path(), &["analyze", "--in", "d.jsonl", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k"));
}
