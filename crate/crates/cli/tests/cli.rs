//! End-to-end tests of the binary: each subcommand, the documented exit
//! codes, and output determinism.

#![allow(clippy::needless_range_loop)]

use isac_regions::closed_forms::{causal_binary_point, causal_corner_model};
use isac_regions::prob::{Alphabet, CondDist, FactoredModel, Variant};
use isac_regions::region::DistortionSpec;
use isac_regions::search::{Objective, SearchSpec};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-regions"))
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "isac-regions-cli-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Workdir(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn write_json(&self, name: &str, value: &Value) -> PathBuf {
        let path = self.path(name);
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
        path
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn model_json(model: &FactoredModel, distortion: &DistortionSpec) -> Value {
    let mut value = serde_json::to_value(model).unwrap();
    value["distortion"] = serde_json::to_value(distortion).unwrap();
    value
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// General-inner model with singleton auxiliaries over a BSC.
fn degenerate_model(q: f64) -> FactoredModel {
    let sizes = |role: &str| -> usize {
        match role {
            "Q" | "V11" | "V12" | "U" | "V2" => 1,
            _ => 2,
        }
    };
    let alphabets = Variant::GeneralInner
        .variables()
        .iter()
        .map(|r| Alphabet::indexed(*r, sizes(r)))
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::new(&["Q"], &[], vec![vec![1.0]]),
        CondDist::new(&["V11", "V12"], &["S", "Q"], vec![vec![1.0]; 2]),
        CondDist::new(&["U"], &["V11", "Q"], vec![vec![1.0]]),
        CondDist::new(&["X"], &["U", "V11", "Q"], vec![vec![0.5, 0.5]]),
        CondDist::from_fn(&["Y", "Z"], &["X", "S"], &[2, 2], &[2, 2], move |t, g| {
            let p = if t[0] == g[0] { 1.0 - q } else { q };
            if t[1] == t[0] {
                p
            } else {
                0.0
            }
        }),
        CondDist::new(&["V2"], &["Z", "Q"], vec![vec![1.0]; 2]),
    ];
    FactoredModel::new(Variant::GeneralInner, alphabets, factors)
}

#[test]
fn region_reports_zero_rate_for_degenerate_auxiliaries() {
    let dir = Workdir::new("region-degenerate");
    let model = dir.write_json(
        "model.json",
        &model_json(&degenerate_model(0.2), &DistortionSpec::hamming(2, 1.0)),
    );
    let out = dir.path("point.json");
    let status = bin()
        .args(["region", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let point = read_json(&out);
    assert_eq!(point["r_max"], json!(0.0));
    assert_eq!(point["rf1_min"], json!(0.0));
    // Manifest lists the data file.
    let manifest = read_json(&dir.path("point.json.manifest.json"));
    assert_eq!(manifest["command"], json!("region"));
    assert_eq!(manifest["outputs"][0], json!(out.display().to_string()));
}

#[test]
fn region_matches_the_causal_closed_form() {
    let dir = Workdir::new("region-causal");
    let (alpha, d1, d2, d) = (0.3, 0.4, 0.2, 0.1);
    let model = causal_corner_model(alpha, d1, d2, d).unwrap();
    let path = dir.write_json(
        "model.json",
        &model_json(&model, &DistortionSpec::hamming(2, d)),
    );
    let out = dir.path("point.json");
    let status = bin()
        .args(["region", "--variant", "causal", "--model"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let point = read_json(&out);
    let closed = causal_binary_point(alpha, d1, d2, d).unwrap();
    let got = point["rf_sum_min"].as_f64().unwrap();
    assert!((got - closed.rf_sum_min).abs() < 1e-9);
    let got_rf1 = point["rf1_min"].as_f64().unwrap();
    assert!((got_rf1 - closed.rf1_min).abs() < 1e-9);
}

#[test]
fn region_rejects_a_variant_mismatch_with_exit_3() {
    let dir = Workdir::new("region-mismatch");
    let model = dir.write_json(
        "model.json",
        &model_json(&degenerate_model(0.1), &DistortionSpec::hamming(2, 1.0)),
    );
    let status = bin()
        .args(["region", "--variant", "decomposable-in1", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(dir.path("point.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn sweep_z_channel_writes_the_documented_grid() {
    let dir = Workdir::new("sweep-z");
    let out = dir.path("z.csv");
    let run = || {
        let status = bin()
            .args([
                "sweep",
                "--example",
                "z-channel",
                "--d",
                "0.1",
                "--start",
                "0",
                "--end",
                "0.5",
                "--step",
                "0.005",
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&out).unwrap()
    };
    let first = run();
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Dp,R,I_V11_S,I_V12_S_given");
    assert_eq!(lines.len(), 102, "header plus 101 grid rows");
    assert!(text.ends_with('\n'));
    // Byte-identical on rerun.
    let second = run();
    assert_eq!(first, second);
}

#[test]
fn sweep_rejects_an_empty_range_with_exit_2() {
    let dir = Workdir::new("sweep-empty");
    let status = bin()
        .args([
            "sweep",
            "--example",
            "z-channel",
            "--start",
            "0.4",
            "--end",
            "0.1",
            "--out",
        ])
        .arg(dir.path("z.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sweep_binary_fading_tags_regions() {
    let dir = Workdir::new("sweep-fading");
    let out = dir.path("fading.csv");
    let status = bin()
        .args([
            "sweep",
            "--example",
            "binary-fading",
            "--q",
            "0.3",
            "--d",
            "0.35",
            "--start",
            "0",
            "--end",
            "1.0",
            "--step",
            "0.02",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap() == "alpha,R,Rf1,region_tag");
    for tag in ["R1", "R2", "R3"] {
        assert!(
            text.lines().any(|l| l.ends_with(tag)),
            "tag {tag} missing in sweep output"
        );
    }
}

fn bsc_search_spec(q: f64, budget: f64) -> SearchSpec {
    let sizes = |role: &str| -> usize {
        match role {
            "Q" | "V11" | "V12" | "V2" => 1,
            _ => 2,
        }
    };
    let alphabets = Variant::GeneralInner
        .variables()
        .iter()
        .map(|r| Alphabet::indexed(*r, sizes(r)))
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::new(&["Q"], &[], vec![vec![1.0]]),
        CondDist::new(&["V11", "V12"], &["S", "Q"], vec![vec![1.0]; 2]),
        CondDist::new(&["U"], &["V11", "Q"], vec![vec![0.7, 0.3]]),
        CondDist::from_fn(&["X"], &["U", "V11", "Q"], &[2], &[2, 1, 1], |t, g| {
            if t[0] == g[0] {
                1.0
            } else {
                0.0
            }
        }),
        CondDist::from_fn(&["Y", "Z"], &["X", "S"], &[2, 2], &[2, 2], move |t, g| {
            let p = if t[0] == g[0] { 1.0 - q } else { q };
            if t[1] == t[0] {
                p
            } else {
                0.0
            }
        }),
        CondDist::new(&["V2"], &["Z", "Q"], vec![vec![1.0]; 2]),
    ];
    SearchSpec {
        template: FactoredModel::new(Variant::GeneralInner, alphabets, factors),
        free: vec!["U".into()],
        distortion: DistortionSpec::hamming(2, budget),
        objective: Objective::MaximizeR,
        rf1_cap: None,
        rf2_cap: None,
    }
}

#[test]
fn search_finds_bsc_capacity() {
    let dir = Workdir::new("search-bsc");
    let spec = dir.write_json(
        "spec.json",
        &serde_json::to_value(bsc_search_spec(0.11, 1.0)).unwrap(),
    );
    let out = dir.path("search.json");
    let status = bin()
        .args(["search", "--seed", "9", "--restarts", "6", "--max-iter", "400", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .env("ISAC_REGION_THREADS", "4")
        .status()
        .unwrap();
    assert!(status.success());
    let result = read_json(&out);
    let capacity = 1.0 - 0.11f64 * (1.0 / 0.11f64).log2() - 0.89 * (1.0 / 0.89f64).log2();
    let got = result["best"]["r_max"].as_f64().unwrap();
    assert!((got - capacity).abs() < 1e-6, "got {got}, want {capacity}");

    // The thread override must not change the result.
    let out2 = dir.path("search-single.json");
    let status = bin()
        .args(["search", "--seed", "9", "--restarts", "6", "--max-iter", "400", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out2)
        .env("ISAC_REGION_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(&out2).unwrap()
    );
}

#[test]
fn search_traces_the_fading_boundary_point() {
    // Low-alpha capacity-regime point of the fading channel: the found
    // helper rate lands within 1e-2 of the closed form.
    let dir = Workdir::new("search-fading");
    let (q, d, alpha) = (0.2, 0.1, 0.05);
    let template = isac_regions::closed_forms::binary_fading_pf_model(q, alpha, 0.5, d);
    let spec = SearchSpec {
        template,
        free: vec!["V11,V12".into()],
        distortion: DistortionSpec::hamming(2, d),
        objective: Objective::MinimizeRf1,
        rf1_cap: None,
        rf2_cap: None,
    };
    let path = dir.write_json("spec.json", &serde_json::to_value(&spec).unwrap());
    let out = dir.path("search.json");
    let status = bin()
        .args(["search", "--seed", "11", "--restarts", "4", "--max-iter", "600", "--spec"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let result = read_json(&out);
    let hb = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let target = 1.0 - alpha + alpha * hb(q) - hb(d);
    let got = result["best"]["rf1_min"].as_f64().unwrap();
    assert!((got - target).abs() < 1e-2, "got {got}, want {target}");
}

#[test]
fn search_reports_infeasible_budgets_with_exit_5() {
    let dir = Workdir::new("search-infeasible");
    // Distortion 0 is unreachable: the helpers are degenerate and the
    // channel is noisy, so no estimator sees the state.
    let spec = dir.write_json(
        "spec.json",
        &serde_json::to_value(bsc_search_spec(0.11, 0.0)).unwrap(),
    );
    let status = bin()
        .args(["search", "--restarts", "2", "--max-iter", "60", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(dir.path("search.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(5));
}

#[test]
fn search_oracle_step_is_reported_and_guarded() {
    let dir = Workdir::new("search-oracle");
    let spec = dir.write_json(
        "spec.json",
        &serde_json::to_value(bsc_search_spec(0.25, 1.0)).unwrap(),
    );
    let out = dir.path("search.json");
    let status = bin()
        .args([
            "search",
            "--restarts",
            "3",
            "--max-iter",
            "200",
            "--oracle-step",
            "0.5",
            "--spec",
        ])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let result = read_json(&out);
    assert_eq!(result["oracle"]["evaluations"], json!(3));

    // A far-too-fine grid trips the guard.
    let status = bin()
        .args(["search", "--oracle-step", "0.0000000011", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(dir.path("search2.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(6));
}

/// Degenerate helpers but a live message path: U binary, X = U, and a
/// noiseless (or BSC) channel with Z = Y.
fn sim_model(q: f64) -> FactoredModel {
    let sizes = |role: &str| -> usize {
        match role {
            "Q" | "V11" | "V12" | "V2" => 1,
            _ => 2,
        }
    };
    let alphabets = Variant::GeneralInner
        .variables()
        .iter()
        .map(|r| Alphabet::indexed(*r, sizes(r)))
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::new(&["Q"], &[], vec![vec![1.0]]),
        CondDist::new(&["V11", "V12"], &["S", "Q"], vec![vec![1.0]; 2]),
        CondDist::new(&["U"], &["V11", "Q"], vec![vec![0.5, 0.5]]),
        CondDist::from_fn(&["X"], &["U", "V11", "Q"], &[2], &[2, 1, 1], |t, g| {
            if t[0] == g[0] {
                1.0
            } else {
                0.0
            }
        }),
        CondDist::from_fn(&["Y", "Z"], &["X", "S"], &[2, 2], &[2, 2], move |t, g| {
            let p = if t[0] == g[0] { 1.0 - q } else { q };
            if t[1] == t[0] {
                p
            } else {
                0.0
            }
        }),
        CondDist::new(&["V2"], &["Z", "Q"], vec![vec![1.0]; 2]),
    ];
    FactoredModel::new(Variant::GeneralInner, alphabets, factors)
}

#[test]
fn simulate_noiseless_model_never_errs() {
    let dir = Workdir::new("simulate-noiseless");
    let model = dir.write_json(
        "model.json",
        &model_json(&sim_model(0.0), &DistortionSpec::hamming(2, 0.5)),
    );
    let out = dir.path("perf.json");
    let status = bin()
        .args([
            "simulate", "--n", "12", "--trials", "25", "--seed", "5", "--epsilon", "0.4",
            "--delta", "1.0", "--model",
        ])
        .arg(&model)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let perf = read_json(&out);
    assert_eq!(perf["error_prob"], json!(0.0));
}

#[test]
fn simulate_maps_guard_errors_to_documented_codes() {
    let dir = Workdir::new("simulate-guards");
    let model = dir.write_json(
        "model.json",
        &model_json(&sim_model(0.0), &DistortionSpec::hamming(2, 0.5)),
    );
    // Memory guard: a noiseless channel at blocklength 400 with a small
    // epsilon asks for an astronomically large message codebook.
    let status = bin()
        .args(["simulate", "--n", "400", "--trials", "1", "--epsilon", "0.01", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(dir.path("perf.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(8));
    // Nonpositive rate: epsilon above I(U;Y).
    let status = bin()
        .args(["simulate", "--n", "12", "--trials", "1", "--epsilon", "1.5", "--model"])
        .arg(&model)
        .arg("--out")
        .arg(dir.path("perf2.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(7));
}

#[test]
fn common_part_handles_both_input_forms() {
    let dir = Workdir::new("common-part");
    // Block-diagonal joint: two components.
    let joint = dir.write_json(
        "joint.json",
        &json!({"p_sy": [[0.5, 0.0], [0.0, 0.5]]}),
    );
    let out = dir.path("cp.json");
    let status = bin()
        .args(["common-part", "--channel"])
        .arg(&joint)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let part = read_json(&out);
    assert_eq!(part["components"], json!(2));
    assert_eq!(part["decomposable"], json!(true));

    // Full support: one component.
    let full = dir.write_json(
        "full.json",
        &json!({"p_sy": [[0.3, 0.2], [0.1, 0.4]]}),
    );
    let status = bin()
        .args(["common-part", "--channel"])
        .arg(&full)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_json(&out)["components"], json!(1));

    // Channel form with a planted first-coordinate component structure:
    // S = (K,A) four-valued, Y = (K,B), P(Y|X,S) respects K.
    let mut p_y_given_xs = vec![vec![vec![0.0f64; 4]; 4]; 2];
    for x in 0..2 {
        for s in 0..4usize {
            let k = s / 2;
            p_y_given_xs[x][s][k * 2] = 0.3 + 0.2 * x as f64;
            p_y_given_xs[x][s][k * 2 + 1] = 0.7 - 0.2 * x as f64;
        }
    }
    let channel = dir.write_json(
        "channel.json",
        &json!({"channel": {
            "p_s": [0.25, 0.25, 0.25, 0.25],
            "p_x": [0.4, 0.6],
            "p_y_given_xs": p_y_given_xs,
        }}),
    );
    let status = bin()
        .args(["common-part", "--channel"])
        .arg(&channel)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let part = read_json(&out);
    assert_eq!(part["components"], json!(2));
    assert_eq!(part["c1"], json!([0, 0, 1, 1]));
    assert_eq!(part["c2"], json!([0, 0, 1, 1]));

    // Garbage input is a parse error.
    let bad = dir.path("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let status = bin()
        .args(["common-part", "--channel"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path("cp2.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn json_outputs_are_byte_identical_across_runs() {
    let dir = Workdir::new("determinism");
    let model = dir.write_json(
        "model.json",
        &model_json(&degenerate_model(0.13), &DistortionSpec::hamming(2, 1.0)),
    );
    let out = dir.path("point.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let status = bin()
            .args(["region", "--model"])
            .arg(&model)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        runs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}
