use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn spa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spa")).args(args).arg("--out").arg(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, cfg: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("cfg.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn deleting_edges_breaks_region_edge_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let out = spa(&["generate", "--preset", "paper-density-hist-ci"], &run);
    assert!(out.status.success(), "{}", stderr(&out));

    let clean = spa(&["verify", "--checks", "region-edges"], &run);
    assert_eq!(clean.status.code(), Some(0), "{}", stdout(&clean));

    let edges = run.join("edges.tsv");
    let text = std::fs::read_to_string(&edges).unwrap();
    let mut lines = text.lines();
    let mut kept = vec![lines.next().unwrap()];
    kept.extend(lines.step_by(2));
    std::fs::write(&edges, kept.join("\n") + "\n").unwrap();

    let tampered = spa(&["verify", "--checks", "region-edges"], &run);
    assert_eq!(tampered.status.code(), Some(1), "{}", stdout(&tampered));
    assert!(stdout(&tampered).contains("FAIL region-edges"), "{}", stdout(&tampered));
}

#[test]
fn uniform_layout_tails_agree_across_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        json!({
            "params": { "a1": 0.7, "a2": 2.0, "p": 0.7, "m": 2, "n": 100000 },
            "layout": { "uniform": { "k": 2, "m": 2 } },
            "seed": 4,
            "steps": [
                { "step": "generate" },
                { "step": "verify", "options": { "checks": ["tail-homogeneity"] } }
            ]
        }),
    );
    let out = spa(&["run", "--config", cfg.to_str().unwrap()], &tmp.path().join("run"));
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}{}", stderr(&out));
    assert!(text.contains("PASS tail-homogeneity[rho=1]"), "{text}");
}

#[test]
fn missing_artifacts_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");

    let none = spa(&["stats"], &run);
    assert_eq!(none.status.code(), Some(2));
    assert!(stderr(&none).contains("`generate`"), "{}", stderr(&none));

    let cfg = write_config(
        tmp.path(),
        json!({
            "params": { "a1": 0.7, "a2": 2.0, "p": 0.6, "m": 2, "n": 2000 },
            "layout": { "diagonal": { "rho_d": 1.6 } },
            "seed": 1,
            "steps": [{ "step": "generate" }]
        }),
    );
    let gen = spa(&["generate", "--config", cfg.to_str().unwrap()], &run);
    assert!(gen.status.success(), "{}", stderr(&gen));

    for (check, stage) in
        [("case2", "`pairs`"), ("trajectories", "`generate --watch`"), ("density-estimator", "`estimate-density`")]
    {
        let out = spa(&["verify", "--checks", check], &run);
        assert_eq!(out.status.code(), Some(2), "{check}");
        assert!(stderr(&out).contains(stage), "{check}: {}", stderr(&out));
    }
    let est = spa(&["estimate-distance"], &run);
    assert_eq!(est.status.code(), Some(2));
    assert!(stderr(&est).contains("`pairs`"), "{}", stderr(&est));
}

#[test]
fn stages_chain_through_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let gen = spa(&["generate", "--preset", "paper-diagonal-distance-ci", "--seed", "3", "--watch", "ids:1,2,3"], &run);
    assert!(gen.status.success(), "{}", stderr(&gen));
    for args in [
        &["stats"][..],
        &["hist", "--region", "dense", "--fit"],
        &["pairs", "--min-deg", "20", "--sample", "200"],
        &["estimate-distance", "--variant", "known-density"],
        &["estimate-density", "--min-deg", "10"],
    ] {
        let out = spa(args, &run);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
    for file in [
        "nodes.tsv",
        "edges.tsv",
        "meta.json",
        "trajectories.tsv",
        "regionstats.tsv",
        "hist.tsv",
        "tailfit.json",
        "pairs.tsv",
        "estimates.tsv",
        "densities.tsv",
    ] {
        assert!(run.join(file).is_file(), "{file} missing");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["params"]["n"], 20000);

    let estimates = std::fs::read_to_string(run.join("estimates.tsv")).unwrap();
    assert_eq!(estimates.lines().next().unwrap(), "u\tv\td\td_hat\tvariant\trho_used\tfiltered\treason");
    assert!(estimates.lines().skip(1).all(|l| l.split('\t').nth(4) == Some("known-density")));

    let traj = std::fs::read_to_string(run.join("trajectories.tsv")).unwrap();
    let ids: std::collections::BTreeSet<&str> = traj.lines().skip(1).filter_map(|l| l.split('\t').next()).collect();
    assert_eq!(ids.into_iter().collect::<Vec<_>>(), ["1", "2", "3"]);
}

#[test]
fn invalid_config_fails_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        json!({
            "params": { "a1": 0.9, "a2": 2.0, "p": 0.9, "m": 2, "n": 1000 },
            "layout": { "diagonal": { "rho_d": 1.6 } },
            "seed": 1,
            "steps": [{ "step": "generate" }]
        }),
    );
    let run = tmp.path().join("run");
    let out = spa(&["run", "--config", cfg.to_str().unwrap()], &run);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("supercritical"), "{}", stderr(&out));
    assert!(!run.exists());

    let ok_cfg = write_config(
        tmp.path(),
        json!({
            "params": { "a1": 0.7, "a2": 2.0, "p": 0.6, "m": 2, "n": 1000 },
            "layout": { "diagonal": { "rho_d": 1.6 } },
            "seed": 1,
            "steps": [{ "step": "generate" }]
        }),
    );
    let bad_watch = spa(&["generate", "--config", ok_cfg.to_str().unwrap(), "--watch", "ids:5000"], &run);
    assert_eq!(bad_watch.status.code(), Some(2));
    assert!(stderr(&bad_watch).contains("5000"), "{}", stderr(&bad_watch));
}

#[test]
fn presets_list_and_print() {
    let tmp = tempfile::tempdir().unwrap();
    let list = spa(&["run", "--list"], tmp.path());
    assert!(list.status.success());
    assert!(stdout(&list).lines().any(|l| l == "paper-diagonal-distance"));

    let printed = spa(&["run", "--preset", "paper-diagonal-distance", "--print-config"], tmp.path());
    let cfg: serde_json::Value = serde_json::from_str(&stdout(&printed)).unwrap();
    assert_eq!(cfg["params"]["p"], 0.7);
    assert_eq!(cfg["params"]["n"], 100000);
}

#[test]
fn empty_pipeline_writes_only_meta() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        json!({
            "params": { "a1": 0.7, "a2": 2.0, "p": 0.6, "m": 2, "n": 1000 },
            "layout": { "diagonal": { "rho_d": 1.6 } },
            "seed": 1,
            "steps": []
        }),
    );
    let run = tmp.path().join("run");
    let out = spa(&["run", "--config", cfg.to_str().unwrap()], &run);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let files: Vec<_> = std::fs::read_dir(&run).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files, ["meta.json"]);
}
