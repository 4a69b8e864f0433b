use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensor-cover"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TRIAL_HEADER: &str =
    "trial,grid,n,l_prob,partitions_found,upper_bound,rounds,avg_msgs_per_node,\
diameter_mean,diameter_max,lifetime_no_recovery,lifetime_with_recovery,leaders,tree_depth_max,\
recovery_attempts,recovery_successes,recruited";
const LIFETIME_HEADER: &str =
    "trial,grid,n,l_prob,partitions_found,upper_bound,lifetime_no_recovery,\
lifetime_with_recovery,improvement_ratio,recovery_attempts,recovery_successes,recruited";
const SWEEP_HEADER: &str =
    "grid,blocks,n,l_prob,trials,mean_partitions,mean_upper_bound,mean_rounds,\
max_rounds,mean_msgs_per_node,mean_diameter,mean_lifetime_no_recovery,mean_lifetime_with_recovery,\
lifetime_improvement";

fn csv_rows(s: &str) -> Vec<Vec<String>> {
    s.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn partition_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "partition",
            "--grid",
            "3x3",
            "--nodes",
            "90",
            "--lprob",
            "0.05",
            "--seed",
            "42",
            "--trials",
            "50",
            "--out",
            "report.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows = csv_rows(&body);
    assert_eq!(rows[0].join(","), TRIAL_HEADER);
    assert_eq!(rows.len(), 51);
    for (i, r) in rows[1..].iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        assert_eq!(r[1], "3x3");
        assert_eq!(r[2], "90");
        let found: usize = r[4].parse().unwrap();
        let bound: usize = r[5].parse().unwrap();
        assert!(found <= bound);
    }
}

#[test]
fn missing_required_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["partition", "--grid", "3x3"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("--nodes"));

    let out = cli(&["partition", "--nodes", "9"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = cli(
        &[
            "partition",
            "--grid",
            "3x3",
            "--nodes",
            "9",
            "--lprob",
            "1.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("l_prob"),
        "{}",
        text(&out.stderr)
    );

    let out = cli(
        &["partition", "--grid", "three", "--nodes", "9"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    let out = cli(&["sweep", "--grids", "6x6..3x3"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let out = cli(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("partition"));
}

#[test]
fn malformed_scenario_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "rows = 3\ncols = 3\nn = \"many\"\n",
    )
    .unwrap();
    let out = cli(&["partition", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains('n'), "{}", text(&out.stderr));

    std::fs::write(
        dir.path().join("odd.toml"),
        "rows = 3\ncols = 3\nlprob = 0.1\n",
    )
    .unwrap();
    let out = cli(&["partition", "--config", "odd.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("lprob"), "{}", text(&out.stderr));
}

#[test]
fn scenario_file_matches_equivalent_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.toml"),
        "rows = 2\ncols = 3\nn = 60\nl_prob = 0.1\nseed = 5\ntrials = 3\n",
    )
    .unwrap();
    let a = cli(&["partition", "--config", "s.toml"], dir.path());
    let b = cli(
        &[
            "partition",
            "--grid",
            "2x3",
            "--nodes",
            "60",
            "--lprob",
            "0.1",
            "--seed",
            "5",
            "--trials",
            "3",
        ],
        dir.path(),
    );
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = cli(
        &["partition", "--config", "s.toml", "--seed", "6"],
        dir.path(),
    );
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_rows_and_consistency_with_partition() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &["sweep", "--grids", "2x2..7x7", "--trials", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = csv_rows(&text(&out.stdout));
    assert_eq!(rows[0].join(","), SWEEP_HEADER);
    assert_eq!(rows.len(), 7);
    let grids: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(grids, ["2x2", "3x3", "4x4", "5x5", "6x6", "7x7"]);
    assert_eq!(rows[6][2], "490");

    let sweep = cli(
        &[
            "sweep", "--grids", "3x3", "--trials", "6", "--seed", "3", "--format", "json",
        ],
        dir.path(),
    );
    let part = cli(
        &[
            "partition",
            "--grid",
            "3x3",
            "--nodes-per-block",
            "10",
            "--trials",
            "6",
            "--seed",
            "3",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let sweep: Value = serde_json::from_slice(&sweep.stdout).unwrap();
    let part: Value = serde_json::from_slice(&part.stdout).unwrap();
    assert_eq!(sweep[0], part["summary"]);
}

#[test]
fn partition_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "partition",
            "--grid",
            "2x2",
            "--nodes",
            "40",
            "--trials",
            "2",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["config", "summary", "trials"]);
    let header: Vec<&str> = TRIAL_HEADER.split(',').collect();
    let trial_keys: Vec<&String> = v["trials"][0].as_object().unwrap().keys().collect();
    assert_eq!(trial_keys.len(), header.len());
    for h in header {
        assert!(v["trials"][0].get(h).is_some(), "{h}");
    }
    assert_eq!(v["config"]["rows"], 2);
    assert_eq!(v["config"]["energy"]["initial_energy"], 100.0);
}

#[test]
fn lifetime_with_recovery_off_has_no_recovery_activity() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "lifetime",
            "--grid",
            "3x3",
            "--nodes-per-block",
            "10",
            "--trials",
            "5",
            "--recovery",
            "off",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = csv_rows(&text(&out.stdout));
    assert_eq!(rows[0].join(","), LIFETIME_HEADER);
    for r in &rows[1..] {
        assert_eq!(r[6], r[7]);
        assert_eq!(&r[9..], ["0", "0", "0"]);
    }
}

#[test]
fn dense_lifetime_never_loses_epochs() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "lifetime",
            "--grid",
            "2x2",
            "--nodes-per-block",
            "25",
            "--lprob",
            "0.02",
            "--trials",
            "8",
            "--seed",
            "11",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let rows = csv_rows(&text(&out.stdout));
    assert_eq!(rows.len(), 9);
    for r in &rows[1..] {
        let ratio: f64 = r[8].parse().unwrap();
        assert!(ratio >= 1.0, "{r:?}");
    }
}

#[test]
fn verify_accepts_exports_and_rejects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(
        &[
            "partition",
            "--grid",
            "3x3",
            "--nodes",
            "90",
            "--trials",
            "2",
            "--seed",
            "8",
            "--export-dir",
            "ex",
            "--trace",
            "trace.json",
            "--out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let traces = json_file(&dir.path().join("trace.json"));
    assert_eq!(traces.as_array().unwrap().len(), 2);
    assert!(!traces[0]["trace"]["records"].as_array().unwrap().is_empty());

    let args = |p: &'static str| {
        [
            "verify",
            "--partitions",
            p,
            "--deployment",
            "ex/trial_0_deployment.json",
        ]
    };
    let ok = cli(&args("ex/trial_0_partitions.json"), dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok.stdout));
    assert!(text(&ok.stdout).contains("valid"));

    // Drop every member of the first partition that sits in block 4.
    let deployment = json_file(&dir.path().join("ex/trial_0_deployment.json"));
    let block_of = |v: u64| {
        deployment["nodes"][v as usize]["block_id"]
            .as_u64()
            .unwrap()
    };
    let mut parts = json_file(&dir.path().join("ex/trial_0_partitions.json"));
    let first = &mut parts["partitions"][0]["members"];
    let kept: Vec<Value> = first
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| block_of(m.as_u64().unwrap()) != 4)
        .cloned()
        .collect();
    *first = Value::Array(kept);
    std::fs::write(dir.path().join("edited.json"), parts.to_string()).unwrap();
    let bad = cli(&args("edited.json"), dir.path());
    assert_eq!(bad.status.code(), Some(2));
    assert!(
        text(&bad.stdout).contains("uncovered blocks [4]"),
        "{}",
        text(&bad.stdout)
    );

    std::fs::write(dir.path().join("empty.json"), "{\"partitions\": []}").unwrap();
    let empty = cli(&args("empty.json"), dir.path());
    assert_eq!(empty.status.code(), Some(0));
    assert!(text(&empty.stderr).contains("warning"));

    std::fs::write(
        dir.path().join("broken.json"),
        "{\n\"partitions\": [{\"members\": 3}]}",
    )
    .unwrap();
    let broken = cli(&args("broken.json"), dir.path());
    assert_eq!(broken.status.code(), Some(2));
    assert!(
        text(&broken.stderr).contains("line 2"),
        "{}",
        text(&broken.stderr)
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "lifetime",
        "--grid",
        "3x3",
        "--nodes",
        "120",
        "--seed",
        "99",
        "--trials",
        "4",
        "--energy",
        "40:1:0.02",
        "--format",
        "json",
    ];
    let a = cli(&args, dir.path());
    let b = cli(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
