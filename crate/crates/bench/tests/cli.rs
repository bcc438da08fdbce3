use std::fs;
use std::path::Path;
use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

const CONFIG: &str = "# tiny run\n\
tasks = 3\ntrain_per_task = 40\ntest_per_task = 20\nnum_features = 10\n\
memory_size = 30\nbatch_size = 8\nepochs = 2\nhidden = 8\nstrategy = ocdm\n";

#[test]
fn run_writes_bundle_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("out");
    let status = bench()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--strategy", "bat_ocdm,reservoir", "--seed", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(!out.join("ocdm").exists());
    for s in ["bat_ocdm", "reservoir"] {
        for f in ["scores.csv", "metrics.json", "memory.json", "timing.csv", "evals.csv"] {
            assert!(out.join(s).join(f).exists(), "{s}/{f}");
        }
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bat_ocdm/metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["seed"], 3);
    assert_eq!(metrics["groups"].as_array().unwrap().len(), 3);
    let scores = fs::read_to_string(out.join("bat_ocdm/scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 4);
}

#[test]
fn identical_outputs_for_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert!(bench().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    let read = |d: &Path, f: &str| fs::read(d.join("ocdm").join(f)).unwrap();
    for f in ["scores.csv", "metrics.json", "memory.json", "evals.csv"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
}

#[test]
fn invalid_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "strategy = nonsense\n").unwrap();
    let output = bench().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 1"), "{stderr}");

    let output = bench().args(["run", "--set", "replay_ratio=2"]).output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn scale_prints_one_row_per_task_count() {
    let output = bench()
        .args(["scale", "--strategy", "ocdm,bat_ocdm", "--tasks", "2,4", "--d", "30", "--m", "10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("ocdm,2,"));
    assert!(rows[3].starts_with("bat_ocdm,4,"));
}

#[test]
fn ingest_windows_a_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    fs::write(&log, "timestamp,alarm_code,machine_id\n0,1,7\n300,2,7\n660,1,7\n1200,3,7\n").unwrap();
    let out = dir.path().join("samples.csv");
    let status = bench()
        .args(["ingest", "--log"])
        .arg(&log)
        .args(["--d-in", "10", "--d-out", "5", "--targets", "1,3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "task_id,sample_id,c_0,c_1,c_2,y_0,y_1");
    assert_eq!(lines[1], "1,0,0.5,0.5,0,1,0");
    assert_eq!(lines[2], "1,1,0.5,0.5,0,0,0");

    let missing = bench().args(["ingest", "--log"]).arg(dir.path().join("nope.csv")).arg("--out").arg(&out).status().unwrap();
    assert!(!missing.success());
}
