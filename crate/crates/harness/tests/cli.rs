use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dyloc_harness::output::{sha256_hex, RunManifest, MANIFEST_FILE};
use dyloc_harness::{Experiment, ExperimentConfig};

fn dyloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyloc"))
        .args(args)
        .env_remove("DYLOC_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn config_command_prints_resolved_json() {
    let o = dyloc(&["config", "--seed", "7", "--variant", "dyloc"]);
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_json(&stdout(&o)).unwrap();
    assert_eq!(cfg.seeds.master, 7);
    assert_eq!(cfg.variants.len(), 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(&path, stdout(&o)).unwrap();
    let again = dyloc(&["config", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn dla_info_reports_the_preset_algebra() {
    let dir = tempfile::tempdir().unwrap();
    let o = dyloc(&["dla-info", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("dim(g) = 12"));
    assert!(text.contains("observable O = ZZZ"));
    assert!(text.contains("snapshot basis dim = 18"));
    let m = read_manifest(dir.path());
    assert_eq!(m.info["dla_dim"], 12);
}

#[test]
fn manifest_checksums_match_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = dyloc(&[
        "train",
        "--out",
        dir.path().to_str().unwrap(),
        "--variant",
        "standard",
        "--variant",
        "dyloc",
    ]);
    assert!(o.status.success());
    let m = read_manifest(dir.path());
    assert_eq!(m.experiment, "train");
    assert_eq!(m.seeds, m.config.seeds.resolve());
    assert_eq!(m.files.keys().collect::<Vec<_>>(), ["loss.csv"]);
    for (name, sum) in &m.files {
        assert_eq!(&sha256_hex(&fs::read(dir.path().join(name)).unwrap()), sum);
    }
    let csv = fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("step,variant,loss,mse_weak"));
    assert_eq!(csv.lines().count(), 1 + 2 * 100);
}

#[test]
fn plot_turns_csvs_into_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(dyloc(&["train", "--out", out, "--variant", "standard"])
        .status
        .success());
    let o = dyloc(&["plot", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let script = stdout(&o).lines().next().unwrap().to_string();
    assert!(script.ends_with(".gp"));
    assert!(fs::read_to_string(&script)
        .unwrap()
        .contains("set terminal svg"));
}

#[test]
fn bad_inputs_exit_nonzero() {
    let o = dyloc(&["train", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset"));

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_repro(Experiment::Train);
    cfg.attack.probes = 0;
    let path = dir.path().join("bad.json");
    fs::write(&path, cfg.to_json()).unwrap();
    assert_eq!(
        dyloc(&["train", "--config", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let o = Command::new(env!("CARGO_BIN_EXE_dyloc"))
        .args(["config"])
        .env("DYLOC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DYLOC_THREADS"));

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(
        dyloc(&["plot", "--out", empty.path().to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}
