use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "model,param_json,state,engine,k,t,value,flag";

fn znh(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_znh"));
    cmd.args(args).env_remove("ZNH_THREADS");
    if let Some(t) = threads {
        cmd.env("ZNH_THREADS", t);
    }
    cmd.output().expect("znh runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"
k_max = 6
states = ["plus", "plus_y"]
engines = ["exact", "second_order"]

[model]
kind = "preset"
name = "hermitian-xy"
params = { lambda = 1.0, eta = 0.5 }

[propagation]
method = "rk4"
"#;

#[test]
fn sweep_writes_csv_plot_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sweep.toml", SWEEP);
    let out = dir.path().join("out");
    let run = znh(&["sweep", "--config", &config, "--out", out.to_str().unwrap()], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 6 * 2 * 2);
    assert!(fs::read_to_string(out.join("sweep.svg")).unwrap().contains("<circle"));
    assert!(fs::read_to_string(out.join("sweep.json")).unwrap().contains("config_sha256"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "sweep.toml", SWEEP);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}"));
        let run = znh(&["sweep", "--config", &config, "--out", out.to_str().unwrap()], Some(threads));
        assert_eq!(run.status.code(), Some(0));
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let out = dir.path().join("bad");
    let run = znh(&["sweep", "--config", &config, "--out", out.to_str().unwrap()], Some("zero"));
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(znh(&["sweep", "--config", missing.to_str().unwrap(), "--out", out], None).status.code(), Some(2));

    let bad_range = write(dir.path(), "range.toml", "k_min = 5\nk_max = 2\n[model]\nkind = \"preset\"\nname = \"gain-loss\"\n");
    assert_eq!(znh(&["sweep", "--config", &bad_range, "--out", out], None).status.code(), Some(2));

    let unknown = write(dir.path(), "unknown.json", r#"{"model": {"kind": "preset", "name": "nope"}}"#);
    let run = znh(&["map", "--config", &unknown, "--out", out], None);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("nope"));

    assert_eq!(znh(&["survive", "--model", "gain-loss", "--params", "gamma=-1", "--t", "1"], None).status.code(), Some(2));
    assert_eq!(znh(&["survive", "--model", "gain-loss", "--engine", "closed", "--t", "1"], None).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3_and_keeps_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "blowup.toml",
        "k_max = 2\nt_obs = 2.0\nengines = [\"exact\"]\n[model]\nkind = \"preset\"\nname = \"gain-loss\"\nparams = { gamma = 1000.0 }\n",
    );
    let out = dir.path().join("out");
    let run = znh(&["sweep", "--config", &config, "--out", out.to_str().unwrap()], None);
    assert_eq!(run.status.code(), Some(3));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| !r.ends_with(',') && r.contains(",,")));
}

#[test]
fn map_rows_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "map.toml",
        "omega_ratio = [10.0, 20.0]\nt = [0.0, 1.0, 2.0]\n[model]\nkind = \"preset\"\nname = \"oscillating-decay\"\nparams = { gamma = 0.1 }\n",
    );
    let out = dir.path().join("map");
    let run = znh(&["map", "--config", &config, "--out", out.to_str().unwrap()], None);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.lines().skip(1).all(|l| l.contains(",discrepancy,")));
}

#[test]
fn survive_prints_one_number() {
    let run = znh(
        &["survive", "--model", "hermitian-xy", "--params", "lambda=1", "eta=0.5", "omega=3", "--t", "6.283185307179586", "--engine", "second"],
        None,
    );
    assert_eq!(run.status.code(), Some(0));
    let v: f64 = String::from_utf8(run.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-10);

    let run = znh(&["survive", "--model", "decaying-qubit", "--params", "omega=0", "gamma=0.5", "--t", "1"], None);
    let v: f64 = String::from_utf8(run.stdout).unwrap().trim().parse().unwrap();
    assert!((v - (-1.0f64).exp()).abs() < 1e-9);
}

#[test]
fn presets_lists_every_model() {
    let run = znh(&["presets"], None);
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8(run.stdout).unwrap();
    for name in ["hermitian-xy", "decaying-qubit", "gain-loss", "oscillating-decay"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
