use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_microbot-capture");

const SMALL_SWEEP: &str = "\
# small distance sweep
experiment = distance_sweep
models = ABP, RTP, CHIRAL_ABP
n_particles = 50
n_runs = 3
t_total = 1
distances = 4, 7.78
eval_times = 0.5, 1
";

fn cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MICROBOT_CAPTURE_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let out = dir.path().join("out");
    let o = cli(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("capture_efficiency.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,dimension,model,l_um,omega_rad_s,time_s,mean_efficiency,std_efficiency,n_particles,n_runs"
    );
    // 3 models x 2 distances x 2 times
    assert_eq!(lines.count(), 12);
    assert!(csv.contains("distance_sweep,2,CHIRAL_ABP,7.78,1,1,"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "distance_sweep");
    assert_eq!(manifest["master_seed"], 42);
}

#[test]
fn outputs_are_identical_across_thread_counts_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert!(cli(&["run", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).status.success());
    let o = Command::new(BIN)
        .args(["run", &cfg, "--out", b.to_str().unwrap()])
        .env("MICROBOT_CAPTURE_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = a.join("manifest.json");
    let o = cli(&["replay", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let read = |d: &Path| fs::read(d.join("capture_efficiency.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(read(&a), read(&c));
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cli(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(cli(&["run", &cfg, "--out", b.to_str().unwrap(), "--seed", "7"]).status.success());
    let read = |d: &Path| fs::read(d.join("capture_efficiency.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn msd_run_writes_closed_form_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "msd.cfg",
        "experiment = msd\nmodels = [PBP, ABP]\nn_particles = 100\nn_runs = 1\nt_total = 0.5\n",
    );
    let out = dir.path().join("out");
    let o = cli(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("msd.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "model,time_s,empirical_msd_um2,stderr_um2,closed_form_msd_um2"
    );
    assert!(csv.lines().any(|l| l.starts_with("PBP,0,0,0,0")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("unknown.cfg", "experiment = msd\nmodels = ABP\nspeeed = 3\n", "speeed"),
        ("missing.cfg", "models = ABP\n", "experiment"),
        ("range.cfg", "experiment = msd\nmodels = ABP\ndt = -1\n", "dt"),
        ("model.cfg", "experiment = msd\nmodels = XYZ\n", "XYZ"),
    ];
    for (name, text, needle) in cases {
        let cfg = write_config(dir.path(), name, text);
        let o = cli(&["run", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
        assert_eq!(cli(&["validate", &cfg]).status.code(), Some(1));
    }
    assert!(!out.exists());
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["replay", dir.path().join("nope.json").to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    // output path blocked by a regular file
    let cfg = write_config(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let o = cli(&["run", &cfg, "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn validate_prints_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.cfg", SMALL_SWEEP);
    let o = cli(&["validate", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("experiment = distance_sweep"));
    assert!(text.contains("n_particles = 50"));
    assert!(text.contains("# tau_R = 0.77"));
}

#[test]
fn derive_coeffs_reports_persistence_scales() {
    let o = cli(&["derive-coeffs"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .and_then(|v| v.trim_start_matches(" = ").parse().ok())
            .unwrap()
    };
    assert!((value("persistence_time_s") - 0.778).abs() < 0.001);
    assert!((value("persistence_length_um") - 7.778).abs() < 0.01);

    let o = cli(&["derive-coeffs", "--radius=-1"]);
    assert_eq!(o.status.code(), Some(1));
}
