//! End-to-end tests of the `hlsw` binary: subcommands, exit codes, config
//! layering, and output formats.

use std::path::Path;
use std::process::{Command, Output};

fn hlsw() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hlsw"));
    // keep the ambient environment from leaking defaults into tests
    cmd.env_remove("HLSW_CONFIG");
    cmd
}

fn write_trace(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn run_happy_path_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path(), "t.txt", "L 0x400100 0x2000\nS 0x400104 0x2040\n");
    let out = dir.path().join("r.json");
    let output = hlsw()
        .args(["run", "--design", "sequential", "--holiswap", "on"])
        .arg("--trace")
        .arg(&trace)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema"], "hlsw-report-1");
    assert_eq!(report["totals"]["accesses"], 2);
    assert_eq!(report["totals"]["misses"], 2);
    assert_eq!(report["config"]["rng"], "chacha8");
}

#[test]
fn default_seed_is_zero_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let gen = hlsw()
        .args(["gen", "--kind", "hotset", "--n", "5000"])
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    assert_exit(&gen, 0);

    let run = |out: &Path| {
        let output = hlsw()
            .args(["run", "--design", "prediction", "--counters", "log"])
            .arg("--trace")
            .arg(&trace)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert_exit(&output, 0);
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.json"));
    let b = run(&dir.path().join("b.json"));
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["config"]["seed"], 0);
    assert_eq!(report["config"]["design"], "prediction-static");
}

#[test]
fn sweep_emits_one_csv_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    hlsw()
        .args(["gen", "--kind", "hotset", "--n", "20000", "--span", "65536"])
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    let output = hlsw()
        .args([
            "sweep",
            "--epochs",
            "4,16,64,256,1024",
            "--counters",
            "exact",
            "--format",
            "csv",
        ])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 6, "header + 5 rows:\n{stdout}");
    assert!(lines[0].starts_with("epoch,"));
    assert!(lines[1].starts_with("4,2,"));
    assert!(lines[5].starts_with("1024,512,"));
}

#[test]
fn holiswap_on_and_off_report_identical_miss_counts() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    hlsw()
        .args(["gen", "--kind", "zipf", "--n", "30000", "--seed", "5"])
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    let misses = |setting: &str| {
        let output = hlsw()
            .args(["run", "--holiswap", setting])
            .arg("--trace")
            .arg(&trace)
            .output()
            .unwrap();
        assert_exit(&output, 0);
        let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
        (
            report["totals"]["misses"].as_u64().unwrap(),
            report["totals"]["swaps"].as_u64().unwrap(),
        )
    };
    let (miss_on, swaps_on) = misses("on");
    let (miss_off, swaps_off) = misses("off");
    assert_eq!(miss_on, miss_off);
    assert!(swaps_on > 0);
    assert_eq!(swaps_off, 0);
}

#[test]
fn binary_traces_round_trip_through_gen_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = dir.path().join("t.txt");
    let binary = dir.path().join("t.bin");
    for (path, extra) in [(&text, None), (&binary, Some("--binary"))] {
        let mut cmd = hlsw();
        cmd.args(["gen", "--kind", "uniform", "--n", "4000", "--seed", "9"]);
        if let Some(flag) = extra {
            cmd.arg(flag);
        }
        cmd.arg("--out").arg(path);
        assert_exit(&cmd.output().unwrap(), 0);
    }
    assert!(std::fs::read(&binary).unwrap().starts_with(b"HLSW1"));

    let report_for = |path: &Path| {
        let output = hlsw().arg("run").arg("--trace").arg(path).output().unwrap();
        assert_exit(&output, 0);
        String::from_utf8(output.stdout).unwrap()
    };
    assert_eq!(report_for(&text), report_for(&binary));
}

#[test]
fn analyze_reports_hot_line_share() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    hlsw()
        .args([
            "gen",
            "--kind",
            "hotset",
            "--n",
            "100000",
            "--hot-fraction",
            "0.6",
        ])
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    let output = hlsw().arg("analyze").arg("--trace").arg(&trace).output().unwrap();
    assert_exit(&output, 0);
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let share = value["hot_lines"]["hot_access_share"].as_f64().unwrap();
    assert!((share - 0.6).abs() < 0.05, "share {share}");
}

#[test]
fn usage_errors_exit_one() {
    // missing required --trace
    let output = hlsw().arg("run").output().unwrap();
    assert_exit(&output, 1);
    // unknown design value
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path(), "t.txt", "L 0x0 0x0\n");
    let output = hlsw()
        .args(["run", "--design", "mystery"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_exit(&output, 1);
    // non-4-way cache without a geometry file
    let output = hlsw()
        .args(["run", "--assoc", "8"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_exit(&output, 1);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // missing trace file
    let output = hlsw()
        .arg("run")
        .arg("--trace")
        .arg(dir.path().join("absent.txt"))
        .output()
        .unwrap();
    assert_exit(&output, 2);
    // malformed trace contents
    let trace = write_trace(dir.path(), "bad.txt", "X 0x0 0x0\n");
    let output = hlsw().arg("run").arg("--trace").arg(&trace).output().unwrap();
    assert_exit(&output, 2);
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 1"), "stderr: {stderr}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path(), "t.txt", "L 0x0 0x0\nL 0x4 0x40\n");
    let config = dir.path().join("defaults.toml");
    std::fs::write(&config, "design = \"parallel\"\nepoch = 64\nthreshold = 32\n").unwrap();

    let report_with = |extra: &[&str]| {
        let mut cmd = hlsw();
        cmd.env("HLSW_CONFIG", &config);
        cmd.arg("run").arg("--trace").arg(&trace).args(extra);
        let output = cmd.output().unwrap();
        assert_exit(&output, 0);
        serde_json::from_slice::<serde_json::Value>(&output.stdout).unwrap()
    };

    let defaults = report_with(&[]);
    assert_eq!(defaults["config"]["design"], "parallel");
    assert_eq!(defaults["config"]["epoch"], 64);

    let overridden = report_with(&["--design", "sequential", "--epoch", "128"]);
    assert_eq!(overridden["config"]["design"], "sequential");
    assert_eq!(overridden["config"]["epoch"], 128);
}

#[test]
fn geometry_file_feeds_the_energy_model() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path(), "t.txt", "L 0x0 0x0\n");
    let geometry = dir.path().join("grid.toml");
    std::fs::write(
        &geometry,
        "[geometry]\nrows = 2\ncols = 1\n",
    )
    .unwrap();
    let output = hlsw()
        .arg("run")
        .arg("--trace")
        .arg(&trace)
        .arg("--geometry")
        .arg(&geometry)
        .output()
        .unwrap();
    assert_exit(&output, 0);

    // a geometry that cannot cover the cache is an input error
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[geometry]\nrows = 0\ncols = 1\n").unwrap();
    let output = hlsw()
        .arg("run")
        .arg("--trace")
        .arg(&trace)
        .arg("--geometry")
        .arg(&bad)
        .output()
        .unwrap();
    assert_exit(&output, 2);
}

#[test]
fn csv_report_has_a_single_header() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path(), "t.txt", "L 0x0 0x0\nS 0x4 0x40\n");
    let output = hlsw()
        .args(["run", "--format", "csv"])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert_exit(&output, 0);
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert_eq!(stdout.lines().next().unwrap().matches("design").count(), 1);
}
