//! End-to-end tests of the binary: exit-code discipline, file outputs,
//! determinism, and the override precedence.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superlum"))
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("superlum-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn null_config(out_dir: &Path) -> String {
    format!(
        r#"
[run]
master_seed = 11
out_dir = "{}"

[geometry]
signal_leg = 2.0
idler_leg = 1.0
pump_arm = 0.1

[hypothesis]
kind = "null"
dark_rate = 50.0

[schedule]
action = 0.01
standby_levels = [0.3]
cycles_per_level = 400
probe_speeds = [0.5, 1.0]

[estimation]
window = 0.05
channel_cycles = 400

[channel]
false_alarm = 0.1
hit = 0.9
prior = 0.5
signal_speed = 2.0
"#,
        out_dir.display()
    )
}

#[test]
fn plan_reports_design_speeds_and_sweeps() {
    let dir = scratch_dir("plan");
    let config = write_config(&dir, &null_config(&dir));
    let output = binary()
        .args(["plan", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("v_max = 2.23606797749979"), "{stdout}");

    let csv = std::fs::read_to_string(dir.join("plan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "idler_over_signal,pump_arm,v_max,v_min,v_max_over_c,feasible"
    );
    // v_max grows with the idler/signal ratio at fixed pump arm.
    let vmax_at_unit_arm: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[1] == "0.1")
        .map(|f| f[2].parse().unwrap())
        .collect();
    assert_eq!(vmax_at_unit_arm.len(), 10);
    assert!(vmax_at_unit_arm.windows(2).all(|p| p[1] > p[0]));

    // Quiet mode suppresses the report.
    let quiet = binary()
        .args(["plan", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(quiet.status.success());
    assert!(quiet.stdout.is_empty());
}

#[test]
fn plan_rejects_equal_legs_with_validation_exit() {
    let dir = scratch_dir("plan-equal");
    let body = null_config(&dir).replace("idler_leg = 1.0", "idler_leg = 2.0");
    let config = write_config(&dir, &body);
    let output = binary()
        .args(["plan", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("independent"), "{stderr}");
}

#[test]
fn simulate_is_byte_deterministic_and_seed_sensitive() {
    let dir_a = scratch_dir("sim-a");
    let dir_b = scratch_dir("sim-b");
    let dir_c = scratch_dir("sim-c");
    for (dir, seed) in [(&dir_a, None), (&dir_b, None), (&dir_c, Some("99"))] {
        let config = write_config(dir, &null_config(dir));
        let mut cmd = binary();
        cmd.args(["simulate", "--quiet", "--config"]).arg(&config);
        if let Some(seed) = seed {
            cmd.args(["--seed", seed]);
        }
        let output = cmd.output().unwrap();
        assert!(output.status.success(), "{output:?}");
    }
    let log_a = std::fs::read(dir_a.join("alarms.log")).unwrap();
    let log_b = std::fs::read(dir_b.join("alarms.log")).unwrap();
    let log_c = std::fs::read(dir_c.join("alarms.log")).unwrap();
    assert_eq!(log_a, log_b, "same config and seed must be byte-identical");
    assert_ne!(log_a, log_c, "a different master seed must change the log");

    // Different seeds, same physics: alarm totals agree statistically.
    // Expected 6200 alarms; 10% is well beyond 3 sigma.
    let count_alarms = |bytes: &[u8]| String::from_utf8_lossy(bytes).lines().count() as f64;
    let a = count_alarms(&log_a);
    let c = count_alarms(&log_c);
    assert!((a - c).abs() / a < 0.1, "alarm totals diverged: {a} vs {c}");

    // The resolved config records the effective seed.
    let resolved = std::fs::read_to_string(dir_c.join("run.toml")).unwrap();
    assert!(resolved.contains("master_seed = 99"), "{resolved}");
}

#[test]
fn estimate_pipeline_on_a_null_device() {
    let dir = scratch_dir("estimate");
    let config = write_config(&dir, &null_config(&dir));
    let simulate = binary()
        .args(["simulate", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(simulate.status.success(), "{simulate:?}");

    let output = binary()
        .args(["estimate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");

    let table = std::fs::read_to_string(dir.join("reliability.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "V,standby_s,Q_avg,Q0_avg,R,R_ci_low,R_ci_high,cycles"
    );
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let r: f64 = fields[4].parse().unwrap();
        assert!(r.abs() < 0.3, "null device drifted: {line}");
    }

    let veff = std::fs::read_to_string(dir.join("veff.csv")).unwrap();
    assert!(
        veff.lines().nth(1).unwrap().starts_with("undetectable"),
        "{veff}"
    );

    let bound = std::fs::read_to_string(dir.join("bound.csv")).unwrap();
    for line in bound.lines().skip(1) {
        assert!(line.ends_with(",true"), "bound row violated: {line}");
    }
}

#[test]
fn estimate_without_logs_is_an_io_error() {
    let dir = scratch_dir("estimate-missing");
    let config = write_config(&dir, &null_config(&dir));
    let output = binary()
        .args(["estimate", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("alarms.log"), "{stderr}");
}

#[test]
fn estimate_on_empty_logs_is_a_runtime_error() {
    let dir = scratch_dir("estimate-empty");
    let config = write_config(&dir, &null_config(&dir));
    std::fs::write(dir.join("alarms.log"), "").unwrap();
    let output = binary()
        .args(["estimate", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn estimate_on_corrupt_logs_is_a_runtime_error() {
    let dir = scratch_dir("estimate-corrupt");
    let config = write_config(&dir, &null_config(&dir));
    std::fs::write(dir.join("alarms.log"), "0,1,100\nnot-a-record\n").unwrap();
    let output = binary()
        .args(["estimate", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn antinomy_emits_the_chain_and_frames() {
    let dir = scratch_dir("antinomy");
    let config = write_config(&dir, &null_config(&dir));
    let output = binary()
        .args(["antinomy", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");

    let chain = std::fs::read_to_string(dir.join("chain.csv")).unwrap();
    let mut lines = chain.lines();
    assert_eq!(lines.next().unwrap(), "step,probability");
    assert_eq!(lines.next().unwrap(), "0,0.5");
    let first_update: f64 = lines
        .next()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((first_update - 0.82).abs() < 1e-12);

    let scenario = std::fs::read_to_string(dir.join("scenario.txt")).unwrap();
    assert!(scenario.contains("relay precedes journey start in the echo frame: true"));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("boosted relay time: -"), "{stdout}");
}

#[test]
fn antinomy_reports_the_uninformative_fixed_point() {
    let dir = scratch_dir("antinomy-fixed");
    let body = null_config(&dir).replace("false_alarm = 0.1", "false_alarm = 0.9");
    let config = write_config(&dir, &body);
    let output = binary()
        .args(["antinomy", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("fixed point"), "{stdout}");
    let chain = std::fs::read_to_string(dir.join("chain.csv")).unwrap();
    for line in chain.lines().skip(1) {
        assert!(line.ends_with(",0.5"), "iterate moved: {line}");
    }
}

#[test]
fn antinomy_rejects_subluminal_devices() {
    let dir = scratch_dir("antinomy-slow");
    let body = null_config(&dir).replace("signal_speed = 2.0", "signal_speed = 0.5");
    let config = write_config(&dir, &body);
    let output = binary()
        .args(["antinomy", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("exceeding light speed"), "{stderr}");
}

#[test]
fn out_dir_precedence_flag_env_config() {
    let dir = scratch_dir("outdir");
    let env_dir = scratch_dir("outdir-env");
    let flag_dir = scratch_dir("outdir-flag");
    let config = write_config(&dir, &null_config(&dir));

    // Environment variable beats the config.
    let output = binary()
        .args(["plan", "--quiet", "--config"])
        .arg(&config)
        .env("SUPERLUM_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(env_dir.join("plan.csv").exists());
    assert!(!dir.join("plan.csv").exists());

    // The --out flag beats the environment.
    let output = binary()
        .args(["plan", "--quiet", "--config"])
        .arg(&config)
        .env("SUPERLUM_OUT", &env_dir)
        .arg("--out")
        .arg(&flag_dir)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(flag_dir.join("plan.csv").exists());
}

#[test]
fn bundled_demo_configs_are_valid() {
    for name in ["signaling-demo.toml", "null-demo.toml"] {
        let config = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../configs")
            .join(name);
        let out = scratch_dir(&format!("demo-{name}"));
        let output = binary()
            .args(["plan", "--quiet", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success(), "{name}: {output:?}");
        assert!(out.join("plan.csv").exists());
    }
}

#[test]
fn config_typos_are_validation_errors() {
    let dir = scratch_dir("typo");
    let body = null_config(&dir).replace("dark_rate", "drak_rate");
    let config = write_config(&dir, &body);
    let output = binary()
        .args(["simulate", "--quiet", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn cycles_override_changes_the_run_size() {
    let dir = scratch_dir("cycles");
    let config = write_config(&dir, &null_config(&dir));
    let output = binary()
        .args(["simulate", "--cycles", "10", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("simulated 10 cycles"), "{stdout}");
    let resolved = std::fs::read_to_string(dir.join("run.toml")).unwrap();
    assert!(resolved.contains("cycles_per_level = 10"), "{resolved}");
}
