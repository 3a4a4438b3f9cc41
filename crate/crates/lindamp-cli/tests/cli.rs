use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
name = "tiny"
times = [0.0, 1.0]

[flow]
family = "perturbed_couette"
amplitude = 0.05
center = 0.5
width = 1.0

[vorticity.profile]
kind = "gaussian"
center = 0.5
width = 0.15

[grid]
base_n = 32
ladder = [0.1, 0.05, 0.025]
oracle_n = 256
flow_points = 512

[limits]
scan_sizes = [32, 64]
"#;

fn lindamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lindamp")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let out = lindamp(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["simulate", "density", "profiles", "verify", "dump-kernel"] {
        assert!(text.contains(sub), "missing {sub}");
    }
    let sub = String::from_utf8_lossy(&lindamp(&["density", "--help"]).stdout).into_owned();
    for flag in ["--config", "--out", "--threads", "--checks", "--cache-dir"] {
        assert!(sub.contains(flag), "missing {flag}");
    }
}

#[test]
fn dump_kernel_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let out_dir = tmp.path().join("out");
    let out = lindamp(&["dump-kernel", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"]["command"], "dump-kernel");
    assert!(out_dir.join("kernel.csv").exists());
    assert!(out_dir.join("kernel_residual.csv").exists());
}

#[test]
fn density_with_cache_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), TINY);
    let cache = tmp.path().join("cache");
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let out = lindamp(&[
            "density",
            "--config",
            &cfg,
            "--out",
            dir.to_str().unwrap(),
            "--checks",
            "none",
            "--cache-dir",
            cache.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn refused_and_invalid_inputs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let unstable = TINY.replace("amplitude = 0.05", "amplitude = 0.3").replace("width = 1.0", "width = 0.35");
    let cfg = write_config(tmp.path(), &unstable);
    let out = lindamp(&["simulate", "--config", &cfg, "--checks", "none"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refused"));

    let out = lindamp(&["simulate", "--config", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let out = lindamp(&["verify", "--config", &cfg, "--checks", "A42"]);
    assert!(!out.status.success());
}
