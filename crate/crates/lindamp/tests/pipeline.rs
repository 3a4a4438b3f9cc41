use lindamp::checks::{parse_check_list, CheckId, CheckOutcome};
use lindamp::pipeline::{run_config, run_scenario, Command, RunOptions};
use lindamp::report::{emit_report, Report, Table};
use lindamp::scenario::Scenario;
use lindamp::Error;
use proptest::prelude::*;
use std::path::{Path, PathBuf};

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

/// A perturbed scenario small enough to run every stage in seconds.
const TINY: &str = r#"
name = "tiny"
k = [1]
times = [0.0, 1.0, 2.0]

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

fn tiny() -> Scenario {
    Scenario::from_toml_str(TINY).unwrap()
}

fn none() -> RunOptions {
    RunOptions { checks: Some(Vec::new()), ..RunOptions::default() }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_scenarios_load() {
    for f in ["couette.toml", "perturbed.toml"] {
        let sc = Scenario::load(&scenario_file(f)).unwrap();
        assert!(!sc.checks.is_empty(), "{f}");
    }
}

#[test]
fn toml_round_trip_preserves_the_scenario_and_hash() {
    let sc = tiny();
    let back = Scenario::from_toml_str(&sc.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, sc);
    assert_eq!(back.config_hash(), sc.config_hash());
    assert_eq!(sc.config_hash().len(), 64);
    assert_eq!(sc.stream_times(), &[0.0, 1.0, 2.0]);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad_field = TINY.replace("name = \"tiny\"", "name = \"tiny\"\nbogus = 1");
    assert!(matches!(Scenario::from_toml_str(&bad_field), Err(Error::Config(_))));
    let non_monotone = TINY.replace("amplitude = 0.05", "amplitude = 2.0").replace("width = 1.0", "width = 0.35");
    assert!(matches!(Scenario::from_toml_str(&non_monotone), Err(Error::NotMonotone { .. })));
    let zero_k = TINY.replace("k = [1]", "k = [0]");
    assert!(matches!(Scenario::from_toml_str(&zero_k), Err(Error::Config(_))));
    let unsorted = TINY.replace("times = [0.0, 1.0, 2.0]", "times = [2.0, 1.0]");
    assert!(matches!(Scenario::from_toml_str(&unsorted), Err(Error::Config(_))));
    let ladder = TINY.replace("ladder = [0.1, 0.05, 0.025]", "ladder = [0.1, 0.2, 0.025]");
    assert!(matches!(Scenario::from_toml_str(&ladder), Err(Error::Config(_))));
    let check = TINY.replace("k = [1]", "k = [1]\nchecks = [\"A11\"]");
    assert!(Scenario::from_toml_str(&check).is_err());
}

#[test]
fn density_key_tracks_only_density_inputs() {
    let sc = tiny();
    let mut other = sc.clone();
    other.name = "renamed".into();
    other.times = vec![0.0, 7.0];
    other.grid.oracle_n = 512;
    assert_eq!(sc.density_key(1, -1.0), other.density_key(1, -1.0));
    assert_ne!(sc.config_hash(), other.config_hash());
    assert_ne!(sc.density_key(1, -1.0), sc.density_key(1, 1.0));
    assert_ne!(sc.density_key(1, -1.0), sc.density_key(2, -1.0));
    other.grid.base_n = 64;
    assert_ne!(sc.density_key(1, -1.0), other.density_key(1, -1.0));
}

#[test]
fn unstable_flow_is_refused() {
    let src = TINY.replace("amplitude = 0.05", "amplitude = 0.3").replace("width = 1.0", "width = 0.35");
    let sc = Scenario::from_toml_str(&src).unwrap();
    for cmd in [Command::Simulate, Command::Density, Command::Profiles] {
        let e = run_scenario(&sc, cmd, &none()).unwrap_err();
        assert!(matches!(e, Error::Refused(_)), "{cmd:?}: {e}");
    }
    // The kernel dump needs no spectral assumption.
    assert!(run_scenario(&sc, Command::DumpKernel, &none()).is_ok());
}

#[test]
fn memory_guard_fires_before_solving() {
    let mut sc = tiny();
    sc.limits.memory_mb = 0.01;
    let e = run_scenario(&sc, Command::Density, &none()).unwrap_err();
    assert!(matches!(e, Error::Resource(_)), "{e}");
}

#[test]
fn empty_report_round_trips() {
    let r = Report::default();
    let json = r.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["checks"].as_array().unwrap().is_empty());
    assert_eq!(Report::from_json(&json).unwrap(), r);
    assert!(r.all_pass());
}

#[test]
fn nan_values_become_null() {
    let mut r = Report::default();
    r.summary("missing", f64::NAN);
    r.checks.push(CheckOutcome {
        name: "A1".into(),
        measured: f64::INFINITY,
        threshold: 1.0,
        pass: false,
        detail: String::new(),
    });
    let json = r.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(v["summaries"][0]["value"].is_null());
    assert!(v["checks"][0]["measured"].is_null());
    let back = Report::from_json(&json).unwrap();
    assert!(back.summaries[0].value.is_nan());
    assert!(!back.all_pass());
}

#[test]
fn check_lists_parse() {
    assert_eq!(parse_check_list("none").unwrap(), Vec::<CheckId>::new());
    assert_eq!(parse_check_list("all").unwrap().len(), 10);
    assert_eq!(parse_check_list("a2, A3").unwrap(), vec![CheckId::A2, CheckId::A3]);
    assert!(parse_check_list("A0").is_err());
}

#[test]
fn every_stage_runs_on_a_tiny_scenario() {
    let sc = tiny();
    let sim = run_scenario(&sc, Command::Simulate, &none()).unwrap();
    assert!(sim.tables.iter().any(|t| t.name == "oracle"));
    let den = run_scenario(&sc, Command::Density, &none()).unwrap();
    for name in ["density_ladder", "log_coefficient", "boundary_coefficient", "stream", "stream_error"] {
        assert!(den.tables.iter().any(|t| t.name == name), "missing {name}");
    }
    let err = den.tables.iter().find(|t| t.name == "stream_error").unwrap();
    for row in &err.rows {
        assert!(row[2] < 0.05, "stream error {row:?}");
    }
    let ker = run_scenario(&sc, Command::DumpKernel, &none()).unwrap();
    assert!(ker.tables.iter().any(|t| t.name == "kernel"));
    assert_eq!(ker.manifest.rungs.len(), 3);
    assert_eq!(ker.manifest.config_hash, sc.config_hash());
}

#[test]
fn cached_and_threaded_reruns_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let cache = tmp.path().join("cache");
    let run = |out: &str, threads: Option<usize>| {
        let opts = RunOptions {
            out: Some(tmp.path().join(out)),
            checks: Some(Vec::new()),
            cache_dir: Some(cache.clone()),
            threads,
        };
        run_config(&cfg, Command::Density, &opts).unwrap().1
    };
    let cold = run("cold", None);
    let cached: Vec<_> = std::fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(cached.len(), 2);
    assert!(cached.iter().all(|p| p.extension().unwrap() == "theta"));
    let warm = run("warm", Some(1));
    assert_eq!(read_dir_sorted(&cold), read_dir_sorted(&warm));
    // CSV files parse back to the same tables.
    let report = Report::from_json(&std::fs::read_to_string(cold.join("report.json")).unwrap()).unwrap();
    for t in &report.tables {
        let back = Table::read_csv(&cold.join(t.file_name())).unwrap();
        assert_eq!(back.headers, t.headers);
    }
    // A corrupt cache entry is reported rather than silently used.
    std::fs::write(&cached[0], b"LDTHETA1\x03\0\0\0\0\0\0\0").unwrap();
    let opts = RunOptions { out: Some(tmp.path().join("bad")), checks: Some(Vec::new()), cache_dir: Some(cache.clone()), threads: None };
    assert!(run_config(&cfg, Command::Density, &opts).is_err());
}

#[test]
fn emitted_csv_round_trips_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let mut t = Table::new("values", &["a", "b"]);
    t.push(vec![0.1, -1e-300]);
    t.push(vec![1.0 / 3.0, 6.02e23]);
    let r = Report { tables: vec![t.clone()], ..Report::default() };
    let paths = emit_report(&r, tmp.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let back = Table::read_csv(&paths[1]).unwrap();
    assert_eq!(back, t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_hash_changes_iff_the_config_does(seed in any::<u64>(), base in 8usize..200, delta in 0.01f64..0.09) {
        let mut a = tiny();
        a.seed = seed;
        a.grid.base_n = base;
        a.grid.delta0 = delta;
        let b = a.clone();
        prop_assert_eq!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.seed = seed.wrapping_add(1);
        prop_assert_ne!(a.config_hash(), c.config_hash());
        let mut d = a.clone();
        d.grid.delta0 = delta * 0.5;
        prop_assert_ne!(a.config_hash(), d.config_hash());
        prop_assert_ne!(a.density_key(1, 1.0), d.density_key(1, 1.0));
    }
}
