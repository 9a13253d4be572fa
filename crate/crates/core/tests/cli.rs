use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dshock"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn dshock(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn run(name: &str, out: &Path) -> Output {
    dshock(&["run", "--config", scenario(name).to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn symmetric_scenario_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("symmetric_riemann", dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/golden/symmetric_riemann");
    for f in ["trajectory.csv", "balance.csv"] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(golden.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn outputs_are_deterministic() {
    for name in ["asymmetric_riemann", "weakcheck_symmetric", "spherical_converging"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(code(&run(name, a.path())), 0);
        assert_eq!(code(&run(name, b.path())), 0);
        let ma = fs::read_to_string(a.path().join("manifest.json")).unwrap();
        assert_eq!(ma, fs::read_to_string(b.path().join("manifest.json")).unwrap(), "{name}");
        let m: serde_json::Value = serde_json::from_str(&ma).unwrap();
        for f in m["files"].as_array().unwrap() {
            let bytes = fs::read(a.path().join(f["path"].as_str().unwrap())).unwrap();
            assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        }
    }
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"name\": ").unwrap();
    let out = dir.path().join("o");
    let (b, o) = (bad.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(code(&dshock(&["run", "--config", b, "--out", o])), 2);
    let src = fs::read_to_string(scenario("symmetric_riemann")).unwrap();
    fs::write(&bad, src.replace("\"t_end\"", "\"typo\": 1, \"t_end\"")).unwrap();
    assert_eq!(code(&dshock(&["run", "--config", b, "--out", o])), 2);
    // subcommand and scenario kind disagree
    let sym = scenario("symmetric_riemann");
    assert_eq!(code(&dshock(&["spherical", "--config", sym.to_str().unwrap(), "--out", o])), 2);
    assert_eq!(code(&dshock(&["run", "--out", o])), 2);
    assert_eq!(code(&dshock(&["riemann", "--rho-l", "1", "--out", o])), 2);
    assert_eq!(code(&dshock(&["bogus"])), 2);
    assert!(!out.exists());
}

#[test]
fn entropy_violation_exits_4_and_names_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("no_delta_shock", dir.path());
    assert_eq!(code(&o), 4);
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("overcompression") && report.contains("\"fail\""), "{report}");
    assert_eq!(code(&run("time_reversed", dir.path())), 4);
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("caustic.json");
    fs::write(
        &cfg,
        r#"{"name": "caustic", "problem": {"kind": "spherical", "n": 3,
            "inner": {"kind": "constant", "rho": 0.0, "u": 0.0},
            "outer": {"kind": "free_flow", "rho0": "1", "u0": "-r"},
            "phi0": 1.0, "e0": 0.1, "u_delta0": -0.5, "t_end": 3.0}}"#,
    )
    .unwrap();
    let o = dshock(&["spherical", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn riemann_flags_write_the_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let o = dshock(&[
        "riemann",
        "--rho-l",
        "4",
        "--rho-r",
        "1",
        "--u-l",
        "1",
        "--u-r",
        "-1",
        "--t-end",
        "1",
        "--samples",
        "5",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,phi,u_delta,e,mass_deficit,momentum_deficit");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[2] - 1.0 / 3.0).abs() < 1e-15 && (last[3] - 4.0).abs() < 1e-13);
    assert!(fs::read_to_string(dir.path().join("plot.gp")).unwrap().contains("'run.csv'"));
    assert!(dir.path().join("manifest.json").exists());

    let rel = dshock(&[
        "riemann",
        "--rho-l",
        "4",
        "--rho-r",
        "1",
        "--u-l",
        "1",
        "--u-r",
        "-1",
        "--t-end",
        "1",
        "--flux",
        "relativistic",
        "--c0",
        "1",
        "--out",
        dir.path().join("rel").to_str().unwrap(),
    ]);
    assert_eq!(code(&rel), 0, "{}", String::from_utf8_lossy(&rel.stdout));
    let no_c0 = dshock(&[
        "riemann",
        "--rho-l",
        "4",
        "--rho-r",
        "1",
        "--u-l",
        "1",
        "--u-r",
        "-1",
        "--t-end",
        "1",
        "--flux",
        "relativistic",
        "--out",
        "x",
    ]);
    assert_eq!(code(&no_c0), 2);
}

#[test]
fn oracle_presets() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cluster.csv");
    let o = dshock(&["oracle", "--preset", "riemann", "--N", "20000", "--T", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(fs::read_to_string(&csv).unwrap().starts_with("t,position,mass,velocity"));
    let csv = dir.path().join("shells.csv");
    let o = dshock(&["oracle", "--preset", "spherical", "--N", "20000", "--T", "0.5", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(fs::read_to_string(&csv).unwrap().starts_with("t,phi,phi_oracle"));
    assert_eq!(code(&dshock(&["oracle", "--out", "x.csv"])), 2);
}

#[test]
fn weakcheck_accepts_a_solution_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("weak.json");
    let sol = scenario("asymmetric_riemann");
    let o = dshock(&["weakcheck", "--solution", sol.to_str().unwrap(), "--levels", "6", "--seed", "3", "--out", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["status"], "pass");
    assert!(dir.path().join("weak.csv").exists());
    let o = run("weakcheck_perturbed", dir.path());
    assert_eq!(code(&o), 4);
}

#[test]
fn spherical_command_writes_trajectory_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = dshock(&["spherical", "--config", scenario("spherical_converging").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,phi,u_delta,e,m,M,M_plus_m,entropy_ok\n"));
    assert!(fs::read_to_string(dir.path().join("plot.gp")).unwrap().contains("trajectory.csv"));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("weakcheck_symmetric");
    let args = ["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    let o = bin().args(args).env("DSHOCK_THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0);
    let serial = fs::read_to_string(dir.path().join("weak.csv")).unwrap();
    let o = bin().args(args).env("DSHOCK_THREADS", "4").output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(serial, fs::read_to_string(dir.path().join("weak.csv")).unwrap());
    let o = bin().args(args).env("DSHOCK_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn strict_mode_enforces_advisory_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("planar_shear");
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&dshock(&["run", "--config", cfg.to_str().unwrap(), "--out", out])), 0);
    assert_eq!(code(&dshock(&["run", "--config", cfg.to_str().unwrap(), "--out", out, "--strict"])), 4);
}
