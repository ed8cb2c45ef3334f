//! The `eprq` binary: exit codes, report contents and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use eprq_cli::{cmd_analyze, cmd_verify, verify_table, AnalysisConfig};
use eprq_core::epr::Provenance;
use eprq_core::units::{ghz, ghz_energy};
use eprq_core::EprTable;
use nalgebra::DMatrix;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn eprq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eprq")).args(args).output().expect("binary runs")
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eprq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn analyze_json_is_byte_identical() {
    let path = fixture("transmon_cavity.toml");
    let a = eprq(&["analyze", path.to_str().unwrap(), "--format", "json", "--oracle"]);
    let b = eprq(&["analyze", path.to_str().unwrap(), "--format", "json", "--oracle"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["oracle"]["chi"][0][1].as_f64().unwrap() > 0.0);
    assert!(v["oracle"]["chi_deviation"][0][1].is_number());
    assert!(v["nonlinear"]["total"]["chi"][0][1].as_f64().unwrap() > 0.0);
}

#[test]
fn thread_count_does_not_change_output() {
    let path = fixture("transmon_cavity.toml");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_eprq"))
            .args(["analyze", path.to_str().unwrap(), "--format", "json", "--oracle"])
            .env("EPRQ_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn linear_netlist_has_no_nonlinear_section() {
    let r = cmd_analyze(&AnalysisConfig::new(fixture("linear.toml"))).unwrap();
    assert!(r.nonlinear.is_none() && r.junctions.is_empty());
    assert_eq!(r.modes.len(), 2);
    assert_eq!(r.modes[0].omega, r.modes[0].dressed_omega);
    let json = r.to_json();
    assert!(json.contains("\"nonlinear\": null"));
    assert!(json.contains("\"q_total\": \"inf\""));
}

#[test]
fn malformed_netlist_exits_2_with_location() {
    let bad = temp_file("bad.toml", "format_version = 1\n[circuit]\nbranches = 1\ncapacitance = [[\"100 fQ\"]]\n");
    let out = eprq(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[netlist]") && err.contains("circuit.capacitance[0][0]"), "{err}");

    let unknown = temp_file("unknown.toml", "format_version = 1\n[circuit]\nbranches = 1\ncapacitance = [[1e-13]]\nfoo = 2\n");
    assert_eq!(eprq(&["verify", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(eprq(&["analyze", "/nonexistent/netlist.toml"]).status.code(), Some(2));
}

#[test]
fn bad_order_is_an_input_error() {
    let path = fixture("transmon_cavity.toml");
    assert_eq!(eprq(&["analyze", path.to_str().unwrap(), "--order", "5"]).status.code(), Some(2));
}

#[test]
fn open_loop_flux_does_not_frustrate() {
    let body = "format_version = 1\n[circuit]\nbranches = 1\ncapacitance = [[\"80 fF\"]]\n\
                [[junction]]\nbranch = 0\nenergy = \"20 GHz\"\n[junction.bias]\nflux = \"0.25 Phi0\"\nloop = \"open\"\n";
    let p = temp_file("open_loop.toml", body);
    let r = cmd_analyze(&AnalysisConfig::new(p)).unwrap();
    assert_eq!(r.junctions[0].phi_eq, 0.0);
}

#[test]
fn negative_effective_inductance_is_a_numerical_failure() {
    // βL = 0.9 at half a flux quantum settles at φ_eq = π, where E_J cos φ_eq < 0
    let body = "format_version = 1\n[circuit]\nbranches = 1\ncapacitance = [[\"80 fF\"]]\n\
                inverse_inductance = [[\"1.3595 1/nH\"]]\n[[junction]]\nbranch = 0\nenergy = \"20 GHz\"\n\
                [junction.bias]\nflux = \"0.5 Phi0\"\nloop_inductance = \"0.73557 nH\"\n";
    let p = temp_file("half_flux.toml", body);
    let out = eprq(&["analyze", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[equilibrium]"));
}

#[test]
fn verify_passes_on_algebraic_fixtures() {
    for name in ["transmon_cavity.toml", "two_transmon.toml", "linear.toml", "lc.toml"] {
        let mut cfg = AnalysisConfig::new(fixture(name));
        cfg.strict_modes = true;
        let s = cmd_verify(&cfg).unwrap();
        // the fixture's cavity inductor shunts nothing, so the sum rule holds
        assert!(s.passed(), "{name}: {}", s.to_table());
        let out = eprq(&["verify", fixture(name).to_str().unwrap(), "--strict-modes"]);
        assert_eq!(out.status.code(), Some(0));
    }
}

#[test]
fn truncated_modes_skip_the_sum_rule() {
    let mut cfg = AnalysisConfig::new(fixture("ingested_device.toml"));
    cfg.modes = Some(fixture("ingested_device_modes.toml"));
    cfg.strict_modes = true;
    let s = cmd_verify(&cfg).unwrap();
    let rule = s.checks.iter().find(|c| c.name == "sum_rule").unwrap();
    assert!(rule.residual.is_none());
    assert!(rule.note.as_deref().unwrap().contains("truncated"));
    assert!(s.passed());
}

#[test]
fn corrupted_participation_fails_named_check() {
    let omega = [ghz(5.0)];
    let e = [ghz_energy(20.0)];
    let t = EprTable::from_participations(
        DMatrix::from_element(1, 1, 1.2),
        DMatrix::from_element(1, 1, 1.0),
        &omega,
        &e,
        Provenance::Ingested,
        true,
    );
    let s = verify_table(&t, true);
    assert!(!s.passed());
    let failed: Vec<&str> = s.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failed.contains(&"participation_bounds"), "{failed:?}");
}

#[test]
fn oracle_disagreement_exits_1() {
    let out = eprq(&["verify", fixture("transmon_cavity.toml").to_str().unwrap(), "--oracle"]);
    // the quartic formulas sit about 10% from the oracle at this E_J
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL  oracle_alpha[0]"));
    let loose = eprq(&[
        "verify",
        fixture("transmon_cavity.toml").to_str().unwrap(),
        "--oracle",
        "--oracle-threshold",
        "0.3",
    ]);
    assert_eq!(loose.status.code(), Some(0));
}

#[test]
fn terms_and_pump_subcommands() {
    let path = fixture("two_transmon.toml");
    let out = eprq(&["terms", path.to_str().unwrap(), "--order", "4", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // two modes at p = 4: (5·5 + 3·3 + 1) + ... pairs, all listed
    assert_eq!(v.as_array().unwrap().len() as u128, eprq_core::hamiltonian::term_count(2, 4));

    let out = eprq(&[
        "pump", path.to_str().unwrap(), "--power", "4", "--alpha", "1,0", "--beta", "0,1",
        "--pump", "1:0.0,0.0@6.0", "--signal", "0", "--format", "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["g_re"].as_f64(), Some(0.0));

    let clash = eprq(&[
        "pump", path.to_str().unwrap(), "--power", "4", "--alpha", "1,0", "--beta", "0,1",
        "--pump", "0:0.1,0.0@6.0", "--signal", "0",
    ]);
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("eprq-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let target = dir.join("report.json");
    let out = eprq(&["analyze", fixture("lc.toml").to_str().unwrap(), "--format", "json", "-o", target.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
}
