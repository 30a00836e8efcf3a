use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use cqed_cli::Config;
use cqed_core::{fit_beat, RunDataset};

fn cqed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn ideal_output_pipes_into_fit() {
    let dir = tempfile::tempdir().unwrap();
    let ideal = cqed(dir.path(), &["ideal", "--t-start-us", "20", "--t-end-us", "100", "--t-step-us", "0.5"]);
    assert!(ideal.status.success(), "{}", stderr(&ideal));
    assert!(stderr(&ideal).contains("omega_rabi_khz = 47"));

    let mut fit = Command::new(env!("CARGO_BIN_EXE_cqed"))
        .current_dir(dir.path())
        .args(["fit", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    fit.stdin.take().unwrap().write_all(&ideal.stdout).unwrap();
    let fit = fit.wait_with_output().unwrap();
    assert!(fit.status.success(), "{}", stderr(&fit));
    let json = String::from_utf8(fit.stdout).unwrap();

    let data = RunDataset::from_csv(&String::from_utf8(ideal.stdout).unwrap()).unwrap();
    assert_eq!(data.points.len(), 161);
    let p = Config::default().params();
    let expected = std::f64::consts::PI * p.delta / (2.0 * p.omega_rabi);
    let report = fit_beat(&data, p.delta).unwrap();
    assert!((report.phi - expected).abs() < 1e-6);
    assert!(json.contains(&format!("\"phi_rad\": {}", report.phi)), "{json}");
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "stdout mode must not create files");
}

#[test]
fn outputs_stay_inside_the_out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = cqed(dir.path(), &["--out", "results", "ideal", "--windows", "20..24,60..64", "--t-step-us", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cqed(dir.path(), &["fit", "results/ideal.csv", "--svg", "--out", "results"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cqed(dir.path(), &["gate", "--out", "results"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let top: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec![std::ffi::OsString::from("results")]);
    let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["fit.json", "fit.svg", "gate.txt", "ideal.csv"]);
    let svg = std::fs::read_to_string(out.join("fit.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline") && svg.trim_end().ends_with("</svg>"));
    let gate = std::fs::read_to_string(out.join("gate.txt")).unwrap();
    let fidelity: f64 = gate.lines().last().unwrap().trim_start_matches("fidelity = ").parse().unwrap();
    assert!(fidelity > 0.999);
}

#[test]
fn svg_needs_an_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "d.csv", "T_us,window,n_selected,n_e,p_e,stderr\n1,0,10,5,0.5,0.15\n2,0,10,6,0.6,0.15\n3,0,10,2,0.2,0.12\n");
    let o = cqed(dir.path(), &["fit", &csv, "--svg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let unknown = write(d, "unknown.conf", "n_bar_a = 0.8\nfrobnicate = 1\n");
    let o = cqed(d, &["--config", &unknown, "ideal"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ERROR[1]:") && stderr(&o).contains("frobnicate"));

    assert_eq!(cqed(d, &["--config", "missing.conf", "schedule"]).status.code(), Some(1));
    assert_eq!(cqed(d, &["teleport"]).status.code(), Some(1));
    assert_eq!(cqed(d, &["ideal", "--t-start-us", "20"]).status.code(), Some(1));
    let short = cqed(d, &["ideal", "--t-start-us", "5", "--t-end-us", "6"]);
    assert_eq!(short.status.code(), Some(1), "{}", stderr(&short));
    assert!(stderr(&short).contains("shorter than the source"));

    let coarse = write(d, "coarse.conf", "dt_max_us = 3\n");
    let o = cqed(d, &["--config", &coarse, "ideal", "--t-start-us", "20", "--t-end-us", "21"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("ERROR[2]:"));

    let flat = write(
        d,
        "flat.csv",
        "T_us,window,n_selected,n_e,p_e,stderr\n1,0,100,30,0.3,0.05\n2,0,100,30,0.3,0.05\n3,0,100,30,0.3,0.05\n4,0,100,30,0.3,0.05\n",
    );
    let o = cqed(d, &["fit", &flat]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("ERROR[3]:"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"converged\": false"));

    let aliased = write(
        d,
        "aliased.csv",
        "T_us,window,n_selected,n_e,p_e,stderr\n0,0,100,30,0.3,0.05\n7.79423227,0,100,31,0.31,0.05\n15.58846454,0,100,29,0.29,0.05\n",
    );
    let o = cqed(d, &["fit", &aliased]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    assert_eq!(cqed(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn calibration_fragment_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let small = write(dir.path(), "small.conf", "n_max_a = 2\nn_max_b = 2\n");
    let o = cqed(dir.path(), &["--config", &small, "calibrate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let c = Config::parse(&text).unwrap();
    let d = Config::default();
    assert!((c.coupling_phase_a - d.coupling_phase_a).abs() < 1e-6);
    assert!((c.coupling_phase_b - d.coupling_phase_b).abs() < 1e-6);
    assert!(c.p_error > 0.0 && c.p_error < 0.14);
}

#[test]
fn schedule_lists_all_plans() {
    let dir = tempfile::tempdir().unwrap();
    let o = cqed(dir.path(), &["schedule"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# plan source") && text.contains("# plan probe"));
    assert!(text.contains("gate plan not realizable"));
    assert!(text.contains("resonant with M_a: 0.260000"));

    let ideal = write(dir.path(), "ideal.conf", "profile = constant\nisolation = true\n");
    let o = cqed(dir.path(), &["--config", &ideal, "schedule"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# plan gate") && text.contains("hold(kick=3.141593)"));
}

#[test]
fn master_without_source_has_no_beat() {
    let dir = tempfile::tempdir().unwrap();
    let small = write(dir.path(), "small.conf", "n_max_a = 3\nn_max_b = 3\n");
    let o = cqed(dir.path(), &["--config", &small, "master", "--no-source", "--windows", "100..104"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let data = RunDataset::from_csv(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let p: Vec<f64> = data.points.iter().map(|p| p.p_e).collect();
    // Slow thermal relaxation only: a beat at δ would bend the curve by
    // ~0.3 per μs².
    for w in p.windows(3) {
        assert!((w[0] - 2.0 * w[1] + w[2]).abs() < 1e-4, "{p:?}");
    }
}
