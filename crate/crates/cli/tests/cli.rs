use std::path::Path;
use std::process::{Command, Output};

use cocolab::export::write_sweep_csv;
use cocolab::sweep::geometric_gaps;
use cocolab::SweepRecord;

fn cocolab(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("experiment.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cocolab"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FAST: &str = "[numerics]\ngrid = 1024\nnorm_steps = 20000\n";

#[test]
fn malformed_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = cocolab(dir.path(), "[numerics]\nbundle_tolerance = 1e-9\n", &["le", "--t", "-3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bundle_tolerance"), "{}", stderr(&o));

    let o = cocolab(dir.path(), "[sweep]\ncount = 2\n", &["sweep"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep.count"));
}

#[test]
fn free_le_matches_closed_form_by_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = cocolab(dir.path(), FAST, &["le", "--t", "-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let norm = v["norm_growth"]["value"].as_f64().unwrap();
    let bundle = v["bundle"]["L"].as_f64().unwrap();
    assert!((norm - exact).abs() < 1e-6 && (bundle - exact).abs() < 1e-9, "{norm} {bundle}");
    assert_eq!(v["agree"], true);
    assert!((v["bundle"]["dLdt"].as_f64().unwrap() + 1.0 / 5f64.sqrt()).abs() < 1e-8);
}

#[test]
fn elliptic_energy_exits_two_with_norm_growth_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = cocolab(dir.path(), FAST, &["le", "--t", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["norm_growth"]["value"].as_f64().unwrap() < 1e-2);
    assert!(v["bundle"].is_null());
    assert!(v["bundle_error"].as_str().unwrap().contains("did not converge"));
}

#[test]
fn cache_hit_skips_kernel_work_and_returns_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = cocolab(dir.path(), FAST, &["le", "--t", "-2.5"]);
    assert!(!stderr(&first).contains("kernel_evaluations=0"));
    let second = cocolab(dir.path(), FAST, &["le", "--t", "-2.5"]);
    assert!(stderr(&second).contains("kernel_evaluations=0"), "{}", stderr(&second));
    assert_eq!(stdout(&first), stdout(&second));
    let fresh = cocolab(dir.path(), FAST, &["--no-cache", "le", "--t", "-2.5"]);
    assert!(!stderr(&fresh).contains("kernel_evaluations=0"));
    assert_eq!(stdout(&first), stdout(&fresh));
}

#[test]
fn bundle_csv_is_deterministic() {
    let config = "[family]\npotential = \"peaked\"\ncoupling = 30.0\n[numerics]\ngrid = 512\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = cocolab(a.path(), config, &["--jobs", "1", "bundles", "--t", "-2.2"]);
    let ob = cocolab(b.path(), config, &["--jobs", "3", "bundles", "--t", "-2.2"]);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    let read = |o: &Output| std::fs::read(stdout(o).trim()).unwrap();
    let (ca, cb) = (read(&oa), read(&ob));
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("theta,r_u,r_s,d\n"));
    assert_eq!(text.lines().count(), 513);
    let digits = text.lines().nth(7).unwrap().split(',').nth(1).unwrap();
    let mantissa = digits.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn free_edge_lands_on_minus_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cocolab(dir.path(), "[numerics]\nbisection_tol = 1e-9\n", &["edge"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = stdout(&o).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!((v["t0"].as_f64().unwrap() + 2.0).abs() < 1e-8, "{}", v["t0"]);
    assert!(v["certificates"].as_array().unwrap().len() > 10);
}

#[test]
fn verify_on_constant_cocycle_reports_violation_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = cocolab(dir.path(), FAST, &["verify", "--t", "-3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("violation Growth"), "{}", stdout(&o));
    assert!(std::fs::read_to_string(stdout(&o).lines().last().unwrap()).unwrap().contains("\"violations\""));
}

#[test]
fn fit_reads_a_sweep_file() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<SweepRecord> = geometric_gaps(1e-2, 2.0, 10)
        .into_iter()
        .map(|g| SweepRecord {
            t: -2.0 - g,
            gap: g,
            d_min: 2.0 * g.sqrt(),
            theta_c: 0.0,
            l: g.sqrt(),
            dldt_bundle: -0.5 / g.sqrt(),
            dldt_fd: -0.5 / g.sqrt(),
            err_l: 1e-12,
            err_dldt: 1e-12,
            err_fd: 0.0,
            iterations: 1,
            multiple_minima: false,
            status: "ok".into(),
        })
        .collect();
    let csv = dir.path().join("sweep.csv");
    write_sweep_csv(std::fs::File::create(&csv).unwrap(), &records).unwrap();
    let o = cocolab(dir.path(), "", &["fit", "--input", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("d_min exponent 0.5000"), "{}", stdout(&o));
    assert!(stdout(&o).contains("K2/K1 1.0000"));
}
