use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn prss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prss")).args(args).output().expect("spawn prss")
}

fn run_ok(args: &[&str]) {
    let o = prss(args);
    assert!(o.status.success(), "prss {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const SMALL_BER: &[&str] = &[
    "ber", "--m", "2", "--n", "2", "--snr-db-list", "0:5:10", "--trials", "640", "--target-errors", "50",
];

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_ok(&["phi-sweep", "--out", d, "--trials", "64", "--phi-grid", "pi/2"]);
    run_ok(&["rsr-sweep", "--out", d, "--trials", "64", "--rsr-db", "20,30"]);
    run_ok(&[SMALL_BER, &["--out", d]].concat());
    run_ok(&["trace-curve", "--out", d]);
    let golden = [
        ("phi_sweep.csv", "phi_rad,sigma_ve_sq,sigma_v_sq,rsr_db,samples,seed"),
        ("rsr_sweep.csv", "rsr_db,sigma_v_sq,sigma_ve_sq,samples,seed"),
        ("ber.csv", "scheme,detector,snr_db,rsr_db,M,N,qam,bit_errors,bits_total,ber,ci95,seed"),
        ("trace_curve.csv", "phi_rad,predicted_trace,predicted_mse,sigma_v_sq"),
    ];
    for (file, header) in golden {
        let text = read(&dir.path().join(file));
        assert_eq!(text.lines().next(), Some(header), "{file}");
        assert!(dir.path().join(file.replace(".csv", ".manifest.toml")).exists());
    }
}

#[test]
fn manifest_replay_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (da, db) = (a.path().to_str().unwrap(), b.path().to_str().unwrap());
    run_ok(&[SMALL_BER, &["--out", da, "--seed", "7"]].concat());
    let manifest = a.path().join("ber.manifest.toml");
    run_ok(&["ber", "--config", manifest.to_str().unwrap(), "--out", db]);
    assert_eq!(read(&a.path().join("ber.csv")), read(&b.path().join("ber.csv")));

    run_ok(&["rsr-sweep", "--out", da, "--trials", "200", "--rsr-db", "15:15:45"]);
    let manifest = a.path().join("rsr_sweep.manifest.toml");
    run_ok(&["rsr-sweep", "--config", manifest.to_str().unwrap(), "--out", db]);
    assert_eq!(read(&a.path().join("rsr_sweep.csv")), read(&b.path().join("rsr_sweep.csv")));
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_ok(&[SMALL_BER, &["--out", a.path().to_str().unwrap(), "--threads", "1"]].concat());
    run_ok(&[SMALL_BER, &["--out", b.path().to_str().unwrap(), "--threads", "8"]].concat());
    assert_eq!(read(&a.path().join("ber.csv")), read(&b.path().join("ber.csv")));
}

#[test]
fn ber_runs_every_scheme_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[SMALL_BER, &["--out", dir.path().to_str().unwrap()]].concat());
    let r = rows(&read(&dir.path().join("ber.csv")));
    assert_eq!(r.len(), 9);
    for row in &r {
        let errors: u64 = row[7].parse().unwrap();
        let bits: u64 = row[8].parse().unwrap();
        let ber: f64 = row[9].parse().unwrap();
        assert!((ber - errors as f64 / bits as f64).abs() < 1e-15);
        let qam: usize = row[6].parse().unwrap();
        assert_eq!(qam, if row[0] == "prss" { 16 } else { 4 });
    }
    let schemes: Vec<&str> = r.iter().map(|x| x[0].as_str()).collect();
    assert!(schemes.contains(&"single_shot") && schemes.contains(&"rf_baseline"));
}

#[test]
fn phi_sweep_minimum_sits_at_quarter_turn() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_ok(&["phi-sweep", "--out", d, "--trials", "1000", "--phi-grid", "-35pi/36:pi/12:35pi/36"]);
    let r = rows(&read(&dir.path().join("phi_sweep.csv")));
    let best = r
        .iter()
        .min_by(|x, y| x[1].parse::<f64>().unwrap().total_cmp(&y[1].parse().unwrap()))
        .unwrap();
    let phi: f64 = best[0].parse().unwrap();
    assert!((phi.abs() - PI / 2.0).abs() <= PI / 12.0 + 1e-9, "min at {phi}");

    run_ok(&["phi-sweep", "--out", d, "--trials", "1000", "--rsr-db", "45", "--phi-grid", "pi/2,-pi/2"]);
    for row in rows(&read(&dir.path().join("phi_sweep.csv"))) {
        let ratio = row[1].parse::<f64>().unwrap() / row[2].parse::<f64>().unwrap();
        assert!(ratio <= 1.05, "ratio {ratio}");
    }
}

#[test]
fn singular_offsets_are_skipped_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = prss(&["phi-sweep", "--out", dir.path().to_str().unwrap(), "--trials", "64", "--phi-grid", "0,pi/2,pi"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: skipping singular"));
    assert_eq!(rows(&read(&dir.path().join("phi_sweep.csv"))).len(), 1);
    let manifest: toml::Table = toml::from_str(&read(&dir.path().join("phi_sweep.manifest.toml"))).unwrap();
    let skipped = manifest["run"]["skipped_phi"].as_array().unwrap();
    assert_eq!(skipped.len(), 2);
}

#[test]
fn trace_curve_values() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["trace-curve", "--out", dir.path().to_str().unwrap(), "--phi-grid", "pi/2,pi/4,0", "--sigma-v-sq", "0.5"]);
    let r = rows(&read(&dir.path().join("trace_curve.csv")));
    assert_eq!(r.len(), 2);
    let t: Vec<f64> = r.iter().map(|x| x[1].parse().unwrap()).collect();
    let mse: Vec<f64> = r.iter().map(|x| x[2].parse().unwrap()).collect();
    assert!((t[0] - 2.0).abs() < 1e-12 && (t[1] - 4.0).abs() < 1e-12);
    assert!((mse[0] - 0.5).abs() < 1e-12 && (mse[1] - 1.0).abs() < 1e-12);
}

#[test]
fn flags_override_config_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[rsr_sweep]\ntrials = 100\nseed = 5\nrsr_db = [20.0]\n").unwrap();
    run_ok(&["rsr-sweep", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", dir.path().to_str().unwrap()]);
    let m: toml::Table = toml::from_str(&read(&dir.path().join("rsr_sweep.manifest.toml"))).unwrap();
    let s = &m["rsr_sweep"];
    assert_eq!(s["trials"].as_integer(), Some(100));
    assert_eq!(s["seed"].as_integer(), Some(9));
    assert_eq!(s["m"].as_integer(), Some(16));
    assert_eq!(s["sigma_v_sq"].as_array().unwrap().len(), 3);
    assert_eq!(rows(&read(&dir.path().join("rsr_sweep.csv"))).len(), 3);
}

#[test]
fn svg_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    run_ok(&["trace-curve", "--out", d]);
    assert!(!dir.path().join("trace_curve.svg").exists());
    run_ok(&["trace-curve", "--out", d, "--svg"]);
    assert!(read(&dir.path().join("trace_curve.svg")).starts_with("<svg"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let code = |args: &[&str]| prss(args).status.code();
    assert_eq!(code(&["rsr-sweep", "--out", d, "--rsr-db", ""]), Some(2));
    assert_eq!(code(&["ber", "--out", d, "--scheme", "qpsk"]), Some(2));
    assert_eq!(code(&["ber", "--out", d, "--bogus"]), Some(2));
    assert_eq!(code(&["ber", "--out", d, "--m", "128", "--n", "64"]), Some(2));
    assert_eq!(code(&["phi-sweep", "--out", d, "--phi-grid", "0"]), Some(2));
    assert_eq!(code(&["phi-sweep", "--out", d, "--config", "/nonexistent/cfg.toml"]), Some(2));
    let file = dir.path().join("not_a_dir");
    std::fs::write(&file, "x").unwrap();
    assert_eq!(code(&["trace-curve", "--out", file.to_str().unwrap()]), Some(1));
}
