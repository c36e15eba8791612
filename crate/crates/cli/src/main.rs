//! `prss`: runs phase-rotated symbol spreading experiments and writes CSV,
//! optional SVG plots and a replayable TOML manifest.

mod config;
mod svg;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use prss::detect::DEFAULT_SEARCH_BUDGET;
use prss::montecarlo::{
    run_ber_sweep, run_phi_sweep, run_rsr_sweep, Detector, ExperimentConfig, NoiseAxis, Scheme, SweepRecord,
};
use prss::reconstruct::SINGULAR_SIN_TOL;
use prss::{predicted_mse, predicted_trace};

use config::{default_phi_grid, load_section, parse_list, parse_names, Settings};

#[derive(Parser)]
#[command(name = "prss", version, about = "Rydberg-atomic MIMO experiments with phase-rotated symbol spreading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective noise variance against the phase offset.
    PhiSweep(Flags),
    /// Effective noise variance against the reference-to-signal ratio.
    RsrSweep(Flags),
    /// Bit error rate against SNR for every scheme/detector pair.
    Ber(Flags),
    /// Analytic trace and MSE curves against the phase offset.
    TraceCurve(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// TOML config; keys are read from the table named after the command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results never depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Trials per point (the cap for BER points).
    #[arg(long)]
    trials: Option<u64>,
    /// Bit errors after which a BER point stops.
    #[arg(long)]
    target_errors: Option<u64>,
    /// SNR values in dB, e.g. `0:2:20` or `4,8,12`.
    #[arg(long, allow_hyphen_values = true)]
    snr_db_list: Option<String>,
    /// Noise variances; overrides --snr-db-list.
    #[arg(long)]
    sigma_v_sq: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rsr_db: Option<String>,
    /// Phase offsets in radians; accepts `pi` terms such as `-pi/2`.
    #[arg(long, allow_hyphen_values = true)]
    phi_grid: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    qam: Option<usize>,
    /// Comma list of prss, single_shot, rf_baseline.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma list of ml, zf.
    #[arg(long)]
    detector: Option<String>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PhiSweep(f) => cmd_phi_sweep(f),
        Command::RsrSweep(f) => cmd_rsr_sweep(f),
        Command::Ber(f) => cmd_ber(f),
        Command::TraceCurve(f) => cmd_trace_curve(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn flag_settings(f: &Flags) -> Outcome<Settings> {
    let list = |s: &Option<String>, name: &str| -> Outcome<Option<Vec<f64>>> {
        s.as_deref().map(parse_list).transpose().map_err(|e| usage(format!("--{name}: {e}")))
    };
    let names = |s: &Option<String>, name: &str| -> Outcome<Option<Vec<String>>> {
        s.as_deref().map(parse_names).transpose().map_err(|e| usage(format!("--{name}: {e}")))
    };
    Ok(Settings {
        seed: f.seed,
        threads: f.threads,
        trials: f.trials,
        target_errors: f.target_errors,
        m: f.m,
        n: f.n,
        qam: f.qam,
        rsr_db: list(&f.rsr_db, "rsr-db")?,
        snr_db_list: list(&f.snr_db_list, "snr-db-list")?,
        sigma_v_sq: list(&f.sigma_v_sq, "sigma-v-sq")?,
        phi_grid: list(&f.phi_grid, "phi-grid")?,
        scheme: names(&f.scheme, "scheme")?,
        detector: names(&f.detector, "detector")?,
        svg: f.svg.then_some(true),
    })
}

fn available_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn defaults(section: &str) -> Settings {
    let common = Settings {
        seed: Some(1),
        threads: Some(available_threads()),
        svg: Some(false),
        ..Default::default()
    };
    let specific = match section {
        "phi_sweep" => Settings {
            trials: Some(10_000),
            m: Some(16),
            n: Some(1),
            rsr_db: Some(vec![30.0]),
            sigma_v_sq: Some(vec![0.01]),
            phi_grid: Some(default_phi_grid()),
            ..Default::default()
        },
        "rsr_sweep" => Settings {
            trials: Some(10_000),
            m: Some(16),
            n: Some(1),
            rsr_db: Some(parse_list("15:2.5:45").expect("static range")),
            sigma_v_sq: Some(vec![0.1, 0.01, 0.001]),
            ..Default::default()
        },
        "ber" => Settings {
            trials: Some(100_000),
            target_errors: Some(prss::montecarlo::DEFAULT_TARGET_ERRORS),
            m: Some(8),
            n: Some(4),
            rsr_db: Some(vec![26.0]),
            snr_db_list: Some(parse_list("0:2:20").expect("static range")),
            scheme: Some(Scheme::ALL.iter().map(|s| s.name().to_string()).collect()),
            detector: Some(vec!["ml".into()]),
            ..Default::default()
        },
        "trace_curve" => Settings {
            sigma_v_sq: Some(vec![1.0]),
            phi_grid: Some(default_phi_grid()),
            ..Default::default()
        },
        _ => unreachable!("unknown section"),
    };
    specific.over(common)
}

fn resolve(f: &Flags, section: &str) -> Outcome<Settings> {
    let flags = flag_settings(f)?;
    let file = match &f.config {
        Some(p) => load_section(p, section).map_err(usage)?,
        None => Settings::default(),
    };
    let mut s = flags.over(file).over(defaults(section));
    if s.threads == Some(0) {
        s.threads = Some(available_threads());
    }
    Ok(s)
}

/// Variance studies take σ_v² when given, else SNR; BER studies the reverse.
fn noise_axis(s: &Settings, prefer_snr: bool) -> Outcome<NoiseAxis> {
    let snr = s.snr_db_list.clone().map(NoiseAxis::SnrDb);
    let var = s.sigma_v_sq.clone().map(NoiseAxis::SigmaVSq);
    let axis = if prefer_snr { snr.or(var) } else { var.or(snr) };
    axis.ok_or_else(|| usage("no noise levels given"))
}

fn base_config(s: &Settings, noise: NoiseAxis) -> ExperimentConfig {
    ExperimentConfig {
        m: s.m.unwrap_or(1),
        n: s.n.unwrap_or(1),
        rsr_db: s.rsr_db.clone().unwrap_or_default(),
        noise,
        phi: s.phi_grid.clone().unwrap_or_else(|| vec![PI / 2.0]),
        scheme: Scheme::Prss,
        detector: Detector::Ml,
        qam: s.qam,
        max_trials: s.trials.unwrap_or(1),
        target_errors: s.target_errors,
        master_seed: s.seed.unwrap_or(1),
        threads: s.threads.unwrap_or(0),
    }
}

/// Splits off offsets with sin φ ≈ 0, warning for each.
fn drop_singular(phis: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (bad, good): (Vec<f64>, Vec<f64>) = phis.iter().partition(|p| p.sin().abs() < SINGULAR_SIN_TOL);
    for p in &bad {
        eprintln!("warning: skipping singular phase offset phi = {p} (sin(phi) = 0)");
    }
    (good, bad)
}

struct Output {
    section: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
    plot: Option<String>,
    skipped_phi: Vec<f64>,
}

fn write_outputs(f: &Flags, command: &str, settings: &Settings, out: Output) -> Outcome<()> {
    std::fs::create_dir_all(&f.out).map_err(|e| runtime(format!("creating {}: {e}", f.out.display())))?;
    let stem = out.section;
    let csv_path = f.out.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path).map_err(runtime)?;
    w.write_record(out.header).map_err(runtime)?;
    for row in &out.rows {
        w.write_record(row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    let mut outputs = vec![csv_path.clone()];
    if settings.svg == Some(true) {
        if let Some(svg) = &out.plot {
            let p = f.out.join(format!("{stem}.svg"));
            std::fs::write(&p, svg).map_err(|e| runtime(format!("writing {}: {e}", p.display())))?;
            outputs.push(p);
        }
    }
    let manifest_path = f.out.join(format!("{stem}.manifest.toml"));
    write_manifest(&manifest_path, command, stem, settings, &outputs, &out.skipped_phi)?;
    for p in outputs.iter().chain([&manifest_path]) {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn write_manifest(
    path: &Path,
    command: &str,
    section: &str,
    settings: &Settings,
    outputs: &[PathBuf],
    skipped_phi: &[f64],
) -> Outcome<()> {
    let mut run = toml::Table::new();
    run.insert("command".into(), command.into());
    run.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    run.insert("timestamp_unix".into(), toml::Value::Integer(ts as i64));
    run.insert(
        "outputs".into(),
        toml::Value::Array(outputs.iter().map(|p| p.display().to_string().into()).collect()),
    );
    if !skipped_phi.is_empty() {
        run.insert("skipped_phi".into(), toml::Value::Array(skipped_phi.iter().map(|&p| p.into()).collect()));
    }
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    doc.insert(section.into(), toml::Value::try_from(settings).map_err(runtime)?);
    let text = toml::to_string(&doc).map_err(runtime)?;
    std::fs::write(path, text).map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn variance_records(cfg: &ExperimentConfig, phi: bool) -> Outcome<Vec<SweepRecord>> {
    cfg.validate().map_err(usage)?;
    let r = if phi { run_phi_sweep(cfg) } else { run_rsr_sweep(cfg) };
    r.map_err(runtime)
}

fn cmd_phi_sweep(f: Flags) -> Outcome<()> {
    let s = resolve(&f, "phi_sweep")?;
    let mut cfg = base_config(&s, noise_axis(&s, false)?);
    let (phis, skipped) = drop_singular(&cfg.phi);
    if phis.is_empty() {
        return Err(usage("no usable phase offsets left in --phi-grid"));
    }
    cfg.phi = phis;
    cfg.rsr_db.truncate(1);
    let records = variance_records(&cfg, true)?;
    let rows = records
        .iter()
        .map(|r| {
            let samples = match r.measurement {
                prss::montecarlo::Measurement::NoiseVariance { receiver_samples, .. } => receiver_samples,
                _ => 0,
            };
            vec![
                num(r.phi),
                num(r.sigma_ve_sq().unwrap_or(f64::NAN)),
                num(r.sigma_v_sq),
                num(r.rsr_db),
                samples.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect();
    let mut series = Vec::new();
    for (_, sigma) in cfg.noise.levels() {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.sigma_v_sq == sigma)
            .map(|r| (r.phi, r.sigma_ve_sq().unwrap_or(f64::NAN)))
            .collect();
        let pred = pts.iter().filter_map(|&(p, _)| predicted_mse(p, sigma).ok().map(|v| (p, v))).collect();
        series.push(svg::Series { label: format!("simulated {sigma}"), points: pts, dashed: false });
        series.push(svg::Series { label: format!("analytic {sigma}"), points: pred, dashed: true });
    }
    let plot = svg::line_plot(
        &format!("Effective noise variance, RSR = {} dB", cfg.rsr_db[0]),
        "phi (rad)",
        "effective noise variance",
        &series,
        true,
    );
    let out = Output {
        section: "phi_sweep",
        header: &["phi_rad", "sigma_ve_sq", "sigma_v_sq", "rsr_db", "samples", "seed"],
        rows,
        plot: Some(plot),
        skipped_phi: skipped,
    };
    write_outputs(&f, "phi-sweep", &s, out)
}

fn cmd_rsr_sweep(f: Flags) -> Outcome<()> {
    let s = resolve(&f, "rsr_sweep")?;
    let cfg = base_config(&s, noise_axis(&s, false)?);
    let records = variance_records(&cfg, false)?;
    let rows = records
        .iter()
        .map(|r| {
            let samples = match r.measurement {
                prss::montecarlo::Measurement::NoiseVariance { receiver_samples, .. } => receiver_samples,
                _ => 0,
            };
            vec![
                num(r.rsr_db),
                num(r.sigma_v_sq),
                num(r.sigma_ve_sq().unwrap_or(f64::NAN)),
                samples.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect();
    let mut series = Vec::new();
    for (_, sigma) in cfg.noise.levels() {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.sigma_v_sq == sigma)
            .map(|r| (r.rsr_db, r.sigma_ve_sq().unwrap_or(f64::NAN)))
            .collect();
        let flat = pts.iter().map(|&(x, _)| (x, sigma)).collect();
        series.push(svg::Series { label: format!("simulated {sigma}"), points: pts, dashed: false });
        series.push(svg::Series { label: format!("noise {sigma}"), points: flat, dashed: true });
    }
    let plot = svg::line_plot("Effective noise variance against RSR", "RSR (dB)", "effective noise variance", &series, true);
    let out = Output {
        section: "rsr_sweep",
        header: &["rsr_db", "sigma_v_sq", "sigma_ve_sq", "samples", "seed"],
        rows,
        plot: Some(plot),
        skipped_phi: Vec::new(),
    };
    write_outputs(&f, "rsr-sweep", &s, out)
}

fn cmd_ber(f: Flags) -> Outcome<()> {
    let s = resolve(&f, "ber")?;
    let base = base_config(&s, noise_axis(&s, true)?);
    let schemes = s
        .scheme
        .iter()
        .flatten()
        .map(|n| Scheme::parse(n).map_err(usage))
        .collect::<Outcome<Vec<_>>>()?;
    let detectors = s
        .detector
        .iter()
        .flatten()
        .map(|n| Detector::parse(n).map_err(usage))
        .collect::<Outcome<Vec<_>>>()?;
    let mut configs = Vec::new();
    for &scheme in &schemes {
        for &detector in &detectors {
            if scheme == Scheme::SingleShot && detector == Detector::Zf {
                eprintln!("warning: skipping single_shot with zf (no linear model)");
                continue;
            }
            let cfg = ExperimentConfig { scheme, detector, ..base.clone() };
            cfg.validate().map_err(usage)?;
            if detector == Detector::Ml || scheme == Scheme::SingleShot {
                let candidates = (cfg.qam_order() as f64).powi(cfg.n as i32);
                if candidates > DEFAULT_SEARCH_BUDGET as f64 {
                    return Err(usage(format!(
                        "{} ML over {} users of {}-QAM needs {candidates:e} candidates (limit {DEFAULT_SEARCH_BUDGET})",
                        scheme.name(),
                        cfg.n,
                        cfg.qam_order()
                    )));
                }
            }
            configs.push(cfg);
        }
    }
    if configs.is_empty() {
        return Err(usage("no valid scheme/detector combination"));
    }
    let mut records = Vec::new();
    for cfg in &configs {
        records.extend(run_ber_sweep(cfg).map_err(runtime)?);
    }
    let rows = records
        .iter()
        .map(|r| {
            let b = r.ber().expect("BER sweep");
            vec![
                r.scheme.name().to_string(),
                r.detector.name().to_string(),
                num(r.snr_db),
                num(r.rsr_db),
                r.m.to_string(),
                r.n.to_string(),
                r.qam.to_string(),
                b.bit_errors.to_string(),
                b.bits_total.to_string(),
                num(b.ber),
                num(b.half_width_95),
                r.seed.to_string(),
            ]
        })
        .collect();
    let mut series = Vec::new();
    for cfg in &configs {
        for &rsr in &cfg.rsr_db {
            let pts = records
                .iter()
                .filter(|r| r.scheme == cfg.scheme && r.detector == cfg.detector && r.rsr_db == rsr)
                .map(|r| (r.snr_db, r.ber().map_or(f64::NAN, |b| b.ber)))
                .collect();
            let label = format!("{} {} {rsr} dB", cfg.scheme.name(), cfg.detector.name());
            series.push(svg::Series { label, points: pts, dashed: cfg.scheme == Scheme::RfBaseline });
        }
    }
    let plot = svg::line_plot(&format!("BER, {}x{}", base.m, base.n), "SNR (dB)", "BER", &series, true);
    let out = Output {
        section: "ber",
        header: &[
            "scheme", "detector", "snr_db", "rsr_db", "M", "N", "qam", "bit_errors", "bits_total", "ber", "ci95", "seed",
        ],
        rows,
        plot: Some(plot),
        skipped_phi: Vec::new(),
    };
    write_outputs(&f, "ber", &s, out)
}

fn cmd_trace_curve(f: Flags) -> Outcome<()> {
    let s = resolve(&f, "trace_curve")?;
    let sigmas = s.sigma_v_sq.clone().unwrap_or_default();
    if sigmas.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(usage("--sigma-v-sq values must be finite and >= 0"));
    }
    let (phis, skipped) = drop_singular(s.phi_grid.as_deref().unwrap_or_default());
    if phis.is_empty() {
        return Err(usage("no usable phase offsets left in --phi-grid"));
    }
    let mut rows = Vec::new();
    let mut series = vec![svg::Series { label: "trace".into(), points: Vec::new(), dashed: false }];
    for &sigma in &sigmas {
        let mut pts = Vec::new();
        for &phi in &phis {
            let trace = predicted_trace(phi, 1.0).map_err(runtime)?;
            let mse = predicted_mse(phi, sigma).map_err(runtime)?;
            rows.push(vec![num(phi), num(trace), num(mse), num(sigma)]);
            pts.push((phi, mse));
            if sigma == sigmas[0] {
                series[0].points.push((phi, trace));
            }
        }
        series.push(svg::Series { label: format!("mse {sigma}"), points: pts, dashed: true });
    }
    let plot = svg::line_plot("Predicted reconstruction error", "phi (rad)", "value", &series, true);
    let out = Output {
        section: "trace_curve",
        header: &["phi_rad", "predicted_trace", "predicted_mse", "sigma_v_sq"],
        rows,
        plot: Some(plot),
        skipped_phi: skipped,
    };
    write_outputs(&f, "trace-curve", &s, out)
}
