//! Seeded Monte Carlo engine for effective-noise and BER studies.
//!
//! Trials are grouped in fixed-size batches. Each batch runs in parallel,
//! results are folded in trial order, and stopping rules are only checked
//! between batches, so the worker count never changes a result.
//!
//! Every sweep point gets its own seed derived from the master seed and the
//! point's coordinates (M, N, RSR, SNR, φ), not from the scheme. Schemes
//! compared at the same point therefore see the same channel, reference and
//! noise draws for the same trial index.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channel, draw_noise, draw_reference, NoiseSpec};
use crate::constellation::{demap, make_qam, modulate, Constellation};
use crate::detect::{ml_linear, ml_single_shot, zf_linear, DetectionResult};
use crate::error::{invalid, Error, Result};
use crate::frontend::{apply_channel, observe_prss, observe_single};
use crate::reconstruct::{reconstruct_general, reconstruct_optimal, NoiseVarianceAccumulator, OffsetSign, SINGULAR_SIN_TOL};
use crate::rng::{splitmix64, trial_rng, Stream};

/// Trials per batch; stopping rules are evaluated on batch boundaries.
pub const BATCH_TRIALS: u64 = 64;

/// Default bit-error target per BER point.
pub const DEFAULT_TARGET_ERRORS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Two magnitude slots, second rotated by φ, then linear reconstruction.
    Prss,
    /// One magnitude slot, searched directly.
    SingleShot,
    /// Coherent receiver observing `Hx + v`.
    RfBaseline,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Prss, Scheme::SingleShot, Scheme::RfBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Prss => "prss",
            Scheme::SingleShot => "single_shot",
            Scheme::RfBaseline => "rf_baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme '{s}'")))
    }

    /// Slots spent per symbol vector.
    pub fn slots(self) -> usize {
        match self {
            Scheme::Prss => 2,
            _ => 1,
        }
    }

    /// QAM order giving every scheme the same bits per user per slot.
    pub fn rate_matched_qam(self) -> usize {
        match self {
            Scheme::Prss => 16,
            _ => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Ml,
    Zf,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Ml => "ml",
            Detector::Zf => "zf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Detector::Ml),
            "zf" => Ok(Detector::Zf),
            _ => invalid(format!("unknown detector '{s}'")),
        }
    }
}

/// Transmitted energy per information bit, summed over all slots.
pub fn energy_per_bit(scheme: Scheme, c: &Constellation) -> f64 {
    let symbol_energy = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.order() as f64;
    scheme.slots() as f64 * symbol_energy / c.bits_per_symbol() as f64
}

/// Noise variance at a given SNR; received signal power per receiver is 1.
pub fn sigma_v_sq_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn snr_db_from_sigma_v_sq(sigma_v_sq: f64) -> f64 {
    -10.0 * sigma_v_sq.log10()
}

/// Noise levels of a sweep, given either as SNR in dB or as raw variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseAxis {
    /// `SNR_dB = −10·log10(σ_v²)`.
    SnrDb(Vec<f64>),
    SigmaVSq(Vec<f64>),
}

impl NoiseAxis {
    /// `(snr_db, sigma_v_sq)` pairs; the given coordinate is kept verbatim.
    pub fn levels(&self) -> Vec<(f64, f64)> {
        match self {
            NoiseAxis::SnrDb(v) => v.iter().map(|&s| (s, sigma_v_sq_from_snr_db(s))).collect(),
            NoiseAxis::SigmaVSq(v) => v.iter().map(|&s| (snr_db_from_sigma_v_sq(s), s)).collect(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            NoiseAxis::SnrDb(v) | NoiseAxis::SigmaVSq(v) => v,
        }
    }
}

/// A full experiment: one scheme/detector pair over a grid of RSR × noise × φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub rsr_db: Vec<f64>,
    pub noise: NoiseAxis,
    pub phi: Vec<f64>,
    pub scheme: Scheme,
    pub detector: Detector,
    /// QAM order; `None` picks the rate-matched order of the scheme.
    pub qam: Option<usize>,
    /// Trial cap per point (exact trial count for variance studies).
    pub max_trials: u64,
    /// Stop a BER point once this many bit errors are seen.
    pub target_errors: Option<u64>,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core. Never affects results.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 8,
            n: 4,
            rsr_db: vec![26.0],
            noise: NoiseAxis::SnrDb(vec![10.0]),
            phi: vec![FRAC_PI_2],
            scheme: Scheme::Prss,
            detector: Detector::Ml,
            qam: None,
            max_trials: 100_000,
            target_errors: Some(DEFAULT_TARGET_ERRORS),
            master_seed: 1,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn qam_order(&self) -> usize {
        self.qam.unwrap_or_else(|| self.scheme.rate_matched_qam())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return invalid(format!("dimensions must be positive, got {}x{}", self.m, self.n));
        }
        if self.rsr_db.is_empty() || self.noise.values().is_empty() || self.phi.is_empty() {
            return invalid("sweep lists must be non-empty");
        }
        if self.max_trials == 0 {
            return invalid("at least one trial is required");
        }
        if self.target_errors == Some(0) {
            return invalid("target error count must be positive");
        }
        if self.rsr_db.iter().chain(self.noise.values()).chain(&self.phi).any(|v| !v.is_finite()) {
            return invalid("sweep values must be finite");
        }
        if let NoiseAxis::SigmaVSq(v) = &self.noise {
            if v.iter().any(|&s| s < 0.0) {
                return invalid("noise variances must be >= 0");
            }
        }
        if self.scheme == Scheme::SingleShot && self.detector == Detector::Zf {
            return invalid("the single-shot scheme has no linear model for ZF");
        }
        if self.detector == Detector::Zf && self.n > self.m {
            return invalid(format!("ZF needs M >= N, got {}x{}", self.m, self.n));
        }
        make_qam(self.qam_order())?;
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
    }
}

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSpec {
    pub m: usize,
    pub n: usize,
    pub rsr_db: f64,
    pub sigma_v_sq: f64,
    pub phi: f64,
    pub scheme: Scheme,
    pub detector: Detector,
    pub constellation: Constellation,
    pub seed: u64,
}

/// Seed of the point with the given coordinates.
pub fn point_seed(master_seed: u64, m: usize, n: usize, rsr_db: f64, sigma_v_sq: f64, phi: f64) -> u64 {
    [m as u64, n as u64, rsr_db.to_bits(), sigma_v_sq.to_bits(), phi.to_bits()]
        .into_iter()
        .fold(splitmix64(master_seed), |acc, v| splitmix64(acc ^ v))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
}

/// Reconstruction and ground truth of one variance trial.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSample {
    pub s_hat: Vec<Complex64>,
    pub s_true: Vec<Complex64>,
}

fn quarter_turn(phi: f64) -> Option<OffsetSign> {
    if phi == FRAC_PI_2 {
        Some(OffsetSign::Positive)
    } else if phi == -FRAC_PI_2 {
        Some(OffsetSign::Negative)
    } else {
        None
    }
}

impl PointSpec {
    pub fn new(cfg: &ExperimentConfig, rsr_db: f64, sigma_v_sq: f64, phi: f64) -> Result<Self> {
        Ok(Self {
            m: cfg.m,
            n: cfg.n,
            rsr_db,
            sigma_v_sq,
            phi,
            scheme: cfg.scheme,
            detector: cfg.detector,
            constellation: make_qam(cfg.qam_order())?,
            seed: point_seed(cfg.master_seed, cfg.m, cfg.n, rsr_db, sigma_v_sq, phi),
        })
    }

    fn draw_symbols(&self, trial_index: u64) -> Result<(Vec<u8>, Vec<Complex64>)> {
        let mut rng = trial_rng(self.seed, trial_index, Stream::Bits);
        let bits: Vec<u8> = (0..self.n * self.constellation.bits_per_symbol())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        let x = modulate(&bits, &self.constellation)?;
        Ok((bits, x))
    }

    fn reconstruct(&self, z: &crate::frontend::DualSlotObservation, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let rec = match quarter_turn(self.phi) {
            Some(sign) => reconstruct_optimal(z, r, sign)?,
            None => reconstruct_general(z, r, self.phi)?,
        };
        Ok(rec.s_hat)
    }

    fn detect(&self, s_hat: &[Complex64], h: &crate::channel::CMatrix) -> Result<DetectionResult> {
        match self.detector {
            Detector::Ml => ml_linear(s_hat, h, &self.constellation),
            Detector::Zf => zf_linear(s_hat, h, &self.constellation),
        }
    }

    /// Runs one complete link: bits, channel, observation, detection, bit count.
    pub fn run_trial(&self, trial_index: u64) -> Result<TrialOutcome> {
        let (bits, x) = self.draw_symbols(trial_index)?;
        let h = draw_channel(self.m, self.n, &mut trial_rng(self.seed, trial_index, Stream::Channel))?.h;
        let r = draw_reference(self.m, self.n, self.rsr_db, &mut trial_rng(self.seed, trial_index, Stream::Reference))?.r;
        let noise = NoiseSpec::new(self.sigma_v_sq)?;
        let v1 = draw_noise(self.m, noise, &mut trial_rng(self.seed, trial_index, Stream::Noise1))?;

        let detected = match self.scheme {
            Scheme::Prss => {
                let v2 = draw_noise(self.m, noise, &mut trial_rng(self.seed, trial_index, Stream::Noise2))?;
                let z = observe_prss(&h, &x, &r, &v1, &v2, self.phi)?;
                let s_hat = self.reconstruct(&z, &r)?;
                self.detect(&s_hat, &h)?
            }
            Scheme::SingleShot => {
                if self.detector != Detector::Ml {
                    return invalid("the single-shot scheme supports ML detection only");
                }
                let z = observe_single(&h, &x, &r, &v1)?;
                ml_single_shot(&z, &h, &r, &self.constellation)?
            }
            Scheme::RfBaseline => {
                let mut y = apply_channel(&h, &x)?;
                y.iter_mut().zip(&v1).for_each(|(a, b)| *a += b);
                self.detect(&y, &h)?
            }
        };
        let decided = demap(&detected.x_hat, &self.constellation)?;
        let bit_errors = bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
        Ok(TrialOutcome {
            bit_errors,
            bits: bits.len() as u64,
        })
    }

    /// Dual-slot reconstruction of one trial together with the noiseless `s = Hx`.
    pub fn variance_trial(&self, trial_index: u64) -> Result<VarianceSample> {
        let (_, x) = self.draw_symbols(trial_index)?;
        let h = draw_channel(self.m, self.n, &mut trial_rng(self.seed, trial_index, Stream::Channel))?.h;
        let r = draw_reference(self.m, self.n, self.rsr_db, &mut trial_rng(self.seed, trial_index, Stream::Reference))?.r;
        let noise = NoiseSpec::new(self.sigma_v_sq)?;
        let v1 = draw_noise(self.m, noise, &mut trial_rng(self.seed, trial_index, Stream::Noise1))?;
        let v2 = draw_noise(self.m, noise, &mut trial_rng(self.seed, trial_index, Stream::Noise2))?;
        let z = observe_prss(&h, &x, &r, &v1, &v2, self.phi)?;
        Ok(VarianceSample {
            s_hat: self.reconstruct(&z, &r)?,
            s_true: apply_channel(&h, &x)?,
        })
    }
}

/// Bit-error count with a normal-approximation 95 % half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub half_width_95: f64,
}

impl BerEstimate {
    pub fn new(bit_errors: u64, bits_total: u64) -> Self {
        assert!(bit_errors <= bits_total);
        let (ber, half_width_95) = if bits_total == 0 {
            (0.0, 0.0)
        } else {
            let p = bit_errors as f64 / bits_total as f64;
            (p, 1.96 * (p * (1.0 - p) / bits_total as f64).sqrt())
        };
        Self {
            bit_errors,
            bits_total,
            ber,
            half_width_95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measurement {
    Ber(BerEstimate),
    NoiseVariance { sigma_ve_sq: f64, receiver_samples: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scheme: Scheme,
    pub detector: Detector,
    pub m: usize,
    pub n: usize,
    pub qam: usize,
    pub rsr_db: f64,
    pub snr_db: f64,
    pub sigma_v_sq: f64,
    pub phi: f64,
    pub trials: u64,
    pub seed: u64,
    pub measurement: Measurement,
}

impl SweepRecord {
    fn new(point: &PointSpec, snr_db: f64, trials: u64, measurement: Measurement) -> Self {
        Self {
            scheme: point.scheme,
            detector: point.detector,
            m: point.m,
            n: point.n,
            qam: point.constellation.order(),
            rsr_db: point.rsr_db,
            snr_db,
            sigma_v_sq: point.sigma_v_sq,
            phi: point.phi,
            trials,
            seed: point.seed,
            measurement,
        }
    }

    pub fn ber(&self) -> Option<BerEstimate> {
        match self.measurement {
            Measurement::Ber(b) => Some(b),
            _ => None,
        }
    }

    pub fn sigma_ve_sq(&self) -> Option<f64> {
        match self.measurement {
            Measurement::NoiseVariance { sigma_ve_sq, .. } => Some(sigma_ve_sq),
            _ => None,
        }
    }
}

/// Runs BER trials for one point until the error target or the trial cap.
pub fn run_ber_point(point: &PointSpec, max_trials: u64, target_errors: Option<u64>) -> Result<(BerEstimate, u64)> {
    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut done = 0u64;
    while done < max_trials && target_errors.is_none_or(|t| errors < t) {
        let end = (done + BATCH_TRIALS).min(max_trials);
        let batch: Vec<TrialOutcome> = (done..end)
            .into_par_iter()
            .map(|t| point.run_trial(t))
            .collect::<Result<_>>()?;
        for o in batch {
            errors += o.bit_errors;
            bits += o.bits;
        }
        done = end;
    }
    Ok((BerEstimate::new(errors, bits), done))
}

/// Estimates the effective noise variance of one point over exactly `trials` trials.
pub fn run_variance_point(point: &PointSpec, trials: u64) -> Result<NoiseVarianceAccumulator> {
    let per_trial: Vec<NoiseVarianceAccumulator> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let sample = point.variance_trial(t)?;
            let mut acc = NoiseVarianceAccumulator::default();
            acc.push(&sample.s_hat, &sample.s_true)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // Sequential fold keeps the floating-point sum independent of scheduling.
    let mut total = NoiseVarianceAccumulator::default();
    for acc in &per_trial {
        total.merge(acc);
    }
    Ok(total)
}

/// BER over the RSR × SNR grid at the first configured φ.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let phi = cfg.phi[0];
    if cfg.scheme == Scheme::Prss && phi.sin().abs() < SINGULAR_SIN_TOL {
        return Err(Error::SingularOffset { phi });
    }
    cfg.pool()?.install(|| {
        let mut out = Vec::new();
        for &rsr_db in &cfg.rsr_db {
            for (snr_db, sigma_v_sq) in cfg.noise.levels() {
                let point = PointSpec::new(cfg, rsr_db, sigma_v_sq, phi)?;
                let (ber, trials) = run_ber_point(&point, cfg.max_trials, cfg.target_errors)?;
                out.push(SweepRecord::new(&point, snr_db, trials, Measurement::Ber(ber)));
            }
        }
        Ok(out)
    })
}

/// Points are `(rsr_db, (snr_db, sigma_v_sq), phi)`.
fn variance_sweep(cfg: &ExperimentConfig, points: Vec<(f64, (f64, f64), f64)>) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    cfg.pool()?.install(|| {
        points
            .into_iter()
            .map(|(rsr_db, (snr_db, sigma_v_sq), phi)| {
                let point = PointSpec::new(cfg, rsr_db, sigma_v_sq, phi)?;
                let acc = run_variance_point(&point, cfg.max_trials)?;
                Ok(SweepRecord::new(
                    &point,
                    snr_db,
                    cfg.max_trials,
                    Measurement::NoiseVariance {
                        sigma_ve_sq: acc.variance().expect("trials > 0"),
                        receiver_samples: acc.receiver_samples,
                    },
                ))
            })
            .collect()
    })
}

/// Effective noise variance against the phase offset, at the first RSR, for every noise level.
pub fn run_phi_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    if let Some(&phi) = cfg.phi.iter().find(|p| p.sin().abs() < SINGULAR_SIN_TOL) {
        return Err(Error::SingularOffset { phi });
    }
    let rsr = *cfg.rsr_db.first().ok_or_else(|| Error::InvalidArgument("empty RSR list".into()))?;
    let mut points = Vec::new();
    for level in cfg.noise.levels() {
        for &phi in &cfg.phi {
            points.push((rsr, level, phi));
        }
    }
    variance_sweep(cfg, points)
}

/// Effective noise variance at φ = π/2 against RSR, for every noise level.
pub fn run_rsr_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let mut points = Vec::new();
    for level in cfg.noise.levels() {
        for &rsr in &cfg.rsr_db {
            points.push((rsr, level, FRAC_PI_2));
        }
    }
    variance_sweep(cfg, points)
}

/// SNR (dB) at which a BER curve crosses `target`, by linear interpolation of
/// `log10(BER)` between the bracketing points. Points with zero errors are skipped.
pub fn crossing_snr_db(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().copied().filter(|&(_, b)| b > 0.0).collect();
    let lt = target.log10();
    pts.windows(2).find_map(|w| {
        let (x0, b0) = w[0];
        let (x1, b1) = w[1];
        let (l0, l1) = (b0.log10(), b1.log10());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            Some(x0 + (lt - l0) * (x1 - x0) / (l1 - l0))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scheme: Scheme, detector: Detector) -> ExperimentConfig {
        ExperimentConfig {
            scheme,
            detector,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn noiseless_rf_zf_is_error_free() {
        let c = ExperimentConfig { m: 8, n: 4, ..cfg(Scheme::RfBaseline, Detector::Zf) };
        let p = PointSpec::new(&c, 26.0, 0.0, FRAC_PI_2).unwrap();
        for t in 0..50 {
            assert_eq!(p.run_trial(t).unwrap(), TrialOutcome { bit_errors: 0, bits: 8 });
        }
    }

    #[test]
    fn noiseless_prss_at_huge_rsr_is_error_free() {
        let c = cfg(Scheme::Prss, Detector::Ml);
        let p = PointSpec::new(&c, 120.0, 0.0, FRAC_PI_2).unwrap();
        for t in 0..30 {
            assert_eq!(p.run_trial(t).unwrap(), TrialOutcome { bit_errors: 0, bits: 16 });
        }
    }

    #[test]
    fn trials_are_reproducible() {
        let c = cfg(Scheme::SingleShot, Detector::Ml);
        let p = PointSpec::new(&c, 26.0, 0.1, FRAC_PI_2).unwrap();
        for t in [0, 5, 1234] {
            assert_eq!(p.run_trial(t).unwrap(), p.run_trial(t).unwrap());
        }
        let q = PointSpec::new(&c, 26.0, 0.1, FRAC_PI_2).unwrap();
        assert_eq!(p.seed, q.seed);
    }

    #[test]
    fn energy_per_bit_is_rate_matched() {
        let e = |s: Scheme| energy_per_bit(s, &make_qam(s.rate_matched_qam()).unwrap());
        assert!((e(Scheme::Prss) - 0.5).abs() < 1e-12);
        assert!((e(Scheme::SingleShot) - e(Scheme::Prss)).abs() < 1e-12);
        assert!((e(Scheme::RfBaseline) - e(Scheme::Prss)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let ok = cfg(Scheme::Prss, Detector::Ml);
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { max_trials: 0, ..ok.clone() },
            ExperimentConfig { noise: NoiseAxis::SnrDb(vec![]), ..ok.clone() },
            ExperimentConfig { noise: NoiseAxis::SigmaVSq(vec![-0.1]), ..ok.clone() },
            ExperimentConfig { rsr_db: vec![], ..ok.clone() },
            ExperimentConfig { m: 0, ..ok.clone() },
            ExperimentConfig { qam: Some(8), ..ok.clone() },
            ExperimentConfig { target_errors: Some(0), ..ok.clone() },
            cfg(Scheme::SingleShot, Detector::Zf),
            ExperimentConfig { m: 2, n: 4, ..cfg(Scheme::Prss, Detector::Zf) },
        ] {
            assert!(matches!(run_ber_sweep(&bad), Err(Error::InvalidArgument(_))), "{bad:?}");
        }
    }

    #[test]
    fn phi_sweep_rejects_singular_points() {
        let c = ExperimentConfig { phi: vec![1.0, 0.0], ..cfg(Scheme::Prss, Detector::Ml) };
        assert!(matches!(run_phi_sweep(&c), Err(Error::SingularOffset { .. })));
    }

    #[test]
    fn ber_estimate_half_width() {
        let b = BerEstimate::new(100, 10_000);
        assert_eq!(b.ber, 0.01);
        assert!((b.half_width_95 - 1.96 * (0.01f64 * 0.99 / 1e4).sqrt()).abs() < 1e-15);
        let b4 = BerEstimate::new(400, 40_000);
        assert!((b.half_width_95 / b4.half_width_95 - 2.0).abs() < 1e-12);
        assert_eq!(BerEstimate::new(0, 0).ber, 0.0);
    }

    #[test]
    fn crossing_interpolates_in_log_domain() {
        let curve = [(0.0, 1e-1), (10.0, 1e-2), (20.0, 1e-4)];
        assert!((crossing_snr_db(&curve, 1e-3).unwrap() - 15.0).abs() < 1e-12);
        assert!((crossing_snr_db(&curve, 1e-2).unwrap() - 10.0).abs() < 1e-12);
        assert!(crossing_snr_db(&curve, 1e-6).is_none());
        assert!(crossing_snr_db(&[(0.0, 1e-2), (5.0, 0.0)], 1e-3).is_none());
    }

    #[test]
    fn stopping_rule_halts_on_batch_boundary() {
        let c = ExperimentConfig {
            noise: NoiseAxis::SnrDb(vec![0.0]),
            target_errors: Some(50),
            max_trials: 10_000,
            ..cfg(Scheme::RfBaseline, Detector::Ml)
        };
        let recs = run_ber_sweep(&c).unwrap();
        assert_eq!(recs.len(), 1);
        let ber = recs[0].ber().unwrap();
        assert!(ber.bit_errors >= 50);
        assert_eq!(recs[0].trials % BATCH_TRIALS, 0);
        assert!(recs[0].trials < 10_000);
    }
}
