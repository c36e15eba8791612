//! Linear reconstruction of the complex received signal from two magnitude readings.
//!
//! With a reference much stronger than the signal, subtracting `|r_m|` from a
//! reading leaves (to first order) the real projection `Re{u_m s_m}` with
//! `u_m = r_m*/|r_m|`. The second slot, rotated by φ, supplies a second
//! projection, and the pair is inverted receiver by receiver. At φ = ±π/2 the
//! two projections are orthogonal and the inversion reduces to a rotation.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frontend::DualSlotObservation;

/// `|sin φ|` below which the measurement matrix is treated as singular.
pub const SINGULAR_SIN_TOL: f64 = 1e-9;

/// Tolerance on the recorded offset when the closed form is requested.
const OFFSET_MATCH_TOL: f64 = 1e-6;

/// Readings with the reference magnitude removed.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveObservation {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedSignal {
    /// Estimate of `Hx`.
    pub s_hat: Vec<Complex64>,
    /// Unit phase normalisers `r_m*/|r_m|`.
    pub u: Vec<Complex64>,
}

/// Which quarter-turn the second slot was sent with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffsetSign {
    Positive,
    Negative,
}

impl OffsetSign {
    pub fn from_sign(sign: i32) -> Result<Self> {
        match sign {
            1 => Ok(Self::Positive),
            -1 => Ok(Self::Negative),
            _ => invalid(format!("offset sign must be +1 or -1, got {sign}")),
        }
    }

    pub fn phi(self) -> f64 {
        match self {
            Self::Positive => FRAC_PI_2,
            Self::Negative => -FRAC_PI_2,
        }
    }
}

/// 2×2 real map from `(Re s, Im s)` to the two effective observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementMatrix {
    pub a: [[f64; 2]; 2],
    pub phi: f64,
}

impl MeasurementMatrix {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// Solves `A [re, im]ᵀ = [y1, y2]ᵀ` by the explicit 2×2 inverse.
    pub fn solve(&self, y1: f64, y2: f64) -> Complex64 {
        let [[a, b], [c, d]] = self.a;
        let det = self.det();
        Complex64::new((d * y1 - b * y2) / det, (a * y2 - c * y1) / det)
    }
}

fn check_len(what: &str, got: usize, m: usize) -> Result<()> {
    if got != m {
        return invalid(format!("{what} has length {got}, expected {m}"));
    }
    Ok(())
}

pub fn effective_observations(z: &DualSlotObservation, r: &[Complex64]) -> Result<EffectiveObservation> {
    let m = r.len();
    check_len("first-slot reading", z.z1.len(), m)?;
    check_len("second-slot reading", z.z2.len(), m)?;
    let sub = |zs: &[f64]| zs.iter().zip(r).map(|(z, r)| z - r.norm()).collect();
    Ok(EffectiveObservation {
        y1: sub(&z.z1),
        y2: sub(&z.z2),
    })
}

/// Unit normalisers `r_m*/|r_m|`; fails on a vanishing reference.
pub fn phase_normalizers(r: &[Complex64]) -> Result<Vec<Complex64>> {
    r.iter()
        .enumerate()
        .map(|(index, rm)| {
            let mag = rm.norm();
            if !(mag > 0.0) || !mag.is_finite() {
                return Err(Error::DegenerateReference { index });
            }
            Ok(rm.conj() / mag)
        })
        .collect()
}

fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    a - t * (a / t).round()
}

/// Closed-form estimate for a quarter-turn offset:
/// `ŝ_m = u_m*(y1 − j·y2)` for +π/2 and `u_m*(y1 + j·y2)` for −π/2.
pub fn reconstruct_optimal(
    z: &DualSlotObservation,
    r: &[Complex64],
    sign: OffsetSign,
) -> Result<ReconstructedSignal> {
    if wrap_angle(z.phi - sign.phi()).abs() > OFFSET_MATCH_TOL {
        return invalid(format!(
            "observation was taken at phi = {} rad, not {} rad",
            z.phi,
            sign.phi()
        ));
    }
    let y = effective_observations(z, r)?;
    let u = phase_normalizers(r)?;
    let j = match sign {
        OffsetSign::Positive => Complex64::new(0.0, -1.0),
        OffsetSign::Negative => Complex64::new(0.0, 1.0),
    };
    let s_hat = u
        .iter()
        .zip(y.y1.iter().zip(&y.y2))
        .map(|(um, (&y1, &y2))| um.conj() * (y1 + j * y2))
        .collect();
    Ok(ReconstructedSignal { s_hat, u })
}

/// Rows `[Re u, −Im u]` and `[Re(u e^{jφ}), −Im(u e^{jφ})]`.
pub fn build_measurement_matrix(u: Complex64, phi: f64) -> MeasurementMatrix {
    let w = u * Complex64::from_polar(1.0, phi);
    MeasurementMatrix {
        a: [[u.re, -u.im], [w.re, -w.im]],
        phi,
    }
}

fn check_offset(phi: f64) -> Result<()> {
    if !phi.is_finite() || phi.sin().abs() < SINGULAR_SIN_TOL {
        return Err(Error::SingularOffset { phi });
    }
    Ok(())
}

/// Per-receiver least-squares inversion of the measurement matrix for any non-singular φ.
pub fn reconstruct_general(z: &DualSlotObservation, r: &[Complex64], phi: f64) -> Result<ReconstructedSignal> {
    check_offset(phi)?;
    let y = effective_observations(z, r)?;
    let u = phase_normalizers(r)?;
    let s_hat = u
        .iter()
        .zip(y.y1.iter().zip(&y.y2))
        .map(|(&um, (&y1, &y2))| build_measurement_matrix(um, phi).solve(y1, y2))
        .collect();
    Ok(ReconstructedSignal { s_hat, u })
}

/// `Tr[(AᵀA)⁻¹] = 2 / (|u|² sin²φ)`.
pub fn predicted_trace(phi: f64, u_mod: f64) -> Result<f64> {
    check_offset(phi)?;
    if !(u_mod > 0.0) {
        return invalid(format!("|u| must be positive, got {u_mod}"));
    }
    Ok(2.0 / (u_mod * u_mod * phi.sin().powi(2)))
}

/// Reconstruction MSE `σ_v² / sin²φ`: each real projection of circular
/// noise carries half of `σ_v²`, scaled by the inverse-Gram trace.
pub fn predicted_mse(phi: f64, sigma_v_sq: f64) -> Result<f64> {
    Ok(0.5 * sigma_v_sq * predicted_trace(phi, 1.0)?)
}

/// Running mean of `‖ŝ − s‖² / M` over reconstructed vectors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoiseVarianceAccumulator {
    pub sum_sq: f64,
    pub receiver_samples: u64,
}

impl NoiseVarianceAccumulator {
    pub fn push(&mut self, s_hat: &[Complex64], s_true: &[Complex64]) -> Result<()> {
        check_len("reconstruction", s_hat.len(), s_true.len())?;
        if s_hat.is_empty() {
            return invalid("empty signal vector");
        }
        self.sum_sq += s_hat.iter().zip(s_true).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        self.receiver_samples += s_hat.len() as u64;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        self.sum_sq += other.sum_sq;
        self.receiver_samples += other.receiver_samples;
    }

    /// `None` before any sample arrived.
    pub fn variance(&self) -> Option<f64> {
        (self.receiver_samples > 0).then(|| self.sum_sq / self.receiver_samples as f64)
    }
}

/// Effective noise variance `E{‖ŝ − s‖²}/M` over paired sample vectors.
pub fn empirical_noise_variance(s_hat_samples: &[Vec<Complex64>], s_true_samples: &[Vec<Complex64>]) -> Result<f64> {
    if s_hat_samples.is_empty() {
        return invalid("no samples");
    }
    check_len("sample set", s_true_samples.len(), s_hat_samples.len())?;
    let m = s_hat_samples[0].len();
    let mut acc = NoiseVarianceAccumulator::default();
    for (a, b) in s_hat_samples.iter().zip(s_true_samples) {
        check_len("sample vector", a.len(), m)?;
        acc.push(a, b)?;
    }
    Ok(acc.variance().expect("at least one sample"))
}
