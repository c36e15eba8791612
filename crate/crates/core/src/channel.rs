//! Rayleigh channels, local-oscillator reference signals and receiver noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};

pub type CMatrix = DMatrix<Complex64>;

/// One draw of the M×N uplink channel, entries i.i.d. CN(0, 1/N).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
}

impl ChannelRealization {
    pub fn receivers(&self) -> usize {
        self.h.nrows()
    }

    pub fn users(&self) -> usize {
        self.h.ncols()
    }
}

/// Reference tone injected at each receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub r: Vec<Complex64>,
    pub rsr_db: f64,
}

/// Per-receiver variance of circular complex Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    sigma_v_sq: f64,
}

impl NoiseSpec {
    pub fn new(sigma_v_sq: f64) -> Result<Self> {
        if !(sigma_v_sq >= 0.0) || !sigma_v_sq.is_finite() {
            return invalid(format!("noise variance {sigma_v_sq} must be finite and >= 0"));
        }
        Ok(Self { sigma_v_sq })
    }

    /// Noise variance for an SNR in dB at unit received signal power.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(db_to_linear(-snr_db))
    }

    pub fn sigma_v_sq(&self) -> f64 {
        self.sigma_v_sq
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Reference magnitude giving `rsr_db` against unit-energy symbols over CN(0, 1/N) gains.
pub fn reference_magnitude(n: usize, rsr_db: f64) -> f64 {
    (db_to_linear(rsr_db) / n as f64).sqrt()
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return invalid(format!("dimensions must be positive, got {m}x{n}"));
    }
    Ok(())
}

/// Circular complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

pub fn draw_channel<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<ChannelRealization> {
    check_dims(m, n)?;
    let var = 1.0 / n as f64;
    // Column-major fill; the draw order is part of the reproducibility contract.
    let h = CMatrix::from_fn(m, n, |_, _| complex_gaussian(rng, var));
    Ok(ChannelRealization { h })
}

/// Reference of fixed magnitude [`reference_magnitude`] and uniform phase on (−π, π].
pub fn draw_reference<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rsr_db: f64,
    rng: &mut R,
) -> Result<ReferenceSignal> {
    check_dims(m, n)?;
    if !rsr_db.is_finite() {
        return invalid(format!("RSR {rsr_db} dB is not finite"));
    }
    let mag = reference_magnitude(n, rsr_db);
    let r = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            Complex64::from_polar(mag, PI - 2.0 * PI * u)
        })
        .collect();
    Ok(ReferenceSignal { r, rsr_db })
}

pub fn draw_noise<R: Rng + ?Sized>(m: usize, spec: NoiseSpec, rng: &mut R) -> Result<Vec<Complex64>> {
    if m == 0 {
        return invalid("noise length must be positive");
    }
    if spec.sigma_v_sq == 0.0 {
        return Ok(vec![Complex64::default(); m]);
    }
    Ok((0..m).map(|_| complex_gaussian(rng, spec.sigma_v_sq)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{trial_rng, Stream};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_channel_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 1_000_000;
        let mut power = 0.0;
        let mut pseudo = Complex64::default();
        for _ in 0..draws {
            let h = draw_channel(1, 1, &mut rng).unwrap().h[(0, 0)];
            power += h.norm_sqr();
            pseudo += h * h;
        }
        power /= draws as f64;
        pseudo /= draws as f64;
        assert!((power - 1.0).abs() < 0.01, "{power}");
        assert!(pseudo.norm() < 0.01, "{pseudo}");
    }

    #[test]
    fn channel_variance_scales_with_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut power = 0.0;
        let trials = 20_000;
        for _ in 0..trials {
            let ch = draw_channel(8, 4, &mut rng).unwrap();
            assert_eq!((ch.receivers(), ch.users()), (8, 4));
            power += ch.h.iter().map(|h| h.norm_sqr()).sum::<f64>();
        }
        let mean = power / (trials * 32) as f64;
        assert!((mean - 0.25).abs() < 0.0025, "{mean}");
    }

    #[test]
    fn zero_dimensions_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_channel(0, 4, &mut rng).is_err());
        assert!(draw_channel(4, 0, &mut rng).is_err());
        assert!(draw_reference(0, 4, 10.0, &mut rng).is_err());
        assert!(draw_noise(0, NoiseSpec::new(1.0).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn reference_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = draw_reference(16, 4, 26.0, &mut rng).unwrap();
        let expect = (10f64.powf(2.6) / 4.0).sqrt();
        assert!((expect - 9.976).abs() < 1e-3);
        for v in &r.r {
            assert!((v.norm() - expect).abs() < 1e-12);
            assert!(v.arg() > -PI && v.arg() <= PI);
        }
        let r = draw_reference(4, 1, 0.0, &mut rng).unwrap();
        assert!(r.r.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert!((db_to_linear(30.0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn reference_phase_spreads() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = draw_reference(20_000, 1, 10.0, &mut rng).unwrap();
        let mean: Complex64 = r.r.iter().map(|v| v / v.norm()).sum::<Complex64>() / 20_000.0;
        assert!(mean.norm() < 0.03);
    }

    #[test]
    fn noise_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero = draw_noise(5, NoiseSpec::new(0.0).unwrap(), &mut rng).unwrap();
        assert!(zero.iter().all(|v| *v == Complex64::default()));

        let n = 1_000_000;
        let v = draw_noise(n, NoiseSpec::new(0.1).unwrap(), &mut rng).unwrap();
        let var: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        let var_re: f64 = v.iter().map(|x| x.re * x.re).sum::<f64>() / n as f64;
        let var_im: f64 = v.iter().map(|x| x.im * x.im).sum::<f64>() / n as f64;
        let pseudo: Complex64 = v.iter().map(|x| x * x).sum::<Complex64>() / n as f64;
        assert!((var / 0.1 - 1.0).abs() < 0.01, "{var}");
        assert!((var_re / 0.05 - 1.0).abs() < 0.01, "{var_re}");
        assert!((var_im / 0.05 - 1.0).abs() < 0.01, "{var_im}");
        assert!(pseudo.norm() < 0.002);
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(NoiseSpec::new(-1e-3).is_err());
        assert!(NoiseSpec::new(f64::NAN).is_err());
        assert!((NoiseSpec::from_snr_db(10.0).unwrap().sigma_v_sq() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_draws() {
        let a = draw_channel(8, 4, &mut trial_rng(9, 11, Stream::Channel)).unwrap();
        let b = draw_channel(8, 4, &mut trial_rng(9, 11, Stream::Channel)).unwrap();
        assert_eq!(a, b);
    }
}
