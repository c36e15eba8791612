//! Amplitude-only observation model of a Rydberg-atomic receiver array.
//!
//! Each receiver reports the magnitude of the field it sees: the users'
//! contribution `Hx`, its own noise sample and the reference tone `r`.

use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::error::{invalid, Result};

/// Magnitude readings of two consecutive slots, the second sent with phase offset `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSlotObservation {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub phi: f64,
}

/// `Hx` for a dense complex channel.
pub fn apply_channel(h: &CMatrix, x: &[Complex64]) -> Result<Vec<Complex64>> {
    if h.ncols() != x.len() {
        return invalid(format!(
            "channel has {} columns but {} symbols were given",
            h.ncols(),
            x.len()
        ));
    }
    let mut s = vec![Complex64::default(); h.nrows()];
    for (col, &xn) in h.column_iter().zip(x) {
        for (sm, &hmn) in s.iter_mut().zip(col.iter()) {
            *sm += hmn * xn;
        }
    }
    Ok(s)
}

fn check_len(what: &str, got: usize, m: usize) -> Result<()> {
    if got != m {
        return invalid(format!("{what} has length {got}, expected {m}"));
    }
    Ok(())
}

/// `|s·rot + v + r|` element-wise.
fn magnitudes(s: &[Complex64], rot: Complex64, r: &[Complex64], v: &[Complex64]) -> Vec<f64> {
    s.iter()
        .zip(r)
        .zip(v)
        .map(|((&sm, &rm), &vm)| (sm * rot + vm + rm).norm())
        .collect()
}

/// Single-slot readout `|Hx + v + r|`.
pub fn observe_single(
    h: &CMatrix,
    x: &[Complex64],
    r: &[Complex64],
    v: &[Complex64],
) -> Result<Vec<f64>> {
    let s = apply_channel(h, x)?;
    check_len("reference", r.len(), s.len())?;
    check_len("noise", v.len(), s.len())?;
    Ok(magnitudes(&s, Complex64::new(1.0, 0.0), r, v))
}

/// Two-slot readout: `x` in the first slot, `x·e^{jφ}` in the second, same `H` and `r`.
pub fn observe_prss(
    h: &CMatrix,
    x: &[Complex64],
    r: &[Complex64],
    v1: &[Complex64],
    v2: &[Complex64],
    phi: f64,
) -> Result<DualSlotObservation> {
    let s = apply_channel(h, x)?;
    let m = s.len();
    check_len("reference", r.len(), m)?;
    check_len("first-slot noise", v1.len(), m)?;
    check_len("second-slot noise", v2.len(), m)?;
    Ok(DualSlotObservation {
        z1: magnitudes(&s, Complex64::new(1.0, 0.0), r, v1),
        z2: magnitudes(&s, Complex64::from_polar(1.0, phi), r, v2),
        phi,
    })
}
