//! Square QAM alphabets with per-axis Gray labelling.
//!
//! Point `i` of a [`Constellation`] carries bit label `i`: the label's upper
//! half is the Gray code of the in-phase level and the lower half the Gray
//! code of the quadrature level. Bits are written most significant first.

use num_complex::Complex64;
use crate::error::{invalid, Error, Result};

/// Largest alphabet accepted by [`make_qam`].
pub const MAX_ORDER: usize = 1 << 16;

/// Distance below which a symbol is treated as lying on a constellation point.
const MEMBERSHIP_TOL: f64 = 1e-9;

/// Square QAM alphabet; point `i` carries bit label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Bit label of point `index`, most significant bit first.
    pub fn label(&self, index: usize) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|b| ((index >> b) & 1) as u8)
            .collect()
    }

    /// Index of the Euclidean-nearest point. Ties go to the lowest index.
    pub fn nearest_index(&self, v: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (v - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Index of the point `v` sits on, if any.
    pub fn index_of(&self, v: Complex64) -> Option<usize> {
        let i = self.nearest_index(v);
        ((v - self.points[i]).norm() <= MEMBERSHIP_TOL).then_some(i)
    }

    /// Minimum distance between distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.min((p - q).norm());
            }
        }
        d
    }
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Builds a Gray-labelled square QAM alphabet with unit average energy.
pub fn make_qam(order: usize) -> Result<Constellation> {
    if !(4..=MAX_ORDER).contains(&order) || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
        return invalid(format!("{order} is not a square QAM order"));
    }
    let bits_per_symbol = order.trailing_zeros() as usize;
    let axis_bits = bits_per_symbol / 2;
    let side = 1usize << axis_bits;

    // Mean energy of the odd-integer grid {±1, ±3, ...}²: 2(L² − 1)/3.
    let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
    let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;

    let mut points = vec![Complex64::default(); order];
    for re in 0..side {
        for im in 0..side {
            let label = (gray(re) << axis_bits) | gray(im);
            points[label] = Complex64::new(level(re), level(im));
        }
    }
    Ok(Constellation {
        order,
        bits_per_symbol,
        points,
    })
}

/// Maps consecutive `bits_per_symbol` groups of `bits` onto their labelled points.
pub fn modulate(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let k = c.bits_per_symbol;
    if !bits.len().is_multiple_of(k) {
        return invalid(format!(
            "{} bits do not split into {k}-bit symbols",
            bits.len()
        ));
    }
    bits.chunks_exact(k)
        .map(|group| {
            let mut index = 0usize;
            for &b in group {
                if b > 1 {
                    return invalid(format!("bit value {b} is not 0 or 1"));
                }
                index = (index << 1) | b as usize;
            }
            Ok(c.points[index])
        })
        .collect()
}

/// Replaces every element with its nearest constellation point.
pub fn quantize(v: &[Complex64], c: &Constellation) -> Vec<Complex64> {
    v.iter().map(|&x| c.points[c.nearest_index(x)]).collect()
}

/// Concatenates the bit labels of `symbols`, which must be constellation points.
pub fn demap(symbols: &[Complex64], c: &Constellation) -> Result<Vec<u8>> {
    let mut bits = Vec::with_capacity(symbols.len() * c.bits_per_symbol);
    for (pos, &s) in symbols.iter().enumerate() {
        let index = c.index_of(s).ok_or_else(|| {
            Error::InvalidArgument(format!("symbol {s} at position {pos} is not in the alphabet"))
        })?;
        bits.extend(c.label(index));
    }
    Ok(bits)
}
