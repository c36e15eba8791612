//! Symbol detectors.
//!
//! [`ml_linear`] and [`zf_linear`] work on any linear model `ŝ = Hx + noise`,
//! whether `ŝ` came from an RF front end or from dual-slot reconstruction.
//! [`ml_single_shot`] searches the magnitude-only single-slot model directly.
//!
//! Exhaustive searches visit candidates in mixed-radix order over
//! constellation indices with user 0 varying fastest, and keep the first
//! candidate reaching the minimum.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::constellation::Constellation;
use crate::error::{invalid, Error, Result};
use crate::frontend::apply_channel;

/// Default cap on the number of candidates an exhaustive search may visit.
pub const DEFAULT_SEARCH_BUDGET: u64 = 1 << 24;

/// Largest condition number of `HᴴH` accepted by [`zf_linear`].
pub const MAX_GRAM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub x_hat: Vec<Complex64>,
    /// Constellation index of every detected symbol.
    pub indices: Vec<usize>,
    pub metric: f64,
}

impl DetectionResult {
    fn from_indices(indices: Vec<usize>, c: &Constellation, metric: f64) -> Self {
        Self {
            x_hat: indices.iter().map(|&i| c.point(i)).collect(),
            indices,
            metric,
        }
    }
}

fn check_budget(c: &Constellation, n: usize, budget: u64) -> Result<()> {
    let candidates = (c.order() as f64).powi(n as i32);
    if candidates > budget as f64 {
        return Err(Error::SearchBudget { candidates, budget });
    }
    Ok(())
}

fn check_model(rows: usize, h: &CMatrix) -> Result<()> {
    if h.ncols() == 0 || h.nrows() == 0 {
        return invalid("channel matrix is empty");
    }
    if rows != h.nrows() {
        return invalid(format!(
            "observation has length {rows} but the channel has {} rows",
            h.nrows()
        ));
    }
    Ok(())
}

/// `‖ŝ − Hx‖²`.
pub fn linear_metric(s_hat: &[Complex64], h: &CMatrix, x: &[Complex64]) -> Result<f64> {
    let hx = apply_channel(h, x)?;
    check_model(s_hat.len(), h)?;
    Ok(s_hat.iter().zip(&hx).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Exhaustive ML detection `argmin_x ‖ŝ − Hx‖²` with the default budget.
pub fn ml_linear(s_hat: &[Complex64], h: &CMatrix, c: &Constellation) -> Result<DetectionResult> {
    ml_linear_with_budget(s_hat, h, c, DEFAULT_SEARCH_BUDGET)
}

/// Exhaustive ML detection. The enumeration runs on the triangular system
/// `‖Qᴴŝ − Rx‖²` from a thin QR of `H`, which differs from `‖ŝ − Hx‖²` by a
/// candidate-independent constant. A subtree is dropped only once its partial
/// metric reaches the best complete metric seen so far, so the returned
/// candidate is the first minimiser in enumeration order.
pub fn ml_linear_with_budget(
    s_hat: &[Complex64],
    h: &CMatrix,
    c: &Constellation,
    budget: u64,
) -> Result<DetectionResult> {
    check_model(s_hat.len(), h)?;
    check_budget(c, h.ncols(), budget)?;

    let qr = h.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let y = q.adjoint() * DVector::from_column_slice(s_hat);

    let mut search = TriangularSearch::new(&r, y.as_slice(), c.points());
    search.run();
    let indices = search.best;
    let x: Vec<Complex64> = indices.iter().map(|&i| c.point(i)).collect();
    let metric = linear_metric(s_hat, h, &x)?;
    Ok(DetectionResult::from_indices(indices, c, metric))
}

/// Depth-first enumeration over an upper-triangular (or trapezoidal) system.
struct TriangularSearch<'a> {
    r: &'a CMatrix,
    points: &'a [Complex64],
    rows: usize,
    /// `resid[l]`: `y − Σ_{k≥l} R[:,k] x_k`, rows `0..rows`.
    resid: Vec<Vec<Complex64>>,
    /// `acc[l]`: squared residual of the rows completed once users `≥ l` are fixed.
    acc: Vec<f64>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_metric: f64,
}

impl<'a> TriangularSearch<'a> {
    fn new(r: &'a CMatrix, y: &[Complex64], points: &'a [Complex64]) -> Self {
        let n = r.ncols();
        let rows = r.nrows();
        let mut resid = vec![vec![Complex64::default(); rows]; n + 1];
        resid[n].copy_from_slice(y);
        Self {
            r,
            points,
            rows,
            resid,
            acc: vec![0.0; n + 1],
            current: vec![0; n],
            best: vec![0; n],
            best_metric: f64::INFINITY,
        }
    }

    fn run(&mut self) {
        let n = self.r.ncols();
        self.descend(n - 1);
    }

    fn descend(&mut self, level: usize) {
        if level == 0 {
            self.innermost();
            return;
        }
        let live = self.rows.min(level + 1);
        for (j, &p) in self.points.iter().enumerate() {
            self.current[level] = j;
            let (head, tail) = self.resid.split_at_mut(level + 1);
            let (next, here) = (&tail[0], &mut head[level]);
            for i in 0..live {
                here[i] = next[i] - self.r[(i, level)] * p;
            }
            self.acc[level] = self.acc[level + 1]
                + if level < self.rows { here[level].norm_sqr() } else { 0.0 };
            if self.acc[level] >= self.best_metric {
                // Extensions only add nonnegative terms.
                continue;
            }
            self.descend(level - 1);
        }
    }

    fn innermost(&mut self) {
        let base = self.resid[1][0];
        let r00 = self.r[(0, 0)];
        let acc = self.acc[1];
        for (j, &p) in self.points.iter().enumerate() {
            let metric = acc + (base - r00 * p).norm_sqr();
            if metric < self.best_metric {
                self.best_metric = metric;
                self.current[0] = j;
                self.best.copy_from_slice(&self.current);
            }
        }
    }
}

/// 1-norm condition number `‖G‖₁·‖G⁻¹‖₁`.
fn condition_1(g: &CMatrix, g_inv: &CMatrix) -> f64 {
    let norm1 = |a: &CMatrix| {
        a.column_iter()
            .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm1(g) * norm1(g_inv)
}

/// Zero-forcing `Q([HᴴH]⁻¹Hᴴŝ)`: Gram inversion by Cholesky, then per-symbol slicing.
/// The Gram matrix is rejected when it is not positive definite or its 1-norm
/// condition number exceeds [`MAX_GRAM_CONDITION`].
pub fn zf_linear(s_hat: &[Complex64], h: &CMatrix, c: &Constellation) -> Result<DetectionResult> {
    check_model(s_hat.len(), h)?;
    if h.ncols() > h.nrows() {
        return Err(Error::IllConditioned {
            condition: f64::INFINITY,
        });
    }
    let gram = h.ad_mul(h);
    let chol = gram.clone().cholesky().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let gram_inv = chol.inverse();
    let condition = condition_1(&gram, &gram_inv);
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let matched = h.ad_mul(&DVector::from_column_slice(s_hat));
    let equalized = &gram_inv * matched;
    let indices: Vec<usize> = equalized.iter().map(|&v| c.nearest_index(v)).collect();
    let x: Vec<Complex64> = indices.iter().map(|&i| c.point(i)).collect();
    let metric = linear_metric(s_hat, h, &x)?;
    Ok(DetectionResult::from_indices(indices, c, metric))
}

/// `‖z − |Hx + r|‖²` with the magnitude taken per receiver.
pub fn amplitude_metric(z: &[f64], h: &CMatrix, r: &[Complex64], x: &[Complex64]) -> Result<f64> {
    check_model(z.len(), h)?;
    if r.len() != z.len() {
        return invalid("reference length differs from observation length");
    }
    let hx = apply_channel(h, x)?;
    Ok(z.iter()
        .zip(hx.iter().zip(r))
        .map(|(zm, (s, rm))| (zm - (s + rm).norm()).powi(2))
        .sum())
}

/// Exhaustive search of the single-slot magnitude model with the default budget.
pub fn ml_single_shot(z: &[f64], h: &CMatrix, r: &[Complex64], c: &Constellation) -> Result<DetectionResult> {
    ml_single_shot_with_budget(z, h, r, c, DEFAULT_SEARCH_BUDGET)
}

pub fn ml_single_shot_with_budget(
    z: &[f64],
    h: &CMatrix,
    r: &[Complex64],
    c: &Constellation,
    budget: u64,
) -> Result<DetectionResult> {
    check_model(z.len(), h)?;
    if r.len() != z.len() {
        return invalid("reference length differs from observation length");
    }
    check_budget(c, h.ncols(), budget)?;

    let n = h.ncols();
    let m = h.nrows();
    // Column contributions H[:,k]·p_j, laid out [k][j][m].
    let contrib: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|k| {
            c.points()
                .iter()
                .map(|&p| h.column(k).iter().map(|&hm| hm * p).collect())
                .collect()
        })
        .collect();

    // partial[l] = r + Σ_{k≥l} H[:,k] x_k
    let mut partial = vec![r.to_vec(); n + 1];
    let mut current = vec![0usize; n];
    let mut best = vec![0usize; n];
    let mut best_metric = f64::INFINITY;
    let j = c.order();

    // Odometer over levels n−1 (slowest) .. 0 (fastest).
    let mut level = n;
    loop {
        while level > 0 {
            level -= 1;
            let (head, tail) = partial.split_at_mut(level + 1);
            for ((dst, src), add) in head[level].iter_mut().zip(&tail[0]).zip(&contrib[level][current[level]]) {
                *dst = src + add;
            }
        }
        let metric: f64 = z
            .iter()
            .zip(&partial[0])
            .map(|(zm, v)| (zm - v.norm()).powi(2))
            .sum();
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&current);
        }
        // Advance the odometer.
        while level < n && current[level] + 1 == j {
            current[level] = 0;
            level += 1;
        }
        if level == n {
            break;
        }
        current[level] += 1;
        level += 1;
    }
    debug_assert_eq!(partial[0].len(), m);
    Ok(DetectionResult::from_indices(best, c, best_metric))
}
