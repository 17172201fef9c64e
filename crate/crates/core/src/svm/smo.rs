//! Sequential minimal optimization for the soft-margin dual problem
//!
//!   minimize   f(a) = 1/2 a^T Q a - sum a_i
//!   subject to 0 <= a_i <= C,  sum y_i a_i = 0,
//!
//! with Q_ij = y_i y_j K_ij. The first working index is the maximal KKT
//! violator; the second is chosen by the second-order objective-decrease rule
//! among violating partners (plain maximal-violating pairs zigzag and stall
//! short of tight tolerances). Convergence is declared when the violation gap
//! m(a) - M(a) falls below the tolerance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SmoSettings {
    /// KKT violation tolerance.
    pub tolerance: f64,
    /// Cap on working-pair updates.
    pub max_iterations: usize,
}

impl Default for SmoSettings {
    fn default() -> Self {
        SmoSettings { tolerance: 1e-6, max_iterations: 1_000_000 }
    }
}

impl SmoSettings {
    /// Coarser settings for cross-validation solves, where only decision
    /// signs matter.
    pub fn cross_validation() -> Self {
        SmoSettings { tolerance: 1e-3, max_iterations: 200_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmoDiagnostics {
    pub iterations: usize,
    /// KKT violation gap at exit.
    pub gap: f64,
    /// True when the solver exited because no working pair could make
    /// floating-point progress (gap may sit above the tolerance).
    pub stalled: bool,
}

/// Solves the dual on a dense row-major kernel matrix. Returns the dual
/// variables, the bias and solver diagnostics.
pub(crate) fn solve(
    kernel: &[f64],
    labels: &[i8],
    c: f64,
    settings: &SmoSettings,
) -> Result<(Vec<f64>, f64, SmoDiagnostics)> {
    let n = labels.len();
    debug_assert_eq!(kernel.len(), n * n);
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

    let mut alpha = vec![0.0f64; n];
    // gradient of f; alpha = 0 gives grad_i = -1
    let mut grad = vec![-1.0f64; n];

    let mut iterations = 0;
    let mut stalled = false;
    let gap = loop {
        // first index: maximal KKT violation over the "up" set
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > m_up {
                m_up = v;
                i = t;
            }
            if in_low && v < m_low {
                m_low = f64::min(m_low, v);
            }
        }
        let gap = m_up - m_low;
        if gap <= settings.tolerance || i == usize::MAX || !m_low.is_finite() {
            break gap;
        }

        // second index: largest second-order decrease among violating partners
        let ki = &kernel[i * n..(i + 1) * n];
        let mut j = usize::MAX;
        let mut best_dec = 0.0f64;
        for t in 0..n {
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if !in_low {
                continue;
            }
            let b = m_up + y[t] * grad[t];
            if b <= 0.0 {
                continue;
            }
            let a = f64::max(ki[i] + kernel[t * n + t] - 2.0 * ki[t], 1e-12);
            let dec = b * b / a;
            if dec > best_dec {
                best_dec = dec;
                j = t;
            }
        }
        if j == usize::MAX {
            stalled = true;
            break gap;
        }
        if iterations >= settings.max_iterations {
            return Err(Error::Convergence(format!(
                "SMO hit the iteration cap ({}) with KKT gap {gap:.3e} (tolerance {:.1e}, n = {n}, C = {c})",
                settings.max_iterations, settings.tolerance
            )));
        }
        iterations += 1;

        // analytic two-variable update along the equality constraint
        let kj = &kernel[j * n..(j + 1) * n];
        let eta = f64::max(ki[i] + kj[j] - 2.0 * ki[j], 1e-12);
        let e_i = y[i] * grad[i];
        let e_j = y[j] * grad[j];
        let mut aj_new = alpha[j] + y[j] * (e_i - e_j) / eta;

        // box bounds keeping y_i a_i + y_j a_j fixed
        let (lo, hi) = if labels[i] != labels[j] {
            (f64::max(0.0, alpha[j] - alpha[i]), f64::min(c, c + alpha[j] - alpha[i]))
        } else {
            (f64::max(0.0, alpha[i] + alpha[j] - c), f64::min(c, alpha[i] + alpha[j]))
        };
        aj_new = aj_new.clamp(lo, hi);
        let dj = aj_new - alpha[j];
        if dj == 0.0 {
            // the pair cannot make floating-point progress; no other pair
            // offers a better second-order decrease, so stop here
            stalled = true;
            break gap;
        }
        let di = -y[i] * y[j] * dj;
        // rounding in the dependent update leaves dust at the box bounds that
        // would keep dead variables in the working sets; snap it off
        alpha[i] = snap_to_bounds((alpha[i] + di).clamp(0.0, c), c);
        alpha[j] = snap_to_bounds(aj_new, c);

        let qi = y[i] * di;
        let qj = y[j] * dj;
        for t in 0..n {
            grad[t] += y[t] * (qi * ki[t] + qj * kj[t]);
        }
    };

    let bias = compute_bias(&alpha, &grad, &y, c);
    Ok((alpha, bias, SmoDiagnostics { iterations, gap, stalled }))
}

#[inline]
fn snap_to_bounds(a: f64, c: f64) -> f64 {
    if a < 1e-12 * c {
        0.0
    } else if a > c * (1.0 - 1e-12) {
        c
    } else {
        a
    }
}

/// Bias from averaged free (unbounded) support vectors, falling back to the
/// violation-gap midpoint when every multiplier is at a bound.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let n = alpha.len();
    let free_margin = 1e-10 * c;
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 0..n {
        if alpha[t] > free_margin && alpha[t] < c - free_margin {
            // for a free vector, y_t f(x_t) = 1, so b = -y_t grad_t
            sum += -y[t] * grad[t];
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    let mut m_up = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
        if in_up {
            m_up = f64::max(m_up, v);
        }
        if in_low {
            m_low = f64::min(m_low, v);
        }
    }
    0.5 * (m_up + m_low)
}
