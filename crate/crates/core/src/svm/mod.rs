//! Binary soft-margin SVM with a Gaussian RBF kernel.
//!
//! The trained decision function plays the role of a continuous score field:
//! its sign labels the phase, its zero level set is the material interface and
//! its gradient direction gives interface normals.

mod smo;
mod tune;

pub use smo::{SmoDiagnostics, SmoSettings};
pub use tune::{log_grid, tune_hyperparameters, FoldPlan, TuneResult};
#[cfg(feature = "std")]
pub use tune::tune_hyperparameters_threaded;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{real, Vec2};
use crate::score::ScoreFunction;

/// Gaussian RBF kernel `exp(-|x - y|^2 / (2 sigma^2))`.
pub fn rbf_kernel(x: Vec2, y: Vec2, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("kernel scale must be positive, got {sigma}")));
    }
    Ok(real::exp(-x.dist(y).powi(2) / (2.0 * sigma * sigma)))
}

#[inline]
fn rbf_from_sq_dist(d2: f64, sigma: f64) -> f64 {
    real::exp(-d2 / (2.0 * sigma * sigma))
}

/// Trained SVM: support vectors with dual coefficients `alpha_i * y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support_vectors: Vec<Vec2>,
    dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel_scale: f64,
    pub box_constraint: f64,
}

impl SvmModel {
    /// Assembles a model from parts, enforcing the dual-feasibility
    /// invariants: `0 < |alpha_i y_i| <= C` and `sum alpha_i y_i ~ 0`.
    pub fn from_parts(
        support_vectors: Vec<Vec2>,
        dual_coefficients: Vec<f64>,
        bias: f64,
        kernel_scale: f64,
        box_constraint: f64,
    ) -> Result<Self> {
        if !(kernel_scale > 0.0) {
            return Err(Error::Parameter("kernel scale must be positive".into()));
        }
        if !(box_constraint > 0.0) {
            return Err(Error::Parameter("box constraint must be positive".into()));
        }
        if support_vectors.len() != dual_coefficients.len() {
            return Err(Error::Format(format!(
                "{} support vectors but {} dual coefficients",
                support_vectors.len(),
                dual_coefficients.len()
            )));
        }
        let mut balance = 0.0;
        for &c in &dual_coefficients {
            let a = real::abs(c);
            if !(a > 0.0) || a > box_constraint * (1.0 + 1e-12) {
                return Err(Error::Parameter(format!(
                    "dual coefficient {c} outside (0, C] with C = {box_constraint}"
                )));
            }
            balance += c;
        }
        let n = dual_coefficients.len().max(1);
        if real::abs(balance) > 1e-8 * box_constraint * n as f64 {
            return Err(Error::Parameter(format!(
                "dual coefficients violate the equality constraint: sum = {balance:e}"
            )));
        }
        Ok(SvmModel {
            support_vectors,
            dual_coefficients,
            bias,
            kernel_scale,
            box_constraint,
        })
    }

    #[inline]
    pub fn support_vectors(&self) -> &[Vec2] {
        &self.support_vectors
    }

    #[inline]
    pub fn dual_coefficients(&self) -> &[f64] {
        &self.dual_coefficients
    }

    /// Decision value `f(x) = sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: Vec2) -> f64 {
        let s2 = 2.0 * self.kernel_scale * self.kernel_scale;
        let mut f = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            f += coef * real::exp(-(x.dist(*sv)).powi(2) / s2);
        }
        f
    }

    /// Analytic gradient of the decision value.
    pub fn decision_gradient(&self, x: Vec2) -> Vec2 {
        let sig2 = self.kernel_scale * self.kernel_scale;
        let mut g = Vec2::ZERO;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            let k = real::exp(-(x.dist(*sv)).powi(2) / (2.0 * sig2));
            g += (*sv - x) * (coef * k / sig2);
        }
        g
    }

    /// Fraction of points whose decision sign matches the label.
    pub fn accuracy(&self, points: &[Vec2], labels: &[i8]) -> f64 {
        let hits = points
            .iter()
            .zip(labels)
            .filter(|(p, &y)| (self.decision(**p) >= 0.0) == (y > 0))
            .count();
        hits as f64 / points.len().max(1) as f64
    }
}

/// Trains the soft-margin dual problem with sequential minimal optimization.
///
/// The working pair is picked by maximal KKT violation; convergence means the
/// violation gap dropped below the KKT tolerance (default 1e-6).
pub fn train_svm(points: &[Vec2], labels: &[i8], sigma: f64, c: f64) -> Result<SvmModel> {
    train_svm_with(points, labels, sigma, c, &SmoSettings::default()).map(|(m, _)| m)
}

/// As [`train_svm`], also returning solver diagnostics.
pub fn train_svm_with(
    points: &[Vec2],
    labels: &[i8],
    sigma: f64,
    c: f64,
    settings: &SmoSettings,
) -> Result<(SvmModel, SmoDiagnostics)> {
    if !(sigma > 0.0) || !(c > 0.0) {
        return Err(Error::Parameter(format!(
            "hyperparameters must be positive, got sigma = {sigma}, C = {c}"
        )));
    }
    if points.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 training points, got {}",
            points.len()
        )));
    }
    if points.len() != labels.len() {
        return Err(Error::Training("points and labels differ in length".into()));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Training("labels must be +1 or -1".into()));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::Training("training data contains a single class".into()));
    }

    let n = points.len();
    let mut kernel = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            kernel.push(rbf_from_sq_dist(points[i].dist(points[j]).powi(2), sigma));
        }
    }
    let (alpha, bias, diag) = smo::solve(&kernel, labels, c, settings)?;
    build_model(points, labels, &alpha, bias, sigma, c).map(|m| (m, diag))
}

pub(crate) fn build_model(
    points: &[Vec2],
    labels: &[i8],
    alpha: &[f64],
    bias: f64,
    sigma: f64,
    c: f64,
) -> Result<SvmModel> {
    // numerical zeros are dropped; everything retained is a support vector
    let keep = 1e-12 * c;
    let mut svs = Vec::new();
    let mut coefs = Vec::new();
    for i in 0..points.len() {
        if alpha[i] > keep {
            svs.push(points[i]);
            coefs.push(alpha[i].min(c) * labels[i] as f64);
        }
    }
    if svs.is_empty() {
        return Err(Error::Training("optimization retained no support vectors".into()));
    }
    SvmModel::from_parts(svs, coefs, bias, sigma, c)
}

/// A trained model exposed as a continuous score field.
#[derive(Debug, Clone)]
pub struct ScoreField {
    pub model: SvmModel,
    /// Central-difference step used when the analytic gradient is disabled (mm).
    pub gradient_step: f64,
    pub analytic_gradient: bool,
}

impl ScoreField {
    pub fn new(model: SvmModel) -> Self {
        let gradient_step = 1e-5 * model.kernel_scale;
        ScoreField { model, gradient_step, analytic_gradient: true }
    }
}

impl ScoreFunction for ScoreField {
    fn score(&self, x: Vec2) -> f64 {
        self.model.decision(x)
    }

    fn score_gradient(&self, x: Vec2) -> Vec2 {
        if self.analytic_gradient {
            self.model.decision_gradient(x)
        } else {
            let h = self.gradient_step;
            Vec2::new(
                (self.model.decision(Vec2::new(x.x + h, x.y))
                    - self.model.decision(Vec2::new(x.x - h, x.y)))
                    / (2.0 * h),
                (self.model.decision(Vec2::new(x.x, x.y + h))
                    - self.model.decision(Vec2::new(x.x, x.y - h)))
                    / (2.0 * h),
            )
        }
    }

    fn gradient_epsilon(&self) -> f64 {
        let l1: f64 = self.model.dual_coefficients.iter().map(|c| real::abs(*c)).sum();
        1e-10 * f64::max(1.0, l1 / self.model.kernel_scale)
    }
}
