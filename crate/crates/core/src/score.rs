//! Score-function abstraction: sign encodes the phase, the zero level set is
//! the material interface, the gradient gives interface normals.
//!
//! The SVM decision function implements this trait; analytic scores are used
//! for synthetic models and verification.

use crate::error::{Error, Result};
use crate::math::{real, Vec2};

/// Material phase at a point, from the sign of the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Matrix,
    Inclusion,
}

impl Phase {
    /// Sign convention: matrix scores positive.
    #[inline]
    pub fn from_score(s: f64) -> Phase {
        if s < 0.0 {
            Phase::Inclusion
        } else {
            Phase::Matrix
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Phase::Matrix => 1.0,
            Phase::Inclusion => -1.0,
        }
    }
}

/// Continuous score S(x): positive in the matrix, negative in inclusions,
/// zero on the interface.
pub trait ScoreFunction {
    fn score(&self, x: Vec2) -> f64;

    fn score_gradient(&self, x: Vec2) -> Vec2;

    /// Gradient-magnitude threshold below which the direction is unreliable.
    fn gradient_epsilon(&self) -> f64 {
        1e-12
    }

    /// Outward unit normal of the inclusion (points from S < 0 into S > 0).
    fn interface_normal(&self, x: Vec2) -> Result<Vec2> {
        let g = self.score_gradient(x);
        let n = g.norm();
        if n <= self.gradient_epsilon() {
            return Err(Error::DegenerateGradient { x: [x.x, x.y] });
        }
        Ok(g * (1.0 / n))
    }

    /// First-order signed distance to the zero level set, `S / |grad S|`.
    fn pseudo_distance(&self, x: Vec2) -> Result<f64> {
        let g = self.score_gradient(x);
        let n = g.norm();
        if n <= self.gradient_epsilon() {
            return Err(Error::DegenerateGradient { x: [x.x, x.y] });
        }
        Ok(self.score(x) / n)
    }
}

/// Single-phase domain: constant positive score, zero gradient. Every
/// gradient-dependent quantity is degenerate, which downstream code treats as
/// "no interface anywhere".
#[derive(Debug, Clone, Copy)]
pub struct UniformScore {
    pub value: f64,
}

impl Default for UniformScore {
    fn default() -> Self {
        UniformScore { value: 1.0 }
    }
}

impl ScoreFunction for UniformScore {
    fn score(&self, _x: Vec2) -> f64 {
        self.value
    }
    fn score_gradient(&self, _x: Vec2) -> Vec2 {
        Vec2::ZERO
    }
}

/// Signed distance to a straight interface: S(x) = n . (x - p).
#[derive(Debug, Clone, Copy)]
pub struct PlaneScore {
    pub point: Vec2,
    /// Unit normal pointing into the matrix side.
    pub normal: Vec2,
}

impl PlaneScore {
    /// Vertical interface at x = x0, matrix on the right.
    pub fn vertical(x0: f64) -> Self {
        PlaneScore { point: Vec2::new(x0, 0.0), normal: Vec2::new(1.0, 0.0) }
    }
}

impl ScoreFunction for PlaneScore {
    fn score(&self, x: Vec2) -> f64 {
        self.normal.dot(x - self.point)
    }
    fn score_gradient(&self, _x: Vec2) -> Vec2 {
        self.normal
    }
}

/// Signed distance to a circle: negative inside (inclusion), positive outside.
#[derive(Debug, Clone, Copy)]
pub struct CircleScore {
    pub center: Vec2,
    pub radius: f64,
}

impl ScoreFunction for CircleScore {
    fn score(&self, x: Vec2) -> f64 {
        x.dist(self.center) - self.radius
    }

    fn score_gradient(&self, x: Vec2) -> Vec2 {
        let d = x - self.center;
        let r = d.norm();
        if r > 0.0 {
            d * (1.0 / r)
        } else {
            Vec2::ZERO
        }
    }
}

/// Regularized Heaviside `max(0, tanh(.))`, the kernel-truncation profile.
#[inline]
pub fn regularized_heaviside(xi: f64) -> f64 {
    f64::max(0.0, real::tanh(xi))
}

/// Derivative of [`regularized_heaviside`]; zero on the clamped branch.
#[inline]
pub fn regularized_heaviside_deriv(xi: f64) -> f64 {
    if xi > 0.0 {
        let t = real::tanh(xi);
        1.0 - t * t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_values() {
        assert_eq!(regularized_heaviside(0.0), 0.0);
        assert_eq!(regularized_heaviside(-3.0), 0.0);
        assert!((regularized_heaviside(1.0) - 0.761594).abs() < 1e-6);
        assert!(regularized_heaviside(40.0) <= 1.0);
    }

    #[test]
    fn heaviside_derivative_matches_fd() {
        for xi in [0.2, 0.7, 1.5, 3.0] {
            let h = 1e-6;
            let fd = (regularized_heaviside(xi + h) - regularized_heaviside(xi - h)) / (2.0 * h);
            assert!((regularized_heaviside_deriv(xi) - fd).abs() < 1e-9);
        }
        assert_eq!(regularized_heaviside_deriv(-0.5), 0.0);
    }

    #[test]
    fn plane_score_normal_and_distance() {
        let s = PlaneScore::vertical(0.5);
        let p = Vec2::new(0.9, 3.0);
        assert!((s.score(p) - 0.4).abs() < 1e-15);
        assert_eq!(s.interface_normal(p).unwrap(), Vec2::new(1.0, 0.0));
        assert!((s.pseudo_distance(p).unwrap() - 0.4).abs() < 1e-15);
        assert!((s.pseudo_distance(Vec2::new(0.5, -2.0)).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn circle_score_is_radial() {
        let s = CircleScore { center: Vec2::new(1.0, 1.0), radius: 0.5 };
        let p = Vec2::new(1.8, 1.0);
        assert!((s.score(p) - 0.3).abs() < 1e-15);
        let n = s.interface_normal(p).unwrap();
        assert!((n.x - 1.0).abs() < 1e-15 && n.y.abs() < 1e-15);
        assert_eq!(Phase::from_score(s.score(Vec2::new(1.0, 1.2))), Phase::Inclusion);
    }

    #[test]
    fn uniform_score_has_degenerate_gradient() {
        let s = UniformScore::default();
        assert!(matches!(
            s.interface_normal(Vec2::ZERO),
            Err(crate::Error::DegenerateGradient { .. })
        ));
    }
}
