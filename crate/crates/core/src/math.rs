//! Small fixed-size linear algebra for 2D mechanics plus the float shims that
//! keep the crate `no_std`-clean.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Float functions routed through `libm` so the crate builds without `std`
/// (and produces identical bits on every platform).
pub mod real {
    #[inline]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline]
    pub fn tanh(x: f64) -> f64 {
        libm::tanh(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    #[inline]
    pub fn atan2(y: f64, x: f64) -> f64 {
        libm::atan2(y, x)
    }
    #[inline]
    pub fn acos(x: f64) -> f64 {
        libm::acos(x)
    }
}

/// 2D point / vector in physical coordinates (mm).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        real::hypot(self.x, self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn rot90(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Unit vector, or `None` when the norm is not positive.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

/// Full 2x2 matrix (displacement gradient), row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { xx: 0.0, xy: 0.0, yx: 0.0, yy: 0.0 };
    pub const IDENTITY: Mat2 = Mat2 { xx: 1.0, xy: 0.0, yx: 0.0, yy: 1.0 };

    #[inline]
    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    /// Symmetric part (the infinitesimal strain of a displacement gradient).
    #[inline]
    pub fn sym(self) -> SymTensor2 {
        SymTensor2::new(self.xx, self.yy, 0.5 * (self.xy + self.yx))
    }
}

/// Symmetric 2x2 tensor (strain, stress) stored as (xx, yy, xy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    #[inline]
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    #[inline]
    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    /// Symmetrized outer product a (x)s b = (a b^T + b a^T)/2.
    #[inline]
    pub fn sym_outer(a: Vec2, b: Vec2) -> Self {
        SymTensor2::new(a.x * b.x, a.y * b.y, 0.5 * (a.x * b.y + a.y * b.x))
    }

    /// Rank-one projector v v^T for a unit vector v.
    #[inline]
    pub fn outer(v: Vec2) -> Self {
        SymTensor2::new(v.x * v.x, v.y * v.y, v.x * v.y)
    }

    /// Double contraction a : b.
    #[inline]
    pub fn ddot(self, o: SymTensor2) -> f64 {
        self.xx * o.xx + self.yy * o.yy + 2.0 * self.xy * o.xy
    }

    /// Matrix-vector product (treating the tensor as a full 2x2 matrix).
    #[inline]
    pub fn mul_vec(self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        real::sqrt(self.ddot(self))
    }

    /// Eigenvalues ordered high to low with orthonormal directions.
    ///
    /// Near-coalescent eigenvalues (gap below `1e-12 * max(1, |eps|)`) return
    /// the canonical axes; the spectral formulas are continuous there.
    pub fn eigen(self) -> ((f64, f64), (Vec2, Vec2)) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = real::hypot(half_diff, self.xy);
        let hi = mean + radius;
        let lo = mean - radius;
        let scale = f64::max(1.0, self.norm());
        if radius < 1e-12 * scale {
            return ((hi, lo), (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)));
        }
        // Pick the better-conditioned column of (A - lo I) for the hi eigenvector.
        let a = Vec2::new(self.xx - lo, self.xy);
        let b = Vec2::new(self.xy, self.yy - lo);
        let v1 = if a.norm_sq() >= b.norm_sq() { a } else { b };
        let v1 = v1.normalized().unwrap_or(Vec2::new(1.0, 0.0));
        ((hi, lo), (v1, v1.rot90()))
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    #[inline]
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    #[inline]
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    #[inline]
    fn mul(self, s: f64) -> SymTensor2 {
        SymTensor2::new(self.xx * s, self.yy * s, self.xy * s)
    }
}

impl AddAssign for SymTensor2 {
    #[inline]
    fn add_assign(&mut self, o: SymTensor2) {
        self.xx += o.xx;
        self.yy += o.yy;
        self.xy += o.xy;
    }
}

/// Dense symmetric matrix of runtime size `n <= MAX`, used for RK moment
/// matrices (1x1 up to 6x6).
#[derive(Debug, Clone)]
pub struct SmallSymMatrix {
    n: usize,
    a: [[f64; 6]; 6],
}

/// LDL^T factorization of a [`SmallSymMatrix`] with a cheap condition estimate.
#[derive(Debug, Clone)]
pub struct SmallLdlt {
    n: usize,
    l: [[f64; 6]; 6],
    d: [f64; 6],
    /// max|d_i| / min|d_i| of the factor diagonal; infinite when a pivot is
    /// nonpositive (the matrix is not positive definite).
    pub condition_estimate: f64,
}

impl SmallSymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= 6);
        SmallSymMatrix { n, a: [[0.0; 6]; 6] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    /// Rank-one update: A += w * h h^T (mirrored so symmetry is bit-exact).
    #[inline]
    pub fn add_outer(&mut self, h: &[f64], w: f64) {
        debug_assert_eq!(h.len(), self.n);
        for i in 0..self.n {
            let wi = w * h[i];
            for j in 0..=i {
                let v = self.a[i][j] + wi * h[j];
                self.a[i][j] = v;
                self.a[j][i] = v;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[i][j] * x[j];
            }
            out[i] = s;
        }
    }

    /// LDL^T factorization without pivoting. Returns `None` when a pivot is
    /// not strictly positive (matrix not positive definite).
    pub fn ldlt(&self) -> Option<SmallLdlt> {
        let n = self.n;
        let mut l = [[0.0f64; 6]; 6];
        let mut d = [0.0f64; 6];
        for j in 0..n {
            let mut dj = self.a[j][j];
            for k in 0..j {
                dj -= l[j][k] * l[j][k] * d[k];
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return None;
            }
            d[j] = dj;
            l[j][j] = 1.0;
            for i in (j + 1)..n {
                let mut v = self.a[i][j];
                for k in 0..j {
                    v -= l[i][k] * l[j][k] * d[k];
                }
                l[i][j] = v / dj;
            }
        }
        let mut dmax = d[0];
        let mut dmin = d[0];
        for &dk in d.iter().take(n) {
            dmax = f64::max(dmax, dk);
            dmin = f64::min(dmin, dk);
        }
        let condition_estimate = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        Some(SmallLdlt { n, l, d, condition_estimate })
    }
}

impl SmallLdlt {
    /// Solves A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            for k in 0..i {
                b[i] -= self.l[i][k] * b[k];
            }
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                b[i] -= self.l[k][i] * b[k];
            }
        }
    }
}


/// Axis-aligned rectangle (the physical image domain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        assert!(max.x > min.x && max.y > min.y);
        Rect { min, max }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance to the nearest boundary edge (nonnegative inside).
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        let dx = f64::min(p.x - self.min.x, self.max.x - p.x);
        let dy = f64::min(p.y - self.min.y, self.max.y - p.y);
        f64::min(dx, dy)
    }
}
