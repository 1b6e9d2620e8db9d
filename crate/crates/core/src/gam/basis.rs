//! Cubic B-spline bases on uniform knots with a second-order difference
//! penalty, plus the sum-to-zero centering used for identifiability.
//!
//! Uniform knots matter: with equally spaced knots the null space of the
//! coefficient-difference penalty is exactly the linear functions of the
//! covariate, so an infinitely smoothed term degenerates to a straight line.
//! Outside the observed range every basis function continues linearly, which
//! makes the whole fitted smooth extrapolate linearly.

use nalgebra::{DMatrix, DVector};

use super::GamError;

/// Cubic B-spline basis of dimension `k` over `[lo, hi]` with uniform knots.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    /// `k + 4` uniform knots; `knots[3] == lo`, `knots[k] == hi`.
    pub knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new(k: usize, lo: f64, hi: f64) -> Result<Self, GamError> {
        if k < 4 {
            return Err(GamError::BasisTooSmall { k });
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(GamError::EmptyRange { lo, hi });
        }
        let delta = (hi - lo) / (k as f64 - 3.0);
        let knots = (0..k + 4).map(|j| lo + (j as f64 - 3.0) * delta).collect();
        Ok(Self { k, lo, hi, knots })
    }

    /// Evaluate all `k` basis functions at `x`; outside `[lo, hi]` each is
    /// extended linearly from the nearest boundary.
    pub fn row(&self, x: f64) -> DVector<f64> {
        if x < self.lo {
            return self.row(self.lo) + (x - self.lo) * self.row_deriv(self.lo);
        }
        if x > self.hi {
            return self.row(self.hi) + (x - self.hi) * self.row_deriv(self.hi);
        }
        let ival = self.interval_index(x);
        DVector::from_fn(self.k, |j, _| self.value(j, 4, x, ival))
    }

    /// First derivative of every basis function at `x` (constant beyond the
    /// boundaries, matching the linear extension).
    pub fn row_deriv(&self, x: f64) -> DVector<f64> {
        let x = x.clamp(self.lo, self.hi);
        let ival = self.interval_index(x);
        DVector::from_fn(self.k, |j, _| {
            let t = &self.knots;
            3.0 * (self.value(j, 3, x, ival) / (t[j + 3] - t[j])
                - self.value(j + 1, 3, x, ival) / (t[j + 4] - t[j + 1]))
        })
    }

    /// In-range knot interval holding `x`: the unique `i ∈ [3, k−1]` with
    /// `t_i ≤ x < t_{i+1}`, except `x = hi` falls in the last interval.
    fn interval_index(&self, x: f64) -> usize {
        let mut i = 3;
        while i < self.k - 1 && x >= self.knots[i + 1] {
            i += 1;
        }
        i
    }

    /// Cox–de Boor recursion for B_{j,order}; order-1 membership is decided
    /// by the single interval index, so exactly one indicator fires.
    fn value(&self, j: usize, order: usize, x: f64, ival: usize) -> f64 {
        let t = &self.knots;
        if order == 1 {
            return if j == ival { 1.0 } else { 0.0 };
        }
        let left = {
            let span = t[j + order - 1] - t[j];
            if span > 0.0 {
                (x - t[j]) / span * self.value(j, order - 1, x, ival)
            } else {
                0.0
            }
        };
        let right = {
            let span = t[j + order] - t[j + 1];
            if span > 0.0 {
                (t[j + order] - x) / span * self.value(j + 1, order - 1, x, ival)
            } else {
                0.0
            }
        };
        left + right
    }

    /// `k×k` second-order difference penalty `D₂ᵀD₂`; its null space holds
    /// the coefficient vectors whose spline is linear in `x`.
    pub fn penalty(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut d2 = DMatrix::zeros(k - 2, k);
        for r in 0..k - 2 {
            d2[(r, r)] = 1.0;
            d2[(r, r + 1)] = -2.0;
            d2[(r, r + 2)] = 1.0;
        }
        d2.transpose() * d2
    }
}

/// A spline basis with the sum-to-zero constraint absorbed: the `k` raw
/// functions are reparameterized by an orthonormal `Z` (k×(k−1)) chosen so
/// the centered columns sum to zero over the training covariate values.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredBasis {
    pub basis: SplineBasis,
    /// Orthonormal null-space basis of the column-sum constraint.
    pub z: DMatrix<f64>,
    /// Centered penalty `Zᵀ (D₂ᵀD₂) Z`, symmetric PSD.
    pub penalty: DMatrix<f64>,
}

impl CenteredBasis {
    /// Build from training covariate values: knots span their observed
    /// range, and the constraint is the column sum over exactly these values.
    pub fn from_training(k: usize, xs: &[f64]) -> Result<Self, GamError> {
        if xs.is_empty() {
            return Err(GamError::NoRows);
        }
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let basis = SplineBasis::new(k, lo, hi)?;
        // Column sums of the raw basis over the training values.
        let mut c = DVector::zeros(k);
        for &x in xs {
            c += basis.row(x);
        }
        let z = householder_null_space(&c);
        let penalty = z.transpose() * basis.penalty() * &z;
        Ok(Self { basis, z, penalty })
    }

    /// Centered basis row (length k−1) at `x`, linear beyond the range.
    pub fn row(&self, x: f64) -> DVector<f64> {
        self.z.transpose() * self.basis.row(x)
    }

    pub fn dim(&self) -> usize {
        self.basis.k - 1
    }
}

/// Columns 1..k of the Householder reflector that maps `c` onto ±‖c‖e₁:
/// an orthonormal basis of the hyperplane orthogonal to `c`.
fn householder_null_space(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let norm = c.norm();
    let mut u = c.clone();
    u[0] += c[0].signum() * norm;
    let scale = 2.0 / u.dot(&u);
    let mut h = DMatrix::identity(k, k);
    for i in 0..k {
        for j in 0..k {
            h[(i, j)] -= scale * u[i] * u[j];
        }
    }
    h.columns(1, k - 1).into_owned()
}
