//! Vectors, signal pairs, and the rank-two machinery.
//!
//! The central object of the crate is the residual matrix `X = w xᵀ - w̄ x̄ᵀ`
//! for a candidate pair `(w, x)` and a reference pair `(w̄, x̄)`. `X` has rank
//! at most two, so nothing here ever materializes a `d1 × d2` matrix: we build
//! orthonormal bases for span{w, w̄} and span{x, x̄}, express `X` through a
//! `2 × 2` core, and read singular values and singular vectors off a
//! closed-form `2 × 2` SVD. All operations are `O(d1 + d2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual norms below `SECOND_COLUMN_TOL * |b|` count as a collinear span;
/// the second basis column is then zeroed instead of normalizing noise.
const SECOND_COLUMN_TOL: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Small vector helpers. Hot paths in the sample objective run through these,
// so they stay plain loops over slices.
// ---------------------------------------------------------------------------

/// Dot product with four independent accumulators. The lane split lets the
/// compiler keep multiple FMAs in flight; the summation order is fixed, so
/// results are bit-stable across runs and platforms.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n4 = a.len() & !3;
    let mut acc = [0.0f64; 4];
    let mut i = 0;
    while i < n4 {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < a.len() {
        tail += a[i] * b[i];
        i += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// y += alpha * x
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// A point (w, x) in the product space R^d1 x R^d2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPair {
    pub w: Vec<f64>,
    pub x: Vec<f64>,
}

impl SignalPair {
    pub fn new(w: Vec<f64>, x: Vec<f64>) -> Self {
        Self { w, x }
    }

    /// The canonical reference pair (e1, e1): first standard basis vector in
    /// each factor. This is the ground truth used by the experiment protocol.
    pub fn canonical(d1: usize, d2: usize) -> Self {
        assert!(d1 > 0 && d2 > 0, "factor dimensions must be positive");
        let mut w = vec![0.0; d1];
        let mut x = vec![0.0; d2];
        w[0] = 1.0;
        x[0] = 1.0;
        Self { w, x }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w.len(), self.x.len())
    }

    /// Euclidean norm of the concatenated vector (w, x).
    pub fn norm(&self) -> f64 {
        (norm_sq(&self.w) + norm_sq(&self.x)).sqrt()
    }

    /// Frobenius norm of the outer product w xᵀ, i.e. |w|·|x|.
    pub fn product_norm(&self) -> f64 {
        norm(&self.w) * norm(&self.x)
    }
}

/// Orthonormal basis of span{a, b} with fixed conventions: column 1 is a
/// normalized, column 2 is b orthogonalized against it (modified Gram-Schmidt
/// with one reorthogonalization pass). Zero or collinear inputs yield zero
/// columns, so the number of nonzero columns equals dim span{a, b}.
///
/// Returns the two columns together with the coordinates of `a` and `b` in
/// that basis: `a = c_a[0] q1 + c_a[1] q2` and likewise for `b`.
pub fn orthonormal_basis_2(a: &[f64], b: &[f64]) -> ([Vec<f64>; 2], [f64; 2], [f64; 2]) {
    assert_eq!(a.len(), b.len(), "basis vectors must share a dimension");
    let d = a.len();

    let na = norm(a);
    let (q1, coords_a) = if na > 0.0 {
        (a.iter().map(|v| v / na).collect::<Vec<_>>(), [na, 0.0])
    } else {
        (vec![0.0; d], [0.0, 0.0])
    };

    let nb = norm(b);
    let mut r1 = dot(&q1, b);
    let mut res: Vec<f64> = b.iter().zip(&q1).map(|(bi, qi)| bi - r1 * qi).collect();
    // One reorthogonalization pass cleans up the cancellation that a single
    // projection leaves behind for nearly collinear inputs.
    let r1b = dot(&q1, &res);
    axpy(&mut res, -r1b, &q1);
    r1 += r1b;

    let nres = norm(&res);
    let (q2, coords_b) = if nres > SECOND_COLUMN_TOL * nb {
        (res.iter().map(|v| v / nres).collect::<Vec<_>>(), [r1, nres])
    } else {
        (vec![0.0; d], [r1, 0.0])
    };

    ([q1, q2], coords_a, coords_b)
}

/// 2 x 2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

pub(crate) fn mat2_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub(crate) fn mat2_t_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

/// The residual matrix X = w xᵀ - w̄ x̄ᵀ in factored form:
/// X = L · core · Rᵀ, with L and R holding the (orthonormal or zero) basis
/// columns of span{w, w̄} and span{x, x̄}.
#[derive(Debug, Clone)]
pub struct RankTwoRepresentation {
    pub left_basis: [Vec<f64>; 2],
    pub right_basis: [Vec<f64>; 2],
    pub core: Mat2,
}

impl RankTwoRepresentation {
    /// Entry X[i][j], reconstructed from the factored form. Intended for
    /// spot checks and diagnostics, not bulk work.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let mut sum = 0.0;
        for (k, lk) in self.left_basis.iter().enumerate() {
            for (l, rl) in self.right_basis.iter().enumerate() {
                sum += lk[i] * self.core[k][l] * rl[j];
            }
        }
        sum
    }
}

/// Factor X = w xᵀ - w̄ x̄ᵀ through shared bases:
/// core = c_w c_xᵀ - c_w̄ c_x̄ᵀ in the coordinates returned by
/// [`orthonormal_basis_2`]. Degenerate spans simply zero the corresponding
/// core row or column.
pub fn rank_two_decompose(p: &SignalPair, reference: &SignalPair) -> RankTwoRepresentation {
    assert_eq!(p.dims(), reference.dims(), "pairs must share dimensions");
    let (left_basis, cw, cwr) = orthonormal_basis_2(&p.w, &reference.w);
    let (right_basis, cx, cxr) = orthonormal_basis_2(&p.x, &reference.x);
    let mut core = [[0.0; 2]; 2];
    for k in 0..2 {
        for l in 0..2 {
            core[k][l] = cw[k] * cx[l] - cwr[k] * cxr[l];
        }
    }
    RankTwoRepresentation {
        left_basis,
        right_basis,
        core,
    }
}

/// Ordered singular values: s1 >= s2 >= 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPair {
    pub s1: f64,
    pub s2: f64,
}

impl SingularPair {
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        if s1.is_nan() || s2.is_nan() || s2 < 0.0 || s1 < s2 {
            return Err(Error::UnorderedSingularValues(s1, s2));
        }
        Ok(Self { s1, s2 })
    }

    /// s1 / s2, or `None` when s2 = 0 (the ratio would be infinite or 0/0).
    pub fn condition_number(&self) -> Option<f64> {
        (self.s2 > 0.0).then(|| self.s1 / self.s2)
    }
}

/// Singular value decomposition of a 2 x 2 matrix: m = u · diag(s) · vᵀ,
/// with u and v orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct TwoByTwoSvd {
    pub u: Mat2,
    pub s: SingularPair,
    pub v: Mat2,
}

fn rotation(angle: f64) -> Mat2 {
    let (sin, cos) = angle.sin_cos();
    [[cos, -sin], [sin, cos]]
}

/// Closed-form SVD of a 2 x 2 matrix via two rotations.
///
/// Writing m = rot(phi) · diag(sx, sy) · rot(theta)ᵀ (sy possibly negative),
/// the half-sum/half-difference combinations of the entries give
///   (m00 + m11, m10 - m01) = (sx + sy) · (cos, sin)(phi - theta),
///   (m00 - m11, m10 + m01) = (sx - sy) · (cos, sin)(phi + theta),
/// so the two radii and two angles fall out of `hypot` and `atan2`. A
/// negative sy is absorbed by flipping the second column of v. The branch
/// structure is complete: zero matrices, rank-one matrices, and repeated
/// singular values all land on valid orthogonal factors.
pub fn svd_2x2(m: Mat2) -> TwoByTwoSvd {
    let e = 0.5 * (m[0][0] + m[1][1]);
    let f = 0.5 * (m[0][0] - m[1][1]);
    let g = 0.5 * (m[1][0] + m[0][1]);
    let h = 0.5 * (m[1][0] - m[0][1]);

    let q = f64::hypot(e, h);
    let r = f64::hypot(f, g);
    let sum_angle = g.atan2(f); // phi + theta
    let dif_angle = h.atan2(e); // phi - theta

    let u = rotation(0.5 * (sum_angle + dif_angle));
    let mut v = rotation(0.5 * (sum_angle - dif_angle));

    let s1 = q + r;
    let sy = q - r;
    if sy < 0.0 {
        v[0][1] = -v[0][1];
        v[1][1] = -v[1][1];
    }
    let s = SingularPair {
        s1,
        s2: sy.abs().min(s1),
    };
    TwoByTwoSvd { u, s, v }
}

/// Singular values of X = w xᵀ - w̄ x̄ᵀ, computed through the rank-two
/// factorization without forming X.
pub fn singular_values(p: &SignalPair, reference: &SignalPair) -> SingularPair {
    svd_2x2(rank_two_decompose(p, reference).core).s
}

/// Frobenius norm of X = w xᵀ - w̄ x̄ᵀ via the inner-product expansion
///
/// ```text
///     |X|_F^2 = |w|^2 |x|^2 - 2 <w, w̄> <x, x̄> + |w̄|^2 |x̄|^2.
/// ```
///
/// Near exact solutions the expansion cancels to roundoff and can go
/// slightly negative; it is clamped at zero.
pub fn residual_frobenius(p: &SignalPair, reference: &SignalPair) -> f64 {
    let sq = norm_sq(&p.w) * norm_sq(&p.x)
        - 2.0 * dot(&p.w, &reference.w) * dot(&p.x, &reference.x)
        + norm_sq(&reference.w) * norm_sq(&reference.x);
    sq.max(0.0).sqrt()
}
