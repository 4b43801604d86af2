//! Group elements acting on the input space.
//!
//! Four kinds are supported: orthogonal, permutation, sign-flip and
//! general-linear. The discrete kinds keep their compact representation
//! (index map, sign vector) and materialize a dense matrix on demand.

use super::{AlgebraError, Matrix, RngStream, Vector};

pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Orthogonal,
    Permutation,
    SignFlip,
    GeneralLinear,
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GroupKind::Orthogonal => "orthogonal",
            GroupKind::Permutation => "permutation",
            GroupKind::SignFlip => "sign-flip",
            GroupKind::GeneralLinear => "general-linear",
        };
        f.write_str(s)
    }
}

/// An invertible transform of the input space together with enough structure
/// to apply it, invert it and push it onto first-layer weights.
#[derive(Clone, Debug)]
pub enum GroupElement {
    Orthogonal(Matrix),
    /// Forward index map: `y[i] = x[perm[i]]`.
    Permutation(Vec<usize>),
    /// Entries in {-1, +1}.
    SignFlip(Vec<f64>),
    GeneralLinear {
        forward: Matrix,
        inverse: Matrix,
        cond: f64,
    },
}

impl GroupElement {
    /// Checked constructor for the orthogonal kind: `‖gᵀg − I‖_max ≤ 1e-10`.
    pub fn orthogonal(m: Matrix) -> Result<Self, AlgebraError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(AlgebraError::BadDimensions);
        }
        let dev = max_abs(&(m.transpose() * &m - Matrix::identity(m.nrows(), m.ncols())));
        if dev > ORTHOGONALITY_TOL {
            return Err(AlgebraError::NotOrthogonal { deviation: dev });
        }
        Ok(GroupElement::Orthogonal(m))
    }

    pub fn permutation(perm: Vec<usize>) -> Result<Self, AlgebraError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(AlgebraError::NotBijection);
            }
            seen[p] = true;
        }
        Ok(GroupElement::Permutation(perm))
    }

    pub fn sign_flip(signs: Vec<f64>) -> Result<Self, AlgebraError> {
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(AlgebraError::BadSigns);
        }
        Ok(GroupElement::SignFlip(signs))
    }

    /// General-linear element; the condition number is computed once and the
    /// element is rejected if it exceeds `max_cond`.
    pub fn general_linear(m: Matrix, max_cond: f64) -> Result<Self, AlgebraError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(AlgebraError::BadDimensions);
        }
        let svd = m.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cond = smax / smin;
        if !cond.is_finite() || cond > max_cond {
            return Err(AlgebraError::IllConditioned { cond });
        }
        let inverse = m
            .clone()
            .try_inverse()
            .ok_or(AlgebraError::IllConditioned { cond })?;
        Ok(GroupElement::GeneralLinear {
            forward: m,
            inverse,
            cond,
        })
    }

    pub fn identity(d: usize) -> Self {
        GroupElement::Permutation((0..d).collect())
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::Orthogonal(_) => GroupKind::Orthogonal,
            GroupElement::Permutation(_) => GroupKind::Permutation,
            GroupElement::SignFlip(_) => GroupKind::SignFlip,
            GroupElement::GeneralLinear { .. } => GroupKind::GeneralLinear,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GroupElement::Orthogonal(m) => m.nrows(),
            GroupElement::Permutation(p) => p.len(),
            GroupElement::SignFlip(s) => s.len(),
            GroupElement::GeneralLinear { forward, .. } => forward.nrows(),
        }
    }

    /// Forward transform.
    pub fn apply(&self, x: &Vector) -> Result<Vector, AlgebraError> {
        if x.len() != self.dim() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            GroupElement::Orthogonal(m) => m * x,
            GroupElement::Permutation(p) => Vector::from_fn(p.len(), |i, _| x[p[i]]),
            GroupElement::SignFlip(s) => Vector::from_fn(s.len(), |i, _| s[i] * x[i]),
            GroupElement::GeneralLinear { forward, .. } => forward * x,
        })
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Orthogonal(m) => GroupElement::Orthogonal(m.transpose()),
            GroupElement::Permutation(p) => {
                let mut inv = vec![0usize; p.len()];
                for (i, &pi) in p.iter().enumerate() {
                    inv[pi] = i;
                }
                GroupElement::Permutation(inv)
            }
            GroupElement::SignFlip(s) => GroupElement::SignFlip(s.clone()),
            GroupElement::GeneralLinear {
                forward,
                inverse,
                cond,
            } => GroupElement::GeneralLinear {
                forward: inverse.clone(),
                inverse: forward.clone(),
                cond: *cond,
            },
        }
    }

    /// Dense forward matrix.
    pub fn matrix(&self) -> Matrix {
        match self {
            GroupElement::Orthogonal(m) => m.clone(),
            GroupElement::Permutation(p) => {
                let mut m = Matrix::zeros(p.len(), p.len());
                for (i, &pi) in p.iter().enumerate() {
                    m[(i, pi)] = 1.0;
                }
                m
            }
            GroupElement::SignFlip(s) => Matrix::from_diagonal(&Vector::from_vec(s.clone())),
            GroupElement::GeneralLinear { forward, .. } => forward.clone(),
        }
    }

    pub fn inverse_matrix(&self) -> Matrix {
        self.inverse().matrix()
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, AlgebraError> {
        if self.dim() != other.dim() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        match (self, other) {
            (GroupElement::Permutation(a), GroupElement::Permutation(b)) => {
                // (a∘b)[i] = b[a[i]] since apply reads y[i] = x[p[i]].
                GroupElement::permutation(a.iter().map(|&i| b[i]).collect())
            }
            (GroupElement::SignFlip(a), GroupElement::SignFlip(b)) => {
                GroupElement::sign_flip(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            (GroupElement::Orthogonal(_), GroupElement::Orthogonal(_))
            | (GroupElement::Orthogonal(_), GroupElement::Permutation(_))
            | (GroupElement::Permutation(_), GroupElement::Orthogonal(_))
            | (GroupElement::Orthogonal(_), GroupElement::SignFlip(_))
            | (GroupElement::SignFlip(_), GroupElement::Orthogonal(_))
            | (GroupElement::Permutation(_), GroupElement::SignFlip(_))
            | (GroupElement::SignFlip(_), GroupElement::Permutation(_)) => {
                GroupElement::orthogonal(self.matrix() * other.matrix())
            }
            _ => {
                let m = self.matrix() * other.matrix();
                GroupElement::general_linear(m, f64::INFINITY)
            }
        }
    }

    /// Condition number where tracked (general-linear); 1 for isometries.
    pub fn cond(&self) -> f64 {
        match self {
            GroupElement::GeneralLinear { cond, .. } => *cond,
            _ => 1.0,
        }
    }
}

/// `g(x)`: forward action on a point. Free-function form of
/// [`GroupElement::apply`].
pub fn apply_group(g: &GroupElement, x: &Vector) -> Result<Vector, AlgebraError> {
    g.apply(x)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal sign correction (Mezzadri 2007), so the distribution is exactly
/// rotation invariant rather than the biased raw-QR one.
pub fn haar_orthogonal(d: usize, rng: &mut RngStream) -> GroupElement {
    assert!(d >= 1, "dimension must be positive");
    let g = rng.gauss_matrix(d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    GroupElement::orthogonal(q).expect("QR output is orthogonal by construction")
}

/// Random invertible matrix with condition number at most `max_cond`:
/// `U diag(s) Vᵀ` with Haar `U`, `V` and log-uniform singular values in
/// `[1/√max_cond, √max_cond]`.
pub fn random_general_linear(d: usize, max_cond: f64, rng: &mut RngStream) -> GroupElement {
    assert!(max_cond >= 1.0);
    let u = haar_orthogonal(d, rng).matrix();
    let v = haar_orthogonal(d, rng).matrix();
    let half = max_cond.sqrt();
    let mut s = Vector::zeros(d);
    for i in 0..d {
        // log-uniform in [1/half, half]
        let t = rng.uniform();
        s[i] = (half.ln() * (2.0 * t - 1.0)).exp();
    }
    // Pin the extremes so the condition number is controlled but generic.
    s[0] = half;
    if d > 1 {
        s[d - 1] = 1.0 / half;
    }
    let m = &u * Matrix::from_diagonal(&s) * v.transpose();
    GroupElement::general_linear(m, max_cond * (1.0 + 1e-9))
        .expect("constructed with bounded condition number")
}

/// Matrix exponential of a skew-symmetric matrix by scaling-and-squaring on
/// the power series; the result is special orthogonal.
pub fn skew_exp(s: &Matrix) -> Result<GroupElement, AlgebraError> {
    if s.nrows() != s.ncols() || s.nrows() == 0 {
        return Err(AlgebraError::BadDimensions);
    }
    let skew_dev = max_abs(&(s + s.transpose()));
    if skew_dev > 1e-12 {
        return Err(AlgebraError::NotSkewSymmetric { deviation: skew_dev });
    }
    let d = s.nrows();
    // Scale so the series converges fast: ‖S/2^k‖_∞ ≤ 0.5.
    let norm_inf = (0..d)
        .map(|i| (0..d).map(|j| s[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let k = if norm_inf > 0.5 {
        (norm_inf / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = s / 2f64.powi(k as i32);

    // exp(A) by the power series, truncated at relative term 1e-16.
    let mut result = Matrix::identity(d, d);
    let mut term = Matrix::identity(d, d);
    for j in 1..200 {
        term = (&term * &a) / (j as f64);
        result += &term;
        if max_abs(&term) <= 1e-16 * max_abs(&result) {
            break;
        }
    }
    for _ in 0..k {
        result = &result * &result;
    }
    GroupElement::orthogonal(result)
}

pub(crate) fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}
