//! The two parametric models: fully-connected nets and one-channel
//! convolutional nets, with exact reverse-mode gradients, forward-over-reverse
//! Hessians and the weight-space group action τ.
//!
//! Conventions, fixed once here:
//! - FC layer `l` is a `d_l × d_{l-1}` matrix; the last layer has one row and
//!   there are no bias terms. The activation is applied after every layer but
//!   the last.
//! - The CNN computes a circular convolution `c[m] = Σ_j w[j]·x[(m−j) mod d]`
//!   (zero-based; the one-based presentation maps `j=1` to the current pixel),
//!   pools `r` contiguous blocks of length `d'`, applies the head `a` and
//!   adds the bias.
//! - relu has subgradient 0 at the kink; the quadratic activation is `t²`.
//! - The logistic surrogate is scaled by `1/ln 2` so that `ℓ(0) = 1`.

pub mod ad;
mod serialize;

use crate::algebra::{AlgebraError, GroupElement, Matrix, Vector};
use ad::{Dual, Real};

pub use serialize::{load_weights, read_weights, save_weights, write_weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Quadratic,
    Relu,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    SumOfSquares,
    Sum,
}

/// Surrogate training losses. `Logistic` is `log(1+e^{−z})/log 2` on the
/// margin `z = y·score`; `Squared` is `(score − y)²` without the ½ factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Logistic,
    Squared,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid geometry: {0}")]
    BadGeometry(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("weight action is undefined for this model/group combination")]
    TauUndefined,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad weight file: {0}")]
    BadFormat(String),
}

#[derive(Clone, Debug)]
pub struct FcWeights {
    pub layers: Vec<Matrix>,
    pub activation: Activation,
}

impl FcWeights {
    pub fn new(layers: Vec<Matrix>, activation: Activation) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::BadGeometry("no layers".into()));
        }
        for w in layers.windows(2) {
            if w[1].ncols() != w[0].nrows() {
                return Err(ModelError::BadGeometry(format!(
                    "layer dims do not chain: {}x{} then {}x{}",
                    w[0].nrows(),
                    w[0].ncols(),
                    w[1].nrows(),
                    w[1].ncols()
                )));
            }
        }
        if layers.last().unwrap().nrows() != 1 {
            return Err(ModelError::BadGeometry("output layer must have one row".into()));
        }
        Ok(FcWeights { layers, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].ncols()];
        dims.extend(self.layers.iter().map(|w| w.nrows()));
        dims
    }
}

#[derive(Clone, Debug)]
pub struct CnnWeights {
    /// Convolution filter, length k ≤ d.
    pub filter: Vector,
    /// Head over the r pooled blocks.
    pub head: Vector,
    pub bias: f64,
    /// Block length d'; the input dimension is d = d'·r.
    pub dprime: usize,
    pub pool: PoolKind,
}

impl CnnWeights {
    pub fn new(
        filter: Vector,
        head: Vector,
        bias: f64,
        dprime: usize,
        pool: PoolKind,
    ) -> Result<Self, ModelError> {
        let d = dprime * head.len();
        if dprime == 0 || head.is_empty() {
            return Err(ModelError::BadGeometry("empty CNN geometry".into()));
        }
        if filter.len() == 0 || filter.len() > d {
            return Err(ModelError::BadGeometry(format!(
                "filter length {} must be in 1..=d={}",
                filter.len(),
                d
            )));
        }
        Ok(CnnWeights {
            filter,
            head,
            bias,
            dprime,
            pool,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.dprime * self.head.len()
    }
}

#[derive(Clone, Debug)]
pub enum ParamWeights {
    Fc(FcWeights),
    Cnn(CnnWeights),
}

/// Geometry of a model: everything needed to interpret a flat parameter
/// vector.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelGeometry {
    Fc {
        /// `[d_0, d_1, …, d_L]` with `d_L = 1`.
        dims: Vec<usize>,
        activation: Activation,
    },
    Cnn {
        d: usize,
        dprime: usize,
        r: usize,
        k: usize,
        pool: PoolKind,
    },
}

impl ModelGeometry {
    pub fn fc(dims: Vec<usize>, activation: Activation) -> Result<Self, ModelError> {
        if dims.len() < 2 || *dims.last().unwrap() != 1 || dims.iter().any(|&d| d == 0) {
            return Err(ModelError::BadGeometry(format!("bad FC dims {dims:?}")));
        }
        Ok(ModelGeometry::Fc { dims, activation })
    }

    pub fn cnn(d: usize, r: usize, k: usize, pool: PoolKind) -> Result<Self, ModelError> {
        if r == 0 || d == 0 || d % r != 0 {
            return Err(ModelError::BadGeometry(format!(
                "d = {d} must be a positive multiple of r = {r}"
            )));
        }
        if k == 0 || k > d {
            return Err(ModelError::BadGeometry(format!("k = {k} must be in 1..=d={d}")));
        }
        Ok(ModelGeometry::Cnn {
            d,
            dprime: d / r,
            r,
            k,
            pool,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ModelGeometry::Fc { dims, .. } => dims[0],
            ModelGeometry::Cnn { d, .. } => *d,
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            ModelGeometry::Fc { dims, .. } => {
                dims.windows(2).map(|w| w[0] * w[1]).sum()
            }
            ModelGeometry::Cnn { r, k, .. } => k + r + 1,
        }
    }

    /// Flat index range of the first layer (FC) or the filter (CNN).
    pub fn first_layer_range(&self) -> std::ops::Range<usize> {
        match self {
            ModelGeometry::Fc { dims, .. } => 0..dims[0] * dims[1],
            ModelGeometry::Cnn { k, .. } => 0..*k,
        }
    }

    /// Flat index range of the CNN head and bias (the "second layer").
    pub fn cnn_head_range(&self) -> Option<std::ops::Range<usize>> {
        match self {
            ModelGeometry::Cnn { r, k, .. } => Some(*k..*k + *r + 1),
            _ => None,
        }
    }
}

impl ParamWeights {
    pub fn geometry(&self) -> ModelGeometry {
        match self {
            ParamWeights::Fc(w) => ModelGeometry::Fc {
                dims: w.dims(),
                activation: w.activation,
            },
            ParamWeights::Cnn(w) => ModelGeometry::Cnn {
                d: w.input_dim(),
                dprime: w.dprime,
                r: w.head.len(),
                k: w.filter.len(),
                pool: w.pool,
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ParamWeights::Fc(w) => w.input_dim(),
            ParamWeights::Cnn(w) => w.input_dim(),
        }
    }

    /// Flatten in declaration order: FC layers row-major in order, or CNN
    /// filter, head, bias.
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            ParamWeights::Fc(w) => {
                let mut out = Vec::new();
                for layer in &w.layers {
                    for i in 0..layer.nrows() {
                        for j in 0..layer.ncols() {
                            out.push(layer[(i, j)]);
                        }
                    }
                }
                out
            }
            ParamWeights::Cnn(w) => {
                let mut out: Vec<f64> = w.filter.iter().copied().collect();
                out.extend(w.head.iter().copied());
                out.push(w.bias);
                out
            }
        }
    }

    pub fn from_flat(geom: &ModelGeometry, theta: &[f64]) -> Result<Self, ModelError> {
        if theta.len() != geom.num_params() {
            return Err(ModelError::DimensionMismatch {
                expected: geom.num_params(),
                got: theta.len(),
            });
        }
        match geom {
            ModelGeometry::Fc { dims, activation } => {
                let mut layers = Vec::new();
                let mut off = 0;
                for w in dims.windows(2) {
                    let (rows, cols) = (w[1], w[0]);
                    layers.push(Matrix::from_row_slice(rows, cols, &theta[off..off + rows * cols]));
                    off += rows * cols;
                }
                Ok(ParamWeights::Fc(FcWeights::new(layers, *activation)?))
            }
            ModelGeometry::Cnn {
                dprime, r, k, pool, ..
            } => {
                let filter = Vector::from_column_slice(&theta[..*k]);
                let head = Vector::from_column_slice(&theta[*k..*k + *r]);
                let bias = theta[*k + *r];
                Ok(ParamWeights::Cnn(CnnWeights::new(
                    filter, head, bias, *dprime, *pool,
                )?))
            }
        }
    }
}

#[inline]
fn act<T: Real>(a: Activation, z: T) -> T {
    match a {
        Activation::Quadratic => z * z,
        Activation::Relu => {
            if z.value() > 0.0 {
                z
            } else {
                T::ZERO
            }
        }
        Activation::Identity => z,
    }
}

#[inline]
fn act_deriv<T: Real>(a: Activation, z: T) -> T {
    match a {
        Activation::Quadratic => z.mul_f64(2.0),
        Activation::Relu => {
            if z.value() > 0.0 {
                T::ONE
            } else {
                T::ZERO
            }
        }
        Activation::Identity => T::ONE,
    }
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Loss of one sample given the raw score.
fn loss_value<T: Real>(loss: Loss, score: T, y: f64) -> T {
    match loss {
        Loss::Squared => {
            let r = score - T::from_f64(y);
            r * r
        }
        Loss::Logistic => {
            let z = score.mul_f64(y);
            // log(1+e^{-z})/ln2, branch on the primal for stability
            let l = if z.value() >= 0.0 {
                (T::ONE + (-z).exp()).ln()
            } else {
                (T::ONE + z.exp()).ln() - z
            };
            l.mul_f64(1.0 / LN_2)
        }
    }
}

/// ∂loss/∂score for one sample.
fn loss_dscore<T: Real>(loss: Loss, score: T, y: f64) -> T {
    match loss {
        Loss::Squared => (score - T::from_f64(y)).mul_f64(2.0),
        Loss::Logistic => {
            let z = score.mul_f64(y);
            // dl/dz = -sigmoid(-z)/ln2; dz/dscore = y
            let s = if z.value() >= 0.0 {
                let t = (-z).exp();
                t / (T::ONE + t)
            } else {
                T::ONE / (T::ONE + z.exp())
            };
            (-s).mul_f64(y / LN_2)
        }
    }
}

/// Forward pass over flat parameters; generic over the scalar.
pub fn score_flat<T: Real>(geom: &ModelGeometry, theta: &[T], x: &Vector) -> T {
    match geom {
        ModelGeometry::Fc { dims, activation } => {
            let mut a: Vec<T> = x.iter().map(|&v| T::from_f64(v)).collect();
            let mut off = 0;
            let num_layers = dims.len() - 1;
            for (l, w) in dims.windows(2).enumerate() {
                let (rows, cols) = (w[1], w[0]);
                let mut z = vec![T::ZERO; rows];
                for i in 0..rows {
                    let mut acc = T::ZERO;
                    let base = off + i * cols;
                    for j in 0..cols {
                        acc += theta[base + j] * a[j];
                    }
                    z[i] = acc;
                }
                off += rows * cols;
                if l + 1 < num_layers {
                    for v in z.iter_mut() {
                        *v = act(*activation, *v);
                    }
                }
                a = z;
            }
            a[0]
        }
        ModelGeometry::Cnn {
            d,
            dprime,
            r,
            k,
            pool,
        } => {
            let mut score = theta[*k + *r]; // bias
            for (i, block) in (0..*r).map(|i| (i, i * dprime)) {
                let mut pooled = T::ZERO;
                for m in block..block + dprime {
                    let mut c = T::ZERO;
                    for j in 0..*k {
                        c += theta[j].mul_f64(x[(m + d - j) % d]);
                    }
                    pooled += match pool {
                        PoolKind::SumOfSquares => c * c,
                        PoolKind::Sum => c,
                    };
                }
                score += theta[*k + i] * pooled;
            }
            score
        }
    }
}

/// Summed surrogate loss and its exact gradient over flat parameters.
pub fn loss_and_grad_flat<T: Real>(
    geom: &ModelGeometry,
    theta: &[T],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
) -> (T, Vec<T>) {
    assert_eq!(xs.len(), ys.len());
    let mut total = T::ZERO;
    let mut grad = vec![T::ZERO; theta.len()];
    for (x, &y) in xs.iter().zip(ys) {
        match geom {
            ModelGeometry::Fc { dims, activation } => {
                fc_backprop(dims, *activation, theta, x, y, loss, &mut total, &mut grad);
            }
            ModelGeometry::Cnn {
                d,
                dprime,
                r,
                k,
                pool,
            } => {
                cnn_backprop(
                    *d, *dprime, *r, *k, *pool, theta, x, y, loss, &mut total, &mut grad,
                );
            }
        }
    }
    (total, grad)
}

#[allow(clippy::too_many_arguments)]
fn fc_backprop<T: Real>(
    dims: &[usize],
    activation: Activation,
    theta: &[T],
    x: &Vector,
    y: f64,
    loss: Loss,
    total: &mut T,
    grad: &mut [T],
) {
    let num_layers = dims.len() - 1;
    // forward, keeping pre-activations and activations
    let mut acts: Vec<Vec<T>> = Vec::with_capacity(num_layers + 1);
    let mut zs: Vec<Vec<T>> = Vec::with_capacity(num_layers);
    acts.push(x.iter().map(|&v| T::from_f64(v)).collect());
    let mut offsets = Vec::with_capacity(num_layers);
    let mut off = 0;
    for (l, w) in dims.windows(2).enumerate() {
        let (rows, cols) = (w[1], w[0]);
        offsets.push(off);
        let prev = acts.last().unwrap();
        let mut z = vec![T::ZERO; rows];
        for i in 0..rows {
            let base = off + i * cols;
            let mut acc = T::ZERO;
            for j in 0..cols {
                acc += theta[base + j] * prev[j];
            }
            z[i] = acc;
        }
        off += rows * cols;
        let a = if l + 1 < num_layers {
            z.iter().map(|&v| act(activation, v)).collect()
        } else {
            z.clone()
        };
        zs.push(z);
        acts.push(a);
    }
    let score = acts.last().unwrap()[0];
    *total += loss_value(loss, score, y);

    // backward
    let mut delta = vec![loss_dscore(loss, score, y)]; // d loss / d z_L
    for l in (0..num_layers).rev() {
        let (rows, cols) = (dims[l + 1], dims[l]);
        let base = offsets[l];
        let prev = &acts[l];
        // grad of this layer: delta ⊗ prev
        for i in 0..rows {
            let di = delta[i];
            let row = base + i * cols;
            for j in 0..cols {
                grad[row + j] += di * prev[j];
            }
        }
        if l > 0 {
            // delta for the previous layer: (Wᵀ delta) ⊙ σ'(z_{l-1})
            let mut next = vec![T::ZERO; cols];
            for i in 0..rows {
                let di = delta[i];
                let row = base + i * cols;
                for j in 0..cols {
                    next[j] += theta[row + j] * di;
                }
            }
            let z_prev = &zs[l - 1];
            for j in 0..cols {
                next[j] = next[j] * act_deriv(activation, z_prev[j]);
            }
            delta = next;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cnn_backprop<T: Real>(
    d: usize,
    dprime: usize,
    r: usize,
    k: usize,
    pool: PoolKind,
    theta: &[T],
    x: &Vector,
    y: f64,
    loss: Loss,
    total: &mut T,
    grad: &mut [T],
) {
    // forward
    let mut conv = vec![T::ZERO; d];
    for (m, c) in conv.iter_mut().enumerate() {
        for j in 0..k {
            *c += theta[j].mul_f64(x[(m + d - j) % d]);
        }
    }
    let mut pooled = vec![T::ZERO; r];
    for (i, p) in pooled.iter_mut().enumerate() {
        for m in i * dprime..(i + 1) * dprime {
            *p += match pool {
                PoolKind::SumOfSquares => conv[m] * conv[m],
                PoolKind::Sum => conv[m],
            };
        }
    }
    let mut score = theta[k + r];
    for i in 0..r {
        score += theta[k + i] * pooled[i];
    }
    *total += loss_value(loss, score, y);

    // backward
    let ds = loss_dscore(loss, score, y);
    grad[k + r] += ds; // bias
    for i in 0..r {
        grad[k + i] += ds * pooled[i]; // head
    }
    for m in 0..d {
        let i = m / dprime;
        let dconv = match pool {
            PoolKind::SumOfSquares => ds * theta[k + i] * conv[m].mul_f64(2.0),
            PoolKind::Sum => ds * theta[k + i],
        };
        for j in 0..k {
            grad[j] += dconv.mul_f64(x[(m + d - j) % d]);
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected != got {
        return Err(ModelError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// FC forward evaluation.
pub fn fc_forward(w: &FcWeights, x: &Vector) -> Result<f64, ModelError> {
    check_dim(w.input_dim(), x.len())?;
    let pw = ParamWeights::Fc(w.clone());
    Ok(score_flat(&pw.geometry(), &pw.to_flat(), x))
}

/// CNN forward evaluation.
pub fn cnn_forward(w: &CnnWeights, x: &Vector) -> Result<f64, ModelError> {
    check_dim(w.input_dim(), x.len())?;
    let pw = ParamWeights::Cnn(w.clone());
    Ok(score_flat(&pw.geometry(), &pw.to_flat(), x))
}

/// Model-kind-agnostic score.
pub fn score(w: &ParamWeights, x: &Vector) -> Result<f64, ModelError> {
    check_dim(w.input_dim(), x.len())?;
    Ok(score_flat(&w.geometry(), &w.to_flat(), x))
}

/// Exact gradient of the summed surrogate loss, in the shape of the weights.
pub fn grad(
    w: &ParamWeights,
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
) -> Result<ParamWeights, ModelError> {
    if xs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let geom = w.geometry();
    let (_, g) = loss_and_grad_flat(&geom, &w.to_flat(), xs, ys, loss);
    ParamWeights::from_flat(&geom, &g)
}

/// Hessian of the summed surrogate loss over `subset` (default: all
/// parameters), by forward-over-reverse differentiation.
pub fn hessian(
    geom: &ModelGeometry,
    theta: &[f64],
    xs: &[Vector],
    ys: &[f64],
    loss: Loss,
    subset: Option<std::ops::Range<usize>>,
) -> Result<Matrix, ModelError> {
    if xs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let range = subset.unwrap_or(0..theta.len());
    let m = range.len();
    let mut h = Matrix::zeros(m, m);
    let mut dual: Vec<Dual> = theta.iter().map(|&v| Dual::constant(v)).collect();
    for (col, i) in range.clone().enumerate() {
        dual[i].d = 1.0;
        let (_, g) = loss_and_grad_flat(geom, &dual, xs, ys, loss);
        for (row, j) in range.clone().enumerate() {
            h[(row, col)] = g[j].d;
        }
        dual[i].d = 0.0;
    }
    Ok(h)
}

/// The weight-space action τ(g): replaces the first layer `W₁` by `W₁ g⁻¹`
/// and leaves the rest untouched, so that the network composed with `g` is
/// functionally unchanged.
pub fn weight_action(g: &GroupElement, w: &FcWeights) -> Result<FcWeights, ModelError> {
    check_dim(w.input_dim(), g.dim())?;
    let mut layers = w.layers.clone();
    layers[0] = &w.layers[0] * g.inverse_matrix();
    FcWeights::new(layers, w.activation)
}

/// τ on either model kind; only defined for FC (the CNN's weight space has no
/// matching action for these groups).
pub fn tau(g: &GroupElement, w: &ParamWeights) -> Result<ParamWeights, ModelError> {
    match w {
        ParamWeights::Fc(fc) => Ok(ParamWeights::Fc(weight_action(g, fc)?)),
        ParamWeights::Cnn(_) => Err(ModelError::TauUndefined),
    }
}

#[cfg(test)]
mod tests;
