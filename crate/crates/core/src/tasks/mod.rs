//! Task generators: every distribution/hypothesis pair the experiments use,
//! group-composed ("rotated") variants, and the CIFAR-10 channel-norm loader.
//!
//! A task couples an input sampler with a deterministic labeler. Finite
//! support tasks expose their support exactly so test error can be computed
//! by enumeration instead of sampling.

mod cifar;

use crate::algebra::{AlgebraError, GroupElement, Matrix, RngStream, Vector};
use crate::sign_pm;

pub use cifar::{cifar_channel_norm, CifarError, CIFAR_DIM, CIFAR_RECORD_BYTES};

#[cfg(test)]
pub(crate) use cifar::synthetic_record as synthetic_cifar_record;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Sign,
    Real,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("dimension must satisfy {0}")]
    BadDimension(&'static str),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad labeled-set file: {0}")]
    BadFile(String),
}

/// A labeled dataset plus the seed that produced it.
#[derive(Clone, Debug)]
pub struct LabeledSet {
    pub points: Vec<Vector>,
    pub labels: Vec<f64>,
    pub seed: u64,
}

impl LabeledSet {
    pub fn new(points: Vec<Vector>, labels: Vec<f64>, seed: u64) -> Self {
        assert_eq!(points.len(), labels.len());
        LabeledSet {
            points,
            labels,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(|p| p.len()).unwrap_or(0)
    }

    /// Dataset with every point transformed by `g` (labels unchanged).
    pub fn transformed(&self, g: &GroupElement) -> Result<LabeledSet, AlgebraError> {
        let points = self
            .points
            .iter()
            .map(|x| g.apply(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LabeledSet::new(points, self.labels.clone(), self.seed))
    }

    /// CSV export with columns `x_0..x_{d-1}, y`.
    pub fn export_csv<W: std::io::Write>(&self, out: W) -> Result<(), TaskError> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.dim();
        let mut header: Vec<String> = (0..d).map(|i| format!("x_{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (x, y) in self.points.iter().zip(&self.labels) {
            let mut row: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            row.push(format!("{y}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn import_csv<R: std::io::Read>(input: R) -> Result<LabeledSet, TaskError> {
        let mut rdr = csv::Reader::from_reader(input);
        let d = rdr.headers()?.len().saturating_sub(1);
        if d == 0 {
            return Err(TaskError::BadFile("need at least one x column".into()));
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != d + 1 {
                return Err(TaskError::BadFile(format!(
                    "row has {} fields, expected {}",
                    rec.len(),
                    d + 1
                )));
            }
            let parse = |s: &str| -> Result<f64, TaskError> {
                s.parse()
                    .map_err(|_| TaskError::BadFile(format!("bad number {s:?}")))
            };
            let mut x = Vector::zeros(d);
            for i in 0..d {
                x[i] = parse(&rec[i])?;
            }
            points.push(x);
            labels.push(parse(&rec[d])?);
        }
        Ok(LabeledSet::new(points, labels, 0))
    }
}

#[derive(Clone, Debug)]
pub enum TaskSpec {
    /// Uniform over {±eᵢ}; label is the sign of the non-zero coordinate.
    OneHot,
    /// x ~ N(0, I); label = sign(Σ_{i<d/2} xᵢ² − Σ_{i≥d/2} xᵢ²).
    QuadraticSplit,
    /// x ~ N(0, I); label = sign(Σ αᵢ xᵢ²).
    AlphaQuadratic { alpha: Vector },
    /// x ~ N(0, I_{2d}); label = sign(x_{1:d}ᵀ U x_{d+1:2d}).
    HU { u: Matrix },
    /// x ~ N(0, I); y = xᵀMx (noise-free).
    QuadraticRegression { m: Matrix },
    /// Uniform over the 2d texture points sᵢ = eᵢ+eᵢ₊₂ (+1), tᵢ = eᵢ+eᵢ₊₁ (−1).
    Texture,
    /// Base task composed with a group element: samples g⁻¹(x), labels via
    /// base ∘ g.
    Rotated { base: Box<Task>, g: GroupElement },
    /// Uniform over an explicit labeled support.
    Fixed {
        points: Vec<Vector>,
        labels: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct Task {
    pub name: String,
    pub d: usize,
    pub kind: LabelKind,
    pub spec: TaskSpec,
}

impl Task {
    /// Deterministic label of a point.
    pub fn label(&self, x: &Vector) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        match &self.spec {
            TaskSpec::OneHot => {
                let (mut best, mut val) = (0usize, 0.0f64);
                for i in 0..self.d {
                    if x[i].abs() > val.abs() {
                        best = i;
                        val = x[i];
                    }
                }
                sign_pm(x[best])
            }
            TaskSpec::QuadraticSplit => {
                let h = self.d / 2;
                let s: f64 = (0..h).map(|i| x[i] * x[i]).sum::<f64>()
                    - (h..self.d).map(|i| x[i] * x[i]).sum::<f64>();
                sign_pm(s)
            }
            TaskSpec::AlphaQuadratic { alpha } => {
                sign_pm((0..self.d).map(|i| alpha[i] * x[i] * x[i]).sum())
            }
            TaskSpec::HU { u } => {
                let h = self.d / 2;
                let a = x.rows(0, h);
                let b = x.rows(h, h);
                sign_pm((a.transpose() * u * b)[(0, 0)])
            }
            TaskSpec::QuadraticRegression { m } => (x.transpose() * m * x)[(0, 0)],
            TaskSpec::Texture => {
                let d = self.d;
                // the support points have exactly two unit coordinates; +1
                // for a cyclic gap of 2, −1 for adjacent
                for i in 0..d {
                    if (x[i] - 1.0).abs() < 1e-9 && (x[(i + 2) % d] - 1.0).abs() < 1e-9 {
                        return 1.0;
                    }
                }
                -1.0
            }
            TaskSpec::Rotated { base, g } => {
                let gx = g.apply(x).expect("dimension checked at construction");
                base.label(&gx)
            }
            TaskSpec::Fixed { points, labels } => {
                // nearest support point decides; exact hits in practice
                let mut best = 0usize;
                let mut dist = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let d2 = (x - p).norm_squared();
                    if d2 < dist {
                        dist = d2;
                        best = i;
                    }
                }
                labels[best]
            }
        }
    }

    /// Draw one labeled sample.
    pub fn sample(&self, rng: &mut RngStream) -> (Vector, f64) {
        match &self.spec {
            TaskSpec::OneHot => {
                let i = rng.below(self.d);
                let y = rng.rademacher();
                let mut x = Vector::zeros(self.d);
                x[i] = y;
                (x, y)
            }
            TaskSpec::Texture => {
                let d = self.d;
                let i = rng.below(2 * d);
                let mut x = Vector::zeros(d);
                if i < d {
                    x[i] = 1.0;
                    x[(i + 2) % d] += 1.0;
                    (x, 1.0)
                } else {
                    let i = i - d;
                    x[i] = 1.0;
                    x[(i + 1) % d] += 1.0;
                    (x, -1.0)
                }
            }
            TaskSpec::Fixed { points, labels } => {
                let i = rng.below(points.len());
                (points[i].clone(), labels[i])
            }
            TaskSpec::Rotated { base, g } => {
                let (x, y) = base.sample(rng);
                (g.inverse().apply(&x).expect("dimension checked"), y)
            }
            _ => {
                let x = rng.gauss_vector(self.d);
                let y = self.label(&x);
                (x, y)
            }
        }
    }

    /// Draw an i.i.d. training set (finite-support tasks sample with
    /// replacement).
    pub fn sample_set(&self, n: usize, rng: &mut RngStream) -> LabeledSet {
        let seed = rng.seed();
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, y) = self.sample(rng);
            points.push(x);
            labels.push(y);
        }
        LabeledSet::new(points, labels, seed)
    }

    /// Exact support for finite-support tasks.
    pub fn support(&self) -> Option<Vec<(Vector, f64)>> {
        match &self.spec {
            TaskSpec::OneHot => {
                let mut s = Vec::with_capacity(2 * self.d);
                for i in 0..self.d {
                    for y in [1.0, -1.0] {
                        let mut x = Vector::zeros(self.d);
                        x[i] = y;
                        s.push((x, y));
                    }
                }
                Some(s)
            }
            TaskSpec::Texture => {
                let d = self.d;
                let mut s = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut x = Vector::zeros(d);
                    x[i] = 1.0;
                    x[(i + 2) % d] += 1.0;
                    s.push((x, 1.0));
                }
                for i in 0..d {
                    let mut x = Vector::zeros(d);
                    x[i] = 1.0;
                    x[(i + 1) % d] += 1.0;
                    s.push((x, -1.0));
                }
                Some(s)
            }
            TaskSpec::Fixed { points, labels } => Some(
                points
                    .iter()
                    .cloned()
                    .zip(labels.iter().copied())
                    .collect(),
            ),
            TaskSpec::Rotated { base, g } => {
                let ginv = g.inverse();
                base.support().map(|s| {
                    s.into_iter()
                        .map(|(x, y)| (ginv.apply(&x).expect("dimension checked"), y))
                        .collect()
                })
            }
            _ => None,
        }
    }
}

/// Warm-up one-hot task: uniform over the 2d points {±eᵢ}.
pub fn onehot_task(d: usize) -> Result<Task, TaskError> {
    if d < 2 {
        return Err(TaskError::BadDimension("d ≥ 2 for the one-hot task"));
    }
    Ok(Task {
        name: format!("onehot-d{d}"),
        d,
        kind: LabelKind::Sign,
        spec: TaskSpec::OneHot,
    })
}

/// Gaussian input, label = sign of first-half minus second-half squared
/// norms. `d2` is the total (even) dimension.
pub fn quadratic_split_task(d2: usize) -> Result<Task, TaskError> {
    if d2 == 0 || d2 % 2 != 0 {
        return Err(TaskError::BadDimension("d2 must be even and positive"));
    }
    Ok(Task {
        name: format!("quadratic-split-d{d2}"),
        d: d2,
        kind: LabelKind::Sign,
        spec: TaskSpec::QuadraticSplit,
    })
}

pub fn alpha_quadratic_task(alpha: Vector) -> Result<Task, TaskError> {
    if alpha.is_empty() {
        return Err(TaskError::BadDimension("alpha must be non-empty"));
    }
    let d = alpha.len();
    Ok(Task {
        name: format!("alpha-quadratic-d{d}"),
        d,
        kind: LabelKind::Sign,
        spec: TaskSpec::AlphaQuadratic { alpha },
    })
}

/// `h_U = sign(x_{1:d}ᵀ U x_{d+1:2d})` on N(0, I_{2d}).
pub fn hu_task(u: Matrix) -> Result<Task, TaskError> {
    if u.nrows() != u.ncols() || u.is_empty() {
        return Err(TaskError::BadDimension("U must be square and non-empty"));
    }
    let d = u.nrows();
    Ok(Task {
        name: format!("hU-d{}", 2 * d),
        d: 2 * d,
        kind: LabelKind::Sign,
        spec: TaskSpec::HU { u },
    })
}

/// Noise-free regression y = xᵀMx on Gaussian input.
pub fn quadratic_regression_task(m: Matrix) -> Result<Task, TaskError> {
    if m.nrows() != m.ncols() || m.is_empty() {
        return Err(TaskError::BadDimension("M must be square and non-empty"));
    }
    let d = m.nrows();
    Ok(Task {
        name: format!("quadratic-regression-d{d}"),
        d,
        kind: LabelKind::Real,
        spec: TaskSpec::QuadraticRegression { m },
    })
}

/// 1-D texture classification: gap-2 pairs (+1) vs adjacent pairs (−1),
/// cyclic, uniform over all 2d points.
pub fn texture_task(d: usize) -> Result<Task, TaskError> {
    if d < 5 {
        return Err(TaskError::BadDimension(
            "d ≥ 5 so the 2d texture points are distinct",
        ));
    }
    Ok(Task {
        name: format!("texture-d{d}"),
        d,
        kind: LabelKind::Sign,
        spec: TaskSpec::Texture,
    })
}

/// The task `P ∘ g`: samples `g⁻¹(x)` for x from the base task, labels by
/// `base ∘ g`.
pub fn rotate_task(base: Task, g: GroupElement) -> Result<Task, TaskError> {
    if g.dim() != base.d {
        return Err(TaskError::Algebra(AlgebraError::DimensionMismatch {
            expected: base.d,
            got: g.dim(),
        }));
    }
    Ok(Task {
        name: format!("{}-rot-{}", base.name, g.kind()),
        d: base.d,
        kind: base.kind,
        spec: TaskSpec::Rotated {
            base: Box::new(base),
            g,
        },
    })
}

/// The explicit orthogonal map `g_U` on R^{2d} with `h_U(x) = h*(g_U(x))`
/// pointwise, where `h*` is the split-quadratic sign.
///
/// `g_U = B · blockdiag(I, U)` with `B = [[√2/2 I, √2/2 I], [−√2/2 I, √2/2 I]]`;
/// the factor order and signs are fixed by the congruence
/// `xᵀ[[0,U],[Uᵀ,0]]x = g_U(x)ᵀ diag(I,−I) g_U(x)`, which the tests check
/// pointwise.
pub fn embed_subclass(u: &Matrix) -> Result<GroupElement, TaskError> {
    if u.nrows() != u.ncols() || u.is_empty() {
        return Err(TaskError::BadDimension("U must be square and non-empty"));
    }
    let d = u.nrows();
    let dev = crate::algebra::max_abs(&(u.transpose() * u - Matrix::identity(d, d)));
    if dev > crate::algebra::ORTHOGONALITY_TOL {
        return Err(TaskError::Algebra(AlgebraError::NotOrthogonal {
            deviation: dev,
        }));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut g = Matrix::zeros(2 * d, 2 * d);
    // B · blockdiag(I, U): left block column is [√2/2 I; −√2/2 I], right
    // block column is [√2/2 U; √2/2 U].
    for i in 0..d {
        g[(i, i)] = h;
        g[(d + i, i)] = -h;
        for j in 0..d {
            g[(i, d + j)] = h * u[(i, j)];
            g[(d + i, d + j)] = h * u[(i, j)];
        }
    }
    Ok(GroupElement::orthogonal(g)?)
}
