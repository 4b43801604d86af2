//! C ABI for the equilab laboratory.
//!
//! Conventions:
//! - Handles (`EqRng`, `EqTask`, `EqPredictor`) are opaque pointers created
//!   and destroyed by this library; passing null where a handle is expected
//!   returns `EQ_STATUS_NULL_POINTER`.
//! - Matrices are row-major `double` buffers; the caller owns all buffers.
//! - Functions that can fail return an [`EqStatus`]; constructors return
//!   null on failure. Either way the detail is retrievable with
//!   [`eq_last_error`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use equilab::algebra::{haar_orthogonal, Matrix, RngStream, Vector};
use equilab::oracles;
use equilab::tasks::{onehot_task, quadratic_split_task, texture_task, Task};
use equilab::training::{
    erm_cnn_sign, run_iterative, FeatureMap, InitSpec, Predictor, RuleKind, TrainConfig,
    UpdateRule,
};
use equilab::models::{Activation, ModelGeometry};
use equilab::tasks::LabeledSet;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EqStatus {
    EqStatusOk = 0,
    EqStatusNullPointer = 1,
    EqStatusInvalidArgument = 2,
    EqStatusDimensionMismatch = 3,
    EqStatusNumericalFailure = 4,
    EqStatusPanic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

/// Copy the last error message (UTF-8, NUL terminated) into `buf`.
/// Returns the full message length in bytes (excluding the terminator), so
/// callers can resize and retry; `buf` may be null to query the length.
#[no_mangle]
pub unsafe extern "C" fn eq_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // always terminate
            *buf.add(n.min(len - 1).max(0)) = 0;
        }
        bytes.len() - 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn guard<F: FnOnce() -> EqStatus>(f: F) -> EqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic across FFI boundary");
            EqStatus::EqStatusPanic
        }
    }
}

fn guard_ptr<T, F: FnOnce() -> Result<T, String>>(f: F) -> *mut T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Box::into_raw(Box::new(v)),
        Ok(Err(msg)) => {
            set_error(&msg);
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("panic across FFI boundary");
            std::ptr::null_mut()
        }
    }
}

// ---------------------------------------------------------------------------
// random streams
// ---------------------------------------------------------------------------

/// Opaque deterministic random stream.
pub struct EqRng(RngStream);

#[no_mangle]
pub extern "C" fn eq_rng_new(seed: u64) -> *mut EqRng {
    Box::into_raw(Box::new(EqRng(RngStream::new(seed))))
}

/// Derived stream; independent of the parent for distinct ids.
#[no_mangle]
pub unsafe extern "C" fn eq_rng_child(rng: *const EqRng, id: u64) -> *mut EqRng {
    if rng.is_null() {
        set_error("rng handle is null");
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(EqRng((*rng).0.child(id))))
}

#[no_mangle]
pub unsafe extern "C" fn eq_rng_free(rng: *mut EqRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

// ---------------------------------------------------------------------------
// dense helpers
// ---------------------------------------------------------------------------

/// Haar-distributed d×d orthogonal matrix into `out` (row-major, d*d).
#[no_mangle]
pub unsafe extern "C" fn eq_haar_orthogonal(
    d: usize,
    rng: *mut EqRng,
    out: *mut f64,
) -> EqStatus {
    if rng.is_null() || out.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    if d == 0 {
        set_error("dimension must be positive");
        return EqStatus::EqStatusInvalidArgument;
    }
    guard(|| {
        let m = haar_orthogonal(d, &mut (*rng).0).matrix();
        for i in 0..d {
            for j in 0..d {
                *out.add(i * d + j) = m[(i, j)];
            }
        }
        EqStatus::EqStatusOk
    })
}

/// `E (xᵀMx)²` for x ~ N(0, I): `2‖sym(M)‖_F² + tr(M)²`.
#[no_mangle]
pub unsafe extern "C" fn eq_matrix_var_closed(
    m: *const f64,
    d: usize,
    out: *mut f64,
) -> EqStatus {
    if m.is_null() || out.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    if d == 0 {
        set_error("dimension must be positive");
        return EqStatus::EqStatusInvalidArgument;
    }
    guard(|| {
        let mat = Matrix::from_fn(d, d, |i, j| *m.add(i * d + j));
        *out = oracles::matrix_var_closed(&mat);
        EqStatus::EqStatusOk
    })
}

/// The Bayes regression floor `max(0, d(d+1) − 2n)`.
#[no_mangle]
pub extern "C" fn eq_regression_floor(d: usize, n: usize) -> f64 {
    oracles::regression_floor(d, n)
}

/// Empirical disagreement probability of the two bilinear-sign hypotheses
/// given by orthogonal U and V (row-major d×d).
#[no_mangle]
pub unsafe extern "C" fn eq_rho_empirical(
    u: *const f64,
    v: *const f64,
    d: usize,
    samples: usize,
    rng: *mut EqRng,
    out_mean: *mut f64,
    out_std_error: *mut f64,
) -> EqStatus {
    if u.is_null() || v.is_null() || rng.is_null() || out_mean.is_null() || out_std_error.is_null()
    {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    if d == 0 || samples < 2 {
        set_error("need d ≥ 1 and samples ≥ 2");
        return EqStatus::EqStatusInvalidArgument;
    }
    guard(|| {
        let um = Matrix::from_fn(d, d, |i, j| *u.add(i * d + j));
        let vm = Matrix::from_fn(d, d, |i, j| *v.add(i * d + j));
        let est = oracles::rho_empirical(&um, &vm, samples, &mut (*rng).0);
        *out_mean = est.mean;
        *out_std_error = est.std_error;
        EqStatus::EqStatusOk
    })
}

/// Shattering witness `exp(λu)` for the given ±1 sign pattern over pairs
/// i<j (row-major upper triangle, length d(d−1)/2); writes the d×d witness.
#[no_mangle]
pub unsafe extern "C" fn eq_shatter_witness(
    d: usize,
    signs: *const f64,
    lambda: f64,
    out: *mut f64,
) -> EqStatus {
    if signs.is_null() || out.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    let len = oracles::upper_triangle_len(d);
    guard(|| {
        let pattern: Vec<f64> = (0..len).map(|i| *signs.add(i)).collect();
        match oracles::shatter_witness(d, &pattern, lambda) {
            Ok(w) => {
                let m = w.matrix();
                for i in 0..d {
                    for j in 0..d {
                        *out.add(i * d + j) = m[(i, j)];
                    }
                }
                EqStatus::EqStatusOk
            }
            Err(e) => {
                set_error(&e.to_string());
                EqStatus::EqStatusNumericalFailure
            }
        }
    })
}

// ---------------------------------------------------------------------------
// tasks
// ---------------------------------------------------------------------------

/// Opaque task handle.
pub struct EqTask(Task);

fn task_ptr(r: Result<Task, equilab::tasks::TaskError>) -> *mut EqTask {
    guard_ptr(|| r.map(EqTask).map_err(|e| e.to_string()))
}

/// Uniform over {±eᵢ}, labeled by the sign of the non-zero coordinate.
#[no_mangle]
pub extern "C" fn eq_task_onehot(d: usize) -> *mut EqTask {
    task_ptr(onehot_task(d))
}

/// Gaussian input, label = sign of first-half minus second-half squared
/// norms (`d` is the total, even dimension).
#[no_mangle]
pub extern "C" fn eq_task_quadratic_split(d: usize) -> *mut EqTask {
    task_ptr(quadratic_split_task(d))
}

/// Cyclic 1-D texture classification on 2d support points.
#[no_mangle]
pub extern "C" fn eq_task_texture(d: usize) -> *mut EqTask {
    task_ptr(texture_task(d))
}

#[no_mangle]
pub unsafe extern "C" fn eq_task_dim(task: *const EqTask) -> usize {
    if task.is_null() {
        return 0;
    }
    (*task).0.d
}

/// Draw n labeled samples; `out_x` is n×d row-major, `out_y` length n.
#[no_mangle]
pub unsafe extern "C" fn eq_task_sample(
    task: *const EqTask,
    rng: *mut EqRng,
    n: usize,
    out_x: *mut f64,
    out_y: *mut f64,
) -> EqStatus {
    if task.is_null() || rng.is_null() || out_x.is_null() || out_y.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    guard(|| {
        let t = &(*task).0;
        let d = t.d;
        for i in 0..n {
            let (x, y) = t.sample(&mut (*rng).0);
            for j in 0..d {
                *out_x.add(i * d + j) = x[j];
            }
            *out_y.add(i) = y;
        }
        EqStatus::EqStatusOk
    })
}

/// Deterministic label of a point of the task's dimension.
#[no_mangle]
pub unsafe extern "C" fn eq_task_label(
    task: *const EqTask,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> EqStatus {
    if task.is_null() || x.is_null() || out.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    if d != (*task).0.d {
        set_error("point dimension does not match the task");
        return EqStatus::EqStatusDimensionMismatch;
    }
    guard(|| {
        let v = Vector::from_fn(d, |i, _| *x.add(i));
        *out = (*task).0.label(&v);
        EqStatus::EqStatusOk
    })
}

#[no_mangle]
pub unsafe extern "C" fn eq_task_free(task: *mut EqTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

// ---------------------------------------------------------------------------
// learners and predictors
// ---------------------------------------------------------------------------

/// Opaque trained predictor.
pub struct EqPredictor(Predictor);

/// Feature maps for sign-task ERM.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum EqFeatureMap {
    EqFeaturesPerCoordinateSquares = 0,
    EqFeaturesConv2SquareSums = 1,
}

/// Zero-error feature-space separator (logistic regression driven to
/// margin); xs is n×d row-major, ys holds ±1 labels.
#[no_mangle]
pub unsafe extern "C" fn eq_train_erm_sign(
    features: EqFeatureMap,
    xs: *const f64,
    ys: *const f64,
    n: usize,
    d: usize,
) -> *mut EqPredictor {
    if xs.is_null() || ys.is_null() {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    }
    guard_ptr(|| {
        let data = labeled_set(xs, ys, n, d);
        let map = match features {
            EqFeatureMap::EqFeaturesPerCoordinateSquares => FeatureMap::PerCoordinateSquares,
            EqFeatureMap::EqFeaturesConv2SquareSums => FeatureMap::Conv2SquareSums,
        };
        erm_cnn_sign(map, &data)
            .map(|r| EqPredictor(r.predictor))
            .map_err(|e| e.to_string())
    })
}

/// Two-layer quadratic FC net trained by full-batch GD on the logistic loss
/// from Gaussian initialization.
#[no_mangle]
pub unsafe extern "C" fn eq_train_fc_gd(
    xs: *const f64,
    ys: *const f64,
    n: usize,
    d: usize,
    hidden: usize,
    eta: f64,
    steps: usize,
    sigma: f64,
    seed: u64,
) -> *mut EqPredictor {
    if xs.is_null() || ys.is_null() {
        set_error("null pointer argument");
        return std::ptr::null_mut();
    }
    guard_ptr(|| {
        if hidden == 0 || eta <= 0.0 || steps == 0 || sigma <= 0.0 {
            return Err("hidden, eta, steps and sigma must be positive".into());
        }
        let data = labeled_set(xs, ys, n, d);
        let cfg = TrainConfig::sign_task(
            ModelGeometry::fc(vec![d, hidden, 1], Activation::Quadratic)
                .map_err(|e| e.to_string())?,
            InitSpec::gaussian(sigma),
            UpdateRule::new(RuleKind::Gd { eta }, steps),
        );
        let mut rng = RngStream::new(seed);
        run_iterative(&cfg, &data, &mut rng, false)
            .map(|(p, _)| EqPredictor(p))
            .map_err(|e| e.to_string())
    })
}

unsafe fn labeled_set(xs: *const f64, ys: *const f64, n: usize, d: usize) -> LabeledSet {
    let points = (0..n)
        .map(|i| Vector::from_fn(d, |j, _| *xs.add(i * d + j)))
        .collect();
    let labels = (0..n).map(|i| *ys.add(i)).collect();
    LabeledSet::new(points, labels, 0)
}

/// Raw score of the predictor at a point.
#[no_mangle]
pub unsafe extern "C" fn eq_predictor_score(
    pred: *const EqPredictor,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> EqStatus {
    predictor_eval(pred, x, d, out, false)
}

/// Emitted label (±1 for sign predictors, the raw score otherwise).
#[no_mangle]
pub unsafe extern "C" fn eq_predictor_predict(
    pred: *const EqPredictor,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> EqStatus {
    predictor_eval(pred, x, d, out, true)
}

unsafe fn predictor_eval(
    pred: *const EqPredictor,
    x: *const f64,
    d: usize,
    out: *mut f64,
    thresholded: bool,
) -> EqStatus {
    if pred.is_null() || x.is_null() || out.is_null() {
        set_error("null pointer argument");
        return EqStatus::EqStatusNullPointer;
    }
    guard(|| {
        let v = Vector::from_fn(d, |i, _| *x.add(i));
        let p = &(*pred).0;
        *out = if thresholded { p.predict(&v) } else { p.score(&v) };
        EqStatus::EqStatusOk
    })
}

#[no_mangle]
pub unsafe extern "C" fn eq_predictor_free(pred: *mut EqPredictor) {
    if !pred.is_null() {
        drop(Box::from_raw(pred));
    }
}
