//! Shattering witnesses on the orthogonal group: for a sign pattern σ over
//! pairs i<j, the element exp(λu) with u = Σ σᵢⱼ(eᵢeⱼᵀ − eⱼeᵢᵀ) realizes
//! sign(⟨exp(λu), eᵢeⱼᵀ⟩) = σᵢⱼ for λ small enough.

use crate::algebra::{skew_exp, GroupElement, Matrix, RngStream};
use crate::sign_pm;

use super::OracleError;

pub fn upper_triangle_len(d: usize) -> usize {
    d * (d - 1) / 2
}

/// Build and check the witness for one sign pattern. `signs` is the strict
/// upper triangle in row-major order, entries ±1.
pub fn shatter_witness(
    d: usize,
    signs: &[f64],
    lambda: f64,
) -> Result<GroupElement, OracleError> {
    if lambda <= 0.0 {
        return Err(OracleError::BadParams("λ must be positive".into()));
    }
    if signs.len() != upper_triangle_len(d) {
        return Err(OracleError::BadParams(format!(
            "need {} signs for d = {d}",
            upper_triangle_len(d)
        )));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(OracleError::BadParams("signs must be ±1".into()));
    }
    let mut u = Matrix::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            u[(i, j)] = signs[idx];
            u[(j, i)] = -signs[idx];
            idx += 1;
        }
    }
    let w = skew_exp(&(u * lambda))?;
    let m = w.matrix();
    let mut idx = 0;
    for i in 0..d {
        for j in (i + 1)..d {
            // ⟨W, eᵢeⱼᵀ⟩ = W[i][j]
            if sign_pm(m[(i, j)]) != signs[idx] {
                return Err(OracleError::SignViolation { i, j, lambda });
            }
            idx += 1;
        }
    }
    Ok(w)
}

/// Enumerate all 2^{d(d−1)/2} patterns; returns how many were witnessed.
/// An error other than a sign violation aborts.
pub fn shatter_exhaustive(d: usize, lambda: f64) -> Result<usize, OracleError> {
    let m = upper_triangle_len(d);
    assert!(m <= 20, "exhaustive enumeration is for small d");
    let mut witnessed = 0usize;
    for bits in 0u32..(1 << m) {
        let signs: Vec<f64> = (0..m)
            .map(|b| if bits >> b & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        match shatter_witness(d, &signs, lambda) {
            Ok(_) => witnessed += 1,
            Err(OracleError::SignViolation { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(witnessed)
}

#[allow(dead_code)]
pub(crate) fn random_pattern(d: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..upper_triangle_len(d)).map(|_| rng.rademacher()).collect()
}
