//! Projection concentration for x ⊗ x: with Q the projector onto
//! span{xᵢ⊗xᵢ} in R^{d²} and fresh x ~ N(0, I_d),
//! ‖Q(x⊗x)‖² stays below d²/3 + O(d) and the complement above 2d²/3 − O(d)
//! with high probability, provided the span is low-dimensional.

use crate::algebra::{RngStream, Vector};

use super::OracleError;

/// The lemma's regime bound `d² / (12·log₁₀²(d/δ))` at δ = 0.01.
/// (Common logs: the stated acceptance instance d = 40, n = 10 sits just
/// inside this reading and outside the natural-log one.)
pub fn projection_regime_max_n(d: usize) -> f64 {
    let delta = 0.01;
    let l = (d as f64 / delta).log10();
    d as f64 * d as f64 / (12.0 * l * l)
}

#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    /// trials where both the upper bound on ‖Q(x⊗x)‖² and the lower bound on
    /// the complement held
    pub both_bounds_ok: usize,
    /// trials where the Pythagorean identity held to 1e-6 relative
    pub pythagoras_ok: usize,
    /// additive slack constant: bounds are d²/3 + c·d and 2d²/3 − c·d
    pub slack_c: f64,
    pub max_projected: f64,
    pub min_complement: f64,
    pub seed: u64,
}

impl ProjectionReport {
    /// Single-row CSV of the aggregate counts.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "d",
            "n",
            "trials",
            "both_bounds_ok",
            "pythagoras_ok",
            "slack_c",
            "max_projected",
            "min_complement",
            "seed",
        ])?;
        w.write_record([
            self.d.to_string(),
            self.n.to_string(),
            self.trials.to_string(),
            self.both_bounds_ok.to_string(),
            self.pythagoras_ok.to_string(),
            format!("{}", self.slack_c),
            format!("{}", self.max_projected),
            format!("{}", self.min_complement),
            self.seed.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "projection lemma d={} n={} trials={}: both bounds in {}/{} trials \
             (max ‖Qz‖² = {:.2}, min ‖(I−Q)z‖² = {:.2}, c = {}), \
             Pythagoras exact in {}/{}",
            self.d,
            self.n,
            self.trials,
            self.both_bounds_ok,
            self.trials,
            self.max_projected,
            self.min_complement,
            self.slack_c,
            self.pythagoras_ok,
            self.trials
        )
    }
}

/// Per trial: draw the n design points, project a fresh x ⊗ x onto their
/// span and onto its complement, and check the two bounds plus the
/// Pythagorean identity.
pub fn projection_lemma_check(
    d: usize,
    n: usize,
    trials: usize,
    rng: &mut RngStream,
) -> Result<ProjectionReport, OracleError> {
    if d < 20 {
        return Err(OracleError::BadParams(
            "the projection check runs at d ≥ 20".into(),
        ));
    }
    let max_n = projection_regime_max_n(d);
    if n as f64 > max_n {
        return Err(OracleError::RegimeViolation { n, d, max_n });
    }
    let c = 5.0;
    let dd = d * d;
    let upper = (d * d) as f64 / 3.0 + c * d as f64;
    let lower = 2.0 * (d * d) as f64 / 3.0 - c * d as f64;
    let mut both = 0usize;
    let mut pyth = 0usize;
    let mut max_projected = 0.0f64;
    let mut min_complement = f64::INFINITY;
    for t in 0..trials {
        let mut trial_rng = rng.child(t as u64);
        // orthonormal basis of span{xᵢ⊗xᵢ} by re-orthogonalized Gram-Schmidt
        let mut basis: Vec<Vector> = Vec::with_capacity(n);
        for _ in 0..n {
            let x = trial_rng.gauss_vector(d);
            let mut v = outer_flat(&x);
            for _ in 0..2 {
                for b in &basis {
                    let c = v.dot(b);
                    v -= b * c;
                }
            }
            let norm = v.norm();
            if norm > 1e-10 {
                basis.push(v / norm);
            }
        }
        let x = trial_rng.gauss_vector(d);
        let z = outer_flat(&x);
        let mut q = Vector::zeros(dd);
        for b in &basis {
            q += b * z.dot(b);
        }
        let projected = q.norm_squared();
        let complement = (&z - &q).norm_squared();
        max_projected = max_projected.max(projected);
        min_complement = min_complement.min(complement);
        if projected <= upper && complement >= lower {
            both += 1;
        }
        let total = x.norm_squared().powi(2); // ‖x⊗x‖² = ‖x‖⁴
        if (projected + complement - total).abs() <= 1e-6 * total {
            pyth += 1;
        }
    }
    Ok(ProjectionReport {
        d,
        n,
        trials,
        both_bounds_ok: both,
        pythagoras_ok: pyth,
        slack_c: c,
        max_projected,
        min_complement,
        seed: rng.seed(),
    })
}

fn outer_flat(x: &Vector) -> Vector {
    let d = x.len();
    Vector::from_fn(d * d, |i, _| x[i / d] * x[i % d])
}
