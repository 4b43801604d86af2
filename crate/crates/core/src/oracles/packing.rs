//! Greedy packing of the special orthogonal group under the disagreement
//! metric ρ, with Monte-Carlo certification.
//!
//! Candidates are exp(S) for skew S sampled in the spectral-norm ball of
//! radius π/4 around the identity. A candidate joins the set only if its ρ
//! to every accepted element clears ε with high confidence (Wilson lower
//! bound at the acceptance z plus an explicit point-estimate margin, so a
//! later verification pass at 95% does not flip accepted pairs).

use crate::algebra::{skew_exp, GroupElement, Matrix, RngStream};
use crate::stats::wilson_lower_bound;

use super::{rho_empirical, OracleError};

#[derive(Clone, Copy, Debug)]
pub struct PairCert {
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub lower_bound: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct PackingSet {
    /// Skew exponents of the accepted elements.
    pub exponents: Vec<Matrix>,
    pub elements: Vec<GroupElement>,
    pub epsilon: f64,
    /// Certificates recorded at acceptance time (each new element against
    /// every prior one).
    pub certificates: Vec<PairCert>,
    /// Budget ran out before the target size (or there was no target).
    pub saturated: bool,
    pub candidates_tried: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct PackingParams {
    pub epsilon: f64,
    /// Number of candidate draws.
    pub budget: usize,
    /// Stop early at this size, when set.
    pub target_size: Option<usize>,
    /// Samples per pairwise ρ estimate during construction.
    pub per_pair_samples: usize,
    /// One-sided z for the acceptance lower bound (99.9% by default: the
    /// construction must be stricter than the verification).
    pub accept_z: f64,
    /// Required margin of the point estimate above ε.
    pub margin: f64,
}

impl PackingParams {
    pub fn new(epsilon: f64, budget: usize) -> Self {
        PackingParams {
            epsilon,
            budget,
            target_size: None,
            per_pair_samples: 2000,
            accept_z: 3.09,
            margin: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PackingReport {
    pub pairs: Vec<PairCert>,
    pub all_certified: bool,
    pub confidence_z: f64,
    pub samples: usize,
}

impl PackingReport {
    pub fn summary(&self, epsilon: f64) -> String {
        let certified = self.pairs.iter().filter(|p| p.lower_bound >= epsilon).count();
        format!(
            "verification at {} samples: {certified}/{} pairs certified at 95% lower confidence ({})",
            self.samples,
            self.pairs.len(),
            if self.all_certified { "all certified" } else { "NOT all certified" }
        )
    }

    /// Per-pair certificates as CSV.
    pub fn to_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "estimate", "lower_bound", "samples"])?;
        for p in &self.pairs {
            w.write_record([
                p.i.to_string(),
                p.j.to_string(),
                format!("{}", p.estimate),
                format!("{}", p.lower_bound),
                p.samples.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn random_skew_in_spectral_ball(d: usize, radius: f64, rng: &mut RngStream) -> Matrix {
    let m = d * (d - 1) / 2;
    let mut s = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = rng.gauss();
            s[(i, j)] = v;
            s[(j, i)] = -v;
        }
    }
    let spectral = s.clone().svd(false, false).singular_values.max();
    if spectral == 0.0 {
        return s;
    }
    // volume-like radial profile: r = radius · u^{1/dim}
    let r = radius * rng.uniform().powf(1.0 / m as f64);
    s * (r / spectral)
}

/// Greedy construction. Draws `budget` candidates (or stops at
/// `target_size`) and keeps those whose ρ lower confidence bound to every
/// accepted element clears ε.
pub fn packing_construct(
    d: usize,
    params: &PackingParams,
    rng: &mut RngStream,
) -> Result<PackingSet, OracleError> {
    if d < 2 {
        return Err(OracleError::BadParams("packing needs d ≥ 2".into()));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 0.5) {
        return Err(OracleError::BadParams("ε must lie in (0, ½)".into()));
    }
    let mut set = PackingSet {
        exponents: Vec::new(),
        elements: Vec::new(),
        epsilon: params.epsilon,
        certificates: Vec::new(),
        saturated: false,
        candidates_tried: 0,
        seed: rng.seed(),
    };
    for c in 0..params.budget {
        if let Some(t) = params.target_size {
            if set.elements.len() >= t {
                return Ok(set); // not saturated: target reached
            }
        }
        set.candidates_tried = c + 1;
        let s = random_skew_in_spectral_ball(d, std::f64::consts::FRAC_PI_4, &mut rng.child(c as u64));
        let candidate = skew_exp(&s)?;
        let mut certs = Vec::with_capacity(set.elements.len());
        let mut accepted = true;
        for (j, existing) in set.elements.iter().enumerate() {
            let mut pair_rng = rng.child((c as u64) << 20 | j as u64);
            let est = rho_empirical(
                &candidate.matrix(),
                &existing.matrix(),
                params.per_pair_samples,
                &mut pair_rng,
            );
            let k = (est.mean * params.per_pair_samples as f64).round() as usize;
            let lcb = wilson_lower_bound(k, params.per_pair_samples, params.accept_z);
            if lcb < params.epsilon || est.mean < params.epsilon + params.margin {
                accepted = false;
                break;
            }
            certs.push(PairCert {
                i: set.elements.len(),
                j,
                estimate: est.mean,
                lower_bound: lcb,
                samples: params.per_pair_samples,
            });
        }
        if accepted {
            set.exponents.push(s);
            set.elements.push(candidate);
            set.certificates.extend(certs);
        }
    }
    set.saturated = true; // budget exhausted
    Ok(set)
}

/// Re-certify every pair at a higher sample count with a 95% one-sided
/// Wilson lower bound.
pub fn packing_verify(set: &PackingSet, samples: usize, rng: &mut RngStream) -> PackingReport {
    let z = 1.6449; // 95% one-sided
    let mut pairs = Vec::new();
    let mut all = true;
    for i in 0..set.elements.len() {
        for j in (i + 1)..set.elements.len() {
            let mut pair_rng = rng.child((i as u64) << 20 | j as u64);
            let est = rho_empirical(
                &set.elements[i].matrix(),
                &set.elements[j].matrix(),
                samples,
                &mut pair_rng,
            );
            let k = (est.mean * samples as f64).round() as usize;
            let lcb = wilson_lower_bound(k, samples, z);
            if lcb < set.epsilon {
                all = false;
            }
            pairs.push(PairCert {
                i,
                j,
                estimate: est.mean,
                lower_bound: lcb,
                samples,
            });
        }
    }
    PackingReport {
        pairs,
        all_certified: all,
        confidence_z: z,
        samples,
    }
}
