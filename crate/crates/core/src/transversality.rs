//! Monte Carlo estimates of the transversality inequality
//! `ℙ[|π_λx₁ − π_λx₂| ≤ δ |x₁−x₂|^α] ≤ C δ^κ`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fractal::DiscreteMeasure;
use crate::projections::ProjectionFamily;
use crate::rng::{stream, Domain};
use crate::stats::{euclidean, linear_fit};

/// Slack multiplier applied to binomial standard errors in every bound check.
pub const SIGMA_SLACK: f64 = 3.0;

/// Default δ grid, two decades above the resolution of 10⁴ parameters.
pub const DEFAULT_DELTAS: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

/// Empirical collapse probabilities for one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub separation: f64,
    /// `"canonical"` for the family's extremal pair, `"sampled"` otherwise.
    pub source: String,
    /// One entry per δ, aligned with [`TransversalityEstimate::deltas`].
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityEstimate {
    pub family: String,
    pub alpha: f64,
    /// Ascending.
    pub deltas: Vec<f64>,
    /// Max over pairs of the empirical probability, per δ.
    pub worst_prob: Vec<f64>,
    /// Binomial standard error `sqrt(p(1−p)/n_lambda)` of each worst entry.
    pub std_err: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_r2: Option<f64>,
    pub n_lambda: usize,
    pub n_pairs: usize,
    pub seed: u64,
    pub pairs: Vec<PairEstimate>,
}

/// Draws an index from μ by inverse CDF.
fn draw_index(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().expect("nonempty");
    let target = u * total;
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

/// Draws `count` pairs from μ×μ conditioned on `x₁ ≠ x₂`.
pub fn sample_pairs(mu: &DiscreteMeasure, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !mu.has_distinct_points() {
        return Err(Error::DegenerateMeasure(
            "transversality needs at least two distinct support points".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(mu.len());
    let mut acc = 0.0;
    for &w in mu.weights() {
        acc += w;
        cumulative.push(acc);
    }
    (0..count as u64)
        .map(|k| {
            let mut rng = stream(seed, Domain::Pairs, k);
            for _ in 0..10_000 {
                let i = draw_index(&cumulative, rng.gen());
                let j = draw_index(&cumulative, rng.gen());
                if mu.point(i) != mu.point(j) {
                    return Ok((i, j));
                }
            }
            Err(Error::DegenerateMeasure(
                "could not draw a pair of distinct points; the measure is almost an atom".into(),
            ))
        })
        .collect()
}

/// Empirical transversality over `n_lambda` sampled parameters and the pairs
/// `{canonical pair} ∪ {n_pairs pairs from μ×μ}`.
///
/// `alpha_override` replaces the family's α in the event
/// `|π_λx₁ − π_λx₂| ≤ δ |x₁−x₂|^α`.
pub fn empirical_transversality(
    family: &dyn ProjectionFamily,
    mu: &DiscreteMeasure,
    deltas: &[f64],
    n_lambda: usize,
    n_pairs: usize,
    alpha_override: Option<f64>,
    seed: u64,
) -> Result<TransversalityEstimate> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(invalid("deltas must be a nonempty subset of (0, 1]"));
    }
    if n_lambda < 100 {
        return Err(invalid(format!("n_lambda must be at least 100, got {n_lambda}")));
    }
    if n_pairs < 1 {
        return Err(invalid("n_pairs must be at least 1"));
    }
    if mu.dim() != family.domain_dim() {
        return Err(Error::DimensionMismatch {
            expected: family.domain_dim(),
            found: mu.dim(),
        });
    }
    let alpha = alpha_override.unwrap_or_else(|| family.alpha());
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);

    let mut pair_points: Vec<(Vec<f64>, Vec<f64>, &str)> = Vec::new();
    if let Some((a, b)) = family.canonical_pair() {
        pair_points.push((a, b, "canonical"));
    }
    for (i, j) in sample_pairs(mu, n_pairs, seed)? {
        pair_points.push((mu.point(i).to_vec(), mu.point(j).to_vec(), "sampled"));
    }

    let lambdas = family.sample_lambda(n_lambda, seed);
    let pairs: Vec<PairEstimate> = pair_points
        .into_par_iter()
        .map(|(x1, x2, source)| {
            let separation = euclidean(&x1, &x2);
            let scale = separation.powf(alpha);
            let mut ratios: Vec<f64> = lambdas
                .iter()
                .map(|l| euclidean(&family.apply(l, &x1), &family.apply(l, &x2)) / scale)
                .collect();
            ratios.sort_by(f64::total_cmp);
            let probs = deltas
                .iter()
                .map(|&d| ratios.partition_point(|&q| q <= d) as f64 / n_lambda as f64)
                .collect();
            PairEstimate {
                x1,
                x2,
                separation,
                source: source.to_string(),
                probs,
            }
        })
        .collect();

    let worst_prob: Vec<f64> = (0..deltas.len())
        .map(|k| pairs.iter().map(|p| p.probs[k]).fold(0.0, f64::max))
        .collect();
    let std_err = worst_prob
        .iter()
        .map(|p| (p * (1.0 - p) / n_lambda as f64).sqrt())
        .collect();

    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&worst_prob)
        .filter(|(_, p)| **p > 0.0)
        .map(|(d, p)| (d.ln(), p.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys);

    Ok(TransversalityEstimate {
        family: family.name().to_string(),
        alpha,
        deltas,
        worst_prob,
        std_err,
        fitted_kappa: fit.map(|f| f.slope),
        fitted_c: fit.map(|f| f.intercept.exp()),
        fit_r2: fit.map(|f| f.r2),
        n_lambda,
        n_pairs,
        seed,
        pairs,
    })
}

/// One δ row of a bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub delta: f64,
    pub observed: f64,
    pub bound: f64,
    pub slack: f64,
    /// `bound + slack − observed`; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub c: f64,
    pub kappa: f64,
    pub passed: bool,
    pub worst_margin: f64,
    pub rows: Vec<BoundRow>,
}

/// Passes iff `worst_prob(δ) ≤ C δ^κ + 3σ` at every δ of the estimate.
pub fn check_transversality_bound(est: &TransversalityEstimate, c: f64, kappa: f64) -> BoundCheck {
    let rows: Vec<BoundRow> = est
        .deltas
        .iter()
        .zip(est.worst_prob.iter().zip(&est.std_err))
        .map(|(&delta, (&observed, &se))| {
            let bound = c * delta.powf(kappa);
            let slack = SIGMA_SLACK * se;
            BoundRow {
                delta,
                observed,
                bound,
                slack,
                margin: bound + slack - observed,
            }
        })
        .collect();
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    BoundCheck {
        c,
        kappa,
        passed: worst_margin >= 0.0,
        worst_margin,
        rows,
    }
}
