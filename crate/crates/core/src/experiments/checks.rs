use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::{
    digest, CheckBase, CheckRecord, Context, Corollary1Check, FrostmanCheck, Series, Status, Theorem1Check,
    Theorem2Check, Theorem3Check, Theorem4Check, TransversalityCheck,
};
use crate::dimension::{box_dimension, interval_measure};
use crate::error::{Error, Result};
use crate::experiments::{Expect, Fixture};
use crate::fractal::DiscreteMeasure;
use crate::measures::{energy, frostman_certificate, frostman_energy_bound, frostman_regularize, regularity_scan};
use crate::projections::{pushforward, Parameter, ProjectionFamily};
use crate::stats::{mean_and_sem, pairwise_sum};
use crate::transversality::{check_transversality_bound, empirical_transversality, SIGMA_SLACK};

/// Builds the fixture in the family's domain, zero-padding if needed.
fn build_measure(
    fixture: &Fixture,
    family: &dyn ProjectionFamily,
    cap: usize,
    record: &mut CheckRecord,
) -> Result<DiscreteMeasure> {
    let mu = fixture.build(cap)?;
    let d = family.domain_dim();
    if mu.dim() < d {
        record.notes.push(format!("fixture embedded from R^{} into R^{d}", mu.dim()));
        return mu.embed(d);
    }
    if mu.dim() > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: mu.dim(),
        });
    }
    Ok(mu)
}

struct Prepared {
    family: Arc<dyn ProjectionFamily>,
    mu: DiscreteMeasure,
    lambdas: Vec<Parameter>,
    dim_x: f64,
}

fn prepare(base: &CheckBase, ctx: &Context, record: &mut CheckRecord) -> Result<Prepared> {
    let family = ctx.registry.get(&base.family)?;
    let mu = build_measure(&base.fixture, family.as_ref(), ctx.cap, record)?;
    let lambdas = family.sample_lambda(base.n_lambda, ctx.seed);
    let dim_x = base.fixture.known_dimension()?;
    record.estimate("n_points", mu.len() as f64);
    record.estimate("n_lambda", base.n_lambda as f64);
    record.estimate("dim_x", dim_x);
    record.estimate("alpha", family.alpha());
    record.estimate("kappa", family.kappa());
    Ok(Prepared {
        family,
        mu,
        lambdas,
        dim_x,
    })
}

fn declared_c(family: &dyn ProjectionFamily) -> Result<f64> {
    family
        .declared_c()
        .ok_or_else(|| Error::Config(format!("family {:?} declares no constant C", family.name())))
}

fn indexed(name: String, values: &[f64]) -> Series {
    Series {
        name,
        points: values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
    }
}

/// Mean with its `3σ` slack and margin against `bound`.
fn compare_mean(record: &mut CheckRecord, values: &[f64], bound: f64) -> bool {
    let (mean, sem) = mean_and_sem(values);
    let slack = SIGMA_SLACK * sem;
    let margin = bound + slack - mean;
    record.estimate("lhs_mean", mean);
    record.estimate("lhs_sem", sem);
    record.bound = Some(bound);
    record.slack = Some(slack);
    record.margin = Some(margin);
    margin >= 0.0
}

pub fn verify_transversality(check: &TransversalityCheck, ctx: &Context) -> Result<CheckRecord> {
    let mut record = CheckRecord::new(&check.id, "transversality", check.expect, digest(ctx.seed, check));
    let family = ctx.registry.get(&check.family)?;
    let mu = build_measure(&check.fixture, family.as_ref(), ctx.cap, &mut record)?;
    let est = empirical_transversality(
        family.as_ref(),
        &mu,
        &check.deltas,
        check.n_lambda,
        check.n_pairs,
        check.alpha_override,
        ctx.seed,
    )?;
    let c = match check.bound_c {
        Some(c) => c,
        None => declared_c(family.as_ref())?,
    };
    let kappa = check.bound_kappa.unwrap_or_else(|| family.kappa());
    let bound = check_transversality_bound(&est, c, kappa);

    record.estimate("alpha", est.alpha);
    record.estimate("bound_c", c);
    record.estimate("bound_kappa", kappa);
    if let Some(k) = est.fitted_kappa {
        record.estimate("fitted_kappa", k);
    }
    if let Some(c) = est.fitted_c {
        record.estimate("fitted_c", c);
    }
    if let Some(r2) = est.fit_r2 {
        record.estimate("fit_r2", r2);
    }
    for row in &bound.rows {
        record.estimate(format!("worst_prob@{}", row.delta), row.observed);
        record.estimate(format!("margin@{}", row.delta), row.margin);
    }
    let worst = bound
        .rows
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .expect("at least one delta");
    record.bound = Some(worst.bound);
    record.slack = Some(worst.slack);
    record.margin = Some(bound.worst_margin);
    record.series.push(Series {
        name: format!("{}_worst_prob", check.id),
        points: est.deltas.iter().copied().zip(est.worst_prob.iter().copied()).collect(),
    });
    record.finish(if bound.passed { Status::Pass } else { Status::Fail });
    Ok(record)
}

pub fn verify_lemma1(check: &FrostmanCheck, ctx: &Context) -> Result<CheckRecord> {
    let mut record = CheckRecord::new(&check.id, "lemma1", check.expect, digest(ctx.seed, check));
    let mu = check.fixture.build(ctx.cap)?;
    let s = match check.s {
        Some(s) => s,
        None => check.fixture.known_dimension()?,
    };
    let result = frostman_regularize(&mu, s, check.m, check.delta)?;
    record.estimate("s", s);
    record.estimate("c", result.c);
    record.estimate("input_mass", result.input_mass);
    record.estimate("retained_mass", result.retained_mass);
    record.estimate("removed_points", result.removed_points as f64);
    record.estimate("selected_balls", result.selected.len() as f64);

    let Some(nu) = result.measure.as_ref() else {
        record.notes.push("regularization removed every point; output has zero mass".into());
        record.finish(Status::Fail);
        return Ok(record);
    };
    let cert = frostman_certificate(nu, s, result.c, check.delta, &result.radii);
    record.estimate("balls_checked", cert.balls_checked as f64);
    record.estimate("worst_ratio", cert.worst_ratio);

    let mut passed = cert.passed;
    if s > 0.0 {
        let t = (s / 2.0).min(1.0);
        let r_min = *result.radii.last().expect("nonempty grid");
        let lhs = energy(nu, t, r_min)?;
        let bound = frostman_energy_bound(result.retained_mass, result.c, s, t, check.delta);
        record.estimate("energy_t", t);
        record.estimate("energy", lhs);
        record.bound = Some(bound);
        record.slack = Some(0.0);
        record.margin = Some(bound - lhs);
        passed &= lhs <= bound;
    }
    record.finish(if passed { Status::Pass } else { Status::Fail });
    Ok(record)
}

pub fn verify_theorem1(check: &Theorem1Check, ctx: &Context) -> Result<CheckRecord> {
    let base = &check.base;
    let mut record = CheckRecord::new(&base.id, "theorem1", base.expect, digest(ctx.seed, check));
    let p = prepare(base, ctx, &mut record)?;
    let target = p.family.kappa().min(p.dim_x / p.family.alpha());

    let results: Vec<Result<f64>> = p
        .lambdas
        .par_iter()
        .map(|l| {
            let nu = pushforward(p.family.as_ref(), l, &p.mu)?;
            Ok(box_dimension(nu.cloud(), &check.scales)?.value)
        })
        .collect();
    let mut failures = 0usize;
    let mut values = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                failures += 1;
                if failures == 1 {
                    record.notes.push(format!("estimator error counted as failure: {e}"));
                }
            }
        }
    }
    let n = base.n_lambda as f64;
    let above = values.iter().filter(|&&v| v >= target - check.tol).count() as f64 / n;
    let equal = values.iter().filter(|&&v| (v - target).abs() <= check.tol).count() as f64 / n;
    let (mean, _) = mean_and_sem(&values);
    record.estimate("target", target);
    record.estimate("tol", check.tol);
    record.estimate("pass_fraction", above);
    record.estimate("equality_fraction", equal);
    record.estimate("estimator_errors", failures as f64);
    if !values.is_empty() {
        record.estimate("mean_estimate", mean);
        record.estimate("min_estimate", values.iter().copied().fold(f64::INFINITY, f64::min));
        record.estimate("max_estimate", values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    if p.dim_x < p.family.alpha() * p.family.kappa() {
        record.notes.push("dim X < alpha*kappa: equality case applies".into());
    }
    record.bound = Some(target - check.tol);
    record.slack = Some(0.0);
    record.margin = Some(above - ctx.pass_fraction);
    record.series.push(indexed(format!("{}_dimension", base.id), &values));
    record.finish(if above >= ctx.pass_fraction { Status::Pass } else { Status::Fail });
    Ok(record)
}

pub fn verify_theorem2(check: &Theorem2Check, ctx: &Context) -> Result<CheckRecord> {
    let base = &check.base;
    let mut record = CheckRecord::new(&base.id, "theorem2", base.expect, digest(ctx.seed, check));
    let family = ctx.registry.get(&base.family)?;
    if family.codomain_dim() != 1 {
        return Err(Error::Config(format!(
            "{}: the positive-length check needs a family with values in R",
            base.id
        )));
    }
    if !(check.epsilon > 0.0) {
        return Err(Error::Config(format!("{}: epsilon must be positive", base.id)));
    }
    let dim_x = base.fixture.known_dimension()?;
    let threshold = family.alpha() * family.kappa();
    if dim_x <= threshold {
        if base.expect != Expect::Fail {
            record.estimate("dim_x", dim_x);
            record.notes.push(format!("precondition dim X > alpha*kappa unmet ({dim_x} <= {threshold})"));
            record.finish(Status::Refused);
            return Ok(record);
        }
        record.notes.push("precondition unmet; run as a negative control".into());
    }
    let p = prepare(base, ctx, &mut record)?;
    let eps = check.epsilon;
    let results: Vec<Result<(f64, f64)>> = p
        .lambdas
        .par_iter()
        .map(|l| {
            let nu = pushforward(p.family.as_ref(), l, &p.mu)?;
            Ok((interval_measure(nu.cloud(), eps)?, interval_measure(nu.cloud(), eps / 3.0)?))
        })
        .collect();
    let pairs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let positive: Vec<bool> = pairs
        .iter()
        .map(|&(l1, l3)| l1 >= check.min_length && l3 / l1 >= check.min_ratio)
        .collect();
    let n = positive.len() as f64;
    let pos = positive.iter().filter(|&&b| b).count() as f64 / n;
    let neg = 1.0 - pos;
    let lengths: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ratios: Vec<f64> = pairs.iter().map(|p| p.1 / p.0).collect();
    record.estimate("positive_fraction", pos);
    record.estimate("negative_fraction", neg);
    record.estimate("mean_length", mean_and_sem(&lengths).0);
    record.estimate("mean_ratio", mean_and_sem(&ratios).0);
    record.estimate("decay_ratio_of_null_set", 3f64.powf(p.dim_x.min(1.0) - 1.0));
    record.bound = Some(ctx.pass_fraction);
    record.slack = Some(0.0);
    record.margin = Some(pos - ctx.pass_fraction);
    record.series.push(indexed(format!("{}_length", base.id), &lengths));
    record.series.push(indexed(format!("{}_ratio", base.id), &ratios));
    let status = if pos >= ctx.pass_fraction {
        Status::Pass
    } else if neg >= ctx.pass_fraction {
        Status::Fail
    } else {
        Status::Inconclusive
    };
    record.finish(status);
    Ok(record)
}

pub fn verify_theorem3(check: &Theorem3Check, ctx: &Context) -> Result<CheckRecord> {
    let base = &check.base;
    let mut record = CheckRecord::new(&base.id, "theorem3", base.expect, digest(ctx.seed, check));
    let family = ctx.registry.get(&base.family)?;
    let kappa = family.kappa();
    if check.t_values.is_empty() {
        return Err(Error::Config(format!("{}: t_values is empty", base.id)));
    }
    if let Some(t) = check.t_values.iter().find(|&&t| !(0.0..kappa).contains(&t)) {
        return Err(Error::Config(format!("{}: t = {t} outside [0, kappa = {kappa})", base.id)));
    }
    if !(check.r_min > 0.0) {
        return Err(Error::Config(format!("{}: r_min must be positive", base.id)));
    }
    let c = declared_c(family.as_ref())?;
    let p = prepare(base, ctx, &mut record)?;
    let alpha = p.family.alpha();

    let per_lambda: Vec<Result<Vec<f64>>> = p
        .lambdas
        .par_iter()
        .map(|l| {
            let nu = pushforward(p.family.as_ref(), l, &p.mu)?;
            check.t_values.iter().map(|&t| energy(&nu, t, check.r_min)).collect()
        })
        .collect();
    let per_lambda = per_lambda.into_iter().collect::<Result<Vec<_>>>()?;

    let mut passed = true;
    let mut worst: Option<(f64, f64, f64)> = None;
    for (k, &t) in check.t_values.iter().enumerate() {
        let values: Vec<f64> = per_lambda.iter().map(|row| row[k]).collect();
        let (mean, sem) = mean_and_sem(&values);
        let source = energy(&p.mu, alpha * t, check.r_min)?;
        let factor = 1.0 + c * t / (kappa - t);
        let bound = factor * source;
        let slack = SIGMA_SLACK * sem;
        let margin = bound + slack - mean;
        passed &= margin >= 0.0;
        record.estimate(format!("t={t}/mean"), mean);
        record.estimate(format!("t={t}/sem"), sem);
        record.estimate(format!("t={t}/source_energy"), source);
        record.estimate(format!("t={t}/factor"), factor);
        record.estimate(format!("t={t}/bound"), bound);
        record.estimate(format!("t={t}/ratio"), mean / source);
        if t == 0.0 && mean != source {
            record.notes.push(format!("t=0 merge correction {}", mean - source));
        }
        record.series.push(indexed(format!("{}_energy_t{t}", base.id), &values));
        if worst.is_none_or(|w| margin < w.2) {
            worst = Some((bound, slack, margin));
        }
    }
    let (bound, slack, margin) = worst.expect("t_values nonempty");
    record.bound = Some(bound);
    record.slack = Some(slack);
    record.margin = Some(margin);
    record.finish(if passed { Status::Pass } else { Status::Fail });
    Ok(record)
}

/// `Σ_y ν(y) · min_r ν(B(y,r)) / r^κ`.
fn density_integral(nu: &DiscreteMeasure, kappa: f64, radii: &[f64]) -> Result<f64> {
    let scan = regularity_scan(nu, kappa, radii)?;
    let terms: Vec<f64> = scan
        .per_point_min_ratio
        .iter()
        .zip(nu.weights())
        .map(|(r, w)| r * w)
        .collect();
    Ok(pairwise_sum(&terms))
}

pub fn verify_theorem4(check: &Theorem4Check, ctx: &Context) -> Result<CheckRecord> {
    let base = &check.base;
    let mut record = CheckRecord::new(&base.id, "theorem4", base.expect, digest(ctx.seed, check));
    let family = ctx.registry.get(&base.family)?;
    let c = declared_c(family.as_ref())?;
    let p = prepare(base, ctx, &mut record)?;
    let kappa = p.family.kappa();
    let coarse: Vec<f64> = check.radii.iter().step_by(2).copied().collect();
    let r_min = *check
        .radii
        .last()
        .ok_or_else(|| Error::Config(format!("{}: radii is empty", base.id)))?;

    let per_lambda: Vec<Result<(f64, f64)>> = p
        .lambdas
        .par_iter()
        .map(|l| {
            let nu = pushforward(p.family.as_ref(), l, &p.mu)?;
            let fine = density_integral(&nu, kappa, &check.radii)?;
            let coarse = if coarse.len() >= 2 {
                density_integral(&nu, kappa, &coarse)?
            } else {
                fine
            };
            Ok((fine, coarse))
        })
        .collect();
    let per_lambda = per_lambda.into_iter().collect::<Result<Vec<_>>>()?;
    let fine: Vec<f64> = per_lambda.iter().map(|v| v.0).collect();
    let coarse_values: Vec<f64> = per_lambda.iter().map(|v| v.1).collect();
    let monotone = fine.iter().zip(&coarse_values).all(|(f, c)| c >= f);

    let source = energy(&p.mu, p.family.alpha() * kappa, r_min)?;
    let bound = c * source;
    record.estimate("source_energy", source);
    record.estimate("coarse_lhs_mean", mean_and_sem(&coarse_values).0);
    record.estimate("coarsening_monotone", if monotone { 1.0 } else { 0.0 });
    if !monotone {
        record.notes.push("coarsened radii decreased the estimate".into());
    }
    let within = compare_mean(&mut record, &fine, bound);
    record.series.push(indexed(format!("{}_lhs", base.id), &fine));
    record.finish(if within && monotone { Status::Pass } else { Status::Fail });
    Ok(record)
}

/// `Σ (bin mass)² / h` over the grid `[kh, (k+1)h)`.
fn histogram_l2(nu: &DiscreteMeasure, h: f64) -> f64 {
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (x, &w) in nu.cloud().coords().iter().zip(nu.weights()) {
        bins.entry((x / h).floor() as i64).or_default().push(w);
    }
    let squares: Vec<f64> = bins
        .values()
        .map(|ws| {
            let m = pairwise_sum(ws);
            m * m
        })
        .collect();
    pairwise_sum(&squares) / h
}

pub fn verify_corollary1(check: &Corollary1Check, ctx: &Context) -> Result<CheckRecord> {
    let base = &check.base;
    let mut record = CheckRecord::new(&base.id, "corollary1", base.expect, digest(ctx.seed, check));
    let family = ctx.registry.get(&base.family)?;
    if family.codomain_dim() != 1 {
        return Err(Error::Config(format!(
            "{}: the density check needs a family with values in R",
            base.id
        )));
    }
    let h = check.histogram_bin;
    if !(h > 0.0) || !(check.regularity_c > 0.0) {
        return Err(Error::Config(format!("{}: histogram_bin and regularity_c must be positive", base.id)));
    }
    let c = declared_c(family.as_ref())?;
    let p = prepare(base, ctx, &mut record)?;
    let kappa = p.family.kappa();

    let per_lambda: Vec<Result<(f64, f64)>> = p
        .lambdas
        .par_iter()
        .map(|l| {
            let nu = pushforward(p.family.as_ref(), l, &p.mu)?;
            let xs = nu.cloud().coords();
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok((histogram_l2(&nu, h), hi - lo))
        })
        .collect();
    let per_lambda = per_lambda.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_lambda.iter().map(|v| v.0).collect();
    let coarse_lambdas = per_lambda
        .iter()
        .filter(|v| v.1 > 0.0 && h < v.1 / p.mu.len() as f64)
        .count();
    if coarse_lambdas > 0 {
        record.notes.push(format!(
            "histogram_bin below point resolution for {coarse_lambdas} parameters"
        ));
    }

    let source = energy(&p.mu, p.family.alpha() * kappa, h)?;
    let bound = 5f64.powf(kappa) / check.regularity_c * c * source;
    record.estimate("source_energy", source);
    record.estimate("histogram_bin", h);
    let within = compare_mean(&mut record, &values, bound);
    record.series.push(indexed(format!("{}_l2", base.id), &values));
    record.finish(if within { Status::Pass } else { Status::Fail });
    Ok(record)
}
