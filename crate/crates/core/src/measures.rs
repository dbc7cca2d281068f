//! Ball masses, truncated s-energies, regularity scans and the executable
//! Frostman regularization.
//!
//! All balls are closed: `B(x, r) = {y : |x − y| ≤ r}`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fractal::DiscreteMeasure;
use crate::stats::{euclidean, pairwise_sum};

/// μ(B(center, r)) for the closed ball.
pub fn ball_mass(mu: &DiscreteMeasure, center: &[f64], r: f64) -> f64 {
    let mut total = 0.0;
    for (i, &w) in mu.weights().iter().enumerate() {
        if euclidean(mu.point(i), center) <= r {
            total += w;
        }
    }
    total
}

fn check_energy_args(s: f64, r_min: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("energy exponent must be finite and >= 0, got {s}")));
    }
    if !(r_min >= 0.0 && r_min.is_finite()) {
        return Err(invalid(format!("r_min must be finite and >= 0, got {r_min}")));
    }
    Ok(())
}

/// `d^{-s}`, with the integer exponents the suite uses most kept off `powf`.
#[inline]
fn kernel(d: f64, s: f64) -> f64 {
    if s == 1.0 {
        1.0 / d
    } else if s == 2.0 {
        1.0 / (d * d)
    } else {
        d.powf(-s)
    }
}

fn first_singularity(hits: impl Iterator<Item = Option<(usize, usize)>>) -> Option<(usize, usize)> {
    hits.flatten().min()
}

/// Truncated s-energy `Σ_{i≠j} wᵢwⱼ max(|xᵢ−xⱼ|, r_min)^{-s}`.
///
/// The diagonal is excluded by index. For `s = 0` the value is
/// `mass² − Σwᵢ²` whatever the geometry.
pub fn energy(mu: &DiscreteMeasure, s: f64, r_min: f64) -> Result<f64> {
    check_energy_args(s, r_min)?;
    let w = mu.weights();
    if s == 0.0 {
        let m = mu.total_mass();
        return Ok(m * m - mu.diagonal_mass());
    }
    let n = mu.len();
    let rows: Vec<(f64, Option<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mu.point(i);
            let mut acc = 0.0;
            let mut hit = None;
            for j in i + 1..n {
                let d = euclidean(xi, mu.point(j)).max(r_min);
                if d == 0.0 {
                    hit.get_or_insert((i, j));
                    continue;
                }
                acc += w[j] * kernel(d, s);
            }
            (2.0 * w[i] * acc, hit)
        })
        .collect();
    if let Some((i, j)) = first_singularity(rows.iter().map(|r| r.1)) {
        return Err(Error::Singularity { i, j });
    }
    let terms: Vec<f64> = rows.into_iter().map(|r| r.0).collect();
    Ok(pairwise_sum(&terms))
}

/// The same truncated energy evaluated through the layer-cake identity
///
/// ```text
/// ∫ d(x₁,x₂)^{-s} dμ(x₂) = ∫₀^∞ μ[B(x₁, u^{-1/s}) ∖ {x₁}] du
/// ```
///
/// The integrand is a step function of `u`, so each inner integral is an
/// exact finite sum over the sorted distinct (clamped) distances from `x₁`.
pub fn energy_layercake(mu: &DiscreteMeasure, s: f64, r_min: f64) -> Result<f64> {
    check_energy_args(s, r_min)?;
    let n = mu.len();
    let w = mu.weights();
    let rows: Vec<(f64, Option<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mu.point(i);
            let mut shells: Vec<(f64, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (euclidean(xi, mu.point(j)).max(r_min), w[j]))
                .collect();
            shells.sort_by(|a, b| a.0.total_cmp(&b.0));
            if s > 0.0 {
                if let Some(j) = (0..n).filter(|&j| j != i).find(|&j| euclidean(xi, mu.point(j)).max(r_min) == 0.0) {
                    return (0.0, Some((i.min(j), i.max(j))));
                }
            }
            // Distinct radii ρ₁ < ρ₂ < … with cumulative masses Mₖ = μ(B(x₁, ρₖ)∖{x₁});
            // the layer {u : μ[…] = Mₖ} is the interval (ρₖ₊₁^{-s}, ρₖ^{-s}].
            let mut levels: Vec<(f64, f64)> = Vec::new();
            let mut cumulative = 0.0;
            for (rho, wj) in shells {
                cumulative += wj;
                match levels.last_mut() {
                    Some(last) if last.0 == rho => last.1 = cumulative,
                    _ => levels.push((rho, cumulative)),
                }
            }
            let mut integral = 0.0;
            for k in 0..levels.len() {
                let upper = levels[k].0.powf(-s);
                let lower = levels.get(k + 1).map_or(0.0, |next| next.0.powf(-s));
                integral += (upper - lower) * levels[k].1;
            }
            (w[i] * integral, None)
        })
        .collect();
    if let Some((i, j)) = first_singularity(rows.iter().map(|r| r.1)) {
        return Err(Error::Singularity { i, j });
    }
    let terms: Vec<f64> = rows.into_iter().map(|r| r.0).collect();
    Ok(pairwise_sum(&terms))
}

/// For each support point, the (distance, weight) list sorted by distance,
/// with the cumulative weight in place of the weight.
fn cumulative_profile(mu: &DiscreteMeasure, i: usize) -> Vec<(f64, f64)> {
    let xi = mu.point(i);
    let mut row: Vec<(f64, f64)> = (0..mu.len())
        .map(|j| (euclidean(xi, mu.point(j)), mu.weights()[j]))
        .collect();
    row.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for entry in row.iter_mut() {
        acc += entry.1;
        entry.1 = acc;
    }
    row
}

/// Closed-ball mass read off a cumulative profile.
fn profile_mass(profile: &[(f64, f64)], r: f64) -> f64 {
    let k = profile.partition_point(|&(d, _)| d <= r);
    if k == 0 {
        0.0
    } else {
        profile[k - 1].1
    }
}

/// Per-point scan of `ν(B(y, r)) / r^κ` over a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub kappa: f64,
    pub radii: Vec<f64>,
    /// Minimum over the radii of the ratio, for each support point.
    pub per_point_min_ratio: Vec<f64>,
    pub global_min: f64,
    pub global_max: f64,
}

fn check_decreasing_radii(radii: &[f64], min_len: usize) -> Result<()> {
    if radii.is_empty() {
        return Err(invalid("radii list is empty"));
    }
    if radii.len() < min_len {
        return Err(invalid(format!("need at least {min_len} radii, got {}", radii.len())));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("radii must be strictly decreasing"));
    }
    Ok(())
}

/// Discrete surrogate for `liminf_{r→0} ν(B(y,r))/r^κ`: the minimum over the
/// supplied radii, computed at every support point.
pub fn regularity_scan(nu: &DiscreteMeasure, kappa: f64, radii: &[f64]) -> Result<RegularityReport> {
    check_decreasing_radii(radii, 2)?;
    let per_point_min_ratio: Vec<f64> = (0..nu.len())
        .into_par_iter()
        .map(|i| {
            let profile = cumulative_profile(nu, i);
            radii
                .iter()
                .map(|&r| profile_mass(&profile, r) / r.powf(kappa))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let global_min = per_point_min_ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let global_max = per_point_min_ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RegularityReport {
        kappa,
        radii: radii.to_vec(),
        per_point_min_ratio,
        global_min,
        global_max,
    })
}

/// A ball chosen by the Vitali selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedBall {
    pub center: usize,
    pub radius: f64,
    pub mass: f64,
}

/// Output of [`frostman_regularize`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanResult {
    /// Restriction of the input to the points outside the enlarged balls;
    /// `None` when nothing survives.
    pub measure: Option<DiscreteMeasure>,
    /// Certificate constant `max(M, 10^s · mass / delta^s)`.
    pub c: f64,
    /// Candidate radius grid `delta/10 · 2^{-j}`, `j = 0..=J`.
    pub radii: Vec<f64>,
    pub selected: Vec<SelectedBall>,
    pub input_mass: f64,
    pub retained_mass: f64,
    pub removed_points: usize,
}

impl FrostmanResult {
    pub fn is_empty(&self) -> bool {
        self.measure.is_none()
    }
}

const MAX_LEVELS: usize = 60;

/// Dyadic grid `delta/10 · 2^{-j}` stopping at the resolution of the support
/// (the smallest positive interpoint distance). A support with no distinct
/// pair gets the single radius `delta/10`.
pub fn frostman_radii(mu: &DiscreteMeasure, delta: f64) -> Vec<f64> {
    let top = delta / 10.0;
    let levels = match mu.min_separation() {
        Some(sep) if top > sep => ((top / sep).log2().floor() as usize).min(MAX_LEVELS),
        _ => 0,
    };
    (0..=levels).map(|j| top * 0.5f64.powi(j as i32)).collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Greedy regularization of a discrete measure toward a Frostman measure.
///
/// 1. Candidate balls are `B(x, r)` with `x` a support point, `r` on the grid
///    of [`frostman_radii`], and `μ(B(x,r)) ≥ M r^s`.
/// 2. A maximal disjoint subfamily is chosen greedily, largest radius first,
///    ties broken by lexicographic center.
/// 3. Every support point in a 5-fold enlargement of a chosen ball is removed.
/// 4. The remainder is returned with `c = max(M, 10^s · μ(X) / delta^s)`.
pub fn frostman_regularize(mu: &DiscreteMeasure, s: f64, m: f64, delta: f64) -> Result<FrostmanResult> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be positive, got {m}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("s must be >= 0, got {s}")));
    }
    let radii = frostman_radii(mu, delta);
    let n = mu.len();

    let per_point: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let profile = cumulative_profile(mu, i);
            radii
                .iter()
                .enumerate()
                .filter_map(|(level, &r)| {
                    let mass = profile_mass(&profile, r);
                    (mass >= m * r.powf(s)).then_some((level, mass))
                })
                .collect()
        })
        .collect();

    let mut candidates: Vec<(usize, usize, f64)> = per_point
        .iter()
        .enumerate()
        .flat_map(|(i, hits)| hits.iter().map(move |&(level, mass)| (level, i, mass)))
        .collect();
    // Smaller level index means larger radius.
    candidates.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| lex_cmp(mu.point(a.1), mu.point(b.1)))
            .then_with(|| a.1.cmp(&b.1))
    });

    let mut selected: Vec<SelectedBall> = Vec::new();
    for (level, center, mass) in candidates {
        let r = radii[level];
        let x = mu.point(center);
        let disjoint = selected
            .iter()
            .all(|b| euclidean(x, mu.point(b.center)) > r + b.radius);
        if disjoint {
            selected.push(SelectedBall { center, radius: r, mass });
        }
    }

    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let x = mu.point(i);
            !selected
                .iter()
                .any(|b| euclidean(x, mu.point(b.center)) <= 5.0 * b.radius)
        })
        .collect();
    let removed_points = keep.iter().filter(|k| !**k).count();
    let measure = mu.restrict(&keep);
    let retained_mass = measure.as_ref().map_or(0.0, |m| m.total_mass());
    let c = m.max(10f64.powf(s) * mu.total_mass() / delta.powf(s));

    Ok(FrostmanResult {
        measure,
        c,
        radii,
        selected,
        input_mass: mu.total_mass(),
        retained_mass,
        removed_points,
    })
}

/// Outcome of the exhaustive ball-growth check `ν(B(x,r)) ≤ c r^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub radii: Vec<f64>,
    pub balls_checked: usize,
    /// Largest `ν(B(x,r)) / (c r^s)` seen; the check passes when it is ≤ 1.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Checks `ν(B(x, r)) ≤ c r^s` at every support point for every radius in
/// `grid ∪ {delta, 2·delta, diam ν}`.
pub fn frostman_certificate(nu: &DiscreteMeasure, s: f64, c: f64, delta: f64, grid: &[f64]) -> CertificateCheck {
    let mut radii = grid.to_vec();
    radii.extend([delta, 2.0 * delta]);
    let diam = nu.diameter();
    if diam > 0.0 {
        radii.push(diam);
    }
    radii.sort_by(|a, b| b.total_cmp(a));
    radii.dedup();
    let worst_ratio = (0..nu.len())
        .into_par_iter()
        .map(|i| {
            let profile = cumulative_profile(nu, i);
            radii
                .iter()
                .map(|&r| profile_mass(&profile, r) / (c * r.powf(s)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    CertificateCheck {
        balls_checked: radii.len() * nu.len(),
        radii,
        worst_ratio,
        passed: worst_ratio <= 1.0,
    }
}

/// Upper bound on the truncated t-energy of a measure that passed the
/// certificate at exponent `s > t` (with `t ≤ 1`):
/// `mass² r₀^{-t} + (c/(s−t)) · mass · r₀^{s−t} · 2^s`, with `r₀ = delta/10`.
/// Valid whenever `r_min` is at least the finest certified radius.
pub fn frostman_energy_bound(mass: f64, c: f64, s: f64, t: f64, delta: f64) -> f64 {
    let r0 = delta / 10.0;
    mass * mass * r0.powf(-t) + (c / (s - t)) * mass * r0.powf(s - t) * 2f64.powf(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{cantor_measure, PointCloud};
    use proptest::prelude::*;

    fn two_point() -> DiscreteMeasure {
        DiscreteMeasure::new(PointCloud::new(1, vec![0.0, 1.0]).unwrap(), vec![0.5, 0.5]).unwrap()
    }

    fn random_measure(coords: Vec<f64>, weights: Vec<f64>, dim: usize) -> DiscreteMeasure {
        DiscreteMeasure::new(PointCloud::new(dim, coords).unwrap(), weights).unwrap()
    }

    /// Direct double sum over ordered pairs, written independently of `energy`.
    fn naive_energy(mu: &DiscreteMeasure, s: f64, r_min: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..mu.len() {
            for j in 0..mu.len() {
                if i != j {
                    let d = euclidean(mu.point(i), mu.point(j)).max(r_min);
                    total += mu.weights()[i] * mu.weights()[j] * d.powf(-s);
                }
            }
        }
        total
    }

    #[test]
    fn ball_mass_examples() {
        let mu = two_point();
        assert_eq!(ball_mass(&mu, &[0.0], 0.5), 0.5);
        assert_eq!(ball_mass(&mu, &[0.0], 1.0), 1.0);
        assert_eq!(ball_mass(&mu, &[0.0], 10.0), mu.total_mass());
    }

    #[test]
    fn cantor_ball_masses() {
        let mu = cantor_measure(10).unwrap();
        for k in 0..=10 {
            let r = 3f64.powi(-k);
            let brute: f64 = mu
                .cloud()
                .points()
                .zip(mu.weights())
                .filter(|(p, _)| p[0].abs() <= r)
                .map(|(_, w)| w)
                .sum();
            let got = ball_mass(&mu, &[0.0], r);
            assert_eq!(got, brute);
            assert!((got - 2f64.powi(-k)).abs() < 1e-12, "k={k}: {got}");
        }
    }

    #[test]
    fn energy_examples() {
        let mu = two_point();
        for s in [0.0, 0.5, 1.0, 3.0] {
            assert!((energy(&mu, s, 0.0).unwrap() - 0.5).abs() < 1e-15);
            assert!((energy_layercake(&mu, s, 0.0).unwrap() - 0.5).abs() < 1e-15);
        }
        let mu = cantor_measure(5).unwrap();
        let expected = 1.0 - mu.diagonal_mass();
        assert!((energy(&mu, 0.0, 0.0).unwrap() - expected).abs() < 1e-14);
        let atom = DiscreteMeasure::atom(vec![0.3, 0.2]).unwrap();
        assert_eq!(energy_layercake(&atom, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(energy(&atom, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn energy_singularity() {
        let mu = random_measure(vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0], 1);
        assert!(matches!(energy(&mu, 1.0, 0.0), Err(Error::Singularity { i: 0, j: 1 })));
        assert!(matches!(energy_layercake(&mu, 1.0, 0.0), Err(Error::Singularity { i: 0, j: 1 })));
        assert!(energy(&mu, 1.0, 0.1).is_ok());
        assert!(energy(&mu, 0.0, 0.0).is_ok());
        assert!(energy(&mu, -1.0, 0.0).is_err());
    }

    #[test]
    fn cantor_energy_matches_layercake() {
        let mu = cantor_measure(8).unwrap();
        for s in [0.5, 0.9] {
            let a = energy(&mu, s, 0.0).unwrap();
            let b = energy_layercake(&mu, s, 0.0).unwrap();
            let c = naive_energy(&mu, s, 0.0);
            assert!((a - b).abs() <= 1e-9 * a, "s={s}: {a} vs {b}");
            assert!((a - c).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn regularity_grid_interior_ratio_near_two() {
        let n = 2001;
        let coords: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let mu = DiscreteMeasure::uniform(PointCloud::new(1, coords).unwrap());
        let radii = [0.1003, 0.0503, 0.0203];
        let rep = regularity_scan(&mu, 1.0, &radii).unwrap();
        let mid = rep.per_point_min_ratio[n / 2];
        // Direct count oracle: (2r/h + 1) points of mass 1/n in a ball of radius r.
        let h = 1.0 / (n - 1) as f64;
        let oracle = radii
            .iter()
            .map(|r| (2.0 * (r / h).floor() + 1.0) / n as f64 / r)
            .fold(f64::INFINITY, f64::min);
        assert!((mid - oracle).abs() < 1e-9);
        assert!((mid - 2.0).abs() < 0.02);
        assert!(rep.global_min <= rep.global_max);
    }

    #[test]
    fn regularity_atom_and_errors() {
        let atom = DiscreteMeasure::atom(vec![0.0]).unwrap();
        let rep = regularity_scan(&atom, 1.0, &[1e-3, 1e-4]).unwrap();
        assert!((rep.global_min - 1e3).abs() < 1e-6);
        assert!(regularity_scan(&atom, 1.0, &[]).is_err());
        assert!(regularity_scan(&atom, 1.0, &[0.1]).is_err());
        assert!(regularity_scan(&atom, 1.0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn regularity_cantor_bounded() {
        let mu = cantor_measure(10).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        let radii: Vec<f64> = (2..=8).map(|k| 3f64.powi(-k)).collect();
        let rep = regularity_scan(&mu, s, &radii).unwrap();
        assert!(rep.global_min > 0.0 && rep.global_max.is_finite());
        assert!(rep.global_min >= 0.4 && rep.global_max <= 3.0, "{} {}", rep.global_min, rep.global_max);
    }

    #[test]
    fn frostman_noop_when_no_candidate() {
        let mu = cantor_measure(6).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        let out = frostman_regularize(&mu, s, 1e6, 1.0).unwrap();
        assert!(out.selected.is_empty());
        assert_eq!(out.measure.as_ref(), Some(&mu));
        assert_eq!(out.c, 1e6);
    }

    #[test]
    fn frostman_atom_is_emptied() {
        let atom = DiscreteMeasure::atom(vec![0.0]).unwrap();
        let out = frostman_regularize(&atom, 1.0, 1.0, 1.0).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.retained_mass, 0.0);
        assert_eq!(out.removed_points, 1);
    }

    #[test]
    fn frostman_rejects_bad_parameters() {
        let mu = two_point();
        assert!(frostman_regularize(&mu, 1.0, 0.0, 1.0).is_err());
        assert!(frostman_regularize(&mu, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn frostman_cantor_certificate() {
        let mu = cantor_measure(10).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        let out = frostman_regularize(&mu, s, 10.0, 1.0).unwrap();
        let nu = out.measure.as_ref().expect("mass retained");
        assert!(out.retained_mass > 0.0);
        let cert = frostman_certificate(nu, s, out.c, 1.0, &out.radii);
        assert!(cert.passed, "worst ratio {}", cert.worst_ratio);
    }

    #[test]
    fn frostman_greedy_selects_disjoint_balls() {
        // Dense cluster near 0 plus sparse points: the cluster must be cut out.
        let mut coords: Vec<f64> = (0..50).map(|i| i as f64 * 1e-4).collect();
        coords.extend([0.5, 0.8, 1.0]);
        let n = coords.len();
        let mu = DiscreteMeasure::uniform(PointCloud::new(1, coords).unwrap());
        let out = frostman_regularize(&mu, 1.0, 100.0, 1.0).unwrap();
        assert!(!out.selected.is_empty());
        for (a, b) in out.selected.iter().zip(out.selected.iter().skip(1)) {
            assert!(a.radius >= b.radius);
        }
        for (k, a) in out.selected.iter().enumerate() {
            for b in &out.selected[k + 1..] {
                assert!(euclidean(mu.point(a.center), mu.point(b.center)) > a.radius + b.radius);
            }
        }
        let nu = out.measure.unwrap();
        assert_eq!(nu.len(), n - 50);
        assert!(frostman_certificate(&nu, 1.0, out.c, 1.0, &out.radii).passed);
    }

    proptest! {
        #[test]
        fn energy_oracle_equivalence(
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0), 1..60),
            s in 0.0f64..2.0,
            r_min in prop_oneof![Just(0.0), 1e-3f64..0.2],
        ) {
            let coords: Vec<f64> = raw.iter().flat_map(|p| [p.0, p.1]).collect();
            let weights: Vec<f64> = raw.iter().map(|p| p.2 + 1e-3).collect();
            let mu = random_measure(coords, weights, 2);
            let a = energy(&mu, s, r_min).unwrap();
            let b = energy_layercake(&mu, s, r_min).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
        }

        #[test]
        fn energy_monotone_in_s_and_r_min(
            raw in proptest::collection::vec((0.0f64..0.7, 0.0f64..0.7), 2..40),
            s1 in 0.0f64..2.0,
            ds in 0.0f64..1.0,
            r1 in 1e-4f64..0.1,
            dr in 0.0f64..0.1,
        ) {
            let coords: Vec<f64> = raw.iter().flat_map(|p| [p.0, p.1]).collect();
            let mu = DiscreteMeasure::uniform(PointCloud::new(2, coords).unwrap());
            let e_lo = energy(&mu, s1, r1).unwrap();
            let e_hi = energy(&mu, s1 + ds, r1).unwrap();
            prop_assert!(e_hi >= e_lo * (1.0 - 1e-12));
            let e_wide = energy(&mu, s1, r1 + dr).unwrap();
            prop_assert!(e_wide <= e_lo * (1.0 + 1e-12));
        }

        #[test]
        fn frostman_certificate_always_holds(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.1f64..1.0), 2..80),
            s in 0.2f64..1.8,
            m in 0.5f64..50.0,
            delta in 0.05f64..2.0,
        ) {
            let coords: Vec<f64> = raw.iter().flat_map(|p| [p.0, p.1]).collect();
            let mu = random_measure(coords, raw.iter().map(|p| p.2).collect(), 2);
            let out = frostman_regularize(&mu, s, m, delta).unwrap();
            if let Some(nu) = &out.measure {
                let cert = frostman_certificate(nu, s, out.c, delta, &out.radii);
                prop_assert!(cert.passed, "worst {}", cert.worst_ratio);
                // Energy link at t < s, truncated at the finest certified radius.
                let t = (0.5 * s).min(1.0);
                let r_min = *out.radii.last().unwrap();
                let e = energy(nu, t, r_min).unwrap();
                let bound = frostman_energy_bound(nu.total_mass(), out.c, s, t, delta);
                prop_assert!(e <= bound, "energy {} > bound {}", e, bound);
            }
        }
    }
}
