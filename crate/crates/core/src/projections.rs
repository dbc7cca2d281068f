//! Parameterized projection families `π_λ : ℝ^d → ℝ^k` and pushforwards.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fractal::{DiscreteMeasure, PointCloud};
use crate::rng::{stream, Domain};

/// A sampled parameter λ. Angle families use one coordinate, direction
/// families a unit vector.
pub type Parameter = Vec<f64>;

/// A measurable family of maps with a sampleable parameter law and the
/// declared exponents of the transversality inequality
/// `ℙ[|π_λx₁ − π_λx₂| ≤ δ |x₁−x₂|^α] ≤ C δ^κ`.
pub trait ProjectionFamily: Send + Sync {
    fn name(&self) -> &str;
    fn domain_dim(&self) -> usize;
    fn codomain_dim(&self) -> usize;
    /// Hölder exponent α.
    fn alpha(&self) -> f64;
    /// Transversality exponent κ.
    fn kappa(&self) -> f64;
    /// Transversality constant C, when known.
    fn declared_c(&self) -> Option<f64>;

    fn apply_into(&self, lambda: &[f64], x: &[f64], out: &mut [f64]);

    /// The `index`-th parameter of the stream keyed by `seed`.
    fn sample_parameter(&self, seed: u64, index: u64) -> Parameter;

    fn apply(&self, lambda: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain_dim()];
        self.apply_into(lambda, x, &mut out);
        out
    }

    /// `count` parameters; a pure function of `(count, seed)`.
    fn sample_lambda(&self, count: usize, seed: u64) -> Vec<Parameter> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample_parameter(seed, i))
            .collect()
    }

    /// A pair attaining the supremum in the transversality inequality, when
    /// the family knows one.
    fn canonical_pair(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    /// Exact `ℙ[|π_λx₁ − π_λx₂| ≤ δ |x₁−x₂|^α]` for a pair at the given
    /// separation, when the family has a closed form.
    fn collapse_probability(&self, _delta: f64, _separation: f64, _alpha: f64) -> Option<f64> {
        None
    }
}

/// Classical planar projections onto lines: `π_θ(x) = x₁ cos θ + x₂ sin θ`,
/// `θ` uniform on `[0, π)`. α = κ = 1 and C = 1, since
/// `ℙ[|⟨e_θ, u⟩| ≤ δ] = 2 arcsin(δ)/π ≤ δ` for unit `u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarAngle;

impl ProjectionFamily for PlanarAngle {
    fn name(&self) -> &str {
        "planar"
    }
    fn domain_dim(&self) -> usize {
        2
    }
    fn codomain_dim(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        1.0
    }
    fn kappa(&self) -> f64 {
        1.0
    }
    fn declared_c(&self) -> Option<f64> {
        Some(1.0)
    }

    fn apply_into(&self, lambda: &[f64], x: &[f64], out: &mut [f64]) {
        let (s, c) = lambda[0].sin_cos();
        out[0] = x[0] * c + x[1] * s;
    }

    fn sample_parameter(&self, seed: u64, index: u64) -> Parameter {
        let u: f64 = stream(seed, Domain::Lambda, index).gen();
        vec![PI * u]
    }

    fn canonical_pair(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![0.0, 0.0], vec![1.0, 0.0]))
    }

    fn collapse_probability(&self, delta: f64, separation: f64, alpha: f64) -> Option<f64> {
        let t = (delta * separation.powf(alpha - 1.0)).min(1.0);
        Some(2.0 * t.asin() / PI)
    }
}

/// Projections of ℝ³ onto lines through the origin: `π_λ(x) = ⟨λ, x⟩`, `λ`
/// uniform on S². By Archimedes' band theorem `ℙ[|⟨λ,u⟩| ≤ δ] = δ`, so
/// α = κ = C = 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpatialDirection;

impl ProjectionFamily for SpatialDirection {
    fn name(&self) -> &str {
        "spatial"
    }
    fn domain_dim(&self) -> usize {
        3
    }
    fn codomain_dim(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        1.0
    }
    fn kappa(&self) -> f64 {
        1.0
    }
    fn declared_c(&self) -> Option<f64> {
        Some(1.0)
    }

    fn apply_into(&self, lambda: &[f64], x: &[f64], out: &mut [f64]) {
        out[0] = lambda[0] * x[0] + lambda[1] * x[1] + lambda[2] * x[2];
    }

    fn sample_parameter(&self, seed: u64, index: u64) -> Parameter {
        // Area-preserving cylinder map: z uniform on [-1, 1], azimuth uniform.
        let mut rng = stream(seed, Domain::Lambda, index);
        let z = 1.0 - 2.0 * rng.gen::<f64>();
        let phi = 2.0 * PI * rng.gen::<f64>();
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        vec![rho * c, rho * s, z]
    }

    fn canonical_pair(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![0.0; 3], vec![1.0, 0.0, 0.0]))
    }

    fn collapse_probability(&self, delta: f64, separation: f64, alpha: f64) -> Option<f64> {
        Some((delta * separation.powf(alpha - 1.0)).min(1.0))
    }
}

/// Name → family lookup. Built-ins are registered up front; callers add
/// their own through [`FamilyRegistry::register`].
#[derive(Clone)]
pub struct FamilyRegistry {
    families: BTreeMap<String, Arc<dyn ProjectionFamily>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut reg = FamilyRegistry {
            families: BTreeMap::new(),
        };
        reg.register(Arc::new(PlanarAngle));
        reg.register(Arc::new(SpatialDirection));
        reg
    }
}

impl FamilyRegistry {
    pub fn register(&mut self, family: Arc<dyn ProjectionFamily>) {
        self.families.insert(family.name().to_string(), family);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ProjectionFamily>> {
        self.families.get(name).cloned().ok_or_else(|| {
            Error::Config(format!(
                "unknown projection family {name:?}; known: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.families.keys().cloned().collect()
    }
}

/// Image measure `(π_λ)_* μ`: points mapped, weights untouched.
pub fn pushforward(family: &dyn ProjectionFamily, lambda: &[f64], mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let d = family.domain_dim();
    if mu.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: mu.dim(),
        });
    }
    let k = family.codomain_dim();
    let mut coords = vec![0.0; mu.len() * k];
    coords
        .par_chunks_mut(k * 1024)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk * 1024;
            for (offset, o) in out.chunks_exact_mut(k).enumerate() {
                family.apply_into(lambda, mu.point(base + offset), o);
            }
        });
    DiscreteMeasure::new(PointCloud::new(k, coords)?, mu.weights().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{cantor_measure, product_measure, DEFAULT_POINT_CAP};
    use crate::stats::euclidean;
    use proptest::prelude::*;

    #[test]
    fn planar_axes() {
        let f = PlanarAngle;
        assert_eq!(f.apply(&[0.0], &[2.0, 5.0]), vec![2.0]);
        assert!((f.apply(&[PI / 2.0], &[2.0, 5.0])[0] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn spatial_axis_and_unit_norm() {
        let f = SpatialDirection;
        assert_eq!(f.apply(&[1.0, 0.0, 0.0], &[3.0, 4.0, 5.0]), vec![3.0]);
        for lambda in f.sample_lambda(200, 3) {
            let norm: f64 = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_closed_form_below_delta() {
        for k in 0..=100 {
            let delta = k as f64 / 100.0;
            let p = PlanarAngle.collapse_probability(delta, 1.0, 1.0).unwrap();
            assert!(p <= delta + 1e-15);
            // geometric oracle: arcsin δ ≤ πδ/2
            assert!((p - 2.0 * delta.asin() / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn monte_carlo_matches_closed_forms() {
        let n = 20_000;
        let planar = PlanarAngle.sample_lambda(n, 11);
        let spatial = SpatialDirection.sample_lambda(n, 11);
        for delta in [0.1, 0.3] {
            let hits = planar.iter().filter(|l| l[0].cos().abs() <= delta).count() as f64 / n as f64;
            let p = 2.0 * f64::asin(delta) / PI;
            assert!((hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
            let hits = spatial.iter().filter(|l| l[0].abs() <= delta).count() as f64 / n as f64;
            assert!((hits - delta).abs() < 4.0 * (delta * (1.0 - delta) / n as f64).sqrt());
        }
    }

    #[test]
    fn sampling_is_reproducible_across_pools() {
        let a = PlanarAngle.sample_lambda(500, 9);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| PlanarAngle.sample_lambda(500, 9));
        assert_eq!(a, b);
        assert_ne!(a, PlanarAngle.sample_lambda(500, 10));
    }

    #[test]
    fn pushforward_two_point() {
        let mu = DiscreteMeasure::new(
            PointCloud::new(2, vec![0.0, 0.0, 1.0, 1.0]).unwrap(),
            vec![0.5, 0.5],
        )
        .unwrap();
        let nu = pushforward(&PlanarAngle, &[0.0], &mu).unwrap();
        assert_eq!(nu.cloud().coords(), &[0.0, 1.0]);
        assert_eq!(nu.weights(), &[0.5, 0.5]);
        let line = cantor_measure(2).unwrap();
        assert!(matches!(
            pushforward(&PlanarAngle, &[0.0], &line),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn pushforward_cantor_square_extremes() {
        let c = cantor_measure(7).unwrap();
        let cc = product_measure(&c, &c, DEFAULT_POINT_CAP).unwrap();
        let lambda = [PI / 4.0];
        let nu = pushforward(&PlanarAngle, &lambda, &cc).unwrap();
        let (lo, hi) = nu
            .cloud()
            .points()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));
        let (blo, bhi) = cc.cloud().points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let v = (p[0] + p[1]) / 2f64.sqrt();
            (lo.min(v), hi.max(v))
        });
        assert!((lo - blo).abs() < 1e-12 && (hi - bhi).abs() < 1e-12);
        // Extreme corners (0,0) and the largest depth-7 point (1−3^{-7}, 1−3^{-7}).
        let top = 1.0 - 3f64.powi(-7);
        assert!((hi - lo - 2f64.sqrt() * top).abs() < 1e-12);
        assert_eq!(nu.total_mass(), cc.total_mass());
    }

    #[test]
    fn registry_lookup() {
        let reg = FamilyRegistry::default();
        assert_eq!(reg.get("planar").unwrap().domain_dim(), 2);
        assert_eq!(reg.get("spatial").unwrap().domain_dim(), 3);
        assert!(reg.get("radial").is_err());
    }

    proptest! {
        #[test]
        fn builtins_are_lipschitz(
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            y in proptest::collection::vec(-5.0f64..5.0, 3),
            seed in 0u64..1000,
        ) {
            let planar = PlanarAngle.sample_parameter(seed, 0);
            let d2 = euclidean(&x[..2], &y[..2]);
            let gap = (PlanarAngle.apply(&planar, &x[..2])[0] - PlanarAngle.apply(&planar, &y[..2])[0]).abs();
            prop_assert!(gap <= d2 + 1e-12);
            let dir = SpatialDirection.sample_parameter(seed, 0);
            let d3 = euclidean(&x, &y);
            let gap = (SpatialDirection.apply(&dir, &x)[0] - SpatialDirection.apply(&dir, &y)[0]).abs();
            prop_assert!(gap <= d3 + 1e-12);
        }

        #[test]
        fn pushforward_preserves_mass(weights in proptest::collection::vec(0.01f64..5.0, 1..30), theta in 0.0f64..PI) {
            let coords: Vec<f64> = (0..weights.len()).flat_map(|i| [i as f64, (i * i) as f64 * 0.1]).collect();
            let mu = DiscreteMeasure::new(PointCloud::new(2, coords).unwrap(), weights).unwrap();
            let nu = pushforward(&PlanarAngle, &[theta], &mu).unwrap();
            prop_assert_eq!(nu.total_mass(), mu.total_mass());
        }
    }
}
