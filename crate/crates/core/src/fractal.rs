//! Point sets, self-similar fractals and finitely supported measures.
//!
//! Every set X in this crate is a finite subset of ℝ^d with the Euclidean
//! metric. Measures are weighted atoms; the natural self-similar measure of an
//! IFS is produced by enumerating all cylinders of a fixed depth.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{euclidean, pairwise_sum};

/// Default upper bound on the number of generated support points (2^24).
pub const DEFAULT_POINT_CAP: usize = 1 << 24;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Contracting similarity `x ↦ ratio · R x + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub ratio: f64,
    /// Row-major orthogonal matrix; identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<f64>>>,
    pub translation: Vec<f64>,
}

impl Similarity {
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Self {
        Similarity {
            ratio,
            rotation: None,
            translation,
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.rotation {
            None => {
                for (o, (xi, ti)) in out.iter_mut().zip(x.iter().zip(&self.translation)) {
                    *o = self.ratio * xi + ti;
                }
            }
            Some(rot) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let rx: f64 = rot[k].iter().zip(x).map(|(a, b)| a * b).sum();
                    *o = self.ratio * rx + self.translation[k];
                }
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    /// Fixed point of the map, by iteration (the map is a contraction).
    pub fn fixed_point(&self, dim: usize) -> Vec<f64> {
        let mut x = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for _ in 0..2000 {
            self.apply_into(&x, &mut next);
            let moved = euclidean(&x, &next);
            std::mem::swap(&mut x, &mut next);
            if moved < 1e-15 {
                break;
            }
        }
        x
    }
}

/// Iterated function system of similarities with probability weights.
///
/// The open-set condition is assumed, not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IfsRecord", into = "IfsRecord")]
pub struct IFSSpec {
    maps: Vec<Similarity>,
    weights: Vec<f64>,
    ambient_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct IfsRecord {
    ambient_dim: usize,
    maps: Vec<Similarity>,
    weights: Vec<f64>,
}

impl TryFrom<IfsRecord> for IFSSpec {
    type Error = Error;
    fn try_from(r: IfsRecord) -> Result<Self> {
        IFSSpec::new(r.maps, r.weights, r.ambient_dim)
    }
}

impl From<IFSSpec> for IfsRecord {
    fn from(s: IFSSpec) -> Self {
        IfsRecord {
            ambient_dim: s.ambient_dim,
            maps: s.maps,
            weights: s.weights,
        }
    }
}

impl IFSSpec {
    pub fn new(maps: Vec<Similarity>, weights: Vec<f64>, ambient_dim: usize) -> Result<Self> {
        if maps.is_empty() {
            return Err(invalid("IFS needs at least one map"));
        }
        if ambient_dim == 0 {
            return Err(invalid("ambient dimension must be positive"));
        }
        if weights.len() != maps.len() {
            return Err(invalid(format!(
                "{} weights for {} maps",
                weights.len(),
                maps.len()
            )));
        }
        for (i, m) in maps.iter().enumerate() {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(invalid(format!("map {i}: ratio {} not in (0,1)", m.ratio)));
            }
            if m.translation.len() != ambient_dim || m.translation.iter().any(|t| !t.is_finite()) {
                return Err(invalid(format!("map {i}: translation must be {ambient_dim} finite reals")));
            }
            if let Some(rot) = &m.rotation {
                check_orthogonal(rot, ambient_dim).map_err(|e| invalid(format!("map {i}: {e}")))?;
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(IFSSpec {
            maps,
            weights,
            ambient_dim,
        })
    }

    /// Equal weights `1/m`.
    pub fn uniform(maps: Vec<Similarity>, ambient_dim: usize) -> Result<Self> {
        let m = maps.len().max(1);
        IFSSpec::new(maps, vec![1.0 / m as f64; m], ambient_dim)
    }

    /// Middle-thirds Cantor set: `x/3` and `x/3 + 2/3`.
    pub fn cantor() -> Self {
        IFSSpec::uniform(
            vec![
                Similarity::scaling(1.0 / 3.0, vec![0.0]),
                Similarity::scaling(1.0 / 3.0, vec![2.0 / 3.0]),
            ],
            1,
        )
        .expect("valid Cantor IFS")
    }

    /// Sierpinski triangle with vertices (0,0), (1,0), (1/2, √3/2).
    pub fn sierpinski() -> Self {
        let h = 3f64.sqrt() / 4.0;
        IFSSpec::uniform(
            vec![
                Similarity::scaling(0.5, vec![0.0, 0.0]),
                Similarity::scaling(0.5, vec![0.5, 0.0]),
                Similarity::scaling(0.5, vec![0.25, h]),
            ],
            2,
        )
        .expect("valid Sierpinski IFS")
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| m.ratio).fold(0.0, f64::max)
    }

    pub fn fixed_points(&self) -> Vec<Vec<f64>> {
        self.maps
            .iter()
            .map(|m| m.fixed_point(self.ambient_dim))
            .collect()
    }
}

fn check_orthogonal(rot: &[Vec<f64>], d: usize) -> std::result::Result<(), String> {
    if rot.len() != d || rot.iter().any(|row| row.len() != d) {
        return Err(format!("rotation must be {d}x{d}"));
    }
    for i in 0..d {
        for j in 0..d {
            let qtq: f64 = (0..d).map(|k| rot[k][i] * rot[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (qtq - target).abs() > ORTHOGONALITY_TOL {
                return Err(format!("rotation not orthogonal at ({i},{j}): {qtq}"));
            }
        }
    }
    Ok(())
}

/// Finite point set in ℝ^d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not form a nonempty set of {dim}-vectors",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("rows have differing lengths"));
        }
        PointCloud::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Finitely supported Borel measure: weighted atoms in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRecord", into = "MeasureRecord")]
pub struct DiscreteMeasure {
    cloud: PointCloud,
    weights: Vec<f64>,
    total_mass: f64,
}

/// On-disk layout of a measure file.
#[derive(Serialize, Deserialize)]
struct MeasureRecord {
    schema_version: u32,
    ambient_dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

pub const MEASURE_SCHEMA_VERSION: u32 = 1;

impl TryFrom<MeasureRecord> for DiscreteMeasure {
    type Error = Error;
    fn try_from(r: MeasureRecord) -> Result<Self> {
        if r.schema_version != MEASURE_SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported measure schema_version {}",
                r.schema_version
            )));
        }
        if r.points.iter().any(|p| p.len() != r.ambient_dim) {
            return Err(Error::DimensionMismatch {
                expected: r.ambient_dim,
                found: r.points.iter().map(|p| p.len()).find(|&l| l != r.ambient_dim).unwrap_or(0),
            });
        }
        DiscreteMeasure::new(PointCloud::new(r.ambient_dim, r.points.concat())?, r.weights)
    }
}

impl From<DiscreteMeasure> for MeasureRecord {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRecord {
            schema_version: MEASURE_SCHEMA_VERSION,
            ambient_dim: m.dim(),
            points: m.cloud.points().map(|p| p.to_vec()).collect(),
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(cloud: PointCloud, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != cloud.len() {
            return Err(invalid(format!(
                "{} weights for {} points",
                weights.len(),
                cloud.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total_mass = pairwise_sum(&weights);
        if !(total_mass > 0.0) {
            return Err(Error::DegenerateMeasure("total mass must be positive".into()));
        }
        Ok(DiscreteMeasure {
            cloud,
            weights,
            total_mass,
        })
    }

    /// Equal weights `1/n` on the given cloud.
    pub fn uniform(cloud: PointCloud) -> Self {
        let n = cloud.len();
        DiscreteMeasure::new(cloud, vec![1.0 / n as f64; n]).expect("nonempty cloud")
    }

    /// Unit mass at a single point.
    pub fn atom(point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        DiscreteMeasure::new(PointCloud::new(dim, point)?, vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.cloud.point(i)
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn into_cloud(self) -> PointCloud {
        self.cloud
    }

    /// Σ wᵢ², the mass the diagonal carries in μ×μ.
    pub fn diagonal_mass(&self) -> f64 {
        let sq: Vec<f64> = self.weights.iter().map(|w| w * w).collect();
        pairwise_sum(&sq)
    }

    /// Restriction to the support points selected by `keep`; `None` when
    /// nothing with positive weight remains.
    pub fn restrict(&self, keep: &[bool]) -> Option<DiscreteMeasure> {
        let dim = self.dim();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                coords.extend_from_slice(self.point(i));
                weights.push(self.weights[i]);
            }
        }
        if weights.is_empty() {
            return None;
        }
        let cloud = PointCloud::new(dim, coords).ok()?;
        DiscreteMeasure::new(cloud, weights).ok()
    }

    /// Embeds into ℝ^target by zero-padding each point, `x ↦ (x, 0, …, 0)`.
    pub fn embed(&self, target: usize) -> Result<DiscreteMeasure> {
        let d = self.dim();
        if target < d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: target,
            });
        }
        if target == d {
            return Ok(self.clone());
        }
        let mut coords = Vec::with_capacity(self.len() * target);
        for p in self.cloud.points() {
            coords.extend_from_slice(p);
            coords.extend(std::iter::repeat(0.0).take(target - d));
        }
        DiscreteMeasure::new(PointCloud::new(target, coords)?, self.weights.clone())
    }

    /// Largest distance between two support points.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(euclidean(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Smallest positive distance between support points, if any pair is distinct.
    pub fn min_separation(&self) -> Option<f64> {
        let n = self.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let d = euclidean(self.point(i), self.point(j));
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Whether the support has at least two distinct points.
    pub fn has_distinct_points(&self) -> bool {
        let first = self.point(0);
        (1..self.len()).any(|i| self.point(i) != first)
    }
}

/// Unique `s ≥ 0` with `Σ rᵢˢ = 1`, by bisection to absolute tolerance 1e-12.
///
/// The bracket starts at `[0, d + 1]` and is doubled when the maps are too
/// crowded for the root to lie inside it.
pub fn similarity_dimension(ifs: &IFSSpec) -> Result<f64> {
    let ratios: Vec<f64> = ifs.maps().iter().map(|m| m.ratio).collect();
    if ratios.is_empty() {
        return Err(invalid("IFS has no maps"));
    }
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let moran = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
    let mut lo = 0.0;
    let mut hi = ifs.ambient_dim() as f64 + 1.0;
    while moran(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if moran(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Natural self-similar measure at a fixed depth: one atom per word
/// `(i₁, …, i_depth)` at `f_{i₁}∘…∘f_{i_depth}(seed_point)` with weight
/// `p_{i₁}⋯p_{i_depth}`. Words are emitted in lexicographic order.
pub fn ifs_attractor_sample(
    ifs: &IFSSpec,
    depth: u32,
    seed_point: &[f64],
    cap: usize,
) -> Result<DiscreteMeasure> {
    if depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    let d = ifs.ambient_dim();
    if seed_point.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: seed_point.len(),
        });
    }
    let m = ifs.maps().len() as u128;
    let requested = m.checked_pow(depth).unwrap_or(u128::MAX);
    if requested > cap as u128 {
        return Err(Error::SizeCap { requested, cap });
    }

    let mut coords = seed_point.to_vec();
    let mut weights = vec![1.0];
    for _ in 0..depth {
        let n = weights.len();
        let mut next_coords = vec![0.0; n * ifs.maps().len() * d];
        let mut next_weights = Vec::with_capacity(n * ifs.maps().len());
        for (k, (map, p)) in ifs.maps().iter().zip(ifs.weights()).enumerate() {
            for (j, (x, w)) in coords.chunks_exact(d).zip(&weights).enumerate() {
                let idx = k * n + j;
                map.apply_into(x, &mut next_coords[idx * d..(idx + 1) * d]);
                next_weights.push(p * w);
            }
        }
        coords = next_coords;
        weights = next_weights;
    }
    DiscreteMeasure::new(PointCloud::new(d, coords)?, weights)
}

/// μ⊗ν on ℝ^{d₁+d₂}; the first factor varies slowest.
pub fn product_measure(a: &DiscreteMeasure, b: &DiscreteMeasure, cap: usize) -> Result<DiscreteMeasure> {
    let requested = a.len() as u128 * b.len() as u128;
    if requested > cap as u128 {
        return Err(Error::SizeCap { requested, cap });
    }
    let dim = a.dim() + b.dim();
    let mut coords = Vec::with_capacity(requested as usize * dim);
    let mut weights = Vec::with_capacity(requested as usize);
    for i in 0..a.len() {
        for j in 0..b.len() {
            coords.extend_from_slice(a.point(i));
            coords.extend_from_slice(b.point(j));
            weights.push(a.weights()[i] * b.weights()[j]);
        }
    }
    DiscreteMeasure::new(PointCloud::new(dim, coords)?, weights)
}

/// Natural measure of the middle-thirds Cantor set at `depth`, seeded at 0.
pub fn cantor_measure(depth: u32) -> Result<DiscreteMeasure> {
    ifs_attractor_sample(&IFSSpec::cantor(), depth, &[0.0], DEFAULT_POINT_CAP)
}
