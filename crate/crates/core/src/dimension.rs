//! Box-counting and correlation-integral dimension estimates, plus the
//! Lebesgue measure of ε-neighbourhoods of 1-D point sets.
//!
//! Regression windows are always supplied by the caller. On self-similar sets
//! with the open-set condition the box, correlation and Hausdorff dimensions
//! coincide, which is what lets these estimates stand in for `dim X`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fractal::{DiscreteMeasure, PointCloud};
use crate::rng::{stream, Domain};
use crate::stats::{euclidean, linear_fit, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Box,
    Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: Method,
    pub scales: Vec<f64>,
    /// `ln N(ε)` for box counting, `ln C(r)` for the correlation integral.
    pub log_values: Vec<f64>,
    pub fit_r2: f64,
    /// `(largest, smallest)` scale of the regression window.
    pub scale_window: (f64, f64),
}

fn check_scales(scales: &[f64], min_len: usize, min_decades: f64) -> Result<()> {
    if scales.len() < min_len {
        return Err(invalid(format!("need at least {min_len} scales, got {}", scales.len())));
    }
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("scales must be positive and finite"));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("scales must be strictly decreasing"));
    }
    let decades = (scales[0] / scales[scales.len() - 1]).log10();
    if decades < min_decades - 1e-9 {
        return Err(invalid(format!(
            "scales span {decades:.3} decades, need at least {min_decades}"
        )));
    }
    Ok(())
}

/// Grid index of a coordinate. Values within 1e-9 (relative) of a grid line
/// are snapped onto it so that exact grid-aligned sets count exactly.
fn cell_index(offset: f64, side: f64) -> i64 {
    let q = offset / side;
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * q.abs().max(1.0) {
        nearest as i64
    } else {
        q.floor() as i64
    }
}

fn coordinate_min(cloud: &PointCloud) -> Vec<f64> {
    let mut lo = vec![f64::INFINITY; cloud.dim()];
    for p in cloud.points() {
        for (l, x) in lo.iter_mut().zip(p) {
            *l = l.min(*x);
        }
    }
    lo
}

/// Number of occupied cells of side `side` anchored at `anchor`.
fn occupied_boxes(cloud: &PointCloud, anchor: &[f64], side: f64) -> usize {
    let d = cloud.dim();
    if d <= 4 {
        let mut keys: Vec<[i64; 4]> = cloud
            .points()
            .map(|p| {
                let mut key = [0i64; 4];
                for k in 0..d {
                    key[k] = cell_index(p[k] - anchor[k], side);
                }
                key
            })
            .collect();
        keys.par_sort_unstable();
        keys.dedup();
        keys.len()
    } else {
        let mut keys: Vec<Vec<i64>> = cloud
            .points()
            .map(|p| p.iter().zip(anchor).map(|(x, a)| cell_index(x - a, side)).collect())
            .collect();
        keys.par_sort_unstable();
        keys.dedup();
        keys.len()
    }
}

fn single_point(cloud: &PointCloud) -> bool {
    let first = cloud.point(0);
    cloud.points().all(|p| p == first)
}

fn fit_box_counts(scales: &[f64], counts: &[f64]) -> Result<DimensionEstimate> {
    let log_values: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    if log_values.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateFit(
            "box counts are constant over the window".into(),
        ));
    }
    let xs: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
    let fit = linear_fit(&xs, &log_values).ok_or_else(|| Error::DegenerateFit("need two distinct scales".into()))?;
    Ok(DimensionEstimate {
        value: fit.slope.max(0.0),
        method: Method::Box,
        scales: scales.to_vec(),
        log_values,
        fit_r2: fit.r2,
        scale_window: (scales[0], scales[scales.len() - 1]),
    })
}

fn zero_dimensional(scales: &[f64], method: Method) -> DimensionEstimate {
    DimensionEstimate {
        value: 0.0,
        method,
        scales: scales.to_vec(),
        log_values: vec![0.0; scales.len()],
        fit_r2: 1.0,
        scale_window: (scales[0], scales[scales.len() - 1]),
    }
}

/// Box-counting dimension: slope of `ln N(ε)` against `ln(1/ε)` for an
/// axis-aligned grid anchored at the coordinate-wise minimum.
///
/// Scales must be decreasing, at least three, spanning at least 1.5 decades.
/// A cloud with a single distinct point has dimension 0.
pub fn box_dimension(cloud: &PointCloud, scales: &[f64]) -> Result<DimensionEstimate> {
    check_scales(scales, 3, 1.5)?;
    if single_point(cloud) {
        return Ok(zero_dimensional(scales, Method::Box));
    }
    let anchor = coordinate_min(cloud);
    let counts: Vec<f64> = scales
        .iter()
        .map(|&eps| occupied_boxes(cloud, &anchor, eps) as f64)
        .collect();
    fit_box_counts(scales, &counts)
}

/// Box counts averaged over `offsets` grids whose anchors are shifted by
/// uniform random amounts in `[0, ε)^d`.
pub fn box_dimension_offsets(cloud: &PointCloud, scales: &[f64], offsets: usize, seed: u64) -> Result<DimensionEstimate> {
    check_scales(scales, 3, 1.5)?;
    if offsets == 0 {
        return Err(invalid("offsets must be positive"));
    }
    if single_point(cloud) {
        return Ok(zero_dimensional(scales, Method::Box));
    }
    let lo = coordinate_min(cloud);
    let counts: Vec<f64> = scales
        .iter()
        .enumerate()
        .map(|(si, &eps)| {
            let per: Vec<f64> = (0..offsets)
                .map(|k| {
                    let mut rng = stream(seed, Domain::Offsets, (si * offsets + k) as u64);
                    let anchor: Vec<f64> = lo.iter().map(|l| l - eps * rng.gen::<f64>()).collect();
                    occupied_boxes(cloud, &anchor, eps) as f64
                })
                .collect();
            pairwise_sum(&per) / offsets as f64
        })
        .collect();
    fit_box_counts(scales, &counts)
}

/// Off-diagonal correlation integral `C(r) = Σ_{i≠j} wᵢwⱼ [|xᵢ−xⱼ| ≤ r]` at
/// each of the (decreasing) radii.
pub fn correlation_integral(mu: &DiscreteMeasure, radii: &[f64]) -> Vec<f64> {
    let n = mu.len();
    let w = mu.weights();
    let r = radii.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            // bucket[k] collects pairs whose distance is in (r_{k+1}, r_k].
            let mut bucket = vec![0.0; r];
            let xi = mu.point(i);
            for j in i + 1..n {
                let d = euclidean(xi, mu.point(j));
                let k = radii.partition_point(|&rk| rk >= d);
                if k > 0 {
                    bucket[k - 1] += w[j];
                }
            }
            bucket.iter_mut().for_each(|b| *b *= 2.0 * w[i]);
            bucket
        })
        .collect();
    let mut sums: Vec<f64> = (0..r)
        .map(|k| pairwise_sum(&rows.iter().map(|row| row[k]).collect::<Vec<_>>()))
        .collect();
    for k in (0..r.saturating_sub(1)).rev() {
        sums[k] += sums[k + 1];
    }
    sums
}

/// Correlation dimension: slope of `ln C(r)` against `ln r`.
pub fn correlation_dimension(mu: &DiscreteMeasure, radii: &[f64]) -> Result<DimensionEstimate> {
    check_scales(radii, 2, 0.0)?;
    let corr = correlation_integral(mu, radii);
    if let Some(k) = corr.iter().position(|&c| c <= 0.0) {
        return Err(Error::DegenerateFit(format!(
            "correlation integral vanishes at r = {}; shrink the window",
            radii[k]
        )));
    }
    if corr.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateFit(
            "correlation integral is constant over the window".into(),
        ));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let log_values: Vec<f64> = corr.iter().map(|c| c.ln()).collect();
    let fit = linear_fit(&xs, &log_values).ok_or_else(|| Error::DegenerateFit("need two distinct radii".into()))?;
    Ok(DimensionEstimate {
        value: fit.slope.max(0.0),
        method: Method::Correlation,
        scales: radii.to_vec(),
        log_values,
        fit_r2: fit.r2,
        scale_window: (radii[0], radii[radii.len() - 1]),
    })
}

/// Lebesgue measure of `⋃ [p − ε, p + ε]` over a 1-D cloud, by sort and merge.
pub fn interval_measure(points_1d: &PointCloud, epsilon: f64) -> Result<f64> {
    if points_1d.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: points_1d.dim(),
        });
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let mut xs = points_1d.coords().to_vec();
    xs.par_sort_unstable_by(f64::total_cmp);
    let mut total = 0.0;
    let mut start = xs[0] - epsilon;
    let mut end = xs[0] + epsilon;
    for &x in &xs[1..] {
        if x - epsilon > end {
            total += end - start;
            start = x - epsilon;
        }
        end = end.max(x + epsilon);
    }
    total += end - start;
    Ok(total)
}
