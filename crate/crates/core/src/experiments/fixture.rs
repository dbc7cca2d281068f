use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fractal::{
    ifs_attractor_sample, product_measure, similarity_dimension, DiscreteMeasure, IFSSpec, PointCloud,
};
use crate::rng::{stream, Domain};

/// Recipe for a test measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    /// Natural measure of the middle-thirds Cantor set.
    Cantor { depth: u32 },
    /// Natural measure on C × C ⊂ ℝ².
    CantorProduct { depth: u32 },
    Sierpinski { depth: u32 },
    /// Unit atom at the origin of ℝ^dim.
    Atom { dim: usize },
    /// `n` equally spaced points on [0, 1) with equal weights.
    Segment { n: usize },
    Ifs {
        ifs: IFSSpec,
        depth: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed_point: Option<Vec<f64>>,
    },
    Product { a: Box<Fixture>, b: Box<Fixture> },
    /// `n` uniform random points in [0,1)^dim with weights in [0.1, 1),
    /// drawn from the fixture stream `index` of the given seed.
    Random { n: usize, dim: usize, seed: u64, index: u64 },
}

impl Fixture {
    pub fn build(&self, cap: usize) -> Result<DiscreteMeasure> {
        match self {
            Fixture::Cantor { depth } => ifs_attractor_sample(&IFSSpec::cantor(), *depth, &[0.0], cap),
            Fixture::CantorProduct { depth } => {
                let c = ifs_attractor_sample(&IFSSpec::cantor(), *depth, &[0.0], cap)?;
                product_measure(&c, &c, cap)
            }
            Fixture::Sierpinski { depth } => ifs_attractor_sample(&IFSSpec::sierpinski(), *depth, &[0.0, 0.0], cap),
            Fixture::Atom { dim } => DiscreteMeasure::atom(vec![0.0; *dim]),
            Fixture::Segment { n } => {
                if *n == 0 || *n > cap {
                    return Err(invalid(format!("segment size {n} outside 1..={cap}")));
                }
                let coords = (0..*n).map(|i| i as f64 / *n as f64).collect();
                Ok(DiscreteMeasure::uniform(PointCloud::new(1, coords)?))
            }
            Fixture::Ifs { ifs, depth, seed_point } => {
                let seed = seed_point.clone().unwrap_or_else(|| vec![0.0; ifs.ambient_dim()]);
                ifs_attractor_sample(ifs, *depth, &seed, cap)
            }
            Fixture::Product { a, b } => product_measure(&a.build(cap)?, &b.build(cap)?, cap),
            Fixture::Random { n, dim, seed, index } => {
                if *n == 0 || *dim == 0 {
                    return Err(invalid("random fixture needs n >= 1 and dim >= 1"));
                }
                let mut rng = stream(*seed, Domain::Fixture, *index);
                let coords = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
                let weights = (0..*n).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
                DiscreteMeasure::new(PointCloud::new(*dim, coords)?, weights)
            }
        }
    }

    /// Ground-truth dimension of the set the fixture approximates.
    pub fn known_dimension(&self) -> Result<f64> {
        match self {
            Fixture::Cantor { .. } => similarity_dimension(&IFSSpec::cantor()),
            Fixture::CantorProduct { .. } => Ok(2.0 * similarity_dimension(&IFSSpec::cantor())?),
            Fixture::Sierpinski { .. } => similarity_dimension(&IFSSpec::sierpinski()),
            Fixture::Atom { .. } => Ok(0.0),
            Fixture::Segment { .. } => Ok(1.0),
            Fixture::Ifs { ifs, .. } => similarity_dimension(ifs),
            Fixture::Product { a, b } => Ok(a.known_dimension()? + b.known_dimension()?),
            Fixture::Random { .. } => Ok(0.0),
        }
    }
}
