//! Numerical laboratory for projection theorems of Marstrand type.
//!
//! The crate builds finitely supported fractal measures, pushes them through
//! parameterized projection families, estimates transversality constants and
//! dimensions, and checks averaged energy and density bounds for the image
//! measures against Monte Carlo estimates.
//!
//! Modules, bottom-up:
//!
//! * [`fractal`]: IFS specifications, discrete measures, product measures.
//! * [`measures`]: ball masses, truncated s-energies (two evaluation routes),
//!   regularity scans, the Vitali/Frostman regularization.
//! * [`projections`]: projection families and pushforward.
//! * [`transversality`]: empirical transversality and bound checks.
//! * [`dimension`]: box and correlation dimension, interval measure.
//! * [`experiments`]: config-driven verification suite and reports.

pub mod dimension;
pub mod error;
pub mod experiments;
pub mod fractal;
pub mod measures;
pub mod projections;
pub mod rng;
pub mod stats;
pub mod transversality;

pub use dimension::{
    box_dimension, box_dimension_offsets, correlation_dimension, correlation_integral, interval_measure,
    DimensionEstimate, Method,
};
pub use error::{Error, Result};
pub use fractal::{
    cantor_measure, ifs_attractor_sample, product_measure, similarity_dimension, DiscreteMeasure, IFSSpec,
    PointCloud, Similarity, DEFAULT_POINT_CAP,
};
pub use measures::{
    ball_mass, energy, energy_layercake, frostman_certificate, frostman_regularize, regularity_scan,
    FrostmanResult, RegularityReport,
};
pub use projections::{pushforward, FamilyRegistry, Parameter, PlanarAngle, ProjectionFamily, SpatialDirection};
pub use transversality::{
    check_transversality_bound, empirical_transversality, BoundCheck, TransversalityEstimate,
};
