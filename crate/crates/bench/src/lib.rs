//! Shared fixtures for the criterion benchmarks.

use fracproj::{cantor_measure, product_measure, DiscreteMeasure, DEFAULT_POINT_CAP};

/// Natural Cantor measure embedded in the plane as `(x, 0)`.
pub fn planar_cantor(depth: u32) -> DiscreteMeasure {
    cantor_measure(depth)
        .and_then(|m| m.embed(2))
        .expect("cantor fixture")
}

/// Natural measure on `C × C`.
pub fn cantor_square(depth: u32) -> DiscreteMeasure {
    let c = cantor_measure(depth).expect("cantor fixture");
    product_measure(&c, &c, DEFAULT_POINT_CAP).expect("product fixture")
}
