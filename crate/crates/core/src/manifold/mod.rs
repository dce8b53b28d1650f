//! Parametrized submanifolds of `ℝ^N`, their quadrature samples and
//! second-order geometry.

pub mod catalog;
pub mod chart;
pub mod sample;

pub use catalog::{
    catalog_make, default_resolution, from_manifest, parse_catalog, product_with_plane, CATALOG_NAMES,
};
pub use chart::{fd_jet, AffineMap, Axis, ChartManifest, ChartSpec, Embedding, Jet};
pub use sample::{build_samples, mean_curvature_at, quadrature_for, shrinker_residual, DerivativeMode, SampledManifold};
