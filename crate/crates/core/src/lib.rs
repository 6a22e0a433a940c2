//! Rasterization toolkit for vectorized HD map elements.
//!
//! Map elements (lane dividers, road boundaries, pedestrian crossings, ...)
//! are modeled as ordered point sets in a metric bird's-eye-view frame:
//! polylines for line-shaped elements and polygons for area-shaped ones.
//! This crate provides
//!
//! * exact planar geometry kernels ([`geometry`]),
//! * soft (differentiable) and hard (binary) rasterization of elements onto
//!   a pixel grid, with analytic backward passes ([`raster`]),
//! * the training-side losses built on rendered masks — dice, direction
//!   regularization, focal classification, L1 regression — together with
//!   Hungarian set matching ([`loss`]),
//! * two evaluation metrics over scene datasets: IoU-of-rasterization AP and
//!   the Chamfer-distance AP baseline ([`metrics`]),
//! * a gradient-descent demo that fits an element's control points to a
//!   target mask purely through rasterization gradients ([`fit`]).
//!
//! All numeric kernels are generic over the scalar type via [`Real`]
//! (`f32` or `f64`). The default type parameter everywhere is `f64`, so
//! `Point2` in a signature means `Point2<f64>`; single-precision aliases are
//! provided at the crate root.
//!
//! A note on units: soft rasterization measures distances in **pixel
//! units** — the world-space distance divided by the pixel pitch — so the
//! softness `tau` is relative to the raster resolution, not to meters.
//! Point gradients returned by the backward passes are likewise per
//! pixel-unit of motion.

pub mod element;
pub mod fit;
pub mod geometry;
pub mod loss;
pub mod metrics;
pub mod raster;
pub mod scalar;

pub use element::{
    ClassScores, ClassSpec, Detection, ElementGeometry, ElementKind, MapElement, Vocabulary,
};
pub use geometry::{GridSpec, Point2, Polygon, Polyline};
pub use raster::{BinaryMask, RasterGradient, SoftMask, Softness};
pub use scalar::Real;

/// Single-precision aliases. `f64` is the default type parameter, so the
/// unsuffixed names already denote the double-precision variants.
pub type Point2f = geometry::Point2<f32>;
pub type Polylinef = geometry::Polyline<f32>;
pub type Polygonf = geometry::Polygon<f32>;
pub type GridSpecf = geometry::GridSpec<f32>;
pub type SoftMaskf = raster::SoftMask<f32>;
pub type BinaryMaskf = raster::BinaryMask<f32>;
pub type MapElementf = element::MapElement<f32>;
