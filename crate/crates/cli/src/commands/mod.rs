pub mod eval;
pub mod fit;
pub mod rasterize;
