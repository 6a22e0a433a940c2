//! Soft (differentiable) and hard (binary) rasterization of map elements.
//!
//! Distances are measured in **pixel units**: world distances divided by the
//! pixel pitch, per axis for anisotropic grids. The softness `tau` is
//! therefore relative to the raster resolution. Point gradients returned by
//! the backward passes are with respect to control-point motion in pixel
//! units as well.
//!
//! Forward and backward passes are pure and single-threaded; callers
//! parallelize across elements or scenes. Gradient accumulation runs in
//! fixed row-major order, so repeated runs are bit-identical.

use thiserror::Error;

use crate::geometry::{GridSpec, Point2, Polygon, Polyline};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("softness tau must be finite and > 0, got {got}")]
    InvalidSoftness { got: f64 },
    #[error("upstream buffer has {got} values, grid expects {expected}")]
    UpstreamSizeMismatch { got: usize, expected: usize },
    #[error("value buffer has {got} values, grid expects {expected}")]
    ValueSizeMismatch { got: usize, expected: usize },
    #[error("soft mask values must lie in [0, 1]")]
    ValueOutOfRange,
    #[error("culling epsilon must be in (0, 1), got {got}")]
    InvalidCullEpsilon { got: f64 },
}

/// Rasterization softness `tau`, in pixel units; strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Softness<S = f64>(S);

impl<S: Real> Softness<S> {
    pub fn new(tau: S) -> Result<Self, RasterError> {
        if !tau.is_finite() || tau <= S::zero() {
            return Err(RasterError::InvalidSoftness {
                got: tau.to_f64_scalar(),
            });
        }
        Ok(Self(tau))
    }

    #[inline]
    pub fn get(self) -> S {
        self.0
    }
}

/// H x W real-valued mask with every value in `[0, 1]`, row-major, row 0 at
/// the grid's `y_min` edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMask<S = f64> {
    grid: GridSpec<S>,
    values: Vec<S>,
}

impl<S: Real> SoftMask<S> {
    pub fn from_values(grid: GridSpec<S>, values: Vec<S>) -> Result<Self, RasterError> {
        if values.len() != grid.pixel_count() {
            return Err(RasterError::ValueSizeMismatch {
                got: values.len(),
                expected: grid.pixel_count(),
            });
        }
        if !values.iter().all(|v| *v >= S::zero() && *v <= S::one()) {
            return Err(RasterError::ValueOutOfRange);
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<S> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn value_at(&self, row: usize, col: usize) -> S {
        self.values[row * self.grid.width() + col]
    }

    pub fn sum(&self) -> S {
        self.values.iter().copied().sum()
    }

    /// Binarizes at `threshold` (values strictly greater are set).
    pub fn threshold(&self, threshold: S) -> BinaryMask<S> {
        BinaryMask {
            grid: self.grid,
            bits: self.values.iter().map(|v| *v > threshold).collect(),
        }
    }

    /// Serializes as binary PGM (P5, 8-bit), row 0 first, value =
    /// round(255 * I).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out =
            format!("P5\n{} {}\n255\n", self.grid.width(), self.grid.height()).into_bytes();
        let max = S::real(255.0);
        out.extend(
            self.values
                .iter()
                .map(|v| (*v * max).round().to_u8().unwrap_or(255)),
        );
        out
    }
}

/// H x W boolean mask, row-major, row 0 at the grid's `y_min` edge.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask<S = f64> {
    grid: GridSpec<S>,
    bits: Vec<bool>,
}

impl<S: Real> BinaryMask<S> {
    pub fn from_bits(grid: GridSpec<S>, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != grid.pixel_count() {
            return Err(RasterError::ValueSizeMismatch {
                got: bits.len(),
                expected: grid.pixel_count(),
            });
        }
        Ok(Self { grid, bits })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec<S> {
        &self.grid
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn bit_at(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.grid.width() + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// 0/1-valued soft mask view, e.g. for use as a dice target.
    pub fn to_soft(&self) -> SoftMask<S> {
        SoftMask {
            grid: self.grid,
            values: self
                .bits
                .iter()
                .map(|b| if *b { S::one() } else { S::zero() })
                .collect(),
        }
    }

    /// Serializes as binary PBM (P4), row 0 first, set pixels as 1 bits,
    /// MSB-first with zero padding at row ends.
    pub fn to_pbm(&self) -> Vec<u8> {
        let w = self.grid.width();
        let mut out = format!("P4\n{} {}\n", w, self.grid.height()).into_bytes();
        for row in self.bits.chunks(w) {
            for byte_bits in row.chunks(8) {
                let mut byte = 0u8;
                for (i, bit) in byte_bits.iter().enumerate() {
                    if *bit {
                        byte |= 0x80 >> i;
                    }
                }
                out.push(byte);
            }
        }
        out
    }
}

/// Per-control-point gradients `(dL/dx, dL/dy)` in loss units per
/// pixel-unit of motion; one entry per control point of the rasterized
/// element.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGradient<S = f64> {
    grads: Vec<[S; 2]>,
}

impl<S: Real> RasterGradient<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            grads: vec![[S::zero(); 2]; n],
        }
    }

    #[inline]
    pub fn grads(&self) -> &[[S; 2]] {
        &self.grads
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grads.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.grads
            .iter()
            .all(|g| g[0].is_finite() && g[1].is_finite())
    }

    pub(crate) fn accumulate(&mut self, idx: usize, gx: S, gy: S) {
        self.grads[idx][0] += gx;
        self.grads[idx][1] += gy;
    }

    /// Componentwise `self + scale * other`.
    pub fn add_scaled(&mut self, other: &RasterGradient<S>, scale: S) {
        assert_eq!(self.grads.len(), other.grads.len());
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a[0] += scale * b[0];
            a[1] += scale * b[1];
        }
    }
}

/// Segment in pixel space with precomputed direction and inverse squared
/// length (zero for degenerate segments).
struct PxSegment<S> {
    a: Point2<S>,
    d: Point2<S>,
    inv_len_sq: S,
}

fn px_segments<S: Real>(
    points: &[Point2<S>],
    grid: &GridSpec<S>,
    closed: bool,
) -> Vec<PxSegment<S>> {
    let px: Vec<Point2<S>> = points.iter().map(|p| grid.world_to_px(*p)).collect();
    let n = px.len();
    let count = if closed { n } else { n - 1 };
    (0..count)
        .map(|k| {
            let a = px[k];
            let b = px[(k + 1) % n];
            let d = b - a;
            let len_sq = d.norm_sq();
            let inv_len_sq = if len_sq > S::zero() {
                len_sq.recip()
            } else {
                S::zero()
            };
            PxSegment { a, d, inv_len_sq }
        })
        .collect()
}

/// Squared distance from `q` to the segment, in pixel units.
#[inline]
fn seg_dist_sq<S: Real>(seg: &PxSegment<S>, q: Point2<S>) -> S {
    let e = q - seg.a;
    let t = (e.dot(seg.d) * seg.inv_len_sq).max(S::zero()).min(S::one());
    let diff = e - seg.d * t;
    diff.norm_sq()
}

/// Foot parameter, closest point and distance on the segment.
#[inline]
fn seg_foot<S: Real>(seg: &PxSegment<S>, q: Point2<S>) -> (S, Point2<S>, S) {
    let e = q - seg.a;
    let t = (e.dot(seg.d) * seg.inv_len_sq).max(S::zero()).min(S::one());
    let closest = seg.a + seg.d * t;
    (t, closest, q.distance(closest))
}

#[inline]
fn min_dist_sq_indexed<S: Real>(segs: &[PxSegment<S>], q: Point2<S>) -> (S, usize) {
    let mut best = S::infinity();
    let mut best_idx = 0;
    for (idx, seg) in segs.iter().enumerate() {
        let d_sq = seg_dist_sq(seg, q);
        if d_sq < best {
            best = d_sq;
            best_idx = idx;
        }
    }
    (best, best_idx)
}

#[inline]
fn pixel_q<S: Real>(row: usize, col: usize) -> Point2<S> {
    let half = S::real(0.5);
    Point2::new(
        S::from_usize(col).unwrap() + half,
        S::from_usize(row).unwrap() + half,
    )
}

/// Softly renders a line-shaped element: each pixel takes
/// `exp(-D / tau)` with `D` the pixel-unit distance from the pixel center
/// to the polyline.
pub fn render_line_soft<S: Real>(
    line: &Polyline<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
) -> SoftMask<S> {
    let segs = px_segments(line.points(), grid, false);
    let inv_tau = tau.get().recip();
    let mut values = Vec::with_capacity(grid.pixel_count());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let q = pixel_q(row, col);
            let (d_sq, _) = min_dist_sq_indexed(&segs, q);
            values.push((-d_sq.sqrt() * inv_tau).exp());
        }
    }
    SoftMask {
        grid: *grid,
        values,
    }
}

/// As [`render_line_soft`], skipping pixels farther than
/// `tau * ln(1 / epsilon)` from every segment (their exact value is below
/// `epsilon`); retained pixels are computed exactly.
pub fn render_line_soft_culled<S: Real>(
    line: &Polyline<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
    epsilon: S,
) -> Result<SoftMask<S>, RasterError> {
    if !(epsilon > S::zero() && epsilon < S::one()) {
        return Err(RasterError::InvalidCullEpsilon {
            got: epsilon.to_f64_scalar(),
        });
    }
    let segs = px_segments(line.points(), grid, false);
    let radius = tau.get() * epsilon.recip().ln();
    let (w, h) = (grid.width(), grid.height());

    let mut candidate = vec![false; w * h];
    for seg in &segs {
        let b = seg.a + seg.d;
        let x_lo = (seg.a.x.min(b.x) - radius).to_f64_scalar().floor().max(0.0) as usize;
        let x_hi = (seg.a.x.max(b.x) + radius)
            .to_f64_scalar()
            .ceil()
            .min(w as f64) as usize;
        let y_lo = (seg.a.y.min(b.y) - radius).to_f64_scalar().floor().max(0.0) as usize;
        let y_hi = (seg.a.y.max(b.y) + radius)
            .to_f64_scalar()
            .ceil()
            .min(h as f64) as usize;
        for row in y_lo..y_hi {
            candidate[row * w + x_lo..row * w + x_hi].fill(true);
        }
    }

    let inv_tau = tau.get().recip();
    let mut values = vec![S::zero(); w * h];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            if candidate[i] {
                let (d_sq, _) = min_dist_sq_indexed(&segs, pixel_q(row, col));
                values[i] = (-d_sq.sqrt() * inv_tau).exp();
            }
        }
    }
    Ok(SoftMask {
        grid: *grid,
        values,
    })
}

/// Distance plus even-odd containment sign at a pixel-space point, over the
/// closed edge loop. Points exactly on the boundary report `+1`.
#[inline]
fn polygon_dist_sign<S: Real>(segs: &[PxSegment<S>], q: Point2<S>) -> (S, usize, S) {
    let mut best = S::infinity();
    let mut best_idx = 0;
    let mut inside = false;
    for (idx, seg) in segs.iter().enumerate() {
        let d_sq = seg_dist_sq(seg, q);
        if d_sq < best {
            best = d_sq;
            best_idx = idx;
        }
        let b = seg.a + seg.d;
        if (seg.a.y > q.y) != (b.y > q.y) {
            let x_cross = seg.a.x + (q.y - seg.a.y) * seg.d.x / seg.d.y;
            if q.x < x_cross {
                inside = !inside;
            }
        }
    }
    let d = best.sqrt();
    let sign = if d == S::zero() || inside {
        S::one()
    } else {
        -S::one()
    };
    (d, best_idx, sign)
}

/// Softly renders a polygon-shaped element: each pixel takes
/// `sigmoid(C * D / tau)` with `D` the pixel-unit boundary distance and `C`
/// the inside(+1)/outside(-1) indicator at the pixel center.
pub fn render_polygon_soft<S: Real>(
    poly: &Polygon<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
) -> SoftMask<S> {
    let segs = px_segments(poly.vertices(), grid, true);
    let inv_tau = tau.get().recip();
    let mut values = Vec::with_capacity(grid.pixel_count());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let (d, _, sign) = polygon_dist_sign(&segs, pixel_q(row, col));
            values.push((sign * d * inv_tau).sigmoid());
        }
    }
    SoftMask {
        grid: *grid,
        values,
    }
}

fn check_upstream<S: Real>(grid: &GridSpec<S>, upstream: &[S]) -> Result<(), RasterError> {
    if upstream.len() != grid.pixel_count() {
        return Err(RasterError::UpstreamSizeMismatch {
            got: upstream.len(),
            expected: grid.pixel_count(),
        });
    }
    Ok(())
}

/// Gradient of the distance to the minimizing segment with respect to its
/// two endpoints, split by the barycentric weight of the foot point:
/// `dD/da = -(1 - t) * u`, `dD/db = -t * u` with `u` the unit vector from
/// the closest point toward the query. Zero when the query sits on the
/// segment (subgradient choice).
#[inline]
fn accumulate_segment_grad<S: Real>(
    grad: &mut RasterGradient<S>,
    seg: &PxSegment<S>,
    q: Point2<S>,
    coeff: S,
    idx_a: usize,
    idx_b: usize,
) {
    let (t, closest, d) = seg_foot(seg, q);
    if d == S::zero() {
        return;
    }
    let ux = (q.x - closest.x) / d;
    let uy = (q.y - closest.y) / d;
    let wa = -(S::one() - t) * coeff;
    let wb = -t * coeff;
    grad.accumulate(idx_a, wa * ux, wa * uy);
    grad.accumulate(idx_b, wb * ux, wb * uy);
}

/// Backpropagates `upstream = dL/dI` (H x W, row-major) through
/// [`render_line_soft`], returning per-control-point gradients in pixel
/// units. Only the minimizing segment of each pixel receives gradient
/// (lowest index on ties).
pub fn backward_line_soft<S: Real>(
    line: &Polyline<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
    upstream: &[S],
) -> Result<RasterGradient<S>, RasterError> {
    check_upstream(grid, upstream)?;
    let segs = px_segments(line.points(), grid, false);
    let inv_tau = tau.get().recip();
    let mut grad = RasterGradient::zeros(line.len());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let w = upstream[row * grid.width() + col];
            if w == S::zero() {
                continue;
            }
            let q = pixel_q(row, col);
            let (d_sq, idx) = min_dist_sq_indexed(&segs, q);
            let value = (-d_sq.sqrt() * inv_tau).exp();
            // dI/dD = -I / tau
            let coeff = w * (-value * inv_tau);
            accumulate_segment_grad(&mut grad, &segs[idx], q, coeff, idx, idx + 1);
        }
    }
    Ok(grad)
}

/// Backpropagates `upstream = dL/dI` through [`render_polygon_soft`]. The
/// sign field `C` is treated as locally constant (its derivative is zero
/// almost everywhere), so `dI/dD = C * sigmoid'(C * D / tau) / tau`.
pub fn backward_polygon_soft<S: Real>(
    poly: &Polygon<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
    upstream: &[S],
) -> Result<RasterGradient<S>, RasterError> {
    check_upstream(grid, upstream)?;
    let segs = px_segments(poly.vertices(), grid, true);
    let n = poly.len();
    let inv_tau = tau.get().recip();
    let mut grad = RasterGradient::zeros(n);
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let w = upstream[row * grid.width() + col];
            if w == S::zero() {
                continue;
            }
            let q = pixel_q(row, col);
            let (d, idx, sign) = polygon_dist_sign(&segs, q);
            let value = (sign * d * inv_tau).sigmoid();
            let coeff = w * sign * value * (S::one() - value) * inv_tau;
            accumulate_segment_grad(&mut grad, &segs[idx], q, coeff, idx, (idx + 1) % n);
        }
    }
    Ok(grad)
}

/// Structuring element for hard line dilation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DilationKernel {
    /// Euclidean distance threshold (disk structuring element).
    #[default]
    Disk,
    /// Chebyshev distance threshold (square structuring element).
    Square,
}

/// Chebyshev (max-axis) distance from `q` to the segment: minimum over the
/// segment of `max(|dx|, |dy|)`. The objective is convex piecewise-linear
/// in the foot parameter, so it is minimized at one of the kink candidates.
fn seg_chebyshev_dist<S: Real>(seg: &PxSegment<S>, q: Point2<S>) -> S {
    let e = q - seg.a;
    let eval = |t: S| {
        let t = t.max(S::zero()).min(S::one());
        (e.x - t * seg.d.x).abs().max((e.y - t * seg.d.y).abs())
    };
    let mut best = eval(S::zero()).min(eval(S::one()));
    let mut try_candidate = |num: S, den: S| {
        if den != S::zero() {
            best = best.min(eval(num / den));
        }
    };
    try_candidate(e.x - e.y, seg.d.x - seg.d.y);
    try_candidate(e.x + e.y, seg.d.x + seg.d.y);
    try_candidate(e.x, seg.d.x);
    try_candidate(e.y, seg.d.y);
    best
}

/// Hard-rasterizes a line-shaped element with the given dilation and
/// structuring element: a pixel is set when its center lies within
/// `(dilation_px + 0.5)` pixel units of the polyline.
pub fn render_line_hard_with_kernel<S: Real>(
    line: &Polyline<S>,
    grid: &GridSpec<S>,
    dilation_px: usize,
    kernel: DilationKernel,
) -> BinaryMask<S> {
    let segs = px_segments(line.points(), grid, false);
    let radius = S::from_usize(dilation_px).unwrap() + S::real(0.5);
    let radius_sq = radius * radius;
    let mut bits = Vec::with_capacity(grid.pixel_count());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let q = pixel_q(row, col);
            let hit = match kernel {
                DilationKernel::Disk => segs.iter().any(|s| seg_dist_sq(s, q) <= radius_sq),
                DilationKernel::Square => segs.iter().any(|s| seg_chebyshev_dist(s, q) <= radius),
            };
            bits.push(hit);
        }
    }
    BinaryMask { grid: *grid, bits }
}

/// [`render_line_hard_with_kernel`] with the default disk kernel.
pub fn render_line_hard<S: Real>(
    line: &Polyline<S>,
    grid: &GridSpec<S>,
    dilation_px: usize,
) -> BinaryMask<S> {
    render_line_hard_with_kernel(line, grid, dilation_px, DilationKernel::Disk)
}

/// Soft-renders an element following its geometry kind.
pub fn render_element_soft<S: Real>(
    geom: &crate::element::ElementGeometry<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
) -> SoftMask<S> {
    match geom {
        crate::element::ElementGeometry::Line(l) => render_line_soft(l, grid, tau),
        crate::element::ElementGeometry::Polygon(p) => render_polygon_soft(p, grid, tau),
    }
}

/// Backward pass matching [`render_element_soft`].
pub fn backward_element_soft<S: Real>(
    geom: &crate::element::ElementGeometry<S>,
    grid: &GridSpec<S>,
    tau: Softness<S>,
    upstream: &[S],
) -> Result<RasterGradient<S>, RasterError> {
    match geom {
        crate::element::ElementGeometry::Line(l) => backward_line_soft(l, grid, tau, upstream),
        crate::element::ElementGeometry::Polygon(p) => {
            backward_polygon_soft(p, grid, tau, upstream)
        }
    }
}

/// Hard-rasterizes a polygon-shaped element: a pixel is set when its center
/// is inside by the even-odd rule (boundary centers included).
pub fn render_polygon_hard<S: Real>(poly: &Polygon<S>, grid: &GridSpec<S>) -> BinaryMask<S> {
    let segs = px_segments(poly.vertices(), grid, true);
    let mut bits = Vec::with_capacity(grid.pixel_count());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            let (_, _, sign) = polygon_dist_sign(&segs, pixel_q(row, col));
            bits.push(sign > S::zero());
        }
    }
    BinaryMask { grid: *grid, bits }
}
