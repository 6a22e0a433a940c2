//! Planar geometry kernels: distances, containment, resampling, and the
//! pixel grid mapping world coordinates to pixel centers.
//!
//! All operations are pure functions of immutable inputs and are safe to
//! call concurrently.

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

use crate::scalar::Real;

/// Minimum absolute signed area accepted for a polygon, in square meters.
const MIN_POLYGON_AREA: f64 = 1e-9;

/// Segments shorter than this (in meters) are treated as degenerate where a
/// direction is required.
pub(crate) const DEGENERATE_SEGMENT_LEN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{context} requires at least {needed} distinct points, got {got}")]
    TooFewPoints {
        context: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("coordinates must be finite")]
    NonFiniteCoordinate,
    #[error("polygon is degenerate: |signed area| = {area} <= {MIN_POLYGON_AREA} m^2")]
    DegeneratePolygon { area: f64 },
    #[error("grid extent must satisfy x_min < x_max and y_min < y_max")]
    InvalidGridExtent,
    #[error("grid must be at least 1x1 pixels")]
    EmptyGrid,
    #[error("pixel index ({row}, {col}) out of range for {height}x{width} grid")]
    PixelOutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("resampling requires at least 2 output points, got {got}")]
    InvalidResampleCount { got: usize },
}

/// A point (or displacement) in the metric bird's-eye-view frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2<S = f64> {
    pub x: S,
    pub y: S,
}

impl<S: Real> Point2<S> {
    #[inline]
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn distance(self, other: Self) -> S {
        (self - other).norm()
    }
}

impl<S: Real> Add for Point2<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Real> Sub for Point2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Real> Mul<S> for Point2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: S) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

/// Removes consecutive duplicates (exact equality) from a point sequence.
fn dedup_consecutive<S: Real>(points: Vec<Point2<S>>) -> Vec<Point2<S>> {
    let mut out: Vec<Point2<S>> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|last| *last != p) {
            out.push(p);
        }
    }
    out
}

fn check_finite<S: Real>(points: &[Point2<S>]) -> Result<(), GeometryError> {
    if points.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFiniteCoordinate)
    }
}

/// An ordered open point sequence with at least two distinct points and no
/// consecutive duplicates. Real annotations contain duplicated points, so
/// the constructor deduplicates rather than erroring; compare the input
/// length with [`Polyline::len`] to learn how many were dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<S = f64> {
    points: Vec<Point2<S>>,
}

impl<S: Real> Polyline<S> {
    pub fn new(points: Vec<Point2<S>>) -> Result<Self, GeometryError> {
        check_finite(&points)?;
        let points = dedup_consecutive(points);
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints {
                context: "polyline",
                needed: 2,
                got: points.len(),
            });
        }
        Ok(Self { points })
    }

    #[inline]
    pub fn points(&self) -> &[Point2<S>] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterates the N-1 segments in order.
    pub fn segments(&self) -> impl Iterator<Item = (Point2<S>, Point2<S>)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn arc_length(&self) -> S {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    /// Reverses the traversal direction.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }
}

/// An ordered vertex ring, implicitly closed (the last vertex connects back
/// to the first). Must enclose a non-degenerate signed area. The ring may
/// self-intersect; containment is resolved by the even-odd rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon<S = f64> {
    vertices: Vec<Point2<S>>,
}

impl<S: Real> Polygon<S> {
    pub fn new(vertices: Vec<Point2<S>>) -> Result<Self, GeometryError> {
        check_finite(&vertices)?;
        let mut vertices = dedup_consecutive(vertices);
        // Accept explicitly closed rings by dropping the repeated last vertex.
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewPoints {
                context: "polygon",
                needed: 3,
                got: vertices.len(),
            });
        }
        let poly = Self { vertices };
        let area = poly.signed_area().to_f64_scalar().abs();
        if area <= MIN_POLYGON_AREA {
            return Err(GeometryError::DegeneratePolygon { area });
        }
        Ok(poly)
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<S>] {
        &self.vertices
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Iterates the N closed-loop boundary segments; segment `k` connects
    /// vertex `k` to vertex `(k + 1) % N`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<S>, Point2<S>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Shoelace signed area (positive for counter-clockwise rings).
    pub fn signed_area(&self) -> S {
        let two = S::real(2.0);
        self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<S>() / two
    }

    pub fn perimeter(&self) -> S {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }
}

/// Bird's-eye-view extent in meters plus raster dimensions. Row 0 is the
/// `y_min` edge; pixel centers sit at half-pixel offsets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<S = f64> {
    x_min: S,
    x_max: S,
    y_min: S,
    y_max: S,
    width: usize,
    height: usize,
}

impl<S: Real> GridSpec<S> {
    pub fn new(
        x_min: S,
        x_max: S,
        y_min: S,
        y_max: S,
        width: usize,
        height: usize,
    ) -> Result<Self, GeometryError> {
        if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::InvalidGridExtent);
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyGrid);
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            width,
            height,
        })
    }

    #[inline]
    pub fn x_min(&self) -> S {
        self.x_min
    }
    #[inline]
    pub fn x_max(&self) -> S {
        self.x_max
    }
    #[inline]
    pub fn y_min(&self) -> S {
        self.y_min
    }
    #[inline]
    pub fn y_max(&self) -> S {
        self.y_max
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Pixel pitch along x, in meters per pixel.
    #[inline]
    pub fn dx(&self) -> S {
        (self.x_max - self.x_min) / S::from_usize(self.width).unwrap()
    }

    /// Pixel pitch along y, in meters per pixel.
    #[inline]
    pub fn dy(&self) -> S {
        (self.y_max - self.y_min) / S::from_usize(self.height).unwrap()
    }

    /// World coordinates of the center of pixel (`row`, `col`).
    pub fn pixel_center(&self, row: usize, col: usize) -> Result<Point2<S>, GeometryError> {
        if row >= self.height || col >= self.width {
            return Err(GeometryError::PixelOutOfRange {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        let half = S::real(0.5);
        Ok(Point2::new(
            self.x_min + (S::from_usize(col).unwrap() + half) * self.dx(),
            self.y_min + (S::from_usize(row).unwrap() + half) * self.dy(),
        ))
    }

    /// Maps a world point to continuous pixel coordinates, where integer
    /// values lie on pixel boundaries and centers are at `k + 0.5`.
    #[inline]
    pub fn world_to_px(&self, p: Point2<S>) -> Point2<S> {
        Point2::new(
            (p.x - self.x_min) / self.dx(),
            (p.y - self.y_min) / self.dy(),
        )
    }

    /// Inverse of [`GridSpec::world_to_px`].
    #[inline]
    pub fn px_to_world(&self, p: Point2<S>) -> Point2<S> {
        Point2::new(self.x_min + p.x * self.dx(), self.y_min + p.y * self.dy())
    }
}

/// Foot of the perpendicular from `q` onto segment `ab`, clamped to the
/// segment. Returns `(t, closest, distance)` with `t` in `[0, 1]`.
#[inline]
pub(crate) fn segment_foot<S: Real>(q: Point2<S>, a: Point2<S>, b: Point2<S>) -> (S, Point2<S>, S) {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq == S::zero() {
        return (S::zero(), a, q.distance(a));
    }
    let t = ((q - a).dot(d) / len_sq).max(S::zero()).min(S::one());
    let closest = a + d * t;
    (t, closest, q.distance(closest))
}

/// Shortest distance from `q` to segment `ab`; for `a == b` this reduces to
/// the point distance.
#[inline]
pub fn point_segment_distance<S: Real>(q: Point2<S>, a: Point2<S>, b: Point2<S>) -> S {
    segment_foot(q, a, b).2
}

/// Shortest distance from `q` to the polyline, plus the index of the
/// minimizing segment (lowest index on ties, which keeps backward passes
/// deterministic).
pub fn polyline_distance<S: Real>(q: Point2<S>, line: &Polyline<S>) -> (S, usize) {
    let mut best = S::infinity();
    let mut best_idx = 0;
    for (idx, (a, b)) in line.segments().enumerate() {
        let d = point_segment_distance(q, a, b);
        if d < best {
            best = d;
            best_idx = idx;
        }
    }
    (best, best_idx)
}

/// Shortest distance from `q` to any closed-loop boundary segment.
pub fn polygon_boundary_distance<S: Real>(q: Point2<S>, poly: &Polygon<S>) -> S {
    polygon_boundary_distance_indexed(q, poly).0
}

/// As [`polygon_boundary_distance`], also returning the minimizing edge
/// index (lowest on ties).
pub(crate) fn polygon_boundary_distance_indexed<S: Real>(
    q: Point2<S>,
    poly: &Polygon<S>,
) -> (S, usize) {
    let mut best = S::infinity();
    let mut best_idx = 0;
    for (idx, (a, b)) in poly.edges().enumerate() {
        let d = point_segment_distance(q, a, b);
        if d < best {
            best = d;
            best_idx = idx;
        }
    }
    (best, best_idx)
}

/// Even-odd crossing parity of a ray cast in +x direction from `q`.
/// Does not handle the boundary itself; see [`point_in_polygon_sign`].
#[inline]
pub(crate) fn even_odd_parity<S: Real>(q: Point2<S>, poly: &Polygon<S>) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > q.y) != (b.y > q.y) {
            let x_cross = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Containment indicator: `+1` strictly inside by the even-odd rule, `-1`
/// strictly outside, and `+1` on the boundary (the sign is immaterial there
/// since the boundary distance is zero; fixing it keeps results
/// deterministic).
pub fn point_in_polygon_sign<S: Real>(q: Point2<S>, poly: &Polygon<S>) -> i8 {
    if polygon_boundary_distance(q, poly) == S::zero() {
        return 1;
    }
    if even_odd_parity(q, poly) {
        1
    } else {
        -1
    }
}

/// Resamples the polyline to `n` points at equal arc-length spacing, with
/// both endpoints preserved exactly.
pub fn resample_equidistant<S: Real>(
    line: &Polyline<S>,
    n: usize,
) -> Result<Polyline<S>, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidResampleCount { got: n });
    }
    let points = line.points();
    let mut cumulative = Vec::with_capacity(points.len());
    let mut total = S::zero();
    cumulative.push(S::zero());
    for (a, b) in line.segments() {
        total += a.distance(b);
        cumulative.push(total);
    }

    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    let steps = S::from_usize(n - 1).unwrap();
    let mut seg = 0usize;
    for i in 1..n - 1 {
        let target = total * S::from_usize(i).unwrap() / steps;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let local = if seg_len > S::zero() {
            (target - cumulative[seg]) / seg_len
        } else {
            S::zero()
        };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * local);
    }
    out.push(*points.last().unwrap());
    Polyline::new(out)
}

/// Samples `n` points at equal arc-length spacing around a closed ring,
/// starting at vertex 0 (no duplicated closing point).
pub fn resample_ring_equidistant<S: Real>(poly: &Polygon<S>, n: usize) -> Vec<Point2<S>> {
    assert!(n >= 1, "ring resampling requires n >= 1");
    let verts = poly.vertices();
    let count = verts.len();
    let mut cumulative = Vec::with_capacity(count + 1);
    let mut total = S::zero();
    cumulative.push(S::zero());
    for (a, b) in poly.edges() {
        total += a.distance(b);
        cumulative.push(total);
    }

    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let target = total * S::from_usize(i).unwrap() / S::from_usize(n).unwrap();
        while seg + 1 < count && cumulative[seg + 1] < target {
            seg += 1;
        }
        let a = verts[seg];
        let b = verts[(seg + 1) % count];
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let local = if seg_len > S::zero() {
            (target - cumulative[seg]) / seg_len
        } else {
            S::zero()
        };
        out.push(a + (b - a) * local);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn segment_distance_perpendicular_foot_inside() {
        assert_eq!(
            point_segment_distance(p(0.0, 1.0), p(-1.0, 0.0), p(1.0, 0.0)),
            1.0
        );
    }

    #[test]
    fn segment_distance_clamps_to_endpoint() {
        assert_eq!(
            point_segment_distance(p(3.0, 0.0), p(-1.0, 0.0), p(1.0, 0.0)),
            2.0
        );
    }

    #[test]
    fn segment_distance_degenerate_segment_is_point_distance() {
        assert_eq!(
            point_segment_distance(p(3.0, 4.0), p(0.0, 0.0), p(0.0, 0.0)),
            5.0
        );
    }

    #[test]
    fn polyline_distance_zero_on_membership() {
        let line = Polyline::new(vec![p(-2.0, 0.0), p(0.0, 0.0), p(2.0, 0.0)]).unwrap();
        let (d, idx) = polyline_distance(p(1.0, 0.0), &line);
        assert_eq!(d, 0.0);
        assert_eq!(idx, 1);
    }

    #[test]
    fn polyline_distance_symmetric_straight_line() {
        let line = Polyline::new(vec![p(-2.0, 0.0), p(0.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert_eq!(polyline_distance(p(0.0, 1.0), &line).0, 1.0);
    }

    #[test]
    fn polyline_distance_matches_per_segment_oracle() {
        // Oracle: exhaustive evaluation over both segments.
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)];
        let q = p(5.0, 5.0);
        let oracle = pts
            .windows(2)
            .map(|w| point_segment_distance(q, w[0], w[1]))
            .fold(f64::INFINITY, f64::min);
        let line = Polyline::new(pts.to_vec()).unwrap();
        let (d, idx) = polyline_distance(q, &line);
        assert_eq!(d, oracle);
        // Nearest feature is the last vertex (1, 1): d = sqrt(32).
        assert!((d - 32.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(idx, 1);
    }

    #[test]
    fn polyline_dedups_consecutive_duplicates() {
        let line = Polyline::new(vec![p(0.0, 0.0), p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0)]).unwrap();
        assert_eq!(line.len(), 2);
        assert!(Polyline::new(vec![p(1.0, 1.0), p(1.0, 1.0)]).is_err());
    }

    #[test]
    fn polyline_rejects_non_finite() {
        assert_eq!(
            Polyline::new(vec![p(f64::NAN, 0.0), p(1.0, 0.0)]),
            Err(GeometryError::NonFiniteCoordinate)
        );
    }

    fn unit_square() -> Polygon {
        Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn polygon_boundary_distance_cases() {
        let sq = unit_square();
        assert_eq!(polygon_boundary_distance(p(0.5, 0.0), &sq), 0.0);
        assert_eq!(polygon_boundary_distance(p(0.5, 0.5), &sq), 0.5);
        assert_eq!(polygon_boundary_distance(p(2.0, 0.5), &sq), 1.0);
    }

    #[test]
    fn polygon_rejects_degenerate() {
        assert!(matches!(
            Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)]),
            Err(GeometryError::DegeneratePolygon { .. })
        ));
        assert!(matches!(
            Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0)]),
            Err(GeometryError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn polygon_accepts_explicitly_closed_ring() {
        let open = unit_square();
        let closed = Polygon::new(vec![
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(1.0, 1.0),
            p(0.0, 1.0),
            p(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(open, closed);
    }

    #[test]
    fn containment_square() {
        let sq = unit_square();
        assert_eq!(point_in_polygon_sign(p(0.5, 0.5), &sq), 1);
        assert_eq!(point_in_polygon_sign(p(2.0, 2.0), &sq), -1);
        // Boundary points are assigned +1 for determinism.
        assert_eq!(point_in_polygon_sign(p(1.0, 0.5), &sq), 1);
    }

    #[test]
    fn containment_bowtie_even_odd() {
        // Self-overlapping quad (asymmetric: a symmetric bowtie has zero
        // signed area); the even-odd rule keeps both lobes inside.
        let bowtie =
            Polygon::new(vec![p(0.0, 0.0), p(2.0, 1.0), p(2.0, 0.0), p(0.0, 2.0)]).unwrap();
        // Left lobe and right lobe. The edges (0,0)-(2,1) and (2,0)-(0,2)
        // cross at (4/3, 2/3).
        assert_eq!(point_in_polygon_sign(p(0.3, 0.8), &bowtie), 1);
        assert_eq!(point_in_polygon_sign(p(1.8, 0.5), &bowtie), 1);
        // Outside, between the lobes' upper reaches.
        assert_eq!(point_in_polygon_sign(p(1.0, 1.2), &bowtie), -1);
        // Exactly on an edge: (1, 0.5) is the midpoint of (0,0)-(2,1).
        assert_eq!(point_in_polygon_sign(p(1.0, 0.5), &bowtie), 1);
    }

    #[test]
    fn resample_uniform_straight_line() {
        let line = Polyline::new(vec![p(0.0, 0.0), p(4.0, 0.0)]).unwrap();
        let out = resample_equidistant(&line, 5).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, 4.0];
        for (got, want) in out.points().iter().zip(expected) {
            assert!((got.x - want).abs() < 1e-12);
            assert_eq!(got.y, 0.0);
        }
    }

    #[test]
    fn resample_breakpoint_coincides_with_sample() {
        let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)]).unwrap();
        let out = resample_equidistant(&line, 3).unwrap();
        assert_eq!(out.points(), line.points());
    }

    #[test]
    fn resample_rejects_small_counts() {
        let line = Polyline::new(vec![p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
        assert!(resample_equidistant(&line, 1).is_err());
    }

    /// Arc-length position of a sample known to lie on the polyline:
    /// the independent check used to validate equal spacing.
    fn arc_position(line: &Polyline, q: Point2) -> f64 {
        let mut walked = 0.0;
        let mut best = (f64::INFINITY, 0.0);
        for (a, b) in line.segments() {
            let (t, _closest, d) = segment_foot(q, a, b);
            if d < best.0 {
                best = (d, walked + t * a.distance(b));
            }
            walked += a.distance(b);
        }
        assert!(best.0 < 1e-9, "sample expected on the polyline");
        best.1
    }

    #[test]
    fn resample_l_shape_equal_arc_spacing() {
        let line =
            Polyline::new(vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 3.0), p(-1.0, 3.0)]).unwrap();
        let n = 20;
        let out = resample_equidistant(&line, n).unwrap();
        assert_eq!(out.points()[0], p(0.0, 0.0));
        assert_eq!(*out.points().last().unwrap(), p(-1.0, 3.0));
        let positions: Vec<f64> = out
            .points()
            .iter()
            .map(|&q| arc_position(&line, q))
            .collect();
        let total = line.arc_length();
        let spacing = total / (n - 1) as f64;
        for (i, w) in positions.windows(2).enumerate() {
            let gap = w[1] - w[0];
            assert!(
                (gap - spacing).abs() <= 1e-9 * total,
                "gap {i}: {gap} vs {spacing}"
            );
        }
    }

    #[test]
    fn pixel_center_unit_grid() {
        let g = GridSpec::new(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(g.pixel_center(0, 0).unwrap(), p(0.5, 0.5));
        assert!(g.pixel_center(0, 1).is_err());
        assert!(g.pixel_center(1, 0).is_err());
    }

    #[test]
    fn pixel_center_evaluation_grid_first_column() {
        // 240 columns across [-15, 15] m: 0.125 m pitch.
        let g = GridSpec::new(-15.0, 15.0, -30.0, 30.0, 240, 480).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.dy(), 0.125);
        assert_eq!(g.pixel_center(0, 0).unwrap().x, -14.9375);
    }

    #[test]
    fn pixel_center_2x2_symmetry() {
        let g = GridSpec::new(0.0, 2.0, 0.0, 2.0, 2, 2).unwrap();
        assert_eq!(g.pixel_center(0, 0).unwrap(), p(0.5, 0.5));
        assert_eq!(g.pixel_center(0, 1).unwrap(), p(1.5, 0.5));
        assert_eq!(g.pixel_center(1, 0).unwrap(), p(0.5, 1.5));
        assert_eq!(g.pixel_center(1, 1).unwrap(), p(1.5, 1.5));
    }

    #[test]
    fn grid_rejects_invalid() {
        assert!(GridSpec::new(1.0, 1.0, 0.0, 1.0, 4, 4).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 0, 4).is_err());
        assert!(GridSpec::new(0.0, f64::INFINITY, 0.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn world_px_round_trip() {
        let g = GridSpec::new(-15.0, 15.0, -30.0, 30.0, 240, 480).unwrap();
        let q = p(3.25, -11.5);
        let back = g.px_to_world(g.world_to_px(q));
        assert!((back.x - q.x).abs() < 1e-12 && (back.y - q.y).abs() < 1e-12);
    }

    #[test]
    fn ring_resample_square_perimeter() {
        let sq = unit_square();
        let pts = resample_ring_equidistant(&sq, 8);
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0], p(0.0, 0.0));
        // 8 samples around perimeter 4: spacing 0.5, all on the boundary.
        for q in &pts {
            assert!(polygon_boundary_distance(*q, &sq) < 1e-12);
        }
        assert_eq!(pts[1], p(0.5, 0.0));
        assert_eq!(pts[2], p(1.0, 0.0));
        assert_eq!(pts[3], p(1.0, 0.5));
    }
}
