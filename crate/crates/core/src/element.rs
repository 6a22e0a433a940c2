//! Classed map elements and the class vocabulary.

use thiserror::Error;

use crate::geometry::{resample_equidistant, resample_ring_equidistant, Point2, Polygon, Polyline};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("confidence {got} outside [0, 1]")]
    InvalidConfidence { got: f64 },
    #[error("duplicate class name '{name}' in vocabulary")]
    DuplicateClass { name: String },
    #[error("vocabulary must declare at least one class")]
    EmptyVocabulary,
}

/// Geometric family of a map element. Line-shaped elements (dividers,
/// boundaries, stoplines) rasterize as bands around a polyline;
/// polygon-shaped ones (pedestrian crossings, intersections, carparks)
/// rasterize as filled areas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Line,
    Polygon,
}

/// Geometry payload of a map element.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementGeometry<S = f64> {
    Line(Polyline<S>),
    Polygon(Polygon<S>),
}

impl<S: Real> ElementGeometry<S> {
    #[inline]
    pub fn kind(&self) -> ElementKind {
        match self {
            ElementGeometry::Line(_) => ElementKind::Line,
            ElementGeometry::Polygon(_) => ElementKind::Polygon,
        }
    }

    /// The element's control points in order (polygon rings are open).
    pub fn points(&self) -> &[Point2<S>] {
        match self {
            ElementGeometry::Line(l) => l.points(),
            ElementGeometry::Polygon(p) => p.vertices(),
        }
    }

    pub fn point_count(&self) -> usize {
        self.points().len()
    }

    /// Samples `n` points at equal arc-length spacing: along the open
    /// polyline for lines, around the closed ring for polygons.
    pub fn sample_points(&self, n: usize) -> Vec<Point2<S>> {
        match self {
            ElementGeometry::Line(l) => resample_equidistant(l, n.max(2))
                .expect("n >= 2")
                .points()
                .to_vec(),
            ElementGeometry::Polygon(p) => resample_ring_equidistant(p, n.max(1)),
        }
    }

    /// Rebuilds the geometry from a replacement point sequence of the same
    /// kind. Fails if the points degenerate below the kind's invariants.
    pub fn with_points(
        &self,
        points: Vec<Point2<S>>,
    ) -> Result<Self, crate::geometry::GeometryError> {
        Ok(match self {
            ElementGeometry::Line(_) => ElementGeometry::Line(Polyline::new(points)?),
            ElementGeometry::Polygon(_) => ElementGeometry::Polygon(Polygon::new(points)?),
        })
    }
}

/// A classed vectorized map element.
#[derive(Clone, Debug, PartialEq)]
pub struct MapElement<S = f64> {
    pub class_id: usize,
    pub geometry: ElementGeometry<S>,
}

impl<S: Real> MapElement<S> {
    pub fn new(class_id: usize, geometry: ElementGeometry<S>) -> Self {
        Self { class_id, geometry }
    }

    #[inline]
    pub fn kind(&self) -> ElementKind {
        self.geometry.kind()
    }
}

/// A predicted element with a ranking confidence in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection<S = f64> {
    pub element: MapElement<S>,
    pub confidence: f64,
}

impl<S: Real> Detection<S> {
    pub fn new(element: MapElement<S>, confidence: f64) -> Result<Self, ElementError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ElementError::InvalidConfidence { got: confidence });
        }
        Ok(Self {
            element,
            confidence,
        })
    }
}

/// One class of the dataset vocabulary: a name plus its fixed geometry kind.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub kind: ElementKind,
}

/// The per-dataset class vocabulary; class ids are indices into it.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    classes: Vec<ClassSpec>,
}

impl Vocabulary {
    pub fn new(classes: Vec<ClassSpec>) -> Result<Self, ElementError> {
        if classes.is_empty() {
            return Err(ElementError::EmptyVocabulary);
        }
        for (i, c) in classes.iter().enumerate() {
            if classes[..i].iter().any(|o| o.name == c.name) {
                return Err(ElementError::DuplicateClass {
                    name: c.name.clone(),
                });
            }
        }
        Ok(Self { classes })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn spec(&self, class_id: usize) -> Option<&ClassSpec> {
        self.classes.get(class_id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ClassSpec)> {
        self.classes.iter().enumerate()
    }
}

/// Raw per-class scores of a prediction; the logistic function maps each
/// score to a class probability.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassScores<S = f64> {
    scores: Vec<S>,
}

impl<S: Real> ClassScores<S> {
    pub fn new(scores: Vec<S>) -> Self {
        Self { scores }
    }

    #[inline]
    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn probability(&self, class_id: usize) -> Option<S> {
        self.scores.get(class_id).map(|s| s.sigmoid())
    }
}
