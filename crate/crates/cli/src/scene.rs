//! Scene file format: one JSON document per scene, shared by ground-truth
//! and prediction files. The two flavors differ only in the `confidence`
//! field, which predictions must carry and ground truth must not.

use std::path::Path;

use serde::{Deserialize, Serialize};

use maprast::element::{Detection, ElementGeometry, ElementKind, MapElement, Vocabulary};
use maprast::geometry::{Point2, Polygon, Polyline};
use maprast::metrics::Scene;

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneDoc {
    pub scene_id: String,
    pub elements: Vec<ElementDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ElementDoc {
    pub class: String,
    pub kind: ElementKind,
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Whether elements must, must not, or may carry confidences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfidenceMode {
    /// Prediction files.
    Required,
    /// Ground-truth files.
    Forbidden,
    /// Either flavor (e.g. for `rasterize` and `fit` inputs).
    Optional,
}

/// A validated element plus its load metadata.
#[derive(Clone, Debug)]
pub struct LoadedElement {
    pub element: MapElement,
    pub class_name: String,
    pub confidence: Option<f64>,
    /// Consecutive duplicate points removed at construction.
    pub dropped_points: usize,
}

#[derive(Clone, Debug)]
pub struct LoadedScene {
    pub id: String,
    pub elements: Vec<LoadedElement>,
}

impl LoadedScene {
    pub fn dropped_points(&self) -> usize {
        self.elements.iter().map(|e| e.dropped_points).sum()
    }

    /// Splits into an evaluation scene. Elements with confidences become
    /// detections; the rest become ground truth.
    pub fn into_eval_scene(self) -> Scene<f64> {
        let mut detections = Vec::new();
        let mut ground_truth = Vec::new();
        for e in self.elements {
            match e.confidence {
                Some(c) => detections
                    .push(Detection::new(e.element, c).expect("confidence validated at load")),
                None => ground_truth.push(e.element),
            }
        }
        Scene {
            id: self.id,
            detections,
            ground_truth,
        }
    }
}

fn build_geometry(
    kind: ElementKind,
    points: Vec<Point2>,
    ctx: &str,
) -> Result<(ElementGeometry, usize), CliError> {
    let input_len = points.len();
    match kind {
        ElementKind::Line => {
            let line =
                Polyline::new(points).map_err(|e| CliError::validation(format!("{ctx}: {e}")))?;
            let dropped = input_len - line.len();
            Ok((ElementGeometry::Line(line), dropped))
        }
        ElementKind::Polygon => {
            let poly =
                Polygon::new(points).map_err(|e| CliError::validation(format!("{ctx}: {e}")))?;
            let dropped = input_len - poly.len();
            Ok((ElementGeometry::Polygon(poly), dropped))
        }
    }
}

/// Parses and fully validates a scene document against the vocabulary.
/// Every element is constructed through the geometry-type constructors, so
/// all their invariants apply; errors carry the file path and element
/// index.
pub fn load_scene(
    path: &Path,
    vocab: &Vocabulary,
    mode: ConfidenceMode,
) -> Result<LoadedScene, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let doc: SceneDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    scene_from_doc(&doc, vocab, mode, &path.display().to_string())
}

pub fn scene_from_doc(
    doc: &SceneDoc,
    vocab: &Vocabulary,
    mode: ConfidenceMode,
    origin: &str,
) -> Result<LoadedScene, CliError> {
    let mut elements = Vec::with_capacity(doc.elements.len());
    for (index, e) in doc.elements.iter().enumerate() {
        let ctx = format!("{origin}: element {index}");
        let class_id = vocab
            .id_of(&e.class)
            .ok_or_else(|| CliError::validation(format!("{ctx}: unknown class '{}'", e.class)))?;
        let spec = vocab.spec(class_id).unwrap();
        if spec.kind != e.kind {
            return Err(CliError::validation(format!(
                "{ctx}: class '{}' is {:?}-shaped but element is {:?}-shaped",
                e.class, spec.kind, e.kind
            )));
        }
        match (mode, e.confidence) {
            (ConfidenceMode::Required, None) => {
                return Err(CliError::validation(format!(
                    "{ctx}: prediction files require a confidence"
                )));
            }
            (ConfidenceMode::Forbidden, Some(_)) => {
                return Err(CliError::validation(format!(
                    "{ctx}: ground-truth files must not carry confidences"
                )));
            }
            _ => {}
        }
        if let Some(c) = e.confidence {
            if !(0.0..=1.0).contains(&c) || !c.is_finite() {
                return Err(CliError::validation(format!(
                    "{ctx}: confidence {c} outside [0, 1]"
                )));
            }
        }
        if let Some(bad) = e
            .points
            .iter()
            .find(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(CliError::validation(format!(
                "{ctx}: non-finite coordinate {bad:?}"
            )));
        }
        let points: Vec<Point2> = e.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
        let (geometry, dropped_points) = build_geometry(e.kind, points, &ctx)?;
        elements.push(LoadedElement {
            element: MapElement::new(class_id, geometry),
            class_name: e.class.clone(),
            confidence: e.confidence,
            dropped_points,
        });
    }
    Ok(LoadedScene {
        id: doc.scene_id.clone(),
        elements,
    })
}

/// Serializes a scene document deterministically (stable key order, floats
/// rounded to 9 significant digits, trailing newline).
pub fn write_scene(path: &Path, doc: &SceneDoc) -> Result<(), CliError> {
    let mut rounded = doc.clone();
    for e in &mut rounded.elements {
        for p in &mut e.points {
            p[0] = crate::config::round_sig9(p[0]);
            p[1] = crate::config::round_sig9(p[1]);
        }
        e.confidence = e.confidence.map(crate::config::round_sig9);
    }
    let mut text =
        serde_json::to_string_pretty(&rounded).map_err(|e| CliError::runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Rebuilds a document from a loaded element (used by `fit` output).
pub fn element_to_doc(
    element: &MapElement,
    class_name: &str,
    confidence: Option<f64>,
) -> ElementDoc {
    ElementDoc {
        class: class_name.to_string(),
        kind: element.kind(),
        points: element
            .geometry
            .points()
            .iter()
            .map(|p| [p.x, p.y])
            .collect(),
        confidence,
    }
}
