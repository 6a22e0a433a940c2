//! Dataset-level evaluation: Chamfer-distance AP and rasterization AP.
//!
//! Both metrics share the same machinery: detections are ranked by
//! confidence, matched one-to-one against ground truth per class and per
//! threshold (greedy, best candidate first), TP/FP labels are pooled across
//! scenes, and average precision integrates the monotone precision
//! envelope. They differ only in the match criterion: pixel-mask IoU of the
//! hard rasterizations versus Chamfer distance in meters.
//!
//! Scene preprocessing parallelizes over scenes; aggregation is an ordered
//! reduction, so reports are identical for any worker count.

use rayon::prelude::*;
use thiserror::Error;

use crate::element::{Detection, ElementKind, MapElement, Vocabulary};
use crate::geometry::{GeometryError, GridSpec, Point2};
use crate::raster::{
    render_line_hard_with_kernel, render_polygon_hard, BinaryMask, DilationKernel,
};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("chamfer distance requires non-empty point sets")]
    EmptyPointSet,
    #[error("masks live on different grids")]
    GridMismatch,
    #[error("scene '{scene}' element {index}: unknown class id {class_id}")]
    UnknownClass {
        scene: String,
        index: usize,
        class_id: usize,
    },
    #[error("scene '{scene}' element {index}: kind {got:?} does not match class '{class}' ({expected:?})")]
    KindMismatch {
        scene: String,
        index: usize,
        class: String,
        got: ElementKind,
        expected: ElementKind,
    },
    #[error("thresholds must be finite, strictly increasing and positive (IoU additionally <= 1)")]
    BadThresholds,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Symmetric Chamfer distance between two non-empty unordered point sets:
/// half the sum of the two directed mean nearest-neighbor distances.
pub fn chamfer_distance<S: Real>(p: &[Point2<S>], q: &[Point2<S>]) -> Result<S, MetricsError> {
    if p.is_empty() || q.is_empty() {
        return Err(MetricsError::EmptyPointSet);
    }
    let directed = |from: &[Point2<S>], to: &[Point2<S>]| {
        let sum: S = from
            .iter()
            .map(|a| {
                to.iter()
                    .map(|b| a.distance(*b))
                    .fold(S::infinity(), S::min)
            })
            .sum();
        sum / S::from_usize(from.len()).unwrap()
    };
    Ok(S::real(0.5) * (directed(p, q) + directed(q, p)))
}

/// Intersection-over-union of two binary masks on the same grid; zero when
/// both are empty.
pub fn mask_iou<S: Real>(a: &BinaryMask<S>, b: &BinaryMask<S>) -> Result<f64, MetricsError> {
    if a.grid() != b.grid() {
        return Err(MetricsError::GridMismatch);
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (x, y) in a.bits().iter().zip(b.bits()) {
        inter += (*x && *y) as usize;
        union += (*x || *y) as usize;
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

/// Evaluation configuration. Defaults follow the metric's canonical setup:
/// a 480x240 grid over x in [-15, 15] m and y in [-30, 30] m (0.125 m per
/// pixel), 2 px line dilation, IoU thresholds 0.25:0.50:0.05 for lines and
/// 0.50:0.75:0.05 for polygons, Chamfer thresholds {0.5, 1.0, 1.5} m, and
/// point sets resampled to 100 points before Chamfer evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig<S = f64> {
    pub grid: GridSpec<S>,
    pub line_dilation_px: usize,
    pub dilation_kernel: DilationKernel,
    pub line_iou_thresholds: Vec<f64>,
    pub polygon_iou_thresholds: Vec<f64>,
    pub chamfer_thresholds_m: Vec<f64>,
    /// When set, point sets are resampled to this many points by arc length
    /// before Chamfer evaluation; `None` uses the raw control points.
    pub chamfer_resample_points: Option<usize>,
    /// Compute AP per scene and average, instead of pooling TP/FP labels
    /// across scenes (the default).
    pub per_scene_ap: bool,
}

impl<S: Real> Default for EvalConfig<S> {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(
                S::real(-15.0),
                S::real(15.0),
                S::real(-30.0),
                S::real(30.0),
                240,
                480,
            )
            .expect("default evaluation grid is valid"),
            line_dilation_px: 2,
            dilation_kernel: DilationKernel::Disk,
            line_iou_thresholds: vec![0.25, 0.30, 0.35, 0.40, 0.45, 0.50],
            polygon_iou_thresholds: vec![0.50, 0.55, 0.60, 0.65, 0.70, 0.75],
            chamfer_thresholds_m: vec![0.5, 1.0, 1.5],
            chamfer_resample_points: Some(100),
            per_scene_ap: false,
        }
    }
}

impl<S: Real> EvalConfig<S> {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let increasing_positive = |ts: &[f64], max: f64| {
            !ts.is_empty()
                && ts.iter().all(|t| t.is_finite() && *t > 0.0 && *t <= max)
                && ts.windows(2).all(|w| w[0] < w[1])
        };
        if !increasing_positive(&self.line_iou_thresholds, 1.0)
            || !increasing_positive(&self.polygon_iou_thresholds, 1.0)
            || !increasing_positive(&self.chamfer_thresholds_m, f64::INFINITY)
        {
            return Err(MetricsError::BadThresholds);
        }
        Ok(())
    }

    fn iou_thresholds(&self, kind: ElementKind) -> &[f64] {
        match kind {
            ElementKind::Line => &self.line_iou_thresholds,
            ElementKind::Polygon => &self.polygon_iou_thresholds,
        }
    }
}

/// One evaluation scene: ranked detections plus ground-truth elements.
#[derive(Clone, Debug)]
pub struct Scene<S = f64> {
    pub id: String,
    pub detections: Vec<Detection<S>>,
    pub ground_truth: Vec<MapElement<S>>,
}

/// Hard rasterization used by the metric: dilated band for lines, filled
/// even-odd region for polygons. Both prediction and ground truth pass
/// through this identically.
pub fn rasterize_for_eval<S: Real>(elem: &MapElement<S>, cfg: &EvalConfig<S>) -> BinaryMask<S> {
    match &elem.geometry {
        crate::element::ElementGeometry::Line(l) => {
            render_line_hard_with_kernel(l, &cfg.grid, cfg.line_dilation_px, cfg.dilation_kernel)
        }
        crate::element::ElementGeometry::Polygon(p) => render_polygon_hard(p, &cfg.grid),
    }
}

/// Indices of detections in descending confidence; equal confidences keep
/// input order (stable ranking).
fn confidence_order<S: Real>(dets: &[Detection<S>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    order
}

/// Greedy one-to-one matching from a precomputed det x gt score matrix.
/// Detections claim, in rank order, the unclaimed ground truth with the
/// best admissible score (ties to the lowest index). `admissible` and
/// `better` encode the criterion: IoU >= threshold / maximal, or distance
/// <= threshold / minimal.
fn greedy_labels(
    scores: &[f64],
    n_gt: usize,
    rank_order: &[usize],
    admissible: impl Fn(f64) -> bool,
    better: impl Fn(f64, f64) -> bool,
) -> Vec<bool> {
    let n_det = rank_order.len();
    let mut claimed = vec![false; n_gt];
    let mut tp = vec![false; n_det];
    for &det in rank_order {
        let mut best: Option<(usize, f64)> = None;
        for gt in 0..n_gt {
            if claimed[gt] {
                continue;
            }
            let s = scores[det * n_gt + gt];
            if !admissible(s) {
                continue;
            }
            if best.is_none_or(|(_, bs)| better(s, bs)) {
                best = Some((gt, s));
            }
        }
        if let Some((gt, _)) = best {
            claimed[gt] = true;
            tp[det] = true;
        }
    }
    tp
}

/// Labels detections of one class TP/FP against same-class ground truth at
/// one IoU threshold, using the metric's hard rasterization. Returns labels
/// in the detections' input order.
pub fn match_detections_raster<S: Real>(
    dets: &[Detection<S>],
    gts: &[MapElement<S>],
    iou_threshold: f64,
    cfg: &EvalConfig<S>,
) -> Vec<bool> {
    let det_masks: Vec<BinaryMask<S>> = dets
        .iter()
        .map(|d| rasterize_for_eval(&d.element, cfg))
        .collect();
    let gt_masks: Vec<BinaryMask<S>> = gts.iter().map(|g| rasterize_for_eval(g, cfg)).collect();
    let mut scores = vec![0.0; dets.len() * gts.len()];
    for (i, dm) in det_masks.iter().enumerate() {
        for (j, gm) in gt_masks.iter().enumerate() {
            scores[i * gts.len() + j] = mask_iou(dm, gm).expect("same grid by construction");
        }
    }
    greedy_labels(
        &scores,
        gts.len(),
        &confidence_order(dets),
        |iou| iou >= iou_threshold,
        |a, b| a > b,
    )
}

/// One point of a precision-recall curve.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Average precision of confidence-ranked TP/FP labels: area under the
/// monotone precision envelope, with recall denominated by `n_gt`.
/// Detections sharing a confidence enter together (threshold-sweep
/// semantics), which makes the value depend only on the ranking.
/// Conventions: 0 when `n_gt == 0` and any detection exists; 1 when both
/// sides are empty (vacuously perfect).
pub fn average_precision(ranked: &[(f64, bool)], n_gt: usize) -> f64 {
    debug_assert!(
        ranked.windows(2).all(|w| w[0].0 >= w[1].0),
        "labels must be ranked by descending confidence"
    );
    if n_gt == 0 {
        return if ranked.is_empty() { 1.0 } else { 0.0 };
    }
    if ranked.is_empty() {
        return 0.0;
    }

    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < ranked.len() {
        let conf = ranked[i].0;
        while i < ranked.len() && ranked[i].0 == conf {
            if ranked[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64));
    }
    for k in (0..points.len() - 1).rev() {
        points[k].1 = points[k].1.max(points[k + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Raw (unenveloped) cumulative precision-recall points, one per ranked
/// detection; recall is non-decreasing. Suitable for plotting or CSV
/// export.
pub fn pr_curve(ranked: &[(f64, bool)], n_gt: usize) -> Vec<PrPoint> {
    let (mut tp, mut fp) = (0usize, 0usize);
    ranked
        .iter()
        .map(|&(_, is_tp)| {
            if is_tp {
                tp += 1;
            } else {
                fp += 1;
            }
            PrPoint {
                recall: if n_gt > 0 {
                    tp as f64 / n_gt as f64
                } else {
                    0.0
                },
                precision: tp as f64 / (tp + fp) as f64,
            }
        })
        .collect()
}

/// Which metric produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Raster,
    Chamfer,
}

/// AP at one threshold, with its pooled PR points.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThresholdAp {
    pub threshold: f64,
    pub ap: f64,
    pub pr: Vec<PrPoint>,
}

/// Per-class results: threshold-averaged AP plus the per-threshold detail.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassAp {
    pub class: String,
    pub kind: ElementKind,
    pub ap: f64,
    pub num_gt: usize,
    pub num_detections: usize,
    pub per_threshold: Vec<ThresholdAp>,
}

/// Full evaluation report: per (class, threshold) AP, per-class mean, and
/// the overall mean over classes present in the dataset.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ApReport {
    pub metric: MetricKind,
    pub mean_ap: f64,
    pub per_class: Vec<ClassAp>,
}

fn check_scene_elements<S: Real>(scene: &Scene<S>, vocab: &Vocabulary) -> Result<(), MetricsError> {
    let all = scene
        .detections
        .iter()
        .map(|d| &d.element)
        .chain(scene.ground_truth.iter());
    for (index, elem) in all.enumerate() {
        let spec = vocab
            .spec(elem.class_id)
            .ok_or(MetricsError::UnknownClass {
                scene: scene.id.clone(),
                index,
                class_id: elem.class_id,
            })?;
        if spec.kind != elem.kind() {
            return Err(MetricsError::KindMismatch {
                scene: scene.id.clone(),
                index,
                class: spec.name.clone(),
                got: elem.kind(),
                expected: spec.kind,
            });
        }
    }
    Ok(())
}

/// Per-scene, per-class precomputation: detection confidences (input
/// order), ranking, the det x gt score matrix, and the GT count.
struct SceneClassData {
    confidences: Vec<f64>,
    rank_order: Vec<usize>,
    scores: Vec<f64>,
    n_gt: usize,
}

fn class_detections<S: Real>(scene: &Scene<S>, class_id: usize) -> Vec<&Detection<S>> {
    scene
        .detections
        .iter()
        .filter(|d| d.element.class_id == class_id)
        .collect()
}

fn class_gts<S: Real>(scene: &Scene<S>, class_id: usize) -> Vec<&MapElement<S>> {
    scene
        .ground_truth
        .iter()
        .filter(|g| g.class_id == class_id)
        .collect()
}

/// Pools per-scene labels (in scene order), ranks them, and computes AP
/// and the PR curve; or averages per-scene APs when configured.
fn threshold_ap(
    per_scene: &[SceneClassData],
    labels_for: impl Fn(&SceneClassData) -> Vec<bool>,
    per_scene_ap: bool,
) -> ThresholdAp {
    if per_scene_ap {
        let mut aps = Vec::new();
        let mut pooled: Vec<(f64, bool)> = Vec::new();
        for data in per_scene {
            if data.n_gt == 0 && data.confidences.is_empty() {
                continue;
            }
            let tp = labels_for(data);
            let mut ranked: Vec<(f64, bool)> = data
                .rank_order
                .iter()
                .map(|&i| (data.confidences[i], tp[i]))
                .collect();
            aps.push(average_precision(&ranked, data.n_gt));
            pooled.append(&mut ranked);
        }
        pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
        let ap = if aps.is_empty() {
            0.0
        } else {
            aps.iter().sum::<f64>() / aps.len() as f64
        };
        let n_gt: usize = per_scene.iter().map(|d| d.n_gt).sum();
        ThresholdAp {
            threshold: 0.0,
            ap,
            pr: pr_curve(&pooled, n_gt),
        }
    } else {
        let mut pooled: Vec<(f64, bool)> = Vec::new();
        for data in per_scene {
            let tp = labels_for(data);
            pooled.extend(
                data.rank_order
                    .iter()
                    .map(|&i| (data.confidences[i], tp[i])),
            );
        }
        pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
        let n_gt: usize = per_scene.iter().map(|d| d.n_gt).sum();
        ThresholdAp {
            threshold: 0.0,
            ap: average_precision(&pooled, n_gt),
            pr: pr_curve(&pooled, n_gt),
        }
    }
}

/// Mean AP is taken over classes present in the dataset (any ground truth
/// or detection); absent classes keep their vacuous per-class value but do
/// not enter the mean. An entirely empty dataset reports 0.
fn assemble_report(metric: MetricKind, per_class: Vec<ClassAp>) -> ApReport {
    let present: Vec<&ClassAp> = per_class
        .iter()
        .filter(|c| c.num_gt > 0 || c.num_detections > 0)
        .collect();
    let mean_ap = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|c| c.ap).sum::<f64>() / present.len() as f64
    };
    ApReport {
        metric,
        mean_ap,
        per_class,
    }
}

/// Rasterization-based AP over a dataset of scenes: per class and per IoU
/// threshold (line thresholds for line classes, polygon thresholds for
/// polygon classes), TP/FP labels are pooled across scenes, then averaged
/// per class and over classes.
pub fn evaluate_raster<S: Real>(
    scenes: &[Scene<S>],
    vocab: &Vocabulary,
    cfg: &EvalConfig<S>,
) -> Result<ApReport, MetricsError> {
    cfg.validate()?;
    for scene in scenes {
        check_scene_elements(scene, vocab)?;
    }

    let per_class: Vec<ClassAp> = vocab
        .iter()
        .map(|(class_id, spec)| {
            let per_scene: Vec<SceneClassData> = scenes
                .par_iter()
                .map(|scene| {
                    let dets = class_detections(scene, class_id);
                    let gts = class_gts(scene, class_id);
                    let det_masks: Vec<BinaryMask<S>> = dets
                        .iter()
                        .map(|d| rasterize_for_eval(&d.element, cfg))
                        .collect();
                    let gt_masks: Vec<BinaryMask<S>> =
                        gts.iter().map(|g| rasterize_for_eval(g, cfg)).collect();
                    let mut scores = vec![0.0; dets.len() * gts.len()];
                    for (i, dm) in det_masks.iter().enumerate() {
                        for (j, gm) in gt_masks.iter().enumerate() {
                            scores[i * gts.len() + j] =
                                mask_iou(dm, gm).expect("same grid by construction");
                        }
                    }
                    let confidences: Vec<f64> = dets.iter().map(|d| d.confidence).collect();
                    let mut rank_order: Vec<usize> = (0..dets.len()).collect();
                    rank_order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]));
                    SceneClassData {
                        confidences,
                        rank_order,
                        scores,
                        n_gt: gts.len(),
                    }
                })
                .collect();

            let per_threshold: Vec<ThresholdAp> = cfg
                .iou_thresholds(spec.kind)
                .iter()
                .map(|&thr| {
                    let mut t = threshold_ap(
                        &per_scene,
                        |data| {
                            greedy_labels(
                                &data.scores,
                                data.n_gt,
                                &data.rank_order,
                                |iou| iou >= thr,
                                |a, b| a > b,
                            )
                        },
                        cfg.per_scene_ap,
                    );
                    t.threshold = thr;
                    t
                })
                .collect();

            let ap = per_threshold.iter().map(|t| t.ap).sum::<f64>() / per_threshold.len() as f64;
            ClassAp {
                class: spec.name.clone(),
                kind: spec.kind,
                ap,
                num_gt: per_scene.iter().map(|d| d.n_gt).sum(),
                num_detections: per_scene.iter().map(|d| d.confidences.len()).sum(),
                per_threshold,
            }
        })
        .collect();

    Ok(assemble_report(MetricKind::Raster, per_class))
}

/// Chamfer-distance AP baseline: same pooling and AP machinery with the
/// match criterion `chamfer <= threshold` (meters), nearest ground truth
/// preferred. Point sets are resampled per the configuration first.
pub fn evaluate_chamfer<S: Real>(
    scenes: &[Scene<S>],
    vocab: &Vocabulary,
    cfg: &EvalConfig<S>,
) -> Result<ApReport, MetricsError> {
    cfg.validate()?;
    for scene in scenes {
        check_scene_elements(scene, vocab)?;
    }

    let sample = |elem: &MapElement<S>| -> Vec<Point2<S>> {
        match cfg.chamfer_resample_points {
            Some(n) => elem.geometry.sample_points(n),
            None => elem.geometry.points().to_vec(),
        }
    };

    let per_class: Vec<ClassAp> = vocab
        .iter()
        .map(|(class_id, spec)| {
            let per_scene: Vec<SceneClassData> = scenes
                .par_iter()
                .map(|scene| {
                    let dets = class_detections(scene, class_id);
                    let gts = class_gts(scene, class_id);
                    let det_pts: Vec<Vec<Point2<S>>> =
                        dets.iter().map(|d| sample(&d.element)).collect();
                    let gt_pts: Vec<Vec<Point2<S>>> = gts.iter().map(|g| sample(g)).collect();
                    let mut scores = vec![0.0; dets.len() * gts.len()];
                    for (i, dp) in det_pts.iter().enumerate() {
                        for (j, gp) in gt_pts.iter().enumerate() {
                            scores[i * gts.len() + j] = chamfer_distance(dp, gp)
                                .expect("constructed point sets are non-empty")
                                .to_f64_scalar();
                        }
                    }
                    let confidences: Vec<f64> = dets.iter().map(|d| d.confidence).collect();
                    let mut rank_order: Vec<usize> = (0..dets.len()).collect();
                    rank_order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]));
                    SceneClassData {
                        confidences,
                        rank_order,
                        scores,
                        n_gt: gts.len(),
                    }
                })
                .collect();

            let per_threshold: Vec<ThresholdAp> = cfg
                .chamfer_thresholds_m
                .iter()
                .map(|&thr| {
                    let mut t = threshold_ap(
                        &per_scene,
                        |data| {
                            greedy_labels(
                                &data.scores,
                                data.n_gt,
                                &data.rank_order,
                                |d| d <= thr,
                                |a, b| a < b,
                            )
                        },
                        cfg.per_scene_ap,
                    );
                    t.threshold = thr;
                    t
                })
                .collect();

            let ap = per_threshold.iter().map(|t| t.ap).sum::<f64>() / per_threshold.len() as f64;
            ClassAp {
                class: spec.name.clone(),
                kind: spec.kind,
                ap,
                num_gt: per_scene.iter().map(|d| d.n_gt).sum(),
                num_detections: per_scene.iter().map(|d| d.confidences.len()).sum(),
                per_threshold,
            }
        })
        .collect();

    Ok(assemble_report(MetricKind::Chamfer, per_class))
}
