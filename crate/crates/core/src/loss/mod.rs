//! Training-side objectives on rendered masks and vectorized point sets,
//! plus the Hungarian assignment used for set-to-set matching.
//!
//! All functions are pure. Point gradients produced by [`total_loss`] are
//! expressed in pixel units (consistent with the rasterizer backward
//! passes); world-space terms are chain-ruled through the pixel pitch.

mod assignment;

pub use assignment::{hungarian_assign, Assignment, CostMatrix};

use thiserror::Error;

use crate::element::{ClassScores, ElementGeometry, MapElement};
use crate::geometry::{GridSpec, Point2, Polyline, DEGENERATE_SEGMENT_LEN};
use crate::raster::{
    backward_element_soft, render_element_soft, RasterError, RasterGradient, SoftMask, Softness,
};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("masks live on different grids")]
    GridMismatch,
    #[error("point sequences have different lengths: {pred} vs {target}")]
    LengthMismatch { pred: usize, target: usize },
    #[error("class index {index} out of range for {classes} classes")]
    InvalidClassIndex { index: usize, classes: usize },
    #[error("loss weights must be non-negative with at least one positive")]
    InvalidWeights,
    #[error("focal parameters require alpha in [0, 1] and gamma >= 0")]
    InvalidFocalParams,
    #[error("cost matrix of {rows}x{cols} expects {} entries, got {got}", rows * cols)]
    CostMatrixShape {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("cost matrix entries must be finite")]
    NonFiniteCost,
    #[error("invalid assignment: {reason}")]
    InvalidAssignment { reason: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// The four loss weights. `lambda3` weighs the L1 regression term inside
/// the matching cost and the direction term inside the final loss;
/// `lambda4` weighs the regression term of the final loss (unused during
/// matching).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights<S = f64> {
    pub lambda1: S,
    pub lambda2: S,
    pub lambda3: S,
    pub lambda4: S,
}

impl<S: Real> LossWeights<S> {
    pub fn new(lambda1: S, lambda2: S, lambda3: S, lambda4: S) -> Result<Self, LossError> {
        let all = [lambda1, lambda2, lambda3, lambda4];
        if !all.iter().all(|w| w.is_finite() && *w >= S::zero()) {
            return Err(LossError::InvalidWeights);
        }
        if all.iter().all(|w| *w == S::zero()) {
            return Err(LossError::InvalidWeights);
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
        })
    }

    /// Default weights for the matching cost.
    pub fn matching_default() -> Self {
        Self {
            lambda1: S::real(2.0),
            lambda2: S::real(2.0),
            lambda3: S::real(0.05),
            lambda4: S::zero(),
        }
    }

    /// Default weights for the final training loss.
    pub fn final_default() -> Self {
        Self {
            lambda1: S::real(2.0),
            lambda2: S::real(2.0),
            lambda3: S::real(0.005),
            lambda4: S::real(0.05),
        }
    }
}

/// Smoothed dice loss between a predicted and a target mask:
/// `1 - (2 * sum(p * g) + 1) / (sum(p) + sum(g) + 1)`, together with the
/// analytic gradient with respect to every predicted pixel. Bounded in
/// `[0, 1)` and symmetric in its arguments.
pub fn dice_loss<S: Real>(
    pred: &SoftMask<S>,
    target: &SoftMask<S>,
) -> Result<(S, Vec<S>), LossError> {
    if pred.grid() != target.grid() {
        return Err(LossError::GridMismatch);
    }
    let eps = S::one();
    let mut inter = S::zero();
    let mut sum_p = S::zero();
    let mut sum_g = S::zero();
    for (p, g) in pred.values().iter().zip(target.values()) {
        inter += *p * *g;
        sum_p += *p;
        sum_g += *g;
    }
    let num = S::real(2.0) * inter + eps;
    let den = sum_p + sum_g + eps;
    let loss = S::one() - num / den;
    let inv_den_sq = (den * den).recip();
    let grad = target
        .values()
        .iter()
        .map(|g| -(S::real(2.0) * *g * den - num) * inv_den_sq)
        .collect();
    Ok((loss, grad))
}

/// Which form the direction regularization takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionForm {
    /// `sum(1 - cos)` over interior joints: zero for forward-collinear
    /// chains, maximal for back-and-forth folds. The default.
    #[default]
    SmoothPenalty,
    /// `sum(cos)` over interior joints, the raw-cosine form. Selectable for
    /// comparison; note that minimizing it rewards direction reversals.
    RawCosine,
}

/// Direction regularization over the polyline's interior joints, plus the
/// per-point gradient (world units). Joints adjacent to a segment shorter
/// than 1e-9 m contribute zero. Polylines with fewer than 3 points return
/// zero with zero gradient.
pub fn direction_regularization<S: Real>(
    line: &Polyline<S>,
    form: DirectionForm,
) -> (S, Vec<[S; 2]>) {
    direction_regularization_points(line.points(), form)
}

/// As [`direction_regularization`], on a raw point sequence (used for
/// polygon vertex chains as well).
pub fn direction_regularization_points<S: Real>(
    points: &[Point2<S>],
    form: DirectionForm,
) -> (S, Vec<[S; 2]>) {
    let n = points.len();
    let mut loss = S::zero();
    let mut grad = vec![[S::zero(); 2]; n];
    if n < 3 {
        return (loss, grad);
    }
    let min_len = S::real(DEGENERATE_SEGMENT_LEN);
    for k in 1..n - 1 {
        let u = points[k] - points[k - 1];
        let v = points[k + 1] - points[k];
        let (lu, lv) = (u.norm(), v.norm());
        if lu < min_len || lv < min_len {
            continue;
        }
        let uh = u * lu.recip();
        let vh = v * lv.recip();
        let cos = uh.dot(vh);
        // d(cos)/du = (v_hat - cos * u_hat) / |u|, and symmetrically for v.
        let dcos_du = (vh - uh * cos) * lu.recip();
        let dcos_dv = (uh - vh * cos) * lv.recip();
        let sign = match form {
            DirectionForm::SmoothPenalty => {
                loss += S::one() - cos;
                -S::one()
            }
            DirectionForm::RawCosine => {
                loss += cos;
                S::one()
            }
        };
        grad[k - 1][0] -= sign * dcos_du.x;
        grad[k - 1][1] -= sign * dcos_du.y;
        grad[k][0] += sign * (dcos_du.x - dcos_dv.x);
        grad[k][1] += sign * (dcos_du.y - dcos_dv.y);
        grad[k + 1][0] += sign * dcos_dv.x;
        grad[k + 1][1] += sign * dcos_dv.y;
    }
    (loss, grad)
}

/// How the per-point L1 distances are reduced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Reduction {
    #[default]
    Mean,
    Sum,
}

fn l1_directed<S: Real>(pred: &[Point2<S>], target: impl Iterator<Item = Point2<S>>) -> S {
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p.x - t.x).abs() + (p.y - t.y).abs())
        .sum()
}

/// L1 regression loss between equal-length point sequences, minimized over
/// the target's two traversal directions (ordered point sets carry no
/// canonical orientation).
pub fn l1_regression_loss<S: Real>(
    pred: &[Point2<S>],
    target: &[Point2<S>],
    reduction: L1Reduction,
) -> Result<S, LossError> {
    l1_regression_with_grad(pred, target, reduction).map(|(loss, _)| loss)
}

/// As [`l1_regression_loss`], also returning the gradient with respect to
/// the predicted points (world units; forward traversal wins ties).
pub fn l1_regression_with_grad<S: Real>(
    pred: &[Point2<S>],
    target: &[Point2<S>],
    reduction: L1Reduction,
) -> Result<(S, Vec<[S; 2]>), LossError> {
    if pred.len() != target.len() {
        return Err(LossError::LengthMismatch {
            pred: pred.len(),
            target: target.len(),
        });
    }
    let forward = l1_directed(pred, target.iter().copied());
    let backward = l1_directed(pred, target.iter().rev().copied());
    let use_forward = forward <= backward;
    let raw = if use_forward { forward } else { backward };
    let scale = match reduction {
        L1Reduction::Mean => S::from_usize(pred.len()).unwrap().recip(),
        L1Reduction::Sum => S::one(),
    };
    let grad = pred
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let t = if use_forward {
                target[i]
            } else {
                target[target.len() - 1 - i]
            };
            let sgn = |d: S| {
                if d > S::zero() {
                    S::one()
                } else if d < S::zero() {
                    -S::one()
                } else {
                    S::zero()
                }
            };
            [sgn(p.x - t.x) * scale, sgn(p.y - t.y) * scale]
        })
        .collect();
    Ok((raw * scale, grad))
}

/// Focal-loss parameters; `alpha = 0.25`, `gamma = 2` by default.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FocalParams<S = f64> {
    pub alpha: S,
    pub gamma: S,
}

impl<S: Real> Default for FocalParams<S> {
    fn default() -> Self {
        Self {
            alpha: S::real(0.25),
            gamma: S::real(2.0),
        }
    }
}

impl<S: Real> FocalParams<S> {
    pub fn new(alpha: S, gamma: S) -> Result<Self, LossError> {
        let valid = alpha >= S::zero() && alpha <= S::one() && gamma >= S::zero();
        if !valid {
            return Err(LossError::InvalidFocalParams);
        }
        Ok(Self { alpha, gamma })
    }
}

/// Binary focal classification loss summed over the class vocabulary, with
/// a one-hot target at `target_class` (`None` marks the background
/// "no-object" target: all classes negative). Also returns the gradient
/// with respect to the raw scores.
///
/// Positive terms take `-alpha * (1 - p)^gamma * ln(p)`; negative terms
/// `-p^gamma * ln(1 - p)`. With `gamma = 0`, `alpha = 1` this reduces
/// exactly to summed binary cross-entropy.
pub fn focal_classification_loss<S: Real>(
    scores: &ClassScores<S>,
    target_class: Option<usize>,
    params: FocalParams<S>,
) -> Result<(S, Vec<S>), LossError> {
    if let Some(idx) = target_class {
        if idx >= scores.len() {
            return Err(LossError::InvalidClassIndex {
                index: idx,
                classes: scores.len(),
            });
        }
    }
    let FocalParams { alpha, gamma } = params;
    let one = S::one();
    let mut loss = S::zero();
    let mut grad = Vec::with_capacity(scores.len());
    for (c, &s) in scores.scores().iter().enumerate() {
        let p = s.sigmoid();
        let log_p = -(-s).softplus();
        let log_1p = -s.softplus();
        if target_class == Some(c) {
            let w = (one - p).powf(gamma);
            loss += -alpha * w * log_p;
            // d/ds of -alpha * (1-p)^gamma * ln(p), via dp/ds = p(1-p).
            let mut g = -alpha * w * (one - p);
            if gamma > S::zero() {
                g += alpha * gamma * w * p * log_p;
            }
            grad.push(g);
        } else {
            let w = p.powf(gamma);
            loss += -w * log_1p;
            let mut g = w * p;
            if gamma > S::zero() {
                g += -gamma * w * (one - p) * log_1p;
            }
            grad.push(g);
        }
    }
    Ok((loss, grad))
}

/// Parameters of the pairwise matching cost.
#[derive(Clone, Copy, Debug)]
pub struct MatchParams<'a, S = f64> {
    pub weights: LossWeights<S>,
    pub grid: &'a GridSpec<S>,
    pub tau: Softness<S>,
    /// Large finite cost assigned to geometry-kind mismatches, forbidding
    /// the match without poisoning the solver.
    pub mismatch_cost: S,
    pub l1_reduction: L1Reduction,
}

impl<'a, S: Real> MatchParams<'a, S> {
    pub fn new(grid: &'a GridSpec<S>, tau: Softness<S>) -> Self {
        Self {
            weights: LossWeights::matching_default(),
            grid,
            tau,
            mismatch_cost: S::real(1.0e6),
            l1_reduction: L1Reduction::Mean,
        }
    }
}

fn sampled_target<S: Real>(gt: &ElementGeometry<S>, n: usize) -> Vec<Point2<S>> {
    gt.sample_points(n)
}

/// Matching cost between one prediction and one ground truth:
/// `lambda1 * dice(render(pred), render(gt)) + lambda2 * (1 - p_gt_class)
/// + lambda3 * L1(pred, gt resampled to pred's length)`. Rendering follows
/// each element's geometry kind. Kind mismatches yield `mismatch_cost`.
pub fn matching_cost<S: Real>(
    pred: &MapElement<S>,
    pred_scores: &ClassScores<S>,
    gt: &MapElement<S>,
    params: &MatchParams<'_, S>,
) -> Result<S, LossError> {
    if pred.kind() != gt.kind() {
        return Ok(params.mismatch_cost);
    }
    let prob = pred_scores
        .probability(gt.class_id)
        .ok_or(LossError::InvalidClassIndex {
            index: gt.class_id,
            classes: pred_scores.len(),
        })?;
    let pred_mask = render_element_soft(&pred.geometry, params.grid, params.tau);
    let gt_mask = render_element_soft(&gt.geometry, params.grid, params.tau);
    let (dice, _) = dice_loss(&pred_mask, &gt_mask)?;
    let target = sampled_target(&gt.geometry, pred.geometry.point_count());
    let l1 = l1_regression_loss(pred.geometry.points(), &target, params.l1_reduction)?;
    let w = params.weights;
    Ok(w.lambda1 * dice + w.lambda2 * (S::one() - prob) + w.lambda3 * l1)
}

/// Full M x N matching-cost matrix for a scene. Elements are rendered once
/// each (in parallel) and reused across pairs; the pair loop parallelizes
/// with an ordered collect, so the matrix is deterministic.
pub fn matching_cost_matrix<S: Real>(
    preds: &[(MapElement<S>, ClassScores<S>)],
    gts: &[MapElement<S>],
    params: &MatchParams<'_, S>,
) -> Result<CostMatrix<S>, LossError> {
    use rayon::prelude::*;

    let pred_masks: Vec<SoftMask<S>> = preds
        .par_iter()
        .map(|(p, _)| render_element_soft(&p.geometry, params.grid, params.tau))
        .collect();
    let gt_masks: Vec<SoftMask<S>> = gts
        .par_iter()
        .map(|g| render_element_soft(&g.geometry, params.grid, params.tau))
        .collect();

    if preds.is_empty() || gts.is_empty() {
        return CostMatrix::new(preds.len(), gts.len(), Vec::new());
    }
    let w = params.weights;
    let data: Vec<S> = (0..preds.len() * gts.len())
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / gts.len(), flat % gts.len());
            let (pred, scores) = &preds[i];
            let gt = &gts[j];
            if pred.kind() != gt.kind() {
                return Ok(params.mismatch_cost);
            }
            let prob = scores
                .probability(gt.class_id)
                .ok_or(LossError::InvalidClassIndex {
                    index: gt.class_id,
                    classes: scores.len(),
                })?;
            let (dice, _) = dice_loss(&pred_masks[i], &gt_masks[j])?;
            let target = sampled_target(&gt.geometry, pred.geometry.point_count());
            let l1 = l1_regression_loss(pred.geometry.points(), &target, params.l1_reduction)?;
            Ok(w.lambda1 * dice + w.lambda2 * (S::one() - prob) + w.lambda3 * l1)
        })
        .collect::<Result<_, LossError>>()?;
    CostMatrix::new(preds.len(), gts.len(), data)
}

/// A prediction: element geometry plus raw class scores.
#[derive(Clone, Debug)]
pub struct Prediction<S = f64> {
    pub element: MapElement<S>,
    pub scores: ClassScores<S>,
}

/// Parameters of the final per-scene training loss.
#[derive(Clone, Copy, Debug)]
pub struct SceneLossParams<'a, S = f64> {
    pub weights: LossWeights<S>,
    pub grid: &'a GridSpec<S>,
    pub tau: Softness<S>,
    pub focal: FocalParams<S>,
    pub direction_form: DirectionForm,
    pub l1_reduction: L1Reduction,
}

impl<'a, S: Real> SceneLossParams<'a, S> {
    pub fn new(grid: &'a GridSpec<S>, tau: Softness<S>) -> Self {
        Self {
            weights: LossWeights::final_default(),
            grid,
            tau,
            focal: FocalParams::default(),
            direction_form: DirectionForm::SmoothPenalty,
            l1_reduction: L1Reduction::Mean,
        }
    }
}

/// The scalar scene loss plus gradients for every prediction's control
/// points (pixel units) and class scores.
#[derive(Clone, Debug)]
pub struct SceneLoss<S = f64> {
    pub total: S,
    pub point_grads: Vec<Vec<[S; 2]>>,
    pub score_grads: Vec<Vec<S>>,
}

/// Final loss over a matched scene: for each assigned pair,
/// `lambda1 * L_render + lambda2 * L_cls + lambda3 * L_dir +
/// lambda4 * L_reg`; unmatched predictions incur only the classification
/// term against the background target. Point gradients flow through the
/// rasterizer backward passes (dice term), the direction term, and the
/// regression term; score gradients flow through the focal term.
pub fn total_loss<S: Real>(
    preds: &[Prediction<S>],
    gts: &[MapElement<S>],
    assignment: &Assignment,
    params: &SceneLossParams<'_, S>,
) -> Result<SceneLoss<S>, LossError> {
    for &(pi, gi) in assignment.pairs() {
        if pi >= preds.len() || gi >= gts.len() {
            return Err(LossError::InvalidAssignment {
                reason: format!(
                    "pair ({pi}, {gi}) out of range for {}x{}",
                    preds.len(),
                    gts.len()
                ),
            });
        }
    }

    let w = params.weights;
    let (dx, dy) = (params.grid.dx(), params.grid.dy());
    let mut total = S::zero();
    let mut point_grads: Vec<Vec<[S; 2]>> = preds
        .iter()
        .map(|p| vec![[S::zero(); 2]; p.element.geometry.point_count()])
        .collect();
    let mut score_grads: Vec<Vec<S>> = preds
        .iter()
        .map(|p| vec![S::zero(); p.scores.len()])
        .collect();

    let mut matched = vec![false; preds.len()];
    for &(pi, gi) in assignment.pairs() {
        matched[pi] = true;
        let pred = &preds[pi];
        let gt = &gts[gi];

        // Rendering term through the differentiable rasterizer.
        let pred_mask = render_element_soft(&pred.element.geometry, params.grid, params.tau);
        let gt_mask = render_element_soft(&gt.geometry, params.grid, params.tau);
        let (dice, dice_grad) = dice_loss(&pred_mask, &gt_mask)?;
        total += w.lambda1 * dice;
        if w.lambda1 > S::zero() {
            let upstream: Vec<S> = dice_grad.iter().map(|g| *g * w.lambda1).collect();
            let raster_grad: RasterGradient<S> =
                backward_element_soft(&pred.element.geometry, params.grid, params.tau, &upstream)?;
            for (acc, g) in point_grads[pi].iter_mut().zip(raster_grad.grads()) {
                acc[0] += g[0];
                acc[1] += g[1];
            }
        }

        // Classification term.
        let (cls, cls_grad) =
            focal_classification_loss(&pred.scores, Some(gt.class_id), params.focal)?;
        total += w.lambda2 * cls;
        for (acc, g) in score_grads[pi].iter_mut().zip(cls_grad) {
            *acc += w.lambda2 * g;
        }

        // Direction term (world units, chain-ruled into pixel units).
        // Applies to line-shaped predictions only: polygon corners are real
        // structure, not unnecessary direction changes.
        if pred.element.kind() == crate::element::ElementKind::Line {
            let (dir, dir_grad) = direction_regularization_points(
                pred.element.geometry.points(),
                params.direction_form,
            );
            total += w.lambda3 * dir;
            for (acc, g) in point_grads[pi].iter_mut().zip(dir_grad) {
                acc[0] += w.lambda3 * g[0] * dx;
                acc[1] += w.lambda3 * g[1] * dy;
            }
        }

        // Regression term.
        let target = sampled_target(&gt.geometry, pred.element.geometry.point_count());
        let (l1, l1_grad) =
            l1_regression_with_grad(pred.element.geometry.points(), &target, params.l1_reduction)?;
        total += w.lambda4 * l1;
        for (acc, g) in point_grads[pi].iter_mut().zip(l1_grad) {
            acc[0] += w.lambda4 * g[0] * dx;
            acc[1] += w.lambda4 * g[1] * dy;
        }
    }

    for (pi, pred) in preds.iter().enumerate() {
        if matched[pi] {
            continue;
        }
        let (cls, cls_grad) = focal_classification_loss(&pred.scores, None, params.focal)?;
        total += w.lambda2 * cls;
        for (acc, g) in score_grads[pi].iter_mut().zip(cls_grad) {
            *acc += w.lambda2 * g;
        }
    }

    Ok(SceneLoss {
        total,
        point_grads,
        score_grads,
    })
}

#[cfg(test)]
mod tests;
