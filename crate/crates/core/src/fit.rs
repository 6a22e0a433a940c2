//! Fits a vectorized element's control points to a target mask using only
//! rasterization-based gradients: render softly, score with dice (plus
//! direction regularization), backpropagate through the rasterizer, update
//! the points. A desk-scale stand-in for training a prediction network.
//!
//! Runs are deterministic for a given configuration: there is no internal
//! randomness, and each iteration is a fixed-order computation.

use thiserror::Error;

use crate::element::MapElement;
use crate::geometry::{GeometryError, Point2};
use crate::loss::{dice_loss, direction_regularization_points, DirectionForm, LossError};
use crate::raster::{backward_element_soft, render_element_soft, BinaryMask, SoftMask, Softness};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FitError<S: Real> {
    #[error("fit configuration invalid: {reason}")]
    InvalidConfig { reason: String },
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss {
        iteration: usize,
        trace: FitTrace<S>,
    },
    #[error("element degenerated at iteration {iteration}: {source}")]
    DegenerateElement {
        iteration: usize,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
}

/// Point-update rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer<S = f64> {
    /// Plain gradient descent: `p -= step * g`.
    GradientDescent,
    /// Adaptive-moment estimation with bias correction.
    Adam { beta1: S, beta2: S, epsilon: S },
}

impl<S: Real> Optimizer<S> {
    pub fn adam_default() -> Self {
        Optimizer::Adam {
            beta1: S::real(0.9),
            beta2: S::real(0.999),
            epsilon: S::real(1e-8),
        }
    }
}

/// Fit configuration. The step size is in pixel units, matching the
/// rasterizer's gradient convention.
#[derive(Clone, Copy, Debug)]
pub struct FitConfig<S = f64> {
    pub iterations: usize,
    pub step_px: S,
    pub optimizer: Optimizer<S>,
    pub tau: Softness<S>,
    pub dice_weight: S,
    pub direction_weight: S,
    pub direction_form: DirectionForm,
    /// Stop when the best loss improved by less than this over
    /// `tolerance_window` iterations (the best-so-far measure is immune to
    /// step-size oscillation around a minimum).
    pub tolerance: S,
    pub tolerance_window: usize,
    /// Record a point-set snapshot every this many iterations.
    pub snapshot_every: Option<usize>,
}

impl<S: Real> FitConfig<S> {
    pub fn new(tau: Softness<S>) -> Self {
        Self {
            iterations: 1000,
            step_px: S::real(0.1),
            optimizer: Optimizer::adam_default(),
            tau,
            dice_weight: S::one(),
            direction_weight: S::real(0.005),
            direction_form: DirectionForm::SmoothPenalty,
            tolerance: S::real(1e-6),
            tolerance_window: 20,
            snapshot_every: None,
        }
    }

    fn validate(&self) -> Result<(), FitError<S>> {
        if self.iterations == 0 {
            return Err(FitError::InvalidConfig {
                reason: "iterations must be >= 1".into(),
            });
        }
        let step_ok = self.step_px > S::zero() && self.step_px.is_finite();
        if !step_ok {
            return Err(FitError::InvalidConfig {
                reason: "step_px must be > 0".into(),
            });
        }
        if self.tolerance_window == 0 {
            return Err(FitError::InvalidConfig {
                reason: "tolerance_window must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Target mask to fit against: a soft render (default, smoother gradients)
/// or a hard binary mask.
#[derive(Clone, Debug)]
pub enum FitTarget<S = f64> {
    Soft(SoftMask<S>),
    Hard(BinaryMask<S>),
}

impl<S: Real> FitTarget<S> {
    fn as_soft(&self) -> SoftMask<S> {
        match self {
            FitTarget::Soft(m) => m.clone(),
            FitTarget::Hard(m) => m.to_soft(),
        }
    }
}

/// Per-iteration loss values plus optional point-set snapshots.
#[derive(Clone, Debug)]
pub struct FitTrace<S = f64> {
    pub losses: Vec<S>,
    pub snapshots: Vec<(usize, Vec<Point2<S>>)>,
}

impl<S> Default for FitTrace<S> {
    fn default() -> Self {
        Self {
            losses: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

/// Result of a fit run: the best-loss iterate and its trace.
#[derive(Clone, Debug)]
pub struct FitOutcome<S = f64> {
    pub element: MapElement<S>,
    pub trace: FitTrace<S>,
    pub best_loss: S,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Optimizes `init`'s control points so its soft render matches `target`.
/// The point count is fixed throughout; the best-loss iterate is returned.
pub fn fit_element<S: Real>(
    target: &FitTarget<S>,
    init: &MapElement<S>,
    cfg: &FitConfig<S>,
) -> Result<FitOutcome<S>, FitError<S>> {
    cfg.validate()?;
    let target_soft = target.as_soft();
    let grid = *target_soft.grid();
    let (dx, dy) = (grid.dx(), grid.dy());

    let mut points = init.geometry.points().to_vec();
    let n = points.len();
    let mut trace = FitTrace::default();
    let mut best_loss = S::infinity();
    let mut best_points = points.clone();
    let mut best_history: Vec<S> = Vec::new();
    let mut converged = false;

    // Adam state, indexed [point][axis].
    let mut m = vec![[S::zero(); 2]; n];
    let mut v = vec![[S::zero(); 2]; n];

    let mut iterations_run = 0;
    for iter in 0..cfg.iterations {
        iterations_run = iter + 1;
        let geometry = init
            .geometry
            .with_points(points.clone())
            .map_err(|source| FitError::DegenerateElement {
                iteration: iter,
                source,
            })?;

        let mask = render_element_soft(&geometry, &grid, cfg.tau);
        let (dice, dice_grad) = dice_loss(&mask, &target_soft)?;
        // Direction regularization applies to line-shaped elements only.
        let (dir, dir_grad) = if geometry.kind() == crate::element::ElementKind::Line {
            direction_regularization_points(&points, cfg.direction_form)
        } else {
            (S::zero(), vec![[S::zero(); 2]; n])
        };
        let loss = cfg.dice_weight * dice + cfg.direction_weight * dir;

        if !loss.is_finite() {
            return Err(FitError::NonFiniteLoss {
                iteration: iter,
                trace,
            });
        }
        trace.losses.push(loss);
        if let Some(every) = cfg.snapshot_every {
            if iter % every == 0 {
                trace.snapshots.push((iter, points.clone()));
            }
        }
        if loss < best_loss {
            best_loss = loss;
            best_points = points.clone();
        }
        best_history.push(best_loss);

        // Convergence: best-loss improvement over the window below
        // tolerance.
        let k = best_history.len();
        if k > cfg.tolerance_window {
            let delta = best_history[k - 1 - cfg.tolerance_window] - best_loss;
            if delta < cfg.tolerance {
                converged = true;
                break;
            }
        }

        // Gradient in pixel units: rasterizer backward for the dice term,
        // chain rule through the pitch for the direction term.
        let upstream: Vec<S> = dice_grad.iter().map(|g| *g * cfg.dice_weight).collect();
        let raster_grad = backward_element_soft(&geometry, &grid, cfg.tau, &upstream)?;
        let mut grad: Vec<[S; 2]> = raster_grad.grads().to_vec();
        for (g, d) in grad.iter_mut().zip(&dir_grad) {
            g[0] += cfg.direction_weight * d[0] * dx;
            g[1] += cfg.direction_weight * d[1] * dy;
        }

        // Update points; steps are in pixel units, so world-space motion is
        // scaled by the pitch.
        match cfg.optimizer {
            Optimizer::GradientDescent => {
                for (pt, g) in points.iter_mut().zip(&grad) {
                    pt.x -= cfg.step_px * g[0] * dx;
                    pt.y -= cfg.step_px * g[1] * dy;
                }
            }
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let t = S::from_usize(iter + 1).unwrap();
                let bias1 = S::one() - beta1.powf(t);
                let bias2 = S::one() - beta2.powf(t);
                for ((pt, g), (mi, vi)) in points
                    .iter_mut()
                    .zip(&grad)
                    .zip(m.iter_mut().zip(v.iter_mut()))
                {
                    for axis in 0..2 {
                        mi[axis] = beta1 * mi[axis] + (S::one() - beta1) * g[axis];
                        vi[axis] = beta2 * vi[axis] + (S::one() - beta2) * g[axis] * g[axis];
                        let m_hat = mi[axis] / bias1;
                        let v_hat = vi[axis] / bias2;
                        let update = cfg.step_px * m_hat / (v_hat.sqrt() + epsilon);
                        if axis == 0 {
                            pt.x -= update * dx;
                        } else {
                            pt.y -= update * dy;
                        }
                    }
                }
            }
        }
    }

    let element = MapElement::new(
        init.class_id,
        init.geometry
            .with_points(best_points)
            .map_err(|source| FitError::DegenerateElement {
                iteration: iterations_run,
                source,
            })?,
    );
    Ok(FitOutcome {
        element,
        trace,
        best_loss,
        iterations_run,
        converged,
    })
}
