//! Tool configuration: one JSON document whose keys mirror the struct
//! one-to-one. Every field has a default, so partial configs (or none at
//! all) are valid. Environment variables are never consulted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use maprast::element::{ClassSpec, ElementKind, Vocabulary};
use maprast::fit::{FitConfig, Optimizer};
use maprast::geometry::GridSpec;
use maprast::loss::{DirectionForm, FocalParams, L1Reduction, LossWeights, MatchParams};
use maprast::metrics::EvalConfig;
use maprast::raster::{DilationKernel, Softness};

use crate::error::CliError;

/// Rounds to 9 significant digits; the fixed float formatting used by all
/// emitted files.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("scientific round-trip")
}

/// Grid extent in meters plus raster dimensions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: usize,
    pub height: usize,
}

impl GridConfig {
    pub fn to_spec(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(
            self.x_min,
            self.x_max,
            self.y_min,
            self.y_max,
            self.width,
            self.height,
        )
        .map_err(|e| CliError::validation(format!("grid: {e}")))
    }
}

/// Threshold lists accept either an explicit array or the compact
/// `"start:stop:step"` notation (inclusive of both endpoints).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Range(String),
    List(Vec<f64>),
}

impl ThresholdSpec {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        match self {
            ThresholdSpec::List(v) => Ok(v.clone()),
            ThresholdSpec::Range(s) => parse_threshold_range(s),
        }
    }
}

/// Parses `start:stop:step` into the inclusive list of thresholds, each
/// rounded to 9 significant digits (so `0.25:0.50:0.05` enumerates exactly
/// {0.25, 0.30, 0.35, 0.40, 0.45, 0.50}).
pub fn parse_threshold_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "threshold range '{spec}' must be start:stop:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| {
                CliError::validation(format!("threshold range '{spec}': '{p}' is not a number"))
            })
        })
        .collect::<Result<_, _>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || !step.is_finite() || stop < start {
        return Err(CliError::validation(format!(
            "threshold range '{spec}' requires start <= stop and step > 0"
        )));
    }
    let count = ((stop - start) / step).round() as usize + 1;
    let values: Vec<f64> = (0..count)
        .map(|i| round_sig9(start + step * i as f64))
        .collect();
    if (values.last().unwrap() - stop).abs() > 1e-9 {
        return Err(CliError::validation(format!(
            "threshold range '{spec}' does not land on its endpoint"
        )));
    }
    Ok(values)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl WeightsConfig {
    fn to_weights(&self) -> Result<LossWeights<f64>, CliError> {
        LossWeights::new(self.lambda1, self.lambda2, self.lambda3, self.lambda4)
            .map_err(|e| CliError::validation(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    GradientDescent,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub iterations: usize,
    pub step_px: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dice_weight: f64,
    pub direction_weight: f64,
    pub tolerance: f64,
    pub tolerance_window: usize,
    /// Emit a PGM frame every this many iterations (`fit --frames`).
    pub frame_every: Option<usize>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            iterations: 1000,
            step_px: 0.1,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dice_weight: 1.0,
            direction_weight: 0.005,
            tolerance: 1e-6,
            tolerance_window: 20,
            frame_every: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    /// Grid for the evaluation metrics (0.125 m per pixel by default).
    pub eval_grid: GridConfig,
    /// Grid for training-side rasterization (`rasterize`, `fit`).
    pub raster_grid: GridConfig,
    /// Softness, in pixel units relative to the active grid.
    pub tau: f64,
    pub line_dilation_px: usize,
    pub dilation_kernel: DilationKernel,
    pub line_iou_thresholds: ThresholdSpec,
    pub polygon_iou_thresholds: ThresholdSpec,
    pub chamfer_thresholds_m: ThresholdSpec,
    pub chamfer_resample_points: Option<usize>,
    pub per_scene_ap: bool,
    pub matching_weights: WeightsConfig,
    pub final_weights: WeightsConfig,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub mismatch_cost: f64,
    pub l1_reduction: L1Reduction,
    pub direction_form: DirectionForm,
    pub fit: FitSection,
    /// Worker threads; 0 selects the machine's logical CPU count.
    pub workers: usize,
    pub seed: u64,
    pub vocabulary: Vec<ClassSpec>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            eval_grid: GridConfig {
                x_min: -15.0,
                x_max: 15.0,
                y_min: -30.0,
                y_max: 30.0,
                width: 240,
                height: 480,
            },
            raster_grid: GridConfig {
                x_min: -15.0,
                x_max: 15.0,
                y_min: -30.0,
                y_max: 30.0,
                width: 128,
                height: 256,
            },
            tau: 2.0,
            line_dilation_px: 2,
            dilation_kernel: DilationKernel::Disk,
            line_iou_thresholds: ThresholdSpec::List(vec![0.25, 0.30, 0.35, 0.40, 0.45, 0.50]),
            polygon_iou_thresholds: ThresholdSpec::List(vec![0.50, 0.55, 0.60, 0.65, 0.70, 0.75]),
            chamfer_thresholds_m: ThresholdSpec::List(vec![0.5, 1.0, 1.5]),
            chamfer_resample_points: Some(100),
            per_scene_ap: false,
            matching_weights: WeightsConfig {
                lambda1: 2.0,
                lambda2: 2.0,
                lambda3: 0.05,
                lambda4: 0.0,
            },
            final_weights: WeightsConfig {
                lambda1: 2.0,
                lambda2: 2.0,
                lambda3: 0.005,
                lambda4: 0.05,
            },
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            mismatch_cost: 1.0e6,
            l1_reduction: L1Reduction::Mean,
            direction_form: DirectionForm::SmoothPenalty,
            fit: FitSection::default(),
            workers: 0,
            seed: 0,
            vocabulary: vec![
                ClassSpec {
                    name: "divider".into(),
                    kind: ElementKind::Line,
                },
                ClassSpec {
                    name: "boundary".into(),
                    kind: ElementKind::Line,
                },
                ClassSpec {
                    name: "ped_crossing".into(),
                    kind: ElementKind::Polygon,
                },
            ],
        }
    }
}

impl ToolConfig {
    /// Loads from JSON, or yields the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn vocabulary(&self) -> Result<Vocabulary, CliError> {
        Vocabulary::new(self.vocabulary.clone())
            .map_err(|e| CliError::validation(format!("vocabulary: {e}")))
    }

    pub fn softness(&self) -> Result<Softness, CliError> {
        Softness::new(self.tau).map_err(|e| CliError::validation(e.to_string()))
    }

    pub fn eval_config(&self) -> Result<EvalConfig<f64>, CliError> {
        let cfg = EvalConfig {
            grid: self.eval_grid.to_spec()?,
            line_dilation_px: self.line_dilation_px,
            dilation_kernel: self.dilation_kernel,
            line_iou_thresholds: self.line_iou_thresholds.resolve()?,
            polygon_iou_thresholds: self.polygon_iou_thresholds.resolve()?,
            chamfer_thresholds_m: self.chamfer_thresholds_m.resolve()?,
            chamfer_resample_points: self.chamfer_resample_points,
            per_scene_ap: self.per_scene_ap,
        };
        cfg.validate()
            .map_err(|e| CliError::validation(e.to_string()))?;
        Ok(cfg)
    }

    pub fn fit_config(&self) -> Result<FitConfig<f64>, CliError> {
        let f = &self.fit;
        Ok(FitConfig {
            iterations: f.iterations,
            step_px: f.step_px,
            optimizer: match f.optimizer {
                OptimizerKind::Adam => Optimizer::Adam {
                    beta1: f.beta1,
                    beta2: f.beta2,
                    epsilon: f.epsilon,
                },
                OptimizerKind::GradientDescent => Optimizer::GradientDescent,
            },
            tau: self.softness()?,
            dice_weight: f.dice_weight,
            direction_weight: f.direction_weight,
            direction_form: self.direction_form,
            tolerance: f.tolerance,
            tolerance_window: f.tolerance_window,
            snapshot_every: f.frame_every,
        })
    }

    pub fn match_params<'a>(&self, grid: &'a GridSpec) -> Result<MatchParams<'a, f64>, CliError> {
        Ok(MatchParams {
            weights: self.matching_weights.to_weights()?,
            grid,
            tau: self.softness()?,
            mismatch_cost: self.mismatch_cost,
            l1_reduction: self.l1_reduction,
        })
    }

    pub fn focal_params(&self) -> Result<FocalParams<f64>, CliError> {
        FocalParams::new(self.focal_alpha, self.focal_gamma)
            .map_err(|e| CliError::validation(e.to_string()))
    }
}
