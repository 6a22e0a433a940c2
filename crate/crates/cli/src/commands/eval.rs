//! `eval raster` / `eval chamfer`: score prediction files against
//! ground-truth files and emit the AP report plus PR-curve CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use maprast::metrics::{evaluate_chamfer, evaluate_raster, MetricKind, Scene};

use crate::config::ToolConfig;
use crate::error::CliError;
use crate::scene::{load_scene, ConfidenceMode};

/// Pairs prediction and ground-truth files by `scene_id`; the two sets
/// must agree exactly. Scenes are processed in `scene_id` order so the
/// report does not depend on argument order.
fn assemble_scenes(
    preds: &[PathBuf],
    gts: &[PathBuf],
    cfg: &ToolConfig,
) -> Result<Vec<Scene<f64>>, CliError> {
    let vocab = cfg.vocabulary()?;
    let mut pred_scenes = BTreeMap::new();
    for path in preds {
        let scene = load_scene(path, &vocab, ConfidenceMode::Required)?;
        if pred_scenes.insert(scene.id.clone(), scene).is_some() {
            return Err(CliError::validation(format!(
                "{}: duplicate prediction scene id",
                path.display()
            )));
        }
    }
    let mut gt_scenes = BTreeMap::new();
    for path in gts {
        let scene = load_scene(path, &vocab, ConfidenceMode::Forbidden)?;
        if gt_scenes.insert(scene.id.clone(), scene).is_some() {
            return Err(CliError::validation(format!(
                "{}: duplicate ground-truth scene id",
                path.display()
            )));
        }
    }

    let pred_ids: Vec<&String> = pred_scenes.keys().collect();
    let gt_ids: Vec<&String> = gt_scenes.keys().collect();
    if pred_ids != gt_ids {
        return Err(CliError::validation(format!(
            "prediction and ground-truth scene sets differ: {pred_ids:?} vs {gt_ids:?}"
        )));
    }

    let scenes = gt_scenes
        .into_iter()
        .map(|(id, gt)| {
            let pred = pred_scenes.remove(&id).unwrap();
            let mut scene = pred.into_eval_scene();
            scene.ground_truth = gt.into_eval_scene().ground_truth;
            scene
        })
        .collect();
    Ok(scenes)
}

/// Derives the default PR-CSV path from the report path.
pub fn default_pr_csv(report: &Path) -> PathBuf {
    let mut name = report.file_stem().unwrap_or_default().to_os_string();
    name.push(".pr.csv");
    report.with_file_name(name)
}

pub fn run(
    metric: MetricKind,
    preds: &[PathBuf],
    gts: &[PathBuf],
    cfg: &ToolConfig,
    out: &Path,
    pr_csv: Option<&Path>,
) -> Result<(), CliError> {
    let scenes = assemble_scenes(preds, gts, cfg)?;
    let vocab = cfg.vocabulary()?;
    let eval_cfg = cfg.eval_config()?;
    let report = match metric {
        MetricKind::Raster => evaluate_raster(&scenes, &vocab, &eval_cfg),
        MetricKind::Chamfer => evaluate_chamfer(&scenes, &vocab, &eval_cfg),
    }
    .map_err(|e| CliError::validation(e.to_string()))?;

    crate::report::write_json(out, &report)?;
    let csv_path = pr_csv
        .map(PathBuf::from)
        .unwrap_or_else(|| default_pr_csv(out));
    crate::report::write_pr_csv(&csv_path, &report)?;

    println!(
        "{} evaluation over {} scene(s): mean AP {:.6}",
        match metric {
            MetricKind::Raster => "raster",
            MetricKind::Chamfer => "chamfer",
        },
        scenes.len(),
        report.mean_ap
    );
    for class in &report.per_class {
        println!(
            "  {:<16} AP {:.6}  (gt {}, detections {})",
            class.class, class.ap, class.num_gt, class.num_detections
        );
    }
    Ok(())
}
