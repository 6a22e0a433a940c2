//! `fit`: optimize an element's control points against a target mask and
//! write the fitted element, the loss trace, and optional mask frames.

use std::path::Path;

use maprast::element::ElementGeometry;
use maprast::fit::{fit_element, FitError, FitTarget};
use maprast::raster::{render_element_soft, render_line_hard_with_kernel, render_polygon_hard};

use crate::config::ToolConfig;
use crate::error::CliError;
use crate::report::format_float;
use crate::scene::{
    element_to_doc, load_scene, write_scene, ConfidenceMode, LoadedElement, SceneDoc,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetMode {
    Soft,
    Hard,
}

fn single_element(path: &Path, cfg: &ToolConfig) -> Result<(String, LoadedElement), CliError> {
    let vocab = cfg.vocabulary()?;
    let scene = load_scene(path, &vocab, ConfidenceMode::Optional)?;
    if scene.elements.len() != 1 {
        return Err(CliError::validation(format!(
            "{}: fit expects exactly one element per file, found {}",
            path.display(),
            scene.elements.len()
        )));
    }
    Ok((scene.id.clone(), scene.elements.into_iter().next().unwrap()))
}

pub fn run(
    target_path: &Path,
    init_path: &Path,
    cfg: &ToolConfig,
    out: &Path,
    trace_path: Option<&Path>,
    frames_dir: Option<&Path>,
    target_mode: TargetMode,
) -> Result<(), CliError> {
    let (_, target_elem) = single_element(target_path, cfg)?;
    let (init_scene_id, init_elem) = single_element(init_path, cfg)?;
    let grid = cfg.raster_grid.to_spec()?;
    let tau = cfg.softness()?;

    let target = match target_mode {
        TargetMode::Soft => FitTarget::Soft(render_element_soft(
            &target_elem.element.geometry,
            &grid,
            tau,
        )),
        TargetMode::Hard => FitTarget::Hard(match &target_elem.element.geometry {
            ElementGeometry::Line(l) => {
                render_line_hard_with_kernel(l, &grid, cfg.line_dilation_px, cfg.dilation_kernel)
            }
            ElementGeometry::Polygon(p) => render_polygon_hard(p, &grid),
        }),
    };

    let mut fit_cfg = cfg.fit_config()?;
    if frames_dir.is_none() {
        fit_cfg.snapshot_every = None;
    } else if fit_cfg.snapshot_every.is_none() {
        fit_cfg.snapshot_every = Some(50);
    }

    let outcome = fit_element(&target, &init_elem.element, &fit_cfg).map_err(|e| match e {
        FitError::InvalidConfig { .. } => CliError::validation(e.to_string()),
        other => CliError::runtime(other.to_string()),
    })?;

    let doc = SceneDoc {
        scene_id: init_scene_id,
        elements: vec![element_to_doc(
            &outcome.element,
            &init_elem.class_name,
            None,
        )],
    };
    write_scene(out, &doc)?;

    let trace_file = trace_path
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| out.with_extension("trace.csv"));
    let mut csv = String::from("iteration,loss\n");
    for (i, loss) in outcome.trace.losses.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", format_float(*loss)));
    }
    std::fs::write(&trace_file, csv)?;

    if let Some(dir) = frames_dir {
        std::fs::create_dir_all(dir)?;
        for (iter, points) in &outcome.trace.snapshots {
            let geometry = init_elem
                .element
                .geometry
                .with_points(points.clone())
                .map_err(|e| CliError::runtime(e.to_string()))?;
            let frame = render_element_soft(&geometry, &grid, tau);
            std::fs::write(dir.join(format!("frame_{iter:05}.pgm")), frame.to_pgm())?;
        }
    }

    println!(
        "fit finished after {} iteration(s): best loss {}{}",
        outcome.iterations_run,
        format_float(outcome.best_loss),
        if outcome.converged {
            " (converged)"
        } else {
            ""
        }
    );
    Ok(())
}
