//! `rasterize`: render every element of a scene to PGM (soft) or PBM
//! (hard) files plus an index document.

use std::path::{Path, PathBuf};

use serde::Serialize;

use maprast::element::ElementGeometry;
use maprast::raster::{render_element_soft, render_line_hard_with_kernel, render_polygon_hard};

use crate::config::ToolConfig;
use crate::error::CliError;
use crate::scene::{load_scene, ConfidenceMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    Soft,
    Hard,
}

#[derive(Serialize)]
struct IndexEntry {
    index: usize,
    class: String,
    kind: maprast::element::ElementKind,
    file: String,
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
    dropped_points: usize,
}

#[derive(Serialize)]
struct IndexDoc {
    scene_id: String,
    mode: String,
    grid: crate::config::GridConfig,
    tau: f64,
    line_dilation_px: usize,
    elements: Vec<IndexEntry>,
}

pub fn run(
    input: &Path,
    cfg: &ToolConfig,
    mode: RenderMode,
    out_dir: &Path,
) -> Result<(), CliError> {
    let vocab = cfg.vocabulary()?;
    let scene = load_scene(input, &vocab, ConfidenceMode::Optional)?;
    let grid = cfg.raster_grid.to_spec()?;
    let tau = cfg.softness()?;
    std::fs::create_dir_all(out_dir)?;

    if scene.dropped_points() > 0 {
        eprintln!(
            "note: {} consecutive duplicate point(s) removed while loading {}",
            scene.dropped_points(),
            input.display()
        );
    }

    let mut entries = Vec::with_capacity(scene.elements.len());
    for (index, loaded) in scene.elements.iter().enumerate() {
        let (bytes, ext) = match mode {
            RenderMode::Soft => (
                render_element_soft(&loaded.element.geometry, &grid, tau).to_pgm(),
                "pgm",
            ),
            RenderMode::Hard => {
                let mask = match &loaded.element.geometry {
                    ElementGeometry::Line(l) => render_line_hard_with_kernel(
                        l,
                        &grid,
                        cfg.line_dilation_px,
                        cfg.dilation_kernel,
                    ),
                    ElementGeometry::Polygon(p) => render_polygon_hard(p, &grid),
                };
                (mask.to_pbm(), "pbm")
            }
        };
        let file = format!("{index:03}_{}.{ext}", loaded.class_name);
        std::fs::write(out_dir.join(&file), bytes)?;
        entries.push(IndexEntry {
            index,
            class: loaded.class_name.clone(),
            kind: loaded.element.kind(),
            file,
            points: loaded.element.geometry.point_count(),
            confidence: loaded.confidence,
            dropped_points: loaded.dropped_points,
        });
    }

    let index = IndexDoc {
        scene_id: scene.id.clone(),
        mode: match mode {
            RenderMode::Soft => "soft".into(),
            RenderMode::Hard => "hard".into(),
        },
        grid: cfg.raster_grid.clone(),
        tau: cfg.tau,
        line_dilation_px: cfg.line_dilation_px,
        elements: entries,
    };
    crate::report::write_json(&out_dir.join("index.json"), &index)?;
    println!(
        "rasterized {} element(s) from '{}' into {}",
        scene.elements.len(),
        scene.id,
        out_dir.display()
    );
    Ok(())
}

pub fn out_files(out_dir: &Path) -> PathBuf {
    out_dir.join("index.json")
}
