//! `textmap overlay`: draw match outcomes over the source images.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::detector::DetectionBox;
use textmap_core::eval::{match_detections, render_eval_overlay, OverlayOptions};
use textmap_core::raster::{read_png, write_png};

use crate::commands::{load_annotations, load_detections};
use crate::manifest::{self, StageOutcome};
use crate::util::{list_files, read_file, worker_pool, write_atomic, CliError, CliResult};

#[derive(Args, Debug)]
pub struct OverlayArgs {
    /// Directory of source images (*.png); file stems are doc_ids.
    #[arg(long)]
    pub images: PathBuf,
    /// Detections file(s); repeatable.
    #[arg(long = "detections", required = true)]
    pub detections: Vec<PathBuf>,
    /// Directory of region annotations (*.json).
    #[arg(long)]
    pub ann: PathBuf,
    /// Output directory for overlay PNGs.
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum IoU for a match, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    /// Predictions below this confidence are ignored.
    #[arg(long, default_value_t = 0.7)]
    pub confidence_threshold: f64,
    /// Skip the confidence labels next to prediction boxes.
    #[arg(long)]
    pub no_confidence: bool,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>/manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &OverlayArgs) -> CliResult<StageOutcome> {
    let params = super::eval::eval_params(args.iou_threshold, args.confidence_threshold)?;
    let annotations = load_annotations(&args.ann)?;
    if annotations.is_empty() {
        return Err(CliError::usage(format!(
            "missing annotations: no *.json files under {}",
            args.ann.display()
        )));
    }
    let records = load_detections(&args.detections)?;
    let images: BTreeMap<String, PathBuf> = list_files(&args.images, "png")?.into_iter().collect();

    let mut by_doc: BTreeMap<&str, Vec<DetectionBox>> = BTreeMap::new();
    for r in &records {
        by_doc.entry(&r.doc_id).or_default().push(DetectionBox {
            bbox: r.bbox,
            confidence: r.confidence,
            category: r.category,
        });
    }

    let options = OverlayOptions {
        show_confidence: !args.no_confidence,
    };
    let empty: Vec<DetectionBox> = Vec::new();
    let jobs: Vec<(&String, &Vec<_>)> = annotations.iter().collect();
    let pool = worker_pool(args.jobs)?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        jobs.par_iter()
            .map(|(doc_id, regions)| {
                let image_path = images.get(doc_id.as_str()).ok_or_else(|| {
                    CliError::usage(format!(
                        "no image for doc_id `{doc_id}` under {}",
                        args.images.display()
                    ))
                })?;
                let image = read_png(&read_file(image_path)?)
                    .map_err(|e| CliError::usage(format!("{}: {e}", image_path.display())))?;
                let preds = by_doc.get(doc_id.as_str()).unwrap_or(&empty);
                let outcome = match_detections(preds, regions, &params);
                let rendered = render_eval_overlay(&image, &outcome.boxes, &options);
                let bytes = write_png(&rendered)
                    .map_err(|e| CliError::Internal(anyhow::anyhow!("encoding png: {e}")))?;
                write_atomic(&args.out.join(format!("{doc_id}.png")), &bytes)
            })
            .collect()
    });
    results.into_iter().collect::<CliResult<Vec<()>>>()?;

    Ok(StageOutcome {
        subcommand: "overlay",
        parameters: manifest::params([
            ("images", json!(args.images.display().to_string())),
            (
                "detections",
                json!(args
                    .detections
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()),
            ),
            ("ann", json!(args.ann.display().to_string())),
            ("out", json!(args.out.display().to_string())),
            ("iou_threshold", json!(args.iou_threshold)),
            ("confidence_threshold", json!(args.confidence_threshold)),
            ("no_confidence", json!(args.no_confidence)),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: args
            .detections
            .iter()
            .map(|p| p.display().to_string())
            .chain([args.ann.display().to_string(), args.images.display().to_string()])
            .collect(),
        outputs: vec![args.out.display().to_string()],
        documents: annotations.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, true)),
    })
}
