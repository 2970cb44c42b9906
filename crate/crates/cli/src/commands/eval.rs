//! `textmap eval`: match detections against annotations and report
//! precision/recall/accuracy.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::detector::DetectionBox;
use textmap_core::eval::{compute_report, match_detections, CategoryCounts, EvalParams, EvalReport};
use textmap_core::lexicon::Category;

use crate::commands::{load_annotations, load_detections};
use crate::manifest::{self, StageOutcome};
use crate::util::{write_atomic, CliError, CliResult};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Detections file(s); repeatable, contents are concatenated.
    #[arg(long = "detections", required = true)]
    pub detections: Vec<PathBuf>,
    /// Directory of region annotations (*.json).
    #[arg(long)]
    pub ann: PathBuf,
    /// Minimum IoU for a match, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    /// Predictions below this confidence are ignored.
    #[arg(long, default_value_t = 0.7)]
    pub confidence_threshold: f64,
    /// Report file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> CliResult<StageOutcome> {
    let params = eval_params(args.iou_threshold, args.confidence_threshold)?;
    let annotations = load_annotations(&args.ann)?;
    if annotations.is_empty() {
        return Err(CliError::usage(format!(
            "missing annotations: no *.json files under {}",
            args.ann.display()
        )));
    }
    let records = load_detections(&args.detections)?;

    let mut by_doc: BTreeMap<&str, Vec<DetectionBox>> = BTreeMap::new();
    for r in &records {
        if !annotations.contains_key(&r.doc_id) {
            return Err(CliError::usage(format!(
                "detections reference doc_id `{}` with no annotation under {}",
                r.doc_id,
                args.ann.display()
            )));
        }
        by_doc.entry(&r.doc_id).or_default().push(DetectionBox {
            bbox: r.bbox,
            confidence: r.confidence,
            category: r.category,
        });
    }

    let empty = Vec::new();
    let docs: Vec<(&String, &Vec<_>)> = annotations.iter().collect();
    let pool = crate::util::worker_pool(args.jobs)?;
    let counts: BTreeMap<Category, CategoryCounts> = pool.install(|| {
        docs.par_iter()
            .map(|(doc_id, regions)| {
                let preds = by_doc.get(doc_id.as_str()).unwrap_or(&empty);
                match_detections(preds, regions, &params).counts
            })
            .reduce(
                || {
                    Category::ALL
                        .iter()
                        .map(|c| (*c, CategoryCounts::default()))
                        .collect()
                },
                |mut acc, per_doc| {
                    for (category, c) in per_doc {
                        acc.get_mut(&category).unwrap().add(&c);
                    }
                    acc
                },
            )
    });

    let report: EvalReport = compute_report(&counts);
    println!("{}", report.render_table());
    write_atomic(&args.out, &report.to_json())?;

    Ok(StageOutcome {
        subcommand: "eval",
        parameters: manifest::params([
            (
                "detections",
                json!(args
                    .detections
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()),
            ),
            ("ann", json!(args.ann.display().to_string())),
            ("iou_threshold", json!(args.iou_threshold)),
            ("confidence_threshold", json!(args.confidence_threshold)),
            ("out", json!(args.out.display().to_string())),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: args
            .detections
            .iter()
            .map(|p| p.display().to_string())
            .chain([args.ann.display().to_string()])
            .collect(),
        outputs: vec![args.out.display().to_string()],
        documents: annotations.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, false)),
    })
}

pub fn eval_params(iou_threshold: f64, confidence_threshold: f64) -> CliResult<EvalParams> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(CliError::usage(format!(
            "--iou-threshold must be in (0, 1], got {iou_threshold}"
        )));
    }
    if !(0.0..=1.0).contains(&confidence_threshold) {
        return Err(CliError::usage(format!(
            "--confidence-threshold must be in [0, 1], got {confidence_threshold}"
        )));
    }
    Ok(EvalParams {
        iou_threshold,
        confidence_threshold,
    })
}
