//! `textmap detect`: run the baseline detector over text-maps.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::detector::{detect_regions, DetectionBox, DetectorParams};
use textmap_core::lexicon::Category;
use textmap_core::raster::read_raster3_bin;

use crate::commands::{to_pretty_json, DetectionRecord};
use crate::manifest::{self, StageOutcome};
use crate::util::{list_files, read_file, worker_pool, write_atomic, CliError, CliResult};

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Directory of text-map binaries (*.bin); file stems are doc_ids.
    #[arg(long)]
    pub maps: PathBuf,
    /// Category the maps were rendered for.
    #[arg(long)]
    pub category: String,
    /// Detections file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Foreground threshold on the per-pixel channel max (0-255).
    #[arg(long, default_value_t = 128)]
    pub binarize_threshold: u8,
    /// Radius of the square closing element in pixels.
    #[arg(long, default_value_t = 8)]
    pub close_radius: u32,
    /// Minimum bounding-box area in px^2.
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_area: u64,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &DetectArgs) -> CliResult<StageOutcome> {
    let category: Category = args
        .category
        .parse()
        .map_err(|e: String| CliError::usage(e))?;
    let params = DetectorParams {
        binarize_threshold: args.binarize_threshold,
        close_radius: args.close_radius,
        min_area: args.min_area,
    };

    let maps = list_files(&args.maps, "bin")?;
    let pool = worker_pool(args.jobs)?;
    let per_doc: Vec<CliResult<Vec<DetectionRecord>>> = pool.install(|| {
        maps.par_iter()
            .map(|(doc_id, path)| {
                let map = read_raster3_bin(&read_file(path)?)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                let detections: Vec<DetectionBox> = detect_regions(&map, category, &params);
                Ok(detections
                    .into_iter()
                    .map(|d| DetectionRecord {
                        doc_id: doc_id.clone(),
                        category: d.category,
                        bbox: d.bbox,
                        confidence: d.confidence,
                    })
                    .collect())
            })
            .collect()
    });

    let mut records = Vec::new();
    for result in per_doc {
        records.extend(result?);
    }
    write_atomic(&args.out, &to_pretty_json(&records))?;

    Ok(StageOutcome {
        subcommand: "detect",
        parameters: manifest::params([
            ("maps", json!(args.maps.display().to_string())),
            ("category", json!(args.category)),
            ("out", json!(args.out.display().to_string())),
            ("binarize_threshold", json!(args.binarize_threshold)),
            ("close_radius", json!(args.close_radius)),
            ("min_area", json!(args.min_area)),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: vec![args.maps.display().to_string()],
        outputs: vec![args.out.display().to_string()],
        documents: maps.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, false)),
    })
}
