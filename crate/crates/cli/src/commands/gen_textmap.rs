//! `textmap gen-textmap`: render per-document text-maps for one category.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::lexicon::{load_stats, Category, LexiconStats};
use textmap_core::raster::{render_textmap_with, write_png, write_raster3_bin};
use textmap_core::scoring::{ScoreConfig, TriggerConfig};

use crate::manifest::{self, StageOutcome};
use crate::util::{load_ocr_dir, read_file, worker_pool, CliError, CliResult, OcrFormat};
use crate::util::write_atomic;

#[derive(Args, Debug)]
pub struct GenTextmapArgs {
    /// Directory of OCR documents (*.json).
    #[arg(long)]
    pub ocr: PathBuf,
    /// Stats file from `build-stats`.
    #[arg(long)]
    pub stats: PathBuf,
    /// Target category.
    #[arg(long)]
    pub category: String,
    /// Output directory for <doc_id>.bin maps.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write <doc_id>.png visualizations.
    #[arg(long)]
    pub png: bool,
    /// Words below this OCR confidence score zero on all channels.
    #[arg(long, default_value_t = 0.0)]
    pub min_ocr_confidence: f64,
    /// Green-trigger override file.
    #[arg(long)]
    pub green_config: Option<PathBuf>,
    /// OCR input schema.
    #[arg(long, value_enum, default_value_t = OcrFormat::Canonical)]
    pub ocr_format: OcrFormat,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>/manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &GenTextmapArgs) -> CliResult<StageOutcome> {
    let category: Category = args
        .category
        .parse()
        .map_err(|e: String| CliError::usage(e))?;

    let stats_bytes = read_file(&args.stats)?;
    check_stats_covers_category(&stats_bytes, &args.category, &args.stats)?;
    let stats: LexiconStats =
        load_stats(&stats_bytes).map_err(|e| CliError::usage(format!("{}: {e}", args.stats.display())))?;

    let triggers = match &args.green_config {
        Some(path) => TriggerConfig::from_json(&read_file(path)?)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
        None => TriggerConfig::default(),
    };
    let config = ScoreConfig {
        min_ocr_confidence: args.min_ocr_confidence,
        triggers,
    };

    let docs = load_ocr_dir(&args.ocr, args.ocr_format)?;
    let pool = worker_pool(args.jobs)?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        docs.par_iter()
            .map(|(doc_id, doc)| {
                let map = render_textmap_with(doc, &stats, category, &config);
                write_atomic(
                    &args.out.join(format!("{doc_id}.bin")),
                    &write_raster3_bin(&map),
                )?;
                if args.png {
                    let bytes = write_png(&map)
                        .map_err(|e| CliError::Internal(anyhow::anyhow!("encoding png: {e}")))?;
                    write_atomic(&args.out.join(format!("{doc_id}.png")), &bytes)?;
                }
                Ok(())
            })
            .collect()
    });
    results.into_iter().collect::<CliResult<Vec<()>>>()?;

    Ok(StageOutcome {
        subcommand: "gen-textmap",
        parameters: manifest::params([
            ("ocr", json!(args.ocr.display().to_string())),
            ("stats", json!(args.stats.display().to_string())),
            ("category", json!(args.category)),
            ("out", json!(args.out.display().to_string())),
            ("png", json!(args.png)),
            ("min_ocr_confidence", json!(args.min_ocr_confidence)),
            (
                "green_config",
                json!(args.green_config.as_ref().map(|p| p.display().to_string())),
            ),
            ("ocr_format", json!(format!("{:?}", args.ocr_format).to_lowercase())),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: vec![
            args.ocr.display().to_string(),
            args.stats.display().to_string(),
        ],
        outputs: vec![args.out.display().to_string()],
        documents: docs.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, true)),
    })
}

/// A stats file lists the categories it was built for; asking for one it does
/// not cover is an input error.
fn check_stats_covers_category(
    bytes: &[u8],
    category: &str,
    path: &std::path::Path,
) -> CliResult<()> {
    #[derive(serde::Deserialize)]
    struct Probe {
        #[serde(default)]
        categories: Vec<String>,
    }
    let probe: Probe = serde_json::from_slice(bytes)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    if !probe.categories.iter().any(|c| c == category) {
        return Err(CliError::usage(format!(
            "{}: stats file does not cover category `{category}` (covers: {})",
            path.display(),
            probe.categories.join(", ")
        )));
    }
    Ok(())
}
