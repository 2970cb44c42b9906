//! `textmap synth`: generate a seeded synthetic corpus.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::lexicon::RegionAnnotations;
use textmap_core::ocr::to_canonical_json;
use textmap_core::raster::write_png;
use textmap_core::synth::{generate_document, render_background, SynthConfig, SynthError};

use crate::commands::to_pretty_json;
use crate::manifest::{self, StageOutcome};
use crate::util::{worker_pool, write_atomic, CliError, CliResult};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of documents to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Corpus seed; identical seeds reproduce identical corpora.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (ocr/, ann/ and optionally img/ are created inside).
    #[arg(long)]
    pub out: PathBuf,
    /// Also render flat background images to img/.
    #[arg(long)]
    pub emit_images: bool,
    /// Probability of a single-character OCR typo per word.
    #[arg(long, default_value_t = 0.02)]
    pub typo_rate: f64,
    /// Probability that a background word comes from a category vocabulary.
    #[arg(long, default_value_t = 0.0)]
    pub distractor_rate: f64,
    /// Fraction of each category vocabulary leaked into the other.
    #[arg(long, default_value_t = 0.0)]
    pub vocab_overlap: f64,
    /// Worker count for generation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>/manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &SynthArgs) -> CliResult<StageOutcome> {
    let config = SynthConfig {
        seed: args.seed,
        ocr_typo_rate: args.typo_rate,
        distractor_word_rate: args.distractor_rate,
        vocab_overlap: args.vocab_overlap,
        ..SynthConfig::default()
    };

    let n = args.n as usize;
    let pool = worker_pool(args.jobs)?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|index| {
                let annotated = generate_document(&config, index).map_err(synth_error)?;
                let doc_id = annotated.doc.doc_id.clone();
                write_atomic(
                    &args.out.join("ocr").join(format!("{doc_id}.json")),
                    &to_canonical_json(&annotated.doc),
                )?;
                let ann = RegionAnnotations {
                    doc_id: doc_id.clone(),
                    regions: annotated.regions,
                };
                write_atomic(
                    &args.out.join("ann").join(format!("{doc_id}.json")),
                    &to_pretty_json(&ann),
                )?;
                if args.emit_images {
                    let image = render_background(&annotated.doc);
                    let bytes = write_png(&image)
                        .map_err(|e| CliError::Internal(anyhow::anyhow!("encoding png: {e}")))?;
                    write_atomic(&args.out.join("img").join(format!("{doc_id}.png")), &bytes)?;
                }
                Ok(())
            })
            .collect()
    });
    results.into_iter().collect::<CliResult<Vec<()>>>()?;

    let mut outputs = vec![
        args.out.join("ocr").display().to_string(),
        args.out.join("ann").display().to_string(),
    ];
    if args.emit_images {
        outputs.push(args.out.join("img").display().to_string());
    }
    Ok(StageOutcome {
        subcommand: "synth",
        parameters: manifest::params([
            ("n", json!(args.n)),
            ("seed", json!(args.seed)),
            ("out", json!(args.out.display().to_string())),
            ("emit_images", json!(args.emit_images)),
            ("typo_rate", json!(args.typo_rate)),
            ("distractor_rate", json!(args.distractor_rate)),
            ("vocab_overlap", json!(args.vocab_overlap)),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: vec![],
        outputs,
        documents: n,
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, true)),
    })
}

fn synth_error(err: SynthError) -> CliError {
    CliError::usage(err.to_string())
}
