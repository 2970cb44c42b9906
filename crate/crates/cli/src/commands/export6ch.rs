//! `textmap export-6ch`: compose source images with text-maps into
//! 6-channel tensors.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;

use textmap_core::raster::{compose_6ch, read_png, read_raster3_bin, write_tensor6};

use crate::manifest::{self, StageOutcome};
use crate::util::{list_files, read_file, worker_pool, write_atomic, CliError, CliResult};

#[derive(Args, Debug)]
pub struct Export6chArgs {
    /// Directory of source images (*.png).
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of text-map binaries (*.bin), paired by file stem.
    #[arg(long)]
    pub maps: PathBuf,
    /// Output directory for <doc_id>.t6 tensors.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker count (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Manifest path (default: <out>/manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &Export6chArgs) -> CliResult<StageOutcome> {
    let images = list_files(&args.images, "png")?;
    let maps = list_files(&args.maps, "bin")?;

    let image_stems: Vec<&str> = images.iter().map(|(s, _)| s.as_str()).collect();
    let map_stems: Vec<&str> = maps.iter().map(|(s, _)| s.as_str()).collect();
    let orphans: Vec<String> = image_stems
        .iter()
        .filter(|s| !map_stems.contains(s))
        .map(|s| format!("{s} (image only)"))
        .chain(
            map_stems
                .iter()
                .filter(|s| !image_stems.contains(s))
                .map(|s| format!("{s} (map only)")),
        )
        .collect();
    if !orphans.is_empty() {
        return Err(CliError::usage(format!(
            "unmatched documents: {}",
            orphans.join(", ")
        )));
    }
    if images.is_empty() {
        return Err(CliError::usage(format!(
            "no image/map pairs under {} and {}",
            args.images.display(),
            args.maps.display()
        )));
    }

    let pool = worker_pool(args.jobs)?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        images
            .par_iter()
            .zip(maps.par_iter())
            .map(|((stem, image_path), (_, map_path))| {
                let image = read_png(&read_file(image_path)?)
                    .map_err(|e| CliError::usage(format!("{}: {e}", image_path.display())))?;
                let map = read_raster3_bin(&read_file(map_path)?)
                    .map_err(|e| CliError::usage(format!("{}: {e}", map_path.display())))?;
                let tensor = compose_6ch(&image, &map)
                    .map_err(|e| CliError::usage(format!("doc `{stem}`: {e}")))?;
                write_atomic(&args.out.join(format!("{stem}.t6")), &write_tensor6(&tensor))
            })
            .collect()
    });
    results.into_iter().collect::<CliResult<Vec<()>>>()?;

    Ok(StageOutcome {
        subcommand: "export-6ch",
        parameters: manifest::params([
            ("images", json!(args.images.display().to_string())),
            ("maps", json!(args.maps.display().to_string())),
            ("out", json!(args.out.display().to_string())),
            ("jobs", json!(args.jobs)),
        ]),
        inputs: vec![
            args.images.display().to_string(),
            args.maps.display().to_string(),
        ],
        outputs: vec![args.out.display().to_string()],
        documents: images.len(),
        manifest_path: args
            .manifest
            .clone()
            .unwrap_or_else(|| manifest::default_path(&args.out, true)),
    })
}
