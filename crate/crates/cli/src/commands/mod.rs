//! Subcommand implementations.

pub mod build_stats;
pub mod detect;
pub mod eval;
pub mod export6ch;
pub mod gen_textmap;
pub mod overlay;
pub mod synth;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use textmap_core::lexicon::{Category, GroundTruthRegion, RegionAnnotations};
use textmap_core::PixelBox;

use crate::util::{list_files, read_file, CliError, CliResult};

/// One line of a detections file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub doc_id: String,
    pub category: Category,
    pub bbox: PixelBox,
    pub confidence: f64,
}

/// Loads every annotation file in a directory, keyed by doc_id.
pub fn load_annotations(dir: &Path) -> CliResult<BTreeMap<String, Vec<GroundTruthRegion>>> {
    let mut out = BTreeMap::new();
    for (_, path) in list_files(dir, "json")? {
        let bytes = read_file(&path)?;
        let ann: RegionAnnotations = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if out.insert(ann.doc_id.clone(), ann.regions).is_some() {
            return Err(CliError::usage(format!(
                "duplicate doc_id `{}` in {}",
                ann.doc_id,
                dir.display()
            )));
        }
    }
    Ok(out)
}

/// Loads and concatenates detection files, validating confidences.
pub fn load_detections(paths: &[std::path::PathBuf]) -> CliResult<Vec<DetectionRecord>> {
    let mut out = Vec::new();
    for path in paths {
        let bytes = read_file(path)?;
        let records: Vec<DetectionRecord> = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        for r in &records {
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(CliError::usage(format!(
                    "{}: doc `{}` has confidence {} outside [0, 1]",
                    path.display(),
                    r.doc_id,
                    r.confidence
                )));
            }
        }
        out.extend(records);
    }
    Ok(out)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}
