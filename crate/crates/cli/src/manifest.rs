//! Run manifests: every subcommand records its fully resolved parameters,
//! inputs, outputs and wall-clock duration next to its artifacts.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::util::{write_atomic, CliResult};

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    parameters: &'a BTreeMap<String, Value>,
    inputs: &'a [String],
    outputs: &'a [String],
    documents: usize,
    duration_ms: u64,
}

/// What a subcommand did; `main` turns this into the manifest file.
pub struct StageOutcome {
    pub subcommand: &'static str,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub documents: usize,
    pub manifest_path: PathBuf,
}

pub fn write(outcome: &StageOutcome, elapsed: Duration) -> CliResult<()> {
    let manifest = RunManifest {
        tool: "textmap",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: outcome.subcommand,
        parameters: &outcome.parameters,
        inputs: &outcome.inputs,
        outputs: &outcome.outputs,
        documents: outcome.documents,
        duration_ms: elapsed.as_millis() as u64,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_atomic(&outcome.manifest_path, &bytes)
}

/// Default manifest location: inside an output directory, or next to an
/// output file.
pub fn default_path(out: &std::path::Path, out_is_dir: bool) -> PathBuf {
    if out_is_dir {
        out.join("manifest.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        name.push_str(".manifest.json");
        out.with_file_name(name)
    }
}

/// Helper to build the parameters map tersely.
pub fn params<const N: usize>(entries: [(&str, Value); N]) -> BTreeMap<String, Value> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}
