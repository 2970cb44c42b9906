//! Shared plumbing: exit-code-aware errors, atomic writes, directory
//! listing and worker pools.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use textmap_core::ocr::{parse_canonical_ocr, parse_gcv_annotation, OcrDocument};

/// Exit 2 for usage/input problems, exit 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Internal(err) => write!(f, "{err:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Internal(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes via a temp file in the target directory plus rename, so an
/// interrupted run never leaves a torn file. Parent directories are created.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        fs::create_dir_all(parent)
            .map_err(|e| anyhow::anyhow!("creating {}: {e}", parent.display()))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("not a file path: {}", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", tmp.display()))?;
    fs::rename(&tmp, path)
        .map_err(|e| anyhow::anyhow!("renaming into {}: {e}", path.display()))?;
    Ok(())
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))
}

/// Sorted `(stem, path)` pairs for every file in `dir` with `extension`.
pub fn list_files(dir: &Path, extension: &str) -> CliResult<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("reading directory {}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| anyhow::anyhow!("listing {}: {e}", dir.display()))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some(extension) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        out.push((stem.to_string(), path));
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OcrFormat {
    /// The canonical doc_id/image/words schema.
    Canonical,
    /// Cloud full-text annotations (pages/blocks/paragraphs/words/symbols).
    Gcv,
}

/// Loads every OCR document in a directory, keyed by doc_id.
pub fn load_ocr_dir(dir: &Path, format: OcrFormat) -> CliResult<BTreeMap<String, OcrDocument>> {
    let mut docs = BTreeMap::new();
    for (stem, path) in list_files(dir, "json")? {
        let bytes = read_file(&path)?;
        let doc = match format {
            OcrFormat::Canonical => parse_canonical_ocr(&bytes),
            OcrFormat::Gcv => parse_gcv_annotation(&bytes, &stem),
        }
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if let Some(previous) = docs.insert(doc.doc_id.clone(), doc) {
            return Err(CliError::usage(format!(
                "duplicate doc_id `{}` in {}",
                previous.doc_id,
                dir.display()
            )));
        }
    }
    Ok(docs)
}

/// Builds a rayon pool with `jobs` workers (0 = one per core).
pub fn worker_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(anyhow::anyhow!("building worker pool: {e}")))
}
