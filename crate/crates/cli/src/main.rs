//! Command-line pipeline for category text-maps: generate synthetic corpora,
//! build lexicon statistics, render per-category text-maps, export 6-channel
//! tensors, run the baseline detector and evaluate detections.

mod commands;
mod manifest;
mod util;

use std::time::Instant;

use clap::{Parser, Subcommand};

use util::CliResult;

#[derive(Parser)]
#[command(
    name = "textmap",
    version,
    about = "OCR-driven category text-maps: generation, detection and evaluation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic annotated corpus.
    Synth(commands::synth::SynthArgs),
    /// Build lexicon statistics from OCR + annotation pairs.
    BuildStats(commands::build_stats::BuildStatsArgs),
    /// Render per-document text-maps for one category.
    GenTextmap(commands::gen_textmap::GenTextmapArgs),
    /// Compose source images with text-maps into 6-channel tensors.
    #[command(name = "export-6ch")]
    Export6ch(commands::export6ch::Export6chArgs),
    /// Detect regions in text-maps with the baseline detector.
    Detect(commands::detect::DetectArgs),
    /// Match detections against annotations and report metrics.
    Eval(commands::eval::EvalArgs),
    /// Render match outcomes over the source images.
    Overlay(commands::overlay::OverlayArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Synth(args) => commands::synth::run(args)?,
        Command::BuildStats(args) => commands::build_stats::run(args)?,
        Command::GenTextmap(args) => commands::gen_textmap::run(args)?,
        Command::Export6ch(args) => commands::export6ch::run(args)?,
        Command::Detect(args) => commands::detect::run(args)?,
        Command::Eval(args) => commands::eval::run(args)?,
        Command::Overlay(args) => commands::overlay::run(args)?,
    };
    manifest::write(&outcome, start.elapsed())
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
