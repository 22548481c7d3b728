//! `nl2stl` command-line front end and the annotation HTTP API.

mod commands;
mod error;
pub mod serve;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nl2stl", version, about = "Tools for lifted NL/STL datasets")]
pub struct Cli {
    /// Print errors as a single JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputKind {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Numbering {
    /// Placeholders numbered by first appearance in the sentence.
    Sentence,
    /// Placeholders numbered by first appearance in the formula.
    Formula,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random lifted formulas, one per line.
    Synth {
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// TOML file with synthesis settings; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        max_aps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "preorder-symbol")]
        format: String,
        /// Emit pre-order formulas as Python-style token lists.
        #[arg(long)]
        list_literal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the batch report (rejections by rule) as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Convert formulas between text formats. Reads lines (bare text or JSON
    /// objects with an `stl` field) from the arguments or the input.
    Convert {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        input: Option<PathBuf>,
        formulas: Vec<String>,
    },
    /// Lift full JSONL pairs `{nl, stl}` into placeholder form.
    Lift {
        /// Builtin domain name or a profile / dictionary path.
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "inorder-word")]
        format: String,
        #[arg(long, value_enum, default_value_t = Numbering::Sentence)]
        numbering: Numbering,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground lifted JSONL pairs `{nl, stl, ap_map}` back to full text.
    Ground {
        /// JSON AP map used for rows that carry none.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long, default_value = "inorder-word")]
        format: String,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a dataset generation loop.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        framework: u8,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = BackendKind::Mock)]
        backend: BackendKind,
        /// Overrides the seed from the synthesis settings.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_aps: Option<usize>,
        /// TOML synthesis settings.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        /// TOML backend settings for the live backend.
        #[arg(long)]
        backend_config: Option<PathBuf>,
        /// Examples per prompt.
        #[arg(long)]
        k: Option<usize>,
        /// JSON example pool; defaults to the bundled pool.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Extra JSONL canned completions for the mock backend.
        #[arg(long)]
        mock_table: Option<PathBuf>,
        #[arg(long, default_value = "general")]
        domain: String,
        #[arg(long)]
        no_dedup: bool,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// JSONL log of every backend attempt.
        #[arg(long)]
        audit_log: Option<PathBuf>,
    },
    /// Lift a file of full pairs into dataset records.
    Ingest {
        #[arg(long)]
        domain: String,
        /// Dictionary file replacing the profile's entries.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long, default_value = "inorder-word")]
        format: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quarantine: Option<PathBuf>,
    },
    /// Binary accuracy of predictions against gold formulas.
    Eval {
        /// Predictions, one per line (text or JSON).
        #[arg(long, requires = "gold")]
        pred: Option<PathBuf>,
        /// Gold formulas, one per line (text, JSON or dataset records).
        #[arg(long, requires = "pred")]
        gold: Option<PathBuf>,
        /// JSONL `{pred, gold}` pairs instead of two files.
        #[arg(long, conflicts_with_all = ["pred", "gold"])]
        pairs: Option<PathBuf>,
        #[arg(long, default_value = "preorder-symbol")]
        format: String,
        #[arg(long, value_enum, default_value_t = OutputKind::Table)]
        output: OutputKind,
        /// Also write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the per-AP-count CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Corpus statistics of a lifted dataset.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputKind::Table)]
        output: OutputKind,
    },
    /// Serve the annotation API over a dataset file.
    Serve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    commands::dispatch(cli.command)
}
