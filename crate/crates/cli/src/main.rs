//! `kgvqa`: batch commands for building a filtered knowledge graph, indexing
//! its verbalized facts with BM25, retrieving facts for VQA questions,
//! assembling reader contexts and scoring answers.
//!
//! Exit codes: 0 on success, 1 for bad input or usage, 2 when an internal
//! invariant fails.

mod commands;
mod io;
mod manifest;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::{eval, kg, positive, retrieval, signal, Internal};
use kgvqa_core::exec::configure_threads;
use kgvqa_core::Execution;
use log::error;

#[derive(Debug, Parser)]
#[command(name = "kgvqa", version, about = "Knowledge-graph fact retrieval for VQA")]
struct Cli {
    /// Worker threads for the parallel stages
    #[arg(long, global = true, value_parser = positive)]
    threads: Option<usize>,
    /// Run every stage on the calling thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count stems over a VQA dataset
    Corpus(kg::CorpusArgs),
    /// Ingest triple sources, filter by the corpus and dedup frequent relations
    BuildKg(kg::BuildKgArgs),
    /// Verbalize triples into facts and build the BM25 index
    Index(retrieval::IndexArgs),
    /// Retrieve the top-k facts for every example
    Retrieve(retrieval::RetrieveArgs),
    /// Assemble the background and knowledge reader inputs
    Contexts(retrieval::ContextsArgs),
    /// Score predicted answers (EM, Inc, Stem)
    Eval(eval::EvalArgs),
    /// Inclusion-based Recall@K of a retrieval dump
    Recall(eval::RecallArgs),
    /// Attention-derived target, retriever distribution and KL loss
    Signal(signal::SignalArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        configure_threads(n);
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Corpus(a) => kg::corpus(a, exec),
        Command::BuildKg(a) => kg::build_kg(a, exec),
        Command::Index(a) => retrieval::index(a, exec),
        Command::Retrieve(a) => retrieval::retrieve(a, exec),
        Command::Contexts(a) => retrieval::contexts(a, exec),
        Command::Eval(a) => eval::eval(a, exec),
        Command::Recall(a) => eval::recall(a, exec),
        Command::Signal(a) => signal::signal(a, exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Internal>() => {
            error!("{e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
