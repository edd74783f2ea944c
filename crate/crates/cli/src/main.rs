use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use haystack_bias::inference::Variant;
use haystack_bias::lang::parse_language_list;
use haystack_bias::pipeline::{self, PipelineConfig};
use haystack_bias::report::Format;

/// Multilingual conflicting-needle evaluation pipeline.
#[derive(Parser, Debug)]
#[command(name = "haystack-bias", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Args, Debug)]
struct Common {
    /// Pipeline config (TOML); paths inside are relative to the file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root for all artifacts.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Article pool directory.
    #[arg(long, global = true)]
    pool: Option<PathBuf>,
    /// Needle definitions file.
    #[arg(long, global = true)]
    needles: Option<PathBuf>,
    /// Backends file.
    #[arg(long, global = true)]
    backends: Option<PathBuf>,
    /// Corpus directory (default: <workdir>/corpus).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Haystack languages, e.g. cmn,deu,eng,rus,tur.
    #[arg(long, global = true)]
    languages: Option<String>,
    /// Comma-separated English-word budgets.
    #[arg(long, global = true)]
    sizes: Option<String>,
    /// Allow languages outside the reference set.
    #[arg(long, global = true)]
    no_paper_mode: bool,
    /// MCMC seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build every haystack for every size.
    Generate,
    /// Query backends for every haystack and prompt language.
    Run(RunArgs),
    /// Classify responses and reduce contrastive pairs.
    Classify,
    /// Binomial tests and hierarchical model fits.
    Analyze {
        #[command(flatten)]
        pairs: PairsArg,
        #[command(flatten)]
        args: AnalyzeArgs,
    },
    /// Render tables.
    Report(ReportArgs),
    /// Generate (if needed), run, classify, analyze and report.
    All(AllArgs),
    /// Deduplicate and sort the run's result stores.
    Compact,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Prompt languages.
    #[arg(long)]
    langs: Option<String>,
    #[arg(long)]
    strict_format: Option<bool>,
    /// In-flight requests per backend.
    #[arg(long)]
    parallel: Option<usize>,
    /// Only these backend ids.
    #[arg(long)]
    only: Option<String>,
    /// Stop after this many new queries.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct PairsArg {
    /// Pairs file (default: the run's pairs artifact).
    #[arg(long)]
    pairs: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct AnalyzeArgs {
    /// pooled or by-origin; repeatable.
    #[arg(long)]
    variant: Vec<Variant>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    bonferroni_family: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ReportArgs {
    /// tsv or markdown.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AllArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    analyze: AnalyzeArgs,
    #[command(flatten)]
    report: ReportArgs,
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn base_config(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &common.workdir {
        config.workdir = Some(p.clone());
    }
    if let Some(p) = &common.pool {
        config.pool = Some(p.clone());
    }
    if let Some(p) = &common.needles {
        config.needles = Some(p.clone());
    }
    if let Some(p) = &common.backends {
        config.backends = Some(p.clone());
    }
    if let Some(p) = &common.corpus {
        config.corpus = Some(p.clone());
    }
    if let Some(id) = &common.run_id {
        config.run.run_id = id.clone();
    }
    if let Some(list) = &common.languages {
        config.languages = parse_language_list(list)?;
    }
    if let Some(list) = &common.sizes {
        config.sizes = split_list(list)
            .iter()
            .map(|s| s.parse::<usize>().with_context(|| format!("invalid size `{s}`")))
            .collect::<Result<_>>()?;
    }
    if common.no_paper_mode {
        config.paper_mode = false;
    }
    if let Some(seed) = common.seed {
        config.analysis.mcmc.seed = seed;
    }
    Ok(config)
}

fn apply_run(config: &mut PipelineConfig, args: &RunArgs) -> Result<()> {
    if let Some(list) = &args.langs {
        config.run.prompt_langs = Some(parse_language_list(list)?);
    }
    if let Some(strict) = args.strict_format {
        config.run.strict_format = strict;
    }
    if let Some(n) = args.parallel {
        config.run.parallel = n;
    }
    if let Some(list) = &args.only {
        config.run.backends = split_list(list);
    }
    Ok(())
}

fn apply_analyze(config: &mut PipelineConfig, args: &AnalyzeArgs) {
    if !args.variant.is_empty() {
        config.analysis.variants = args.variant.clone();
    }
    let mcmc = &mut config.analysis.mcmc;
    if let Some(n) = args.chains {
        mcmc.chains = n;
    }
    if let Some(n) = args.warmup {
        mcmc.warmup = n;
    }
    if let Some(n) = args.samples {
        mcmc.samples = n;
    }
    if let Some(n) = args.bonferroni_family {
        config.analysis.bonferroni_family = n;
    }
}

fn apply_report(config: &mut PipelineConfig, args: &ReportArgs) {
    if let Some(format) = args.format {
        config.report.format = format;
    }
    if let Some(out) = &args.out {
        config.report.out = Some(out.clone());
    }
}

fn print_corpus(summary: &haystack_bias::corpus::CorpusSummary) {
    for size in &summary.sizes {
        let [bc, mc, bn, mn] = size.groups;
        println!(
            "size {}: {} configs ({bc} bilingual conflicting, {mc} monolingual conflicting, \
             {bn} bilingual non-conflicting, {mn} monolingual non-conflicting), {} contrastive pairs",
            size.size, size.configs, size.pairs
        );
    }
    println!("corpus checksum {}", summary.checksum);
}

fn print_run(stats: &haystack_bias::runner::RunStats) {
    println!(
        "planned {}, already stored {}, issued {}, failed {}",
        stats.planned, stats.skipped, stats.issued, stats.failed
    );
}

fn print_classify(stats: &pipeline::ClassifyStats) {
    println!(
        "classified {} records ({} transport failures); {} contrastive pair results, {} unmatched members",
        stats.records, stats.transport_failures, stats.pairs, stats.unmatched
    );
}

fn print_analysis(artifact: &pipeline::AnalysisArtifact) {
    for table in &artifact.posteriors {
        println!(
            "size {} {}{}: {} pairs, {}",
            table.size,
            table.variant.as_str(),
            table.origin.map(|o| format!(" ({})", o.as_str())).unwrap_or_default(),
            table.groups.len(),
            if table.converged { "converged" } else { "NOT CONVERGED (R-hat > 1.05)" }
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = base_config(&cli.common)?;
    match cli.command {
        Command::Generate => print_corpus(&pipeline::generate(&config)?),
        Command::Run(args) => {
            apply_run(&mut config, &args)?;
            print_run(&pipeline::run(&config, args.limit)?);
        }
        Command::Classify => print_classify(&pipeline::classify(&config)?),
        Command::Analyze { pairs, args } => {
            apply_analyze(&mut config, &args);
            print_analysis(&pipeline::analyze(&config, pairs.pairs.as_deref())?);
        }
        Command::Report(args) => {
            apply_report(&mut config, &args);
            for path in pipeline::report(&config)? {
                println!("{}", path.display());
            }
        }
        Command::All(args) => {
            apply_run(&mut config, &args.run)?;
            apply_analyze(&mut config, &args.analyze);
            apply_report(&mut config, &args.report);
            let summary = pipeline::all(&config, args.run.limit)?;
            if let Some(corpus) = &summary.corpus {
                print_corpus(corpus);
            }
            print_run(&summary.run);
            print_classify(&summary.classify);
            print_analysis(&summary.analysis);
            for path in &summary.files {
                println!("{}", path.display());
            }
        }
        Command::Compact => {
            for (backend, stats) in pipeline::compact(&config)? {
                println!("{backend}: {} -> {} records", stats.before, stats.after);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
