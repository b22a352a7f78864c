//! `assocmine` command line. Each subcommand runs one pipeline stage (or a
//! query over stage artifacts); flags override the matching config keys.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::associate::{rank_rows, Bucketing, TrendMatrix, WindowLevel};
use crate::config::{HeatmapConfig, PipelineConfig};
use crate::extract::{EntityType, ExtractorId};
use crate::filter::FilterStrategy;
use crate::graph::{export_heatmap, GraphFormat};
use crate::pipeline::{parse_stages, Pipeline, PipelineError, RunOptions, Stage};

#[derive(Debug, Parser)]
#[command(name = "assocmine", version, about = "Entity association mining over news corpora")]
pub struct Cli {
    /// Pipeline config file (flat `key = value`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for stage artifacts; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Use upstream artifacts even when stale.
    #[arg(long, global = true)]
    pub force: bool,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the JSONL corpus into articles.jsonl.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Keep relevant articles (filtered.jsonl).
    Filter {
        #[arg(long)]
        strategy: Option<FilterStrategy>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        query: Option<String>,
    },
    /// Cluster near-duplicates and keep one article per cluster (dedup.json).
    Dedupe {
        /// Fixed cut threshold instead of silhouette tuning.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Extract entity mentions (mentions.jsonl).
    Extract {
        /// Comma-separated: gazetteer, pattern, external, events.
        #[arg(long, value_delimiter = ',')]
        extractors: Option<Vec<ExtractorId>>,
    },
    /// Count co-occurring entity pairs (pairs.jsonl).
    Associate {
        #[arg(long)]
        level: Option<WindowLevel>,
        #[arg(long)]
        bucket: Option<Bucketing>,
    },
    /// Build and export the co-occurrence graph.
    Graph {
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        format: Option<GraphFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the trend heatmap CSV.
    Heatmap {
        #[command(flatten)]
        query: TrendArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a trend matrix as CSV without recording an artifact.
    Trend {
        #[command(flatten)]
        query: TrendArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the top rows of a trend matrix by total.
    Rank {
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        query: TrendArgs,
    },
    /// Run several stages in order.
    Run {
        /// Comma-separated stage names, or `all`.
        #[arg(long, default_value = "all")]
        stages: String,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrendArgs {
    /// Rows become this entity's partners (name or canonical id).
    #[arg(long)]
    pub target: Option<String>,
    /// Keep only rows of this entity type.
    #[arg(long = "type")]
    pub entity_type: Option<EntityType>,
    /// Count only windows that also mention an entity of this type.
    #[arg(long)]
    pub partner_type: Option<EntityType>,
    #[arg(long)]
    pub from: Option<String>,
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub min_count: Option<u64>,
}

impl TrendArgs {
    /// Overlay these flags onto the configured heatmap settings. A target on
    /// the command line replaces the configured row selection.
    fn apply(&self, base: &HeatmapConfig) -> HeatmapConfig {
        let mut h = base.clone();
        if self.target.is_some() {
            h.target = self.target.clone();
            h.partner_type = None;
        }
        h.entity_type = self.entity_type.or(h.entity_type);
        h.partner_type = self.partner_type.or(h.partner_type);
        h.from = self.from.clone().or(h.from);
        h.to = self.to.clone().or(h.to);
        h.min_count = self.min_count.unwrap_or(h.min_count);
        h
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut c = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        c.out_dir = dir.clone();
    }
    Ok(c)
}

fn matrix_csv(m: &TrendMatrix) -> Result<Vec<u8>, PipelineError> {
    Ok(export_heatmap(m)?)
}

fn emit(bytes: &[u8], out: Option<&PathBuf>) -> Result<(), PipelineError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| PipelineError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Execute a parsed command line.
pub fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut config = load_config(&cli)?;
    let mut options = RunOptions {
        threads: cli.threads,
        force: cli.force,
        verbose_summaries: true,
        ..RunOptions::default()
    };
    let stages: Vec<Stage> = match &cli.command {
        Command::Ingest { corpus } => {
            if corpus.is_some() {
                config.corpus = corpus.clone();
            }
            vec![Stage::Ingest]
        }
        Command::Filter {
            strategy,
            threshold,
            query,
        } => {
            config.filter.strategy = strategy.unwrap_or(config.filter.strategy);
            config.filter.threshold = threshold.unwrap_or(config.filter.threshold);
            if query.is_some() {
                config.filter.query = query.clone();
            }
            vec![Stage::Filter]
        }
        Command::Dedupe { threshold } => {
            if threshold.is_some() {
                config.dedup.threshold = *threshold;
            }
            vec![Stage::Dedupe]
        }
        Command::Extract { extractors } => {
            if let Some(x) = extractors {
                config.extract.extractors = x.clone();
            }
            vec![Stage::Extract]
        }
        Command::Associate { level, bucket } => {
            config.associate.level = level.unwrap_or(config.associate.level);
            config.associate.bucket = bucket.unwrap_or(config.associate.bucket);
            vec![Stage::Associate]
        }
        Command::Graph {
            min_count,
            format,
            out,
        } => {
            config.graph.min_count = min_count.unwrap_or(config.graph.min_count);
            config.graph.format = format.unwrap_or(config.graph.format);
            options.graph_out = out.clone();
            vec![Stage::Graph]
        }
        Command::Heatmap { query, out } => {
            config.heatmap = query.apply(&config.heatmap);
            options.heatmap_out = out.clone();
            vec![Stage::Heatmap]
        }
        Command::Run { stages } => parse_stages(stages).map_err(PipelineError::Invalid)?,
        Command::Trend { query, out } => {
            config.validate()?;
            let h = query.apply(&config.heatmap);
            let m = Pipeline::new(config, options).trend(&h)?;
            return emit(&matrix_csv(&m)?, out.as_ref());
        }
        Command::Rank { top, query } => {
            config.validate()?;
            let h = query.apply(&config.heatmap);
            let m = Pipeline::new(config, options).trend(&h)?;
            let mut text = String::new();
            for (i, r) in rank_rows(&m, *top).iter().enumerate() {
                text.push_str(&format!("{}\t{}\t{}\n", i + 1, r.label, r.total));
            }
            return emit(text.as_bytes(), None);
        }
    };
    config.validate()?;
    Pipeline::new(config, options).run(&stages)?;
    Ok(())
}

/// Parse `args`, run, and return the process exit code: 0 on success, 1 on
/// usage or validation errors, 2 on runtime errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
