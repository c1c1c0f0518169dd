use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};

use temporal_reward::geneval::{
    embed_items, filter_generated, monthly_report, Embedder, HashingEmbedder, HttpEmbedder, NewsItem,
    EMBED_URL_ENV,
};

use crate::io::{numbered_lines, open_input, open_output, write_line, write_pretty};
use crate::{Ctx, OutputArgs, PARTIAL};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedderKind {
    /// Remote service if the endpoint variable is set, else hashing.
    Auto,
    /// Offline hashed bag of words.
    Hash,
    /// Remote service at the endpoint variable.
    Http,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
pub struct GenevalArgs {
    /// Generated items (JSONL with theme, month, headline, abstract, optional embedding).
    #[arg(long, short)]
    generated: PathBuf,
    /// Real items for the same months.
    #[arg(long, short)]
    real: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    embedder: EmbedderKind,
    /// Score every generated item instead of the diverse subset.
    #[arg(long)]
    no_filter: bool,
    /// Write the filtered generated items here.
    #[arg(long)]
    filtered: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

fn read_items(path: &Path) -> anyhow::Result<Vec<NewsItem<f64>>> {
    let mut items = Vec::new();
    for item in numbered_lines(open_input(path)?) {
        let (line, text) = item?;
        items.push(serde_json::from_str(&text).with_context(|| format!("{} line {line}", path.display()))?);
    }
    Ok(items)
}

pub fn run(ctx: &Ctx, args: GenevalArgs) -> anyhow::Result<u8> {
    let cfg = &ctx.config.geneval;
    let mut generated = read_items(&args.generated)?;
    let mut real = read_items(&args.real)?;

    let http = match args.embedder {
        EmbedderKind::Hash => None,
        EmbedderKind::Auto => HttpEmbedder::from_env(cfg.dimension, cfg.batch_size, cfg.max_in_flight).transpose()?,
        EmbedderKind::Http => Some(
            HttpEmbedder::from_env(cfg.dimension, cfg.batch_size, cfg.max_in_flight)
                .with_context(|| format!("{EMBED_URL_ENV} is not set"))??,
        ),
    };
    let hashing = HashingEmbedder::new(cfg.dimension);
    let embedder: &dyn Embedder<f64> = match &http {
        Some(h) => h,
        None => &hashing,
    };
    embed_items(&mut generated, embedder).context("embedding generated items")?;
    embed_items(&mut real, embedder).context("embedding real items")?;

    let mut partial = false;
    let scored = if args.no_filter {
        generated
    } else {
        let f = filter_generated(&generated, cfg)?;
        for b in &f.short_buckets {
            ctx.note(format!(
                "warning: {} / {} has {} items, fewer than {}",
                b.month, b.theme, b.available, cfg.n_div
            ));
        }
        if let Some(path) = &args.filtered {
            let mut w = open_output(Some(path))?;
            for item in &f.items {
                write_line(&mut w, item)?;
            }
            w.flush()?;
        }
        f.items
    };

    let report = monthly_report(&scored, &real)?;
    partial |= report.overall.is_none();
    let mut out = open_output(args.out.output.as_deref())?;
    match args.format {
        Format::Json => write_pretty(&mut out, &report)?,
        Format::Csv => out.write_all(report.to_csv().as_bytes())?,
    }
    out.flush()?;
    ctx.note(report.summary());
    Ok(if partial { PARTIAL } else { 0 })
}
