use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use temporal_reward::dataset_io::{
    default_desk_targets, desk_distribution, DatasetManifest, DeskRow, LineIssue, RecordReader,
};

use crate::io::{open_output, write_line, write_pretty};
use crate::{Ctx, OutputArgs, PARTIAL};

#[derive(Args)]
pub struct ValidateArgs {
    /// Dataset file (JSONL).
    #[arg(long, short)]
    input: PathBuf,
    /// Write every offending line as JSONL here.
    #[arg(long)]
    issues: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Serialize)]
struct Report {
    manifest: DatasetManifest,
    desks: Vec<DeskRow>,
}

pub fn run(ctx: &Ctx, args: ValidateArgs) -> anyhow::Result<u8> {
    let mut records = Vec::new();
    let mut issues: Vec<LineIssue> = Vec::new();
    for item in RecordReader::open(&args.input)? {
        match item? {
            Ok(r) => records.push(r),
            Err(i) => issues.push(i),
        }
    }
    let manifest = DatasetManifest::build(&records, &issues);
    let desks = desk_distribution(&records, &default_desk_targets());

    if let Some(path) = &args.issues {
        let mut w = open_output(Some(path))?;
        for i in &issues {
            write_line(&mut w, i)?;
        }
        w.flush()?;
    }
    let failed = manifest.issue_count();
    let mut out = open_output(args.out.output.as_deref())?;
    write_pretty(&mut out, &Report { manifest, desks: desks.clone() })?;
    out.flush()?;

    ctx.note(format!("records {}  issues {failed}", records.len()));
    for i in issues.iter().take(10) {
        ctx.note(format!("  line {}: {}", i.line, serde_json::to_string(&i.kind)?));
    }
    for d in &desks {
        let delta = d.delta.map(|x| format!("  ({x:+.1} vs target)")).unwrap_or_default();
        ctx.note(format!("  {:<12} {:>6.1}%{delta}", d.desk, d.percent));
    }
    Ok(if failed > 0 { PARTIAL } else { 0 })
}
