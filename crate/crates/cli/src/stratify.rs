use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use temporal_reward::dataset_io::{to_json_line, RecordReader};
use temporal_reward::parser::month_distance;
use temporal_reward::{stratify, DateYM, Difficulty};

use crate::io::{numbered_lines, open_input, open_output, write_pretty};
use crate::{Ctx, OutputArgs, PARTIAL};

#[derive(Args)]
pub struct StratifyArgs {
    /// Records to label (JSONL).
    #[arg(long, short)]
    records: PathBuf,
    /// Baseline results: `{"id", "delta_months"}` or `{"id", "prediction": "YYYY-MM"}` per line.
    #[arg(long, short)]
    baseline: PathBuf,
    /// Easy threshold in months (default from config).
    #[arg(long)]
    easy_max: Option<u32>,
    /// Write the label counts as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BaselineRow {
    id: String,
    #[serde(default)]
    delta_months: Option<u32>,
    #[serde(default)]
    prediction: Option<DateYM>,
}

#[derive(Default, Serialize)]
struct Summary {
    records: usize,
    labels: BTreeMap<&'static str, usize>,
    without_baseline: usize,
    skipped_lines: usize,
}

enum Baseline {
    Delta(u32),
    Prediction(DateYM),
}

pub fn run(ctx: &Ctx, args: StratifyArgs) -> anyhow::Result<u8> {
    let easy_max = args.easy_max.unwrap_or(ctx.config.curriculum.easy_max_delta);
    let mut baseline = HashMap::new();
    for item in numbered_lines(open_input(&args.baseline)?) {
        let (line, text) = item?;
        let row: BaselineRow =
            serde_json::from_str(&text).with_context(|| format!("baseline line {line}"))?;
        let b = match (row.delta_months, row.prediction) {
            (Some(d), None) => Baseline::Delta(d),
            (None, Some(p)) => Baseline::Prediction(p),
            _ => bail!("baseline line {line}: give exactly one of delta_months or prediction"),
        };
        baseline.insert(row.id, b);
    }

    let mut out = open_output(args.out.output.as_deref())?;
    let mut summary = Summary::default();
    for item in RecordReader::open(&args.records)?.without_validation() {
        let mut record = match item? {
            Ok(r) => r,
            Err(issue) => {
                ctx.note(format!("warning: record line {} skipped", issue.line));
                summary.skipped_lines += 1;
                continue;
            }
        };
        summary.records += 1;
        let delta = match baseline.get(&record.id) {
            Some(Baseline::Delta(d)) => Some(*d),
            Some(Baseline::Prediction(p)) => record.ground_truth.dates.first().map(|t| month_distance(*p, *t)),
            None => None,
        };
        match delta {
            Some(d) => record.difficulty = stratify(d, easy_max),
            None => summary.without_baseline += 1,
        }
        let label = match record.difficulty {
            Difficulty::Easy => "easy",
            Difficulty::NormalHard => "normal_hard",
            Difficulty::Unset => "unset",
        };
        *summary.labels.entry(label).or_default() += 1;
        writeln!(out, "{}", to_json_line(&record))?;
    }
    out.flush()?;
    if let Some(path) = &args.summary {
        let mut w = open_output(Some(path))?;
        write_pretty(&mut w, &summary)?;
        w.flush()?;
    }
    ctx.note(format!(
        "records {}  {}  without baseline {}",
        summary.records,
        summary
            .labels
            .iter()
            .map(|(k, v)| format!("{k} {v}"))
            .collect::<Vec<_>>()
            .join("  "),
        summary.without_baseline
    ));
    Ok(if summary.without_baseline > 0 || summary.skipped_lines > 0 {
        PARTIAL
    } else {
        0
    })
}
