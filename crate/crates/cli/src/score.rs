use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use temporal_reward::dataset_io::RecordReader;
use temporal_reward::{score_batch, BenchRecord, Phase, ScoreCall, ScoredSample, ScoringContext, Stage, TaskKind};

use crate::io::{numbered_lines, open_input, open_output, write_line, write_pretty};
use crate::{ContextArgs, Ctx, OutputArgs, PARTIAL};

#[derive(Args)]
pub struct ScoreArgs {
    /// Request rows (JSONL, `-` for stdin).
    #[arg(long, short)]
    input: PathBuf,
    /// Records that rows reference by `record_id`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Write the run summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    context: ContextArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRow {
    #[serde(default)]
    row_id: Option<String>,
    #[serde(default)]
    record_id: Option<String>,
    #[serde(default)]
    record: Option<BenchRecord>,
    response: String,
    #[serde(default)]
    stage: Option<Stage>,
    #[serde(default)]
    phase: Option<Phase>,
    #[serde(default)]
    step: Option<u32>,
    #[serde(default)]
    group_id: Option<String>,
    #[serde(default)]
    logprob_current: Option<f64>,
    #[serde(default)]
    logprob_reference: Option<f64>,
}

#[derive(Serialize)]
struct ScoreOut {
    line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    row_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    record_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<TaskKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprob_current: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprob_reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample: Option<ScoredSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Default, Serialize)]
struct TaskSummary {
    count: usize,
    mean_total: f64,
    mean_r_acc: f64,
}

#[derive(Default, Serialize)]
struct Summary {
    rows: usize,
    scored: usize,
    failed: usize,
    mean_total: Option<f64>,
    per_task: BTreeMap<String, TaskSummary>,
}

const CHUNK: usize = 8192;

fn load_records(ctx: &Ctx, path: &PathBuf) -> anyhow::Result<HashMap<String, BenchRecord>> {
    let mut map = HashMap::new();
    let mut issues = 0usize;
    let mut duplicates = 0usize;
    for item in RecordReader::open(path)? {
        match item.with_context(|| format!("reading {}", path.display()))? {
            Ok(r) => {
                if map.contains_key(&r.id) {
                    duplicates += 1;
                } else {
                    map.insert(r.id.clone(), r);
                }
            }
            Err(_) => issues += 1,
        }
    }
    if issues > 0 {
        ctx.note(format!("warning: {issues} unusable record lines skipped (see `treward validate`)"));
    }
    if duplicates > 0 {
        ctx.note(format!("warning: {duplicates} duplicate record ids; first occurrence kept"));
    }
    Ok(map)
}

struct Pending {
    out: ScoreOut,
    record: Option<BenchRecord>,
    response: String,
    context: ScoringContext,
}

pub fn run(ctx: &Ctx, args: ScoreArgs) -> anyhow::Result<u8> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let records = match &args.records {
        Some(p) => load_records(ctx, p)?,
        None => HashMap::new(),
    };
    let mut out = open_output(args.out.output.as_deref())?;
    let mut summary = Summary::default();
    let mut sums: BTreeMap<TaskKind, (usize, f64, f64)> = BTreeMap::new();
    let mut total_sum = 0.0;

    let mut lines = numbered_lines(open_input(&args.input)?).peekable();
    while lines.peek().is_some() {
        let mut chunk: Vec<Pending> = Vec::with_capacity(CHUNK);
        for item in lines.by_ref().take(CHUNK) {
            let (line, text) = item?;
            chunk.push(prepare(line, &text, &records, &args.context));
        }
        let calls: Vec<(usize, ScoreCall<'_>)> = chunk
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.record.as_ref().map(|record| {
                    (
                        i,
                        ScoreCall {
                            record,
                            response: &p.response,
                            ctx: p.context,
                        },
                    )
                })
            })
            .collect();
        let just_calls: Vec<ScoreCall<'_>> = calls.iter().map(|(_, c)| *c).collect();
        let results = score_batch(&just_calls, &ctx.config);
        let mut scored: Vec<Option<Result<ScoredSample, String>>> = (0..chunk.len()).map(|_| None).collect();
        for ((i, _), r) in calls.iter().zip(results) {
            scored[*i] = Some(r.map_err(|e| e.to_string()));
        }

        for (mut p, r) in chunk.into_iter().zip(scored) {
            summary.rows += 1;
            match r {
                Some(Ok(sample)) => {
                    let task = p.out.task.expect("scored rows have a task");
                    let e = sums.entry(task).or_default();
                    e.0 += 1;
                    e.1 += sample.total;
                    e.2 += sample.r_acc;
                    total_sum += sample.total;
                    summary.scored += 1;
                    p.out.sample = Some(sample);
                }
                Some(Err(msg)) => {
                    p.out.error = Some(msg);
                    summary.failed += 1;
                }
                None => summary.failed += 1,
            }
            write_line(&mut out, &p.out)?;
        }
    }
    out.flush()?;

    if summary.scored > 0 {
        summary.mean_total = Some(total_sum / summary.scored as f64);
    }
    for (task, (n, t, a)) in sums {
        summary.per_task.insert(
            task.as_str().to_string(),
            TaskSummary {
                count: n,
                mean_total: t / n as f64,
                mean_r_acc: a / n as f64,
            },
        );
    }
    if let Some(path) = &args.summary {
        let mut w = open_output(Some(path))?;
        write_pretty(&mut w, &summary)?;
        w.flush()?;
    }
    report(ctx, &summary);
    Ok(if summary.failed > 0 { PARTIAL } else { 0 })
}

fn prepare(line: usize, text: &str, records: &HashMap<String, BenchRecord>, defaults: &ContextArgs) -> Pending {
    let mut out = ScoreOut {
        line,
        row_id: None,
        record_id: None,
        group_id: None,
        task: None,
        logprob_current: None,
        logprob_reference: None,
        sample: None,
        error: None,
    };
    let row: ScoreRow = match serde_json::from_str(text) {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(format!("bad request row: {e}"));
            return Pending {
                out,
                record: None,
                response: String::new(),
                context: ScoringContext::eval(),
            };
        }
    };
    out.row_id = row.row_id;
    out.group_id = row.group_id;
    out.logprob_current = row.logprob_current;
    out.logprob_reference = row.logprob_reference;
    let record = match (row.record, &row.record_id) {
        (Some(r), _) => Some(r),
        (None, Some(id)) => records.get(id).cloned(),
        (None, None) => None,
    };
    out.record_id = row.record_id.or_else(|| record.as_ref().map(|r| r.id.clone()));
    match &record {
        Some(r) => out.task = Some(r.task),
        None => {
            out.error = Some(match &out.record_id {
                Some(id) => format!("unknown record_id {id:?}"),
                None => "row has neither record nor record_id".to_string(),
            })
        }
    }
    Pending {
        out,
        record,
        response: row.response,
        context: ScoringContext {
            stage: row.stage.or(defaults.stage),
            phase: row.phase.unwrap_or(defaults.phase),
            step: row.step.unwrap_or(defaults.step),
        },
    }
}

fn report(ctx: &Ctx, s: &Summary) {
    ctx.note(format!("rows {}  scored {}  failed {}", s.rows, s.scored, s.failed));
    if let Some(m) = s.mean_total {
        ctx.note(format!("average total score {m:.4}"));
    }
    for (task, t) in &s.per_task {
        ctx.note(format!(
            "  {task:<11} n={:<7} total {:.4}  r_acc {:.4}",
            t.count, t.mean_total, t.mean_r_acc
        ));
    }
}
