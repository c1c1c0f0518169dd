use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use serde_json::{Map, Value};

use temporal_reward::grpo::{clipped_term, objective_value, Rollout, RolloutGroup};
use temporal_reward::group_advantages;

use crate::io::{numbered_lines, open_input, open_output, write_line, write_pretty};
use crate::{Ctx, OutputArgs, PARTIAL};

#[derive(Args)]
pub struct AdvantageArgs {
    /// Scored rows (output of `score`), each with a `group_id`.
    #[arg(long, short)]
    input: PathBuf,
    /// Responses expected per group (default from config).
    #[arg(long, short = 'k')]
    group_size: Option<usize>,
    /// Accept groups whose size differs from K (still at least 2).
    #[arg(long)]
    allow_ragged: bool,
    /// Clip range for the surrogate term (default from config).
    #[arg(long)]
    epsilon: Option<f64>,
    /// KL coefficient for the group objective (default from config).
    #[arg(long)]
    beta: Option<f64>,
    /// Write per-group objectives as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

struct Row {
    value: Map<String, Value>,
    group: String,
    reward: f64,
    logprobs: Option<(f64, f64)>,
}

#[derive(Serialize)]
struct GroupSummary {
    group_id: String,
    size: usize,
    mean_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
}

fn reward_of(v: &Map<String, Value>) -> Option<f64> {
    v.get("reward")
        .and_then(Value::as_f64)
        .or_else(|| v.get("sample")?.get("total")?.as_f64())
}

pub fn run(ctx: &Ctx, args: AdvantageArgs) -> anyhow::Result<u8> {
    let k = args.group_size.unwrap_or(ctx.config.grpo.group_size);
    let epsilon = args.epsilon.unwrap_or(ctx.config.grpo.epsilon);
    let beta = args.beta.unwrap_or(ctx.config.grpo.beta);
    if k < 2 {
        bail!("group size must be at least 2");
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        bail!("epsilon must lie in (0, 1)");
    }

    let mut rows = Vec::new();
    for item in numbered_lines(open_input(&args.input)?) {
        let (line, text) = item?;
        let value: Map<String, Value> =
            serde_json::from_str(&text).with_context(|| format!("line {line}: not a JSON object"))?;
        let group = value
            .get("group_id")
            .and_then(Value::as_str)
            .with_context(|| format!("line {line}: missing group_id"))?
            .to_string();
        let reward = reward_of(&value).with_context(|| format!("line {line}: no reward or sample.total"))?;
        let logprobs = match (
            value.get("logprob_current").and_then(Value::as_f64),
            value.get("logprob_reference").and_then(Value::as_f64),
        ) {
            (Some(c), Some(r)) => Some((c, r)),
            _ => None,
        };
        rows.push(Row {
            value,
            group,
            reward,
            logprobs,
        });
    }

    // Groups in order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let entry = members.entry(r.group.clone()).or_default();
        if entry.is_empty() {
            order.push(r.group.clone());
        }
        entry.push(i);
    }
    let ragged: Vec<&String> = order.iter().filter(|g| members[*g].len() != k).collect();
    if !ragged.is_empty() && !args.allow_ragged {
        let list: Vec<String> = ragged
            .iter()
            .map(|g| format!("{g} ({})", members[*g].len()))
            .collect();
        bail!("groups without exactly {k} rows: {}", list.join(", "));
    }

    let mut advantage: Vec<Option<f64>> = vec![None; rows.len()];
    let mut clipped: Vec<Option<f64>> = vec![None; rows.len()];
    let mut groups = Vec::new();
    let mut skipped = 0usize;
    for g in &order {
        let idx = &members[g];
        let rewards: Vec<f64> = idx.iter().map(|&i| rows[i].reward).collect();
        let Ok(adv) = group_advantages(&rewards) else {
            ctx.note(format!("warning: group {g} has a single row; no advantage"));
            skipped += idx.len();
            continue;
        };
        for (&i, &a) in idx.iter().zip(&adv) {
            advantage[i] = Some(a);
            if let Some((c, r)) = rows[i].logprobs {
                clipped[i] = Some(clipped_term((c - r).exp(), a, epsilon)?);
            }
        }
        let objective = if idx.iter().all(|&i| rows[i].logprobs.is_some()) {
            let rollouts = idx
                .iter()
                .map(|&i| {
                    let (c, r) = rows[i].logprobs.expect("checked");
                    Rollout {
                        reward: rows[i].reward,
                        logprob_current: c,
                        logprob_reference: r,
                    }
                })
                .collect();
            Some(objective_value(&RolloutGroup::new(g.clone(), rollouts)?, epsilon, beta)?)
        } else {
            None
        };
        groups.push(GroupSummary {
            group_id: g.clone(),
            size: idx.len(),
            mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64,
            objective,
        });
    }

    let mut out = open_output(args.out.output.as_deref())?;
    for (i, mut r) in rows.into_iter().enumerate() {
        r.value.insert("advantage".into(), advantage[i].map_or(Value::Null, Value::from));
        if let Some(c) = clipped[i] {
            r.value.insert("clipped_term".into(), Value::from(c));
        }
        write_line(&mut out, &r.value)?;
    }
    out.flush()?;
    if let Some(path) = &args.summary {
        let mut w = open_output(Some(path))?;
        write_pretty(&mut w, &groups)?;
        w.flush()?;
    }
    ctx.note(format!(
        "groups {}  rows {}  ragged {}  without advantage {}",
        order.len(),
        advantage.len(),
        ragged.len(),
        skipped
    ));
    Ok(if skipped > 0 { PARTIAL } else { 0 })
}
