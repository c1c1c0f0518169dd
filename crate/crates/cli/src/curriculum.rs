use std::io::Write;

use anyhow::bail;
use clap::Args;
use serde::Serialize;

use temporal_reward::curriculum::{alpha_row, AlphaRow, PhaseSpec};
use temporal_reward::Phase;

use crate::io::{open_output, write_line, write_pretty};
use crate::{Ctx, OutputArgs};

#[derive(Args)]
pub struct CurriculumArgs {
    /// Phase to query (p1, p2, p3, eval).
    #[arg(long)]
    phase: Option<Phase>,
    /// Step within the phase.
    #[arg(long, default_value_t = 0)]
    step: u32,
    /// Print one row per step from `--step` through this step.
    #[arg(long)]
    until: Option<u32>,
    /// Locate a global stage-1 step in the phase plan instead.
    #[arg(long, conflicts_with = "phase")]
    global_step: Option<u32>,
    /// Print the phase plan.
    #[arg(long)]
    plan: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Serialize)]
struct Plan<'a> {
    phases: &'a [PhaseSpec],
    alpha_start: f64,
    alpha_target: f64,
    s_transition: u32,
    easy_max_delta: u32,
}

fn describe(row: &AlphaRow<f64>) -> String {
    let hard = row
        .normal_hard
        .map_or_else(|| "not admitted".to_string(), |a| format!("{a}"));
    format!(
        "{} step {}: easy alpha = {}, normal/hard alpha = {hard}",
        row.phase, row.step, row.easy
    )
}

pub fn run(ctx: &Ctx, args: CurriculumArgs) -> anyhow::Result<u8> {
    let cur = &ctx.config.curriculum;
    let mut out = open_output(args.out.output.as_deref())?;

    if args.plan {
        let phases = cur.plan.phases();
        write_pretty(
            &mut out,
            &Plan {
                phases: &phases,
                alpha_start: cur.alpha_start,
                alpha_target: cur.alpha_target,
                s_transition: cur.s_transition,
                easy_max_delta: cur.easy_max_delta,
            },
        )?;
        for p in &phases {
            ctx.note(format!("{:<7} {:>5} steps  {}", p.name, p.steps, p.alpha_rule));
        }
        out.flush()?;
        return Ok(0);
    }

    let (phase, step) = match (args.global_step, args.phase) {
        (Some(g), _) => cur.plan.locate(g),
        (None, Some(p)) => (p, args.step),
        (None, None) => bail!("give --phase, --global-step or --plan"),
    };
    let last = args.until.unwrap_or(step);
    if last < step {
        bail!("--until must not be below --step");
    }
    for s in step..=last {
        let row = alpha_row(&cur.state(phase, s)?);
        write_line(&mut out, &row)?;
        ctx.note(describe(&row));
    }
    out.flush()?;
    Ok(0)
}
