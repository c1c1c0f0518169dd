//! Acceptance suite: one PASS/FAIL line per criterion, then a hard assert.
//!
//! Run with `cargo test -p temporal-reward-cli --test acceptance -- --nocapture`
//! to see the report.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use temporal_reward::curriculum::alpha_for;
use temporal_reward::dataset_io::to_json_line;
use temporal_reward::geneval::{
    avg_max_sim, embed_items, filter_generated, greedy_diverse_subset, GenevalConfig, HashingEmbedder, NewsItem,
};
use temporal_reward::grpo::{clipped_term, group_advantages, objective_value, Rollout, RolloutGroup};
use temporal_reward::kernels::{
    r_date, score_completion, score_difference, score_ordering, AlphaPolicy, RewardConfig,
};
use temporal_reward::parser::{extract_sections, CompletionAnswer, DifferenceAnswer, OrderingAnswer};
use temporal_reward::shaping::{length_penalty, repetition_penalty, RepetitionConfig, ShapingConfig};
use temporal_reward::{
    score_batch, score_response, BenchRecord, CurriculumState, DateYM, Difficulty, Embedding, EngineConfig,
    Entity, EventText, GroundTruth, Permutation, Phase, ScoreCall, ScoringContext, Split, TaskAnswer,
    TaskKind,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn d(s: &str) -> DateYM {
    s.parse().unwrap()
}

fn record(id: &str, task: TaskKind, dates: Vec<DateYM>, difficulty: Difficulty) -> BenchRecord {
    let mut gt = GroundTruth {
        dates: dates.clone(),
        ..Default::default()
    };
    match task {
        TaskKind::Difference => gt.delta_months = Some((dates[0].ordinal() - dates[1].ordinal()).unsigned_abs() as u32),
        TaskKind::Ordering => gt.order = Some(Permutation::sorting(&[dates[0], dates[1], dates[2]])),
        TaskKind::Completion => gt.entity = Some(Entity::Year(dates[0].year() - 2)),
        _ => {}
    }
    BenchRecord {
        id: id.into(),
        task,
        events: (0..task.event_count()).map(|i| EventText::new(format!("headline {i}"), "abstract")).collect(),
        ground_truth: gt,
        difficulty,
        desk: "Metro".into(),
        split: Split::Test,
        period: dates[0],
        provenance: None,
    }
}

// ---------------------------------------------------------------- golden

const INFERENCE_THINK: &str = "The article discusses how the coronavirus has highlighted the necessity of a better child care system. Given that the coronavirus outbreak began in January 2020 and has had a significant impact on child care systems around the world, it is reasonable to infer that the article is describing efforts to improve the child care system in response to the coronavirus pandemic. The article likely covers the events happening during the spring of 2020, when many countries were implementing policies to support child care during the pandemic.";
const COMPLETION_THINK: &str = "The article is about the hacking campaign that took place during the 2016 presidential election. Given that the hacking campaign involved stealing emails from the Hillary Clinton presidential campaign, it is reasonable to infer that the hacking campaign took place during the 2016 election year. The hacking campaign would have needed time to happen in order to steal the emails, and the use of cryptocurrency would have also needed time to develop and be implemented.";
const PREDICTION_THINK: &str = "The Olympics are known to happen every four years, and the most recent Olympics were held in 2020. Given that the Olympics typically take at least two years to prepare for and the COVID-19 pandemic would have taken at least two years to resolve, it is reasonable to infer that the Olympics would happen relatively quickly after the end of the 2020 Olympics, which were delayed by one year due to the COVID-19 pandemic.";
const REPETITIVE_THINK: &str = "The article is about the debate between President Biden and other candidates in the Republican primary election. Given that elections usually take several weeks to several months to be resolved, it is reasonable to infer that the article is about describing preparations for the debate. Given that elections usually take several weeks to several months to be resolved, it is likely that the article is about describing preparations for the debate.";

fn golden() -> Outcome {
    let start = Instant::now();
    let cfg = EngineConfig::default();
    let mut completion = record("bitcoin", TaskKind::Completion, vec![d("2018-07")], Difficulty::Unset);
    completion.ground_truth.entity = Some(Entity::Year(2016));
    let cases = [
        (
            record("child-care", TaskKind::Inference, vec![d("2020-05")], Difficulty::Unset),
            format!("<think>{INFERENCE_THINK}</think>\n<answer>2020-04</answer>"),
            1.005,
        ),
        (
            completion,
            format!("<think>{COMPLETION_THINK}</think>\n<answer>Event: 2018-06. Missing entity: 2016.</answer>"),
            1.052,
        ),
        (
            record("olympics", TaskKind::Prediction, vec![d("2024-08")], Difficulty::Unset),
            format!("<think>{PREDICTION_THINK}</think>\n<answer>2024-08</answer>"),
            1.100,
        ),
    ];
    let mut got = Vec::new();
    for (rec, resp, want) in &cases {
        let s = score_response(rec, resp, &ScoringContext::eval(), &cfg).map_err(|e| e.to_string())?;
        ensure((s.total - want).abs() <= 1e-3, || format!("{}: total {} want {want}", rec.id, s.total))?;
        ensure(s.r_ans_fmt == 0.05 && s.r_tags == 0.05, || format!("{}: bonuses {s:?}", rec.id))?;
        ensure(s.p_no_event == 0.0 && s.p_len_rep == 0.0, || format!("{}: penalties {s:?}", rec.id))?;
        got.push(format!("{:.3}", s.total));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("totals {} in {elapsed:?}", got.join(" / ")))
}

// ---------------------------------------------------------------- fuzz

const WORDS: [&str; 16] = [
    "the", "event", "date", "month", "year", "news", "likely", "reported", "after", "before", "none",
    "articles", "2020", "election", "market", "because",
];

fn random_date(rng: &mut StdRng) -> DateYM {
    DateYM::new(rng.random_range(2000..=2100), rng.random_range(1..=12)).unwrap()
}

fn random_answer(rng: &mut StdRng, task: TaskKind) -> TaskAnswer {
    match task {
        TaskKind::Inference => TaskAnswer::Inference(random_date(rng)),
        TaskKind::Prediction => TaskAnswer::Prediction(random_date(rng)),
        TaskKind::Difference => TaskAnswer::Difference(DifferenceAnswer {
            dates: [random_date(rng), random_date(rng)],
            delta_months: rng.random_range(0..1300),
        }),
        TaskKind::Ordering => TaskAnswer::Ordering(OrderingAnswer {
            dates: [random_date(rng), random_date(rng), random_date(rng)],
            order: Permutation::all()[rng.random_range(0..6)],
        }),
        TaskKind::Completion => TaskAnswer::Completion(CompletionAnswer {
            date: random_date(rng),
            entity: if rng.random_bool(0.5) {
                Entity::Year(rng.random_range(1900..=2100))
            } else {
                Entity::Month(rng.random_range(1..=12))
            },
        }),
    }
}

fn words(rng: &mut StdRng, n: usize) -> String {
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

fn random_response(rng: &mut StdRng, task: TaskKind) -> String {
    let answer = random_answer(rng, task).render();
    match rng.random_range(0..11) {
        0 | 1 => format!("<think>{}</think><answer>{answer}</answer>", words(rng, 40)),
        2 => format!("<think>{}</think><answer>{}</answer>", words(rng, 10), words(rng, 3)),
        3 => format!("<think>x</think><answer>{}</answer>", ["no event", "None", "There is none."][rng.random_range(0..3)]),
        4 => words(rng, 30),
        5 => {
            let n = rng.random_range(850..1500);
            format!("<think>{}</think><answer>{answer}</answer>", words(rng, n))
        }
        6 => format!("<think>{}</think><answer>{answer}</answer>", "again and again ".repeat(rng.random_range(5..60))),
        7 => format!("<answer>{answer}</answer><answer>{answer}</answer><think></think><think>"),
        8 => {
            let other = TaskKind::ALL[rng.random_range(0..5)];
            format!("<think>t</think><answer>{}</answer>", random_answer(rng, other).render())
        }
        9 => (0..rng.random_range(0..60)).map(|_| char::from_u32(rng.random_range(32..0x2FFF)).unwrap_or('?')).collect(),
        _ => String::new(),
    }
}

fn random_record(rng: &mut StdRng, id: usize) -> (BenchRecord, ScoringContext) {
    let task = TaskKind::ALL[rng.random_range(0..5)];
    let dates = (0..task.event_count()).map(|_| random_date(rng)).collect();
    let difficulty = if rng.random_bool(0.5) { Difficulty::Easy } else { Difficulty::NormalHard };
    let rec = record(&format!("r{id}"), task, dates, difficulty);
    let phase = match rng.random_range(0..4) {
        0 if task == TaskKind::Inference && difficulty == Difficulty::Easy => Phase::P1,
        1 => Phase::P2,
        2 => Phase::P3,
        _ => Phase::Eval,
    };
    let ctx = ScoringContext {
        stage: rng.random_bool(0.5).then(|| task.default_stage()),
        phase,
        step: rng.random_range(0..120),
    };
    (rec, ctx)
}

fn fuzz() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let n = 100_000;
    let mut records = Vec::with_capacity(n);
    let mut responses = Vec::with_capacity(n);
    for i in 0..n {
        let (rec, ctx) = random_record(&mut rng, i);
        responses.push(random_response(&mut rng, rec.task));
        records.push((rec, ctx));
    }
    let calls: Vec<ScoreCall<'_>> = records
        .iter()
        .zip(&responses)
        .map(|((record, ctx), response)| ScoreCall { record, response, ctx: *ctx })
        .collect();
    let cfg = EngineConfig::default();
    let results = score_batch(&calls, &cfg);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, r) in results.iter().enumerate() {
        let s = r.as_ref().map_err(|e| format!("row {i}: {e}"))?;
        ensure((-0.8..=1.1).contains(&s.total), || format!("row {i}: total {} for {:?}", s.total, responses[i]))?;
        lo = lo.min(s.total);
        hi = hi.max(s.total);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{n} responses, totals in [{lo:.3}, {hi:.3}], {elapsed:.2?}"))
}

// ---------------------------------------------------------------- monotonicity

fn monotonicity() -> Outcome {
    let cfg = RewardConfig::default();
    let alphas = [0.05, 0.07, 0.085, 0.1, 0.15, 0.2];
    let mut checks = 0;
    for &a in &alphas {
        for dm in 0..600u32 {
            ensure(r_date(dm + 1, a) < r_date(dm, a), || format!("r_date alpha {a} dm {dm}"))?;
            checks += 1;
        }
        let policy = AlphaPolicy::uniform(a, 2).unwrap();
        for gap in [0u32, 5, 30] {
            let gt = GroundTruth {
                dates: vec![d("2010-01"), d("2010-01").offset(gap as i64).unwrap()],
                delta_months: Some(gap),
                ..Default::default()
            };
            let delta_reward = |stated: u32| {
                let ans = DifferenceAnswer { dates: [gt.dates[0], gt.dates[1]], delta_months: stated };
                score_difference(&ans, &gt, &policy, &cfg).unwrap().factors.delta_reward.unwrap()
            };
            // Same decay regime on both sides of each comparison.
            let regime = |s: u32| s >= cfg.large_gap_months;
            for err in 0..200u32 {
                let (s0, s1) = (gap + err, gap + err + 1);
                if regime(s0) == regime(s1) {
                    ensure(delta_reward(s1) < delta_reward(s0), || format!("R_delta gap {gap} err {err}"))?;
                    checks += 1;
                }
            }
        }
        let policy = AlphaPolicy::uniform(a, 1).unwrap();
        let date = d("2020-01");
        let year_gt = GroundTruth { dates: vec![date], entity: Some(Entity::Year(2000)), ..Default::default() };
        let month_gt = GroundTruth { dates: vec![date], entity: Some(Entity::Month(3)), ..Default::default() };
        let entity_reward = |gt: &GroundTruth, e: Entity| {
            score_completion(&CompletionAnswer { date, entity: e }, gt, &policy, &cfg)
                .unwrap()
                .factors
                .entity_reward
                .unwrap()
        };
        for k in 0..60 {
            ensure(
                entity_reward(&year_gt, Entity::Year(2000 + k + 1)) < entity_reward(&year_gt, Entity::Year(2000 + k)),
                || format!("R_entity year k {k}"),
            )?;
            checks += 1;
        }
        for k in 0..6u32 {
            let m = |k: u32| Entity::Month((2 + k) % 12 + 1);
            ensure(entity_reward(&month_gt, m(k + 1)) < entity_reward(&month_gt, m(k)), || format!("R_entity month k {k}"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} strict decreases"))
}

// ---------------------------------------------------------------- ordering oracle

fn pos(order: [u8; 3], e: u8) -> usize {
    order.iter().position(|&x| x == e).unwrap()
}

fn ordering_oracle_value(pred: [DateYM; 3], truth: [DateYM; 3], stated: [u8; 3], gt: [u8; 3]) -> (f64, f64, f64) {
    let m = |x: DateYM| x.year() as f64 * 12.0 + x.month() as f64;
    let dates: f64 = (0..3).map(|i| (-0.1 * (m(pred[i]) - m(truth[i])).abs()).exp()).sum();
    let mut agree = 0.0;
    let mut consistent = 0;
    for (a, b) in [(1u8, 2u8), (1, 3), (2, 3)] {
        let first = pos(stated, a) < pos(stated, b);
        if first == (pos(gt, a) < pos(gt, b)) {
            agree += 1.0;
        }
        let (x, y) = (m(pred[a as usize - 1]), m(pred[b as usize - 1]));
        if x == y || (x < y) == first {
            consistent += 1;
        }
    }
    let p_incon = [0.2, 0.4, 0.7, 1.0][consistent];
    let (a, b, c) = (m(pred[0]), m(pred[1]), m(pred[2]));
    let p_div = if (a == b && b == c) || (b - a == 1.0 && c - b == 1.0 && stated == [1, 2, 3]) { 0.2 } else { 1.0 };
    ((0.2 * dates + 0.4 * agree / 3.0) * p_incon * p_div, p_incon, p_div)
}

fn ordering_oracle() -> Outcome {
    let cfg = RewardConfig::default();
    let policy = AlphaPolicy::strict(0.1, 3);
    let truth = [d("2020-06"), d("2019-12"), d("2020-09")];
    let date_sets = [
        [d("2020-05"), d("2020-01"), d("2020-09")],
        [d("2020-01"), d("2020-02"), d("2020-03")],
        [d("2020-04"), d("2020-04"), d("2020-04")],
    ];
    let mut incon_seen = std::collections::BTreeSet::new();
    let mut div_seen = std::collections::BTreeSet::new();
    let mut n = 0;
    for pred in date_sets {
        for stated in Permutation::all() {
            for gt_order in Permutation::all() {
                let gt = GroundTruth { dates: truth.to_vec(), order: Some(gt_order), ..Default::default() };
                let ans = OrderingAnswer { dates: pred, order: stated };
                let got = score_ordering(&ans, &gt, &policy, &cfg).map_err(|e| e.to_string())?;
                let (want, p_incon, p_div) = ordering_oracle_value(pred, truth, stated.as_array(), gt_order.as_array());
                ensure((got.r_acc - want).abs() < 1e-12, || format!("{pred:?} {stated} {gt_order}: {} vs {want}", got.r_acc))?;
                incon_seen.insert((p_incon * 10.0) as i32);
                div_seen.insert((p_div * 10.0) as i32);
                n += 1;
            }
        }
    }
    ensure(incon_seen.len() == 4, || format!("P_incon branches seen {incon_seen:?}"))?;
    ensure(div_seen.len() == 2, || format!("P_div branches seen {div_seen:?}"))?;
    Ok(format!("{n} cases (36 pairs x 3 date sets), 4 P_incon and 2 P_div branches"))
}

// ---------------------------------------------------------------- consistency identities

fn consistency() -> Outcome {
    let cfg = RewardConfig::default();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..10_000 {
        let (a, b) = (random_date(&mut rng), random_date(&mut rng));
        let delta = (a.ordinal() - b.ordinal()).unsigned_abs() as u32;
        let gt = GroundTruth { dates: vec![a, b], delta_months: Some(delta), ..Default::default() };
        let ans = DifferenceAnswer { dates: [a, b], delta_months: delta };
        let f = score_difference(&ans, &gt, &AlphaPolicy::uniform(0.085, 2).unwrap(), &cfg).unwrap().factors;
        ensure(f.p_incon == Some(1.0), || format!("difference {a} {b}: {:?}", f.p_incon))?;

        let dates = [random_date(&mut rng), random_date(&mut rng), random_date(&mut rng)];
        let order = Permutation::sorting(&dates);
        let gt = GroundTruth { dates: dates.to_vec(), order: Some(order), ..Default::default() };
        let f = score_ordering(&OrderingAnswer { dates, order }, &gt, &AlphaPolicy::strict(0.1, 3), &cfg)
            .unwrap()
            .factors;
        ensure(f.p_incon == Some(1.0), || format!("ordering {dates:?}: {:?}", f.p_incon))?;
    }
    Ok("10000 difference and 10000 ordering cases give P_incon = 1".into())
}

// ---------------------------------------------------------------- curriculum

fn curriculum() -> Outcome {
    let hard = |phase, s| alpha_for(Difficulty::NormalHard, &CurriculumState::at(phase, s)).unwrap();
    let easy = |phase, s| alpha_for(Difficulty::Easy, &CurriculumState::at(phase, s)).unwrap();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
    ensure(close(hard(Phase::P3, 0), 0.07), || format!("s=0: {}", hard(Phase::P3, 0)))?;
    ensure(close(hard(Phase::P3, 25), 0.085), || format!("s=25: {}", hard(Phase::P3, 25)))?;
    for s in [50, 51, 100, 1000, u32::MAX] {
        ensure(close(hard(Phase::P3, s), 0.1), || format!("s={s}: {}", hard(Phase::P3, s)))?;
    }
    for s in 0..200 {
        for phase in [Phase::P1, Phase::P2, Phase::P3, Phase::Eval] {
            ensure(close(easy(phase, s), 0.1), || format!("easy {phase} {s}"))?;
        }
        ensure(close(hard(Phase::Eval, s), 0.1), || format!("eval hard {s}"))?;
        let unset = alpha_for(Difficulty::Unset, &CurriculumState::at(Phase::Eval, s)).unwrap();
        ensure(close(unset, 0.1), || format!("eval unset {s}"))?;
    }
    Ok("P3 hard 0.07 / 0.085 / 0.1; easy and eval 0.1 everywhere".into())
}

// ---------------------------------------------------------------- grpo

fn grpo() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10_000 {
        let k = rng.random_range(2..12);
        let rewards: Vec<f64> = (0..k).map(|_| rng.random_range(-0.8..1.1)).collect();
        let adv = group_advantages(&rewards).unwrap();
        let scale: f64 = rewards.iter().map(|r| r.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let sum: f64 = adv.iter().sum();
        ensure(sum.abs() <= 1e-12 * scale, || format!("sum {sum} for {rewards:?}"))?;

        let shift = rng.random_range(-3.0..3.0);
        let rollouts = |c: f64| {
            let rs = rewards
                .iter()
                .map(|&r| Rollout {
                    reward: r + c,
                    logprob_current: -1.0 + 0.1 * r,
                    logprob_reference: -1.0,
                })
                .collect();
            RolloutGroup::new("g", rs).unwrap()
        };
        let (o1, o2) = (
            objective_value(&rollouts(0.0), 0.2, 0.001).unwrap(),
            objective_value(&rollouts(shift), 0.2, 0.001).unwrap(),
        );
        ensure((o1 - o2).abs() < 1e-12, || format!("objective {o1} vs {o2} under shift {shift}"))?;
    }
    let c1 = clipped_term(1.5f64, 1.0, 0.2).unwrap();
    let c2 = clipped_term(0.5f64, -1.0, 0.2).unwrap();
    ensure((c1 - 1.2).abs() < 1e-12, || format!("(1.5, 1.0) -> {c1}"))?;
    ensure((c2 + 0.8).abs() < 1e-12, || format!("(0.5, -1.0) -> {c2}"))?;
    Ok("zero-sum and shift invariance over 10000 groups; clipped 1.2 / -0.8".into())
}

// ---------------------------------------------------------------- penalties

fn penalties() -> Outcome {
    let cfg = ShapingConfig::default();
    let lp = |n| length_penalty::<f64>(n, &cfg);
    ensure(lp(900) == 0.0, || format!("900 -> {}", lp(900)))?;
    ensure((lp(962) - 0.15).abs() < 1e-12, || format!("962 -> {}", lp(962)))?;
    for n in [1024, 1025, 5000] {
        ensure((lp(n) - 0.3).abs() < 1e-12, || format!("{n} -> {}", lp(n)))?;
    }

    // Long and repetitive at once: the combined penalty is the larger, not the sum.
    let engine = EngineConfig::default();
    let rec = record("r", TaskKind::Inference, vec![d("2020-05")], Difficulty::Easy);
    let raw = format!("<think>{}</think><answer>2020-05</answer>", "same words again ".repeat(330));
    let s = score_response(&rec, &raw, &ScoringContext::eval(), &engine).map_err(|e| e.to_string())?;
    let (pl, pr) = (s.diagnostics.p_length, s.diagnostics.repetition.penalty);
    ensure(pl > 0.0 && pr > 0.0, || format!("both must be active: {pl} {pr}"))?;
    ensure(s.p_len_rep == pl.max(pr) && s.p_len_rep < pl + pr, || format!("{} vs {pl} {pr}", s.p_len_rep))?;

    let rep = repetition_penalty::<f64>(REPETITIVE_THINK, &RepetitionConfig::default());
    ensure(rep.phrase_repeat > 0.0, || format!("phrase_repeat {rep:?}"))?;
    let raw = format!("<think>{REPETITIVE_THINK}</think><answer>2024-06</answer>");
    ensure(extract_sections(&raw).answer_text.as_deref() == Some("2024-06"), || "answer span".into())?;
    Ok(format!(
        "length 0 / 0.15 / 0.3; max({pl:.3}, {pr:.3}) = {:.3}; repeated-phrase example phrase_repeat {:.3}",
        s.p_len_rep, rep.phrase_repeat
    ))
}

// ---------------------------------------------------------------- geneval

fn geneval() -> Outcome {
    let unit = |dim: usize, i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Embedding::new(v).unwrap()
    };
    let x: Vec<Embedding> = (0..5).map(|i| unit(10, i)).collect();
    let y: Vec<Embedding> = (5..10).map(|i| unit(10, i)).collect();
    let xr: Vec<&Embedding> = x.iter().collect();
    let yr: Vec<&Embedding> = y.iter().collect();
    let same = avg_max_sim(&xr, &xr).unwrap().avg_max_sim;
    ensure((same - 1.0).abs() < 1e-12, || format!("self {same}"))?;
    let orth = avg_max_sim(&xr, &yr).unwrap().avg_max_sim;
    ensure(orth == 0.0, || format!("orthogonal {orth}"))?;

    let hashing = HashingEmbedder::default();
    let texts: Vec<String> = (0..30).map(|i| format!("story {i} about markets and {} policy", i % 7)).collect();
    let embs: Vec<Embedding> = temporal_reward::geneval::Embedder::embed(&hashing, &texts).unwrap();
    let (gen, real) = embs.split_at(12);
    let g: Vec<&Embedding> = gen.iter().collect();
    let mut r: Vec<&Embedding> = real.iter().collect();
    let base = avg_max_sim(&g, &r).unwrap().avg_max_sim;
    r.extend(real.iter().take(5));
    let dup = avg_max_sim(&g, &r).unwrap().avg_max_sim;
    ensure(base == dup, || format!("duplicates changed {base} -> {dup}"))?;

    let a = greedy_diverse_subset(&g, 5).unwrap();
    let b = greedy_diverse_subset(&g, 5).unwrap();
    ensure(a == b, || "greedy filter not deterministic".into())?;

    let cfg = GenevalConfig::default();
    let month = d("2025-01");
    let mut items: Vec<NewsItem<f64>> = Vec::new();
    for theme in &cfg.themes {
        for k in 0..12 {
            items.push(NewsItem {
                theme: Some(theme.clone()),
                month,
                headline: format!("{theme} development number {k}"),
                abstract_text: format!("details {} and {}", k * 3, k % 4),
                embedding: None,
            });
        }
    }
    embed_items(&mut items, &hashing).unwrap();
    let once = filter_generated(&items, &cfg).unwrap();
    let twice = filter_generated(&items, &cfg).unwrap();
    ensure(once == twice, || "filter output differs between runs".into())?;
    ensure(once.items.len() == 40 && once.short_buckets.is_empty(), || format!("N_g = {}", once.items.len()))?;
    Ok(format!("self 1.0, orthogonal 0.0, duplicate-stable {base:.4}, N_g = {}", once.items.len()))
}

// ---------------------------------------------------------------- cli determinism

fn write_corpus(dir: &Path, rows: usize) -> (Vec<BenchRecord>, Vec<(String, String)>) {
    let mut rng = StdRng::seed_from_u64(99);
    let mut records = Vec::new();
    for i in 0..2000 {
        let (rec, _) = random_record(&mut rng, i);
        records.push(rec);
    }
    let mut lines = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..rows {
        let rec = &records[i % records.len()];
        let response = random_response(&mut rng, rec.task);
        let row = serde_json::json!({
            "record_id": rec.id,
            "group_id": format!("g{}", i / 5),
            "response": response,
            "phase": "eval",
        });
        lines.push(row.to_string());
        pairs.push((rec.id.clone(), response));
    }
    let recs: String = records.iter().map(|r| to_json_line(r) + "\n").collect();
    std::fs::write(dir.join("records.jsonl"), recs).unwrap();
    std::fs::write(dir.join("rows.jsonl"), lines.join("\n") + "\n").unwrap();
    (records, pairs)
}

fn run_score(dir: &Path, out: &str) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_treward"))
        .arg("score")
        .arg("--records")
        .arg(dir.join("records.jsonl"))
        .arg("--input")
        .arg(dir.join("rows.jsonl"))
        .arg("--output")
        .arg(dir.join(out))
        .arg("--quiet")
        .status()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(status.code() == Some(0), || format!("exit {status}"))?;
    Ok(elapsed)
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let n = 10_000;
    let (records, pairs) = write_corpus(dir.path(), n);
    let t1 = run_score(dir.path(), "a.jsonl")?;
    let t2 = run_score(dir.path(), "b.jsonl")?;
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    ensure(a == b, || "outputs differ".into())?;
    let lines: Vec<&str> = std::str::from_utf8(&a).unwrap().lines().collect();
    ensure(lines.len() == n, || format!("{} output lines", lines.len()))?;

    // Output totals equal the library's, bit for bit.
    let cfg = EngineConfig::default();
    let index: std::collections::HashMap<&str, &BenchRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    for (line, (id, response)) in lines.iter().zip(&pairs).step_by(97) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let lib = score_response(index[id.as_str()], response, &ScoringContext::eval(), &cfg).unwrap();
        ensure(v["sample"]["total"].as_f64() == Some(lib.total), || format!("{id}: cli {} lib {}", v["sample"]["total"], lib.total))?;
    }

    let best = t1.min(t2);
    let rate = n as f64 / best.as_secs_f64();
    let soft = if rate >= 10_000.0 { "met" } else { "not met in this build" };
    Ok(format!("{n} rows byte-identical; {rate:.0} rows/s end to end (10k/s soft target {soft})"))
}

// ---------------------------------------------------------------- driver

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("golden scores", golden),
        ("reward bounds fuzz", fuzz),
        ("monotonicity", monotonicity),
        ("ordering brute-force oracle", ordering_oracle),
        ("consistency identities", consistency),
        ("curriculum schedule", curriculum),
        ("grpo numerics", grpo),
        ("penalties", penalties),
        ("geneval properties", geneval),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
