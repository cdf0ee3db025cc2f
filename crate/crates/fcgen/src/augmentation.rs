//! Running augmentation over a corpus: choosing samples, building prompts,
//! collecting continuations (live or from an exchange file) and assembling
//! the new sentences.

use std::collections::BTreeMap;

use fcgen_core::{
    accept_continuation, clip, normalize_comment, select_for_augmentation, AugmentedSample, ClipResult, ContinuationPool,
    DepGraph, ResolvedSpan,
};
use serde::Serialize;

use crate::exchange::PromptRecord;
use crate::genclient::{run_bounded, GenError, GenerationRequest, Generator};
use crate::io::{Reject, ResolvedRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentSettings {
    pub group_skip: usize,
    pub per_sample_min: usize,
    pub per_sample_max: usize,
    /// Requests allowed after the first one for a sample that is still
    /// below `per_sample_min`.
    pub top_up_rounds: usize,
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
    pub parallelism: usize,
}

/// A sample chosen for augmentation together with its prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub id: usize,
    pub span: ResolvedSpan,
    pub clip: ClipResult,
    /// Normalized comment copied to every generated sentence.
    pub comment: String,
}

impl Plan {
    pub fn prompt(&self) -> String {
        self.clip.prompt()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlanReport {
    pub records: usize,
    pub augment: usize,
    pub skip: usize,
    /// Signature-group size mapped to the number of groups of that size.
    pub group_histogram: BTreeMap<usize, usize>,
    /// Augmentable samples that could not be clipped.
    pub unplanned: Vec<Reject>,
}

/// Selects samples by comment signature and clips each augmentable one.
/// Records without a comment are ignored; records without a usable parse
/// are listed in `unplanned`.
pub fn build_plans(records: &[ResolvedRecord], graphs: &BTreeMap<usize, DepGraph>, group_skip: usize) -> (Vec<Plan>, PlanReport) {
    let commented: Vec<(&ResolvedRecord, String)> = records
        .iter()
        .filter_map(|r| r.sample.comment.as_deref().map(|c| (r, normalize_comment(c))))
        .collect();
    let comments: Vec<&str> = commented.iter().map(|(_, c)| c.as_str()).collect();
    let selection = select_for_augmentation(&comments, group_skip);
    let mut report = PlanReport {
        records: commented.len(),
        augment: selection.augment.len(),
        skip: selection.skip.len(),
        group_histogram: selection.histogram(),
        unplanned: Vec::new(),
    };
    let mut plans = Vec::with_capacity(selection.augment.len());
    for &i in &selection.augment {
        let (rec, comment) = &commented[i];
        let Some(graph) = graphs.get(&rec.id) else {
            report.unplanned.push(Reject { line_no: rec.id, reason: "no aligned dependency parse".into() });
            continue;
        };
        let words: Vec<&str> = rec.sample.text.split_whitespace().collect();
        match clip(&words, graph, rec.span) {
            Ok(c) => plans.push(Plan { id: rec.id, span: rec.span, clip: c, comment: comment.clone() }),
            Err(e) => report.unplanned.push(Reject { line_no: rec.id, reason: e.to_string() }),
        }
    }
    (plans, report)
}

pub fn prompt_records(plans: &[Plan], settings: &AugmentSettings) -> Vec<PromptRecord> {
    plans.iter().map(|p| PromptRecord { id: p.id, prompt: p.prompt(), n: settings.per_sample_max }).collect()
}

/// Seed of the `round`-th request for sample `id`, derived from the run seed.
pub fn request_seed(run_seed: u64, id: usize, round: usize) -> u64 {
    let mut x = run_seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (round as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fill_pool<S: AsRef<str>>(plan: &Plan, raw: &[S], settings: &AugmentSettings) -> ContinuationPool {
    let prompt = plan.prompt();
    let mut pool = ContinuationPool::new(settings.per_sample_min, settings.per_sample_max);
    for r in raw {
        if let Some(c) = accept_continuation(&prompt, r.as_ref(), settings.max_new_tokens) {
            pool.offer(&c);
        }
    }
    pool
}

#[derive(Debug, Clone)]
pub struct LiveRun {
    /// Every raw continuation received, per sample, in arrival order.
    pub responses: BTreeMap<usize, Vec<String>>,
    pub requests: usize,
    pub model_ids: Vec<String>,
    pub failures: Vec<(usize, GenError)>,
}

/// Asks `generator` for continuations: the first request per sample asks
/// for `per_sample_max`, later ones for what is still missing, until the
/// sample has `per_sample_min` accepted or the top-up budget runs out.
pub fn collect_live(plans: &[Plan], generator: &dyn Generator, settings: &AugmentSettings) -> LiveRun {
    struct One {
        raw: Vec<String>,
        requests: usize,
        model_ids: Vec<String>,
        error: Option<GenError>,
    }
    let results = run_bounded(plans, settings.parallelism, |plan| {
        let mut one = One { raw: Vec::new(), requests: 0, model_ids: Vec::new(), error: None };
        let mut pool = ContinuationPool::new(settings.per_sample_min, settings.per_sample_max);
        for round in 0..=settings.top_up_rounds {
            let request = GenerationRequest {
                prompt: plan.prompt(),
                n: pool.remaining(),
                max_new_tokens: settings.max_new_tokens,
                temperature: settings.temperature,
                seed: Some(request_seed(settings.seed, plan.id, round)),
            };
            one.requests += 1;
            match generator.generate(&request) {
                Ok(resp) => {
                    if !one.model_ids.contains(&resp.model_id) {
                        one.model_ids.push(resp.model_id);
                    }
                    for r in &resp.continuations {
                        if let Some(c) = accept_continuation(&request.prompt, r, settings.max_new_tokens) {
                            pool.offer(&c);
                        }
                    }
                    one.raw.extend(resp.continuations);
                }
                Err(e) => {
                    one.error = Some(e);
                    break;
                }
            }
            if !pool.needs_more() {
                break;
            }
        }
        one
    });

    let mut run = LiveRun { responses: BTreeMap::new(), requests: 0, model_ids: Vec::new(), failures: Vec::new() };
    for (plan, one) in plans.iter().zip(results) {
        run.requests += one.requests;
        for m in one.model_ids {
            if !run.model_ids.contains(&m) {
                run.model_ids.push(m);
            }
        }
        if let Some(e) = one.error {
            run.failures.push((plan.id, e));
        }
        run.responses.insert(plan.id, one.raw);
    }
    run.model_ids.sort();
    run
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Underfilled {
    pub id: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Assembled {
    pub samples: Vec<AugmentedSample>,
    pub underfilled: Vec<Underfilled>,
}

/// Filters each plan's raw continuations and builds the augmented samples.
/// Plans without a response contribute nothing and are not reported here;
/// the caller knows which ids were missing. Output is ordered by base id,
/// then as [`fcgen_core::augment::assemble`] orders it.
pub fn assemble_all(plans: &[Plan], responses: &BTreeMap<usize, Vec<String>>, settings: &AugmentSettings) -> Assembled {
    let mut out = Assembled::default();
    let mut ordered: Vec<&Plan> = plans.iter().collect();
    ordered.sort_by_key(|p| p.id);
    for plan in ordered {
        let Some(raw) = responses.get(&plan.id) else { continue };
        let pool = fill_pool(plan, raw, settings);
        if pool.needs_more() {
            log::warn!("sample {} has only {} accepted continuations", plan.id, pool.len());
            out.underfilled.push(Underfilled { id: plan.id, accepted: pool.len() });
        }
        out.samples.extend(pool.assemble(plan.id, plan.span, &plan.clip, &plan.comment));
    }
    out
}
