use rand_chacha::ChaCha8Rng;

use super::{Entry, Evaluator, HillClimbTrace, Individual, SearchConfig};
use crate::operators::EditSpace;
use crate::patch::Patch;

/// Proposals allowed per evaluation of budget; bounds runs whose
/// neighbours keep hitting the fitness cache.
const PROPOSALS_PER_EVALUATION: usize = 10;

/// First-improvement hill climbing on the single configured objective.
/// Returns the trace and the best individual seen.
pub(crate) fn hill_climb(
    config: &SearchConfig,
    space: &EditSpace,
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> (HillClimbTrace, Individual) {
    let objective = config.objectives[0];
    let score = |i: &Individual| objective.of(&i.summary);
    let start = eval
        .evaluate_one(Patch::empty())
        .unwrap_or_else(|| Individual::from_samples(Patch::empty(), Vec::new()));
    let mut current = start.clone();
    let mut best = start.clone();
    let mut trace = HillClimbTrace {
        accepted: Vec::new(),
        restarts: 0,
        proposals: 0,
    };
    let mut rejections = 0;
    let cap = config
        .evaluation_budget
        .saturating_mul(PROPOSALS_PER_EVALUATION);
    while !eval.exhausted() && trace.proposals < cap {
        trace.proposals += 1;
        let proposal = space.mutate(&current.patch, rng);
        let Some(next) = eval.evaluate_one(proposal) else {
            break;
        };
        if next.valid && (!current.valid || score(&next) < score(&current)) {
            trace.accepted.push(Entry {
                patch: next.patch.clone(),
                summary: next.summary,
            });
            if !best.valid || score(&next) < score(&best) {
                best = next.clone();
            }
            current = next;
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= config.restart_after {
                current = start.clone();
                rejections = 0;
                trace.restarts += 1;
            }
        }
    }
    (trace, best)
}
