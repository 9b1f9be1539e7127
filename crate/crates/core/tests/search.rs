//! Search runs on the shipped corpus.

use mogi::corpus::Corpus;
use mogi::pareto::dominates;
use mogi::patch::apply;
use mogi::search::{run_search, Algorithm, Objective, SearchConfig};
use rayon::prelude::*;

fn problem(name: &str) -> mogi::search::Problem {
    Corpus::shipped().load(name).unwrap().problem().unwrap()
}

#[test]
fn hill_climbing_finds_the_b2_cache() {
    let p = problem("B2-repeated-call");
    let oracle = p.oracles[0].fitness.steps;
    let hits = (0..20u64)
        .into_par_iter()
        .filter(|&seed| {
            let config = SearchConfig {
                algorithm: Algorithm::Hillclimb,
                objectives: vec![Objective::Steps],
                seed,
                ..Default::default()
            };
            let r = run_search(&config, &p).unwrap();
            r.front.iter().any(|e| e.summary.steps <= oracle)
        })
        .count();
    assert!(hits >= 15, "{hits}/20");
}

#[test]
fn fronts_are_valid_and_mutually_nondominated() {
    let c = Corpus::shipped();
    let names = c.names().unwrap();
    let jobs: Vec<(String, Algorithm)> = names
        .iter()
        .flat_map(|n| Algorithm::MULTI_OBJECTIVE.map(|a| (n.clone(), a)))
        .collect();
    jobs.par_iter().for_each(|(name, algorithm)| {
        let p = problem(name);
        let config = SearchConfig {
            algorithm: *algorithm,
            seed: 1,
            ..Default::default()
        };
        let r = run_search(&config, &p).unwrap();
        assert!(r.evaluations_used <= config.evaluation_budget);
        assert!(!r.front.is_empty(), "{name} {algorithm:?}");
        for e in &r.front {
            assert!(e.summary.valid, "{name}");
            // the stored fitness is what the patch measures now
            let patched = apply(&e.patch, &p.program).result.unwrap();
            let again = mogi::interp::run_tests(&patched, &p.fixtures, p.step_budget).fitness();
            assert_eq!(again, e.summary, "{name} {}", e.patch.key());
        }
        for a in &r.front {
            for b in &r.front {
                let (x, y) = (a.summary.as_array(), b.summary.as_array());
                assert!(!dominates(&x, &y).unwrap(), "{name} {x:?} dominates {y:?}");
            }
        }
    });
}

#[test]
fn best_values_never_regress_across_generations() {
    let p = problem("B4-loop-invariant");
    for algorithm in Algorithm::MULTI_OBJECTIVE {
        let config = SearchConfig {
            algorithm,
            seed: 4,
            ..Default::default()
        };
        let r = run_search(&config, &p).unwrap();
        let best = |g: &mogi::search::Snapshot| {
            let pool = g.archive.as_ref().unwrap_or(&g.population);
            let mut out = [f64::INFINITY; 3];
            for e in pool.iter().filter(|e| e.summary.valid) {
                for (o, v) in out.iter_mut().zip(e.summary.as_array()) {
                    *o = o.min(v);
                }
            }
            out
        };
        for pair in r.generations.windows(2) {
            let (before, after) = (best(&pair[0]), best(&pair[1]));
            for k in 0..3 {
                assert!(after[k] <= before[k], "{algorithm:?} objective {k}");
            }
        }
    }
}

#[test]
fn worker_count_does_not_change_records() {
    let p = problem("B5-repeated-fetch");
    let config = SearchConfig {
        algorithm: Algorithm::Nsga2,
        seed: 9,
        ..Default::default()
    };
    let on = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_search(&config, &p).unwrap().to_json())
    };
    assert_eq!(on(1), on(4));
}
