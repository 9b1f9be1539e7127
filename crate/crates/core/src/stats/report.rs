//! Aggregate comparison of search runs against the original program.
//!
//! Records are grouped by benchmark, then by algorithm. Normalization
//! bounds for hypervolume come from every observation on the benchmark,
//! across all algorithms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{hypervolume_normalized, mann_whitney_u, median, vargha_delaney_a, EffectLabel};
use crate::interp::FitnessVector;
use crate::search::{Algorithm, Objective, RunRecord};

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no records to compare")]
    Empty,
    #[error("records mix benchmarks `{0}` and `{1}`")]
    MixedBenchmarks(String, String),
    #[error("baseline has no samples")]
    NoBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl Distribution {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        Some(Distribution {
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            median: median(xs),
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSummary {
    pub objective: Objective,
    pub baseline_median: f64,
    /// Runs whose best front member on this objective is a significant
    /// improvement over the baseline samples.
    pub improved_runs: usize,
    /// Largest relative reduction seen, in percent. `None` when the
    /// baseline median is zero or no run found a valid patch.
    pub best_improvement_pct: Option<f64>,
    /// A-measure of baseline samples against the per-run best medians;
    /// above 0.5 means the search lowered the objective.
    pub a_measure: Option<f64>,
    pub effect: Option<EffectLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub no_valid_runs: usize,
    /// Runs whose front weakly dominates some oracle's fitness.
    pub rediscovered: usize,
    pub objectives: Vec<ObjectiveSummary>,
    /// Normalized hypervolume per run, in seed order.
    pub hv_runs: Vec<f64>,
    pub hv_median: f64,
    /// Normalized hypervolume of the union of all fronts.
    pub hv_union: f64,
    pub wall_seconds: Distribution,
    pub evaluations: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    pub baseline: FitnessVector,
    /// Per objective (best, worst) across every observation.
    pub bounds: Vec<(f64, f64)>,
    /// Objectives kept for hypervolume; those with a zero range are dropped.
    pub hv_objectives: Vec<Objective>,
    pub algorithms: Vec<AlgorithmReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub benchmarks: Vec<BenchmarkReport>,
}

fn column(samples: &[FitnessVector], o: Objective) -> Vec<f64> {
    samples.iter().map(|s| o.of(s)).collect()
}

fn improved(baseline: &[f64], candidate: &[f64]) -> bool {
    match mann_whitney_u(baseline, candidate, ALPHA) {
        Ok(t) => t.improved,
        // too few repeats for a rank test
        Err(_) => median(candidate) < median(baseline),
    }
}

/// Compares runs of one benchmark against `baseline` samples.
pub fn compare_runs(
    records: &[RunRecord],
    baseline: &[FitnessVector],
) -> Result<BenchmarkReport, ReportError> {
    let first = records.first().ok_or(ReportError::Empty)?;
    if let Some(r) = records.iter().find(|r| r.benchmark != first.benchmark) {
        return Err(ReportError::MixedBenchmarks(
            first.benchmark.clone(),
            r.benchmark.clone(),
        ));
    }
    if baseline.is_empty() {
        return Err(ReportError::NoBaseline);
    }
    let base_median = FitnessVector::new(
        median(&column(baseline, Objective::Steps)),
        median(&column(baseline, Objective::Memory)),
        median(&column(baseline, Objective::Net)),
    );

    let observed: Vec<&FitnessVector> = baseline
        .iter()
        .chain(
            records
                .iter()
                .flat_map(|r| r.front.iter().flat_map(|e| &e.samples)),
        )
        .collect();
    let bounds: Vec<(f64, f64)> = Objective::ALL
        .iter()
        .map(|&o| {
            observed
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(o.of(s)), hi.max(o.of(s)))
                })
        })
        .collect();
    let kept: Vec<usize> = (0..3).filter(|&k| bounds[k].1 > bounds[k].0).collect();
    let kept_bounds: Vec<(f64, f64)> = kept.iter().map(|&k| bounds[k]).collect();
    let hv = |summaries: &[FitnessVector]| -> f64 {
        if kept.is_empty() {
            return 0.0;
        }
        let pts: Vec<Vec<f64>> = summaries
            .iter()
            .map(|s| kept.iter().map(|&k| s.as_array()[k]).collect())
            .collect();
        hypervolume_normalized(&pts, &kept_bounds).normalized
    };

    let mut by_algorithm: BTreeMap<Algorithm, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_algorithm.entry(r.config.algorithm).or_default().push(r);
    }
    let mut algorithms = Vec::new();
    for (algorithm, mut runs) in by_algorithm {
        runs.sort_by_key(|r| r.config.seed);
        let objectives = Objective::ALL
            .iter()
            .map(|&o| {
                let base = column(baseline, o);
                let base_med = o.of(&base_median);
                let mut improved_runs = 0;
                let mut bests = Vec::new();
                for r in &runs {
                    let Some(best) = r
                        .front
                        .iter()
                        .min_by(|a, b| o.of(&a.summary).total_cmp(&o.of(&b.summary)))
                    else {
                        continue;
                    };
                    improved_runs += improved(&base, &column(&best.samples, o)) as usize;
                    bests.push(o.of(&best.summary));
                }
                let best_improvement_pct = match bests.iter().copied().reduce(f64::min) {
                    Some(b) if base_med > 0.0 => Some((base_med - b) / base_med * 100.0),
                    _ => None,
                };
                let (a_measure, effect) = if bests.is_empty() {
                    (None, None)
                } else {
                    let (a, label) = vargha_delaney_a(&base, &bests);
                    (Some(a), Some(label))
                };
                ObjectiveSummary {
                    objective: o,
                    baseline_median: base_med,
                    improved_runs,
                    best_improvement_pct,
                    a_measure,
                    effect,
                }
            })
            .collect();
        let hv_runs: Vec<f64> = runs
            .iter()
            .map(|r| hv(&r.front.iter().map(|e| e.summary).collect::<Vec<_>>()))
            .collect();
        let union: Vec<FitnessVector> = runs
            .iter()
            .flat_map(|r| r.front.iter().map(|e| e.summary))
            .collect();
        let walls: Vec<f64> = runs.iter().map(|r| r.wall_seconds).collect();
        let evals: Vec<f64> = runs.iter().map(|r| r.evaluations_used as f64).collect();
        algorithms.push(AlgorithmReport {
            algorithm,
            runs: runs.len(),
            seeds: runs.iter().map(|r| r.config.seed).collect(),
            no_valid_runs: runs.iter().filter(|r| r.no_valid).count(),
            rediscovered: runs
                .iter()
                .filter(|r| {
                    r.oracles
                        .iter()
                        .any(|o| r.front_weakly_dominates(&o.fitness))
                })
                .count(),
            objectives,
            hv_median: median(&hv_runs),
            hv_runs,
            hv_union: hv(&union),
            wall_seconds: Distribution::of(&walls).expect("at least one run"),
            evaluations: Distribution::of(&evals).expect("at least one run"),
        });
    }
    Ok(BenchmarkReport {
        benchmark: first.benchmark.clone(),
        baseline: base_median,
        bounds,
        hv_objectives: kept.iter().map(|&k| Objective::ALL[k]).collect(),
        algorithms,
    })
}

/// Groups records by benchmark and compares each group against the
/// baseline samples stored in its first record.
pub fn analyze(records: &[RunRecord]) -> Result<Report, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut groups: BTreeMap<&str, Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.benchmark).or_default().push(r.clone());
    }
    let benchmarks = groups
        .into_values()
        .map(|rs| {
            let baseline = rs[0].baseline.clone();
            compare_runs(&rs, &baseline)
        })
        .collect::<Result<_, _>>()?;
    Ok(Report { benchmarks })
}

#[derive(Serialize)]
struct HvRow<'a> {
    benchmark: &'a str,
    algorithm: &'static str,
    runs: usize,
    hv_median: f64,
    hv_min: f64,
    hv_max: f64,
    hv_union: f64,
}

#[derive(Serialize)]
struct EffectRow<'a> {
    benchmark: &'a str,
    algorithm: &'static str,
    objective: &'static str,
    a_measure: Option<f64>,
    effect: Option<String>,
}

#[derive(Serialize)]
struct ImprovementRow<'a> {
    benchmark: &'a str,
    algorithm: &'static str,
    runs: usize,
    rediscovered: usize,
    no_valid_runs: usize,
    steps_improved: usize,
    memory_improved: usize,
    net_improved: usize,
    steps_best_pct: Option<f64>,
    memory_best_pct: Option<f64>,
    net_best_pct: Option<f64>,
}

#[derive(Serialize)]
struct CostRow<'a> {
    benchmark: &'a str,
    algorithm: &'static str,
    runs: usize,
    wall_min: f64,
    wall_median: f64,
    wall_mean: f64,
    wall_max: f64,
    evaluations_median: f64,
}

#[derive(Serialize)]
struct FrontRow {
    algorithm: &'static str,
    seed: u64,
    steps: f64,
    peak_bytes: f64,
    net_bytes: f64,
    patch: String,
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    fn rows(&self) -> impl Iterator<Item = (&BenchmarkReport, &AlgorithmReport)> {
        self.benchmarks
            .iter()
            .flat_map(|b| b.algorithms.iter().map(move |a| (b, a)))
    }

    pub fn hv_csv(&self) -> String {
        to_csv(self.rows().map(|(b, a)| HvRow {
            benchmark: &b.benchmark,
            algorithm: a.algorithm.name(),
            runs: a.runs,
            hv_median: a.hv_median,
            hv_min: a.hv_runs.iter().copied().fold(f64::INFINITY, f64::min),
            hv_max: a.hv_runs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            hv_union: a.hv_union,
        }))
    }

    pub fn effects_csv(&self) -> String {
        to_csv(self.rows().flat_map(|(b, a)| {
            a.objectives.iter().map(move |o| EffectRow {
                benchmark: &b.benchmark,
                algorithm: a.algorithm.name(),
                objective: o.objective.name(),
                a_measure: o.a_measure,
                effect: o.effect.map(|e| e.to_string()),
            })
        }))
    }

    pub fn improvements_csv(&self) -> String {
        to_csv(self.rows().map(|(b, a)| {
            let o = |k: usize| &a.objectives[k];
            ImprovementRow {
                benchmark: &b.benchmark,
                algorithm: a.algorithm.name(),
                runs: a.runs,
                rediscovered: a.rediscovered,
                no_valid_runs: a.no_valid_runs,
                steps_improved: o(0).improved_runs,
                memory_improved: o(1).improved_runs,
                net_improved: o(2).improved_runs,
                steps_best_pct: o(0).best_improvement_pct,
                memory_best_pct: o(1).best_improvement_pct,
                net_best_pct: o(2).best_improvement_pct,
            }
        }))
    }

    pub fn cost_csv(&self) -> String {
        to_csv(self.rows().map(|(b, a)| CostRow {
            benchmark: &b.benchmark,
            algorithm: a.algorithm.name(),
            runs: a.runs,
            wall_min: a.wall_seconds.min,
            wall_median: a.wall_seconds.median,
            wall_mean: a.wall_seconds.mean,
            wall_max: a.wall_seconds.max,
            evaluations_median: a.evaluations.median,
        }))
    }
}

/// Front points of every record, one row per front member, for plotting.
/// Callers pass records of a single benchmark.
pub fn fronts_csv(records: &[RunRecord]) -> String {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.config.algorithm, r.config.seed));
    to_csv(sorted.into_iter().flat_map(|r| {
        r.front.iter().map(move |e| FrontRow {
            algorithm: r.config.algorithm.name(),
            seed: r.config.seed,
            steps: e.summary.steps,
            peak_bytes: e.summary.peak_bytes,
            net_bytes: e.summary.net_bytes,
            patch: e.patch.to_string().trim_end().replace('\n', "; "),
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::NodeId;
    use crate::patch::{Edit, Patch};
    use crate::search::{FrontEntry, OracleFitness, SearchConfig};

    fn samples(f: FitnessVector) -> Vec<FitnessVector> {
        vec![f; 5]
    }

    fn record(
        bench: &str,
        algorithm: Algorithm,
        seed: u64,
        base: FitnessVector,
        front: &[FitnessVector],
    ) -> RunRecord {
        RunRecord {
            benchmark: bench.to_string(),
            config: SearchConfig {
                algorithm,
                seed,
                ..Default::default()
            },
            baseline: samples(base),
            oracles: vec![OracleFitness {
                name: "o".into(),
                fitness: FitnessVector::new(50.0, 50.0, 5.0),
            }],
            generations: Vec::new(),
            evaluations_used: 400,
            wall_seconds: 0.0,
            front: front
                .iter()
                .enumerate()
                .map(|(i, &f)| FrontEntry {
                    patch: Patch::new(vec![Edit::Delete {
                        target: NodeId(i as u32),
                    }]),
                    samples: samples(f),
                    summary: f,
                })
                .collect(),
            no_valid: front.is_empty(),
            hill_climb: None,
        }
    }

    const BASE: FitnessVector = FitnessVector {
        steps: 100.0,
        peak_bytes: 80.0,
        net_bytes: 10.0,
        valid: true,
    };

    #[test]
    fn baseline_fronts_give_nothing() {
        let rs = vec![
            record("b", Algorithm::Nsga2, 0, BASE, &[BASE]),
            record("b", Algorithm::Nsga2, 1, BASE, &[BASE]),
        ];
        let r = compare_runs(&rs, &samples(BASE)).unwrap();
        let a = &r.algorithms[0];
        assert!(a.objectives.iter().all(|o| o.improved_runs == 0));
        assert!(a
            .objectives
            .iter()
            .all(|o| o.best_improvement_pct == Some(0.0)));
        assert!(a
            .objectives
            .iter()
            .all(|o| o.effect == Some(EffectLabel::N)));
        assert_eq!(a.hv_runs, vec![0.0, 0.0]);
        assert_eq!(a.hv_union, 0.0);
        assert!(r.hv_objectives.is_empty());
        assert_eq!(a.rediscovered, 0);
    }

    #[test]
    fn dominating_run_counts_once() {
        let better = FitnessVector::new(50.0, 40.0, 5.0);
        let rs = vec![record("b", Algorithm::Spea2, 3, BASE, &[better])];
        let r = compare_runs(&rs, &samples(BASE)).unwrap();
        let a = &r.algorithms[0];
        for o in &a.objectives {
            assert_eq!(o.improved_runs, 1, "{:?}", o.objective);
            assert_eq!(o.best_improvement_pct, Some(50.0));
            assert_eq!(o.a_measure, Some(1.0));
            assert_eq!(o.effect, Some(EffectLabel::L));
        }
        // best maps to 0 and the baseline is the reference: the unit cube
        assert_eq!(a.hv_runs, vec![1.0]);
        assert_eq!(a.rediscovered, 1);
    }

    #[test]
    fn bounds_span_all_algorithms() {
        let rs = vec![
            record(
                "b",
                Algorithm::Nsga2,
                0,
                BASE,
                &[FitnessVector::new(60.0, 80.0, 10.0)],
            ),
            record(
                "b",
                Algorithm::Nsga3,
                0,
                BASE,
                &[FitnessVector::new(80.0, 80.0, 10.0)],
            ),
        ];
        let r = compare_runs(&rs, &samples(BASE)).unwrap();
        assert_eq!(r.hv_objectives, vec![Objective::Steps]);
        assert_eq!(r.bounds[0], (60.0, 100.0));
        assert_eq!(r.algorithms[0].hv_runs, vec![1.0]);
        assert_eq!(r.algorithms[1].hv_runs, vec![0.5]);
    }

    #[test]
    fn invalid_runs_are_counted() {
        let rs = vec![record("b", Algorithm::Nsga2, 0, BASE, &[])];
        let r = compare_runs(&rs, &samples(BASE)).unwrap();
        let a = &r.algorithms[0];
        assert_eq!(a.no_valid_runs, 1);
        assert_eq!(a.objectives[0].a_measure, None);
        assert_eq!(a.objectives[0].best_improvement_pct, None);
    }

    #[test]
    fn few_repeats_fall_back_to_medians() {
        assert!(improved(&[3.0, 3.0], &[2.0]));
        assert!(!improved(&[3.0], &[3.0]));
    }

    #[test]
    fn mixed_benchmarks_rejected_but_analyze_groups() {
        let rs = vec![
            record("a", Algorithm::Nsga2, 0, BASE, &[BASE]),
            record("b", Algorithm::Nsga2, 0, BASE, &[BASE]),
        ];
        assert_eq!(
            compare_runs(&rs, &samples(BASE)),
            Err(ReportError::MixedBenchmarks("a".into(), "b".into()))
        );
        let report = analyze(&rs).unwrap();
        let names: Vec<&str> = report
            .benchmarks
            .iter()
            .map(|b| b.benchmark.as_str())
            .collect();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(analyze(&[]), Err(ReportError::Empty));
    }

    #[test]
    fn csv_layout() {
        let better = FitnessVector::new(50.0, 40.0, 5.0);
        let rs = vec![record("b", Algorithm::Nsga2, 0, BASE, &[better, BASE])];
        let report = analyze(&rs).unwrap();
        let imp = report.improvements_csv();
        let mut lines = imp.lines();
        assert_eq!(
            lines.next().unwrap(),
            "benchmark,algorithm,runs,rediscovered,no_valid_runs,steps_improved,memory_improved,net_improved,\
             steps_best_pct,memory_best_pct,net_best_pct"
        );
        assert_eq!(lines.next().unwrap(), "b,nsga2,1,1,0,1,1,1,50.0,50.0,50.0");
        assert_eq!(report.effects_csv().lines().count(), 4);
        assert!(report
            .hv_csv()
            .starts_with("benchmark,algorithm,runs,hv_median"));
        assert!(report
            .cost_csv()
            .starts_with("benchmark,algorithm,runs,wall_min"));
        let fronts = fronts_csv(&rs);
        assert_eq!(
            fronts.lines().collect::<Vec<_>>(),
            [
                "algorithm,seed,steps,peak_bytes,net_bytes,patch",
                "nsga2,0,50.0,40.0,5.0,DELETE program.mini:0",
                "nsga2,0,100.0,80.0,10.0,DELETE program.mini:1",
            ]
        );
    }
}
