use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::select::{distinct, objective_points, offspring, rank_and_crowding, tournament};
use super::{entries, initial_population, Evaluator, Individual, SearchConfig, Snapshot};
use crate::operators::EditSpace;
use crate::pareto::fast_nondominated_sort;

/// Divisions per objective axis for the reference directions.
pub const DIVISIONS: usize = 12;

/// All points of the unit simplex in `m` dimensions whose coordinates are
/// multiples of `1/h`.
pub fn das_dennis(m: usize, h: usize) -> Vec<Vec<f64>> {
    fn fill(left: usize, slots: usize, h: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / h as f64).collect());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            fill(left - k, slots - 1, h, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 || h == 0 {
        return out;
    }
    fill(h, m, h, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn run(
    config: &SearchConfig,
    space: &EditSpace,
    eval: &mut Evaluator,
    rng: &mut ChaCha8Rng,
) -> (Vec<Snapshot>, Vec<Individual>) {
    let dirs = das_dennis(config.objectives.len(), DIVISIONS);
    let mut pop = initial_population(config, space, eval, rng);
    let mut snaps = vec![Snapshot {
        generation: 0,
        evaluations_used: eval.used(),
        population: entries(&pop),
        archive: None,
    }];
    for generation in 1..config.generations {
        if eval.exhausted() {
            break;
        }
        let (rank, _) = rank_and_crowding(&objective_points(&pop, &config.objectives));
        let children = offspring(config, space, &pop, eval, rng, |rng| {
            tournament(pop.len(), rng, |a, b| rank[a].cmp(&rank[b]))
        });
        let mut pool = pop.clone();
        pool.extend(eval.evaluate(children));
        let n = pop.len();
        pop = survivors(&distinct(pool, n), n, config, &dirs, rng);
        snaps.push(Snapshot {
            generation,
            evaluations_used: eval.used(),
            population: entries(&pop),
            archive: None,
        });
    }
    (snaps, pop)
}

pub(crate) fn survivors<R: Rng + ?Sized>(
    pool: &[Individual],
    n: usize,
    config: &SearchConfig,
    dirs: &[Vec<f64>],
    rng: &mut R,
) -> Vec<Individual> {
    let points = objective_points(pool, &config.objectives);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut last: Vec<usize> = Vec::new();
    for front in fast_nondominated_sort(&points) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            if chosen.len() == n {
                break;
            }
        } else {
            last = front;
            break;
        }
    }
    if chosen.len() < n && !last.is_empty() {
        let extra = niche_select(&points, &chosen, &last, n - chosen.len(), dirs, rng);
        chosen.extend(extra);
    }
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}

/// Picks `k` members of `last` so that reference directions are covered as
/// evenly as possible, given the already chosen members.
pub(crate) fn niche_select<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    chosen: &[usize],
    last: &[usize],
    k: usize,
    dirs: &[Vec<f64>],
    rng: &mut R,
) -> Vec<usize> {
    let members: Vec<usize> = chosen.iter().chain(last).copied().collect();
    let normalized = normalize(points, &members);
    let assoc: Vec<(usize, f64)> = normalized
        .iter()
        .map(|p| nearest_direction(p, dirs))
        .collect();
    // assoc is indexed like `members`
    let mut count = vec![0usize; dirs.len()];
    for a in &assoc[..chosen.len()] {
        count[a.0] += 1;
    }
    let mut pending: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dirs.len()];
    for (slot, &idx) in last.iter().enumerate() {
        let (d, dist) = assoc[chosen.len() + slot];
        pending[d].push((idx, dist));
    }
    let mut open: Vec<usize> = (0..dirs.len())
        .filter(|&d| !pending[d].is_empty())
        .collect();
    let mut out = Vec::with_capacity(k);
    while out.len() < k && !open.is_empty() {
        let low = open
            .iter()
            .map(|&d| count[d])
            .min()
            .expect("open non-empty");
        let ties: Vec<usize> = open.iter().copied().filter(|&d| count[d] == low).collect();
        let d = ties[rng.random_range(0..ties.len())];
        let cand = &mut pending[d];
        let pick = if count[d] == 0 {
            let mut best = 0;
            for (i, c) in cand.iter().enumerate() {
                if c.1 < cand[best].1 {
                    best = i;
                }
            }
            best
        } else {
            rng.random_range(0..cand.len())
        };
        out.push(cand.remove(pick).0);
        count[d] += 1;
        if cand.is_empty() {
            open.retain(|&o| o != d);
        }
    }
    out
}

/// Translates by the ideal point and scales by the hyperplane intercepts
/// through the extreme points; falls back to the per-objective maximum
/// when the hyperplane is degenerate. Output is indexed like `members`.
fn normalize(points: &[Vec<f64>], members: &[usize]) -> Vec<Vec<f64>> {
    let m = points[members[0]].len();
    let ideal: Vec<f64> = (0..m)
        .map(|j| {
            members
                .iter()
                .map(|&i| points[i][j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let shifted: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| points[i].iter().zip(&ideal).map(|(x, z)| x - z).collect())
        .collect();
    let extremes: Vec<Vec<f64>> = (0..m)
        .map(|axis| {
            let asf = |p: &Vec<f64>| {
                p.iter()
                    .enumerate()
                    .map(|(j, &x)| x / if j == axis { 1.0 } else { 1e-6 })
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let mut best = &shifted[0];
            for p in &shifted {
                if asf(p) < asf(best) {
                    best = p;
                }
            }
            best.clone()
        })
        .collect();
    let nadir: Vec<f64> = (0..m)
        .map(|j| shifted.iter().map(|p| p[j]).fold(0.0, f64::max))
        .collect();
    let intercepts = match solve(&extremes, &vec![1.0; m]) {
        Some(b) if b.iter().all(|&x| x > 1e-12) => {
            let a: Vec<f64> = b.iter().map(|x| 1.0 / x).collect();
            if a.iter().all(|x| x.is_finite() && *x > 1e-10) {
                a
            } else {
                nadir.clone()
            }
        }
        _ => nadir.clone(),
    };
    let scale: Vec<f64> = intercepts
        .iter()
        .map(|&a| if a > 1e-10 { a } else { 1.0 })
        .collect();
    shifted
        .into_iter()
        .map(|p| p.iter().zip(&scale).map(|(x, a)| x / a).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = rhs.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| r.iter().copied().chain([b]).collect())
        .collect();
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

fn nearest_direction(p: &[f64], dirs: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (d, w) in dirs.iter().enumerate() {
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let t = p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / ww;
        let dist = p
            .iter()
            .zip(w)
            .map(|(a, b)| (a - t * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if dist < best.1 {
            best = (d, dist);
        }
    }
    best
}
