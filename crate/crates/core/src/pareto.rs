//! Pareto dominance utilities (minimization), generic over the float type.

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("objective arity mismatch: {0} vs {1}")]
pub struct ArityMismatch(pub usize, pub usize);

fn dom<T: Float>(a: &[T], b: &[T]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// `a` is no worse anywhere and strictly better somewhere.
pub fn dominates<T: Float>(a: &[T], b: &[T]) -> Result<bool, ArityMismatch> {
    if a.len() != b.len() {
        return Err(ArityMismatch(a.len(), b.len()));
    }
    Ok(dom(a, b))
}

/// `a` is no worse than `b` on every objective.
pub fn weakly_dominates<T: Float>(a: &[T], b: &[T]) -> Result<bool, ArityMismatch> {
    if a.len() != b.len() {
        return Err(ArityMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).all(|(x, y)| x <= y))
}

/// Fronts of indices into `points`; front 0 is the non-dominated set.
/// Indices inside a front are ascending.
pub fn fast_nondominated_sort<T: Float, P: AsRef<[T]>>(points: &[P]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dom(a, b) {
                dominated_by_me[i].push(j);
                counts[j] += 1;
            } else if dom(b, a) {
                dominated_by_me[j].push(i);
                counts[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| counts[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                counts[j] -= 1;
                if counts[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Canonical crowding distance of each member of `front` (indices into
/// `points`), in the order of `front`. Boundary members are infinite; an
/// objective with zero range contributes nothing.
pub fn crowding_distance<T: Float, P: AsRef<[T]>>(points: &[P], front: &[usize]) -> Vec<T> {
    let n = front.len();
    let mut dist = vec![T::zero(); n];
    if n == 0 {
        return dist;
    }
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let m = points[front[0]].as_ref().len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let val = |i: usize| points[front[i]].as_ref()[k];
        order.sort_by(|&a, &b| {
            val(a)
                .partial_cmp(&val(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let (lo, hi) = (val(order[0]), val(order[n - 1]));
        dist[order[0]] = T::infinity();
        dist[order[n - 1]] = T::infinity();
        let range = hi - lo;
        if range <= T::zero() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = (val(order[w + 1]) - val(order[w - 1])) / range;
            dist[order[w]] = dist[order[w]] + gap;
        }
    }
    dist
}

/// Mutually non-dominated subset; duplicates collapse to their first
/// occurrence.
pub fn pareto_front<T: Float, P: AsRef<[T]>>(points: &[P]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        let beaten = points.iter().any(|q| dom(q.as_ref(), p));
        let seen = points[..i].iter().any(|q| q.as_ref() == p);
        if !beaten && !seen {
            out.push(p.to_vec());
        }
    }
    out
}
