//! Exact dominated hypervolume by dimension sweep (minimization).

use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvResult {
    /// Volume in the original objective units, bounded by `reference`.
    pub raw: f64,
    /// Volume after mapping each objective's (best, worst) to (0, 1).
    pub normalized: f64,
    pub reference: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

/// Volume dominated by `points` and bounded by `reference`. Points not
/// strictly better than the reference on every objective add nothing.
pub fn hypervolume<T: Float, P: AsRef<[T]>>(points: &[P], reference: &[T]) -> T {
    let kept: Vec<Vec<T>> = points
        .iter()
        .map(|p| p.as_ref())
        .filter(|p| p.len() == reference.len() && p.iter().zip(reference).all(|(x, r)| x < r))
        .map(|p| p.to_vec())
        .collect();
    if kept.is_empty() || reference.is_empty() {
        return T::zero();
    }
    sweep(kept, reference)
}

fn sweep<T: Float>(mut pts: Vec<Vec<T>>, reference: &[T]) -> T {
    let m = reference.len();
    if m == 1 {
        let best = pts.iter().map(|p| p[0]).fold(T::infinity(), T::min);
        return reference[0] - best;
    }
    let last = m - 1;
    pts.sort_by(|a, b| a[last].partial_cmp(&b[last]).expect("NaN objective"));
    let mut volume = T::zero();
    for i in 0..pts.len() {
        let top = if i + 1 < pts.len() {
            pts[i + 1][last]
        } else {
            reference[last]
        };
        let height = top - pts[i][last];
        if height <= T::zero() {
            continue;
        }
        let slice: Vec<Vec<T>> = pts[..=i].iter().map(|p| p[..last].to_vec()).collect();
        volume = volume + sweep(slice, &reference[..last]) * height;
    }
    volume
}

/// Hypervolume of `points` both raw (against the per-objective worst
/// bound) and normalized so that the best bound maps to 0 and the worst
/// to 1. Objectives with `best == worst` map everything to 1.
pub fn hypervolume_normalized<T: Float, P: AsRef<[T]>>(
    points: &[P],
    bounds: &[(T, T)],
) -> HvResult {
    let reference: Vec<T> = bounds.iter().map(|b| b.1).collect();
    let raw = hypervolume(points, &reference);
    let scaled: Vec<Vec<T>> = points
        .iter()
        .map(|p| {
            p.as_ref()
                .iter()
                .zip(bounds)
                .map(|(&x, &(best, worst))| {
                    if worst > best {
                        (x - best) / (worst - best)
                    } else {
                        T::one()
                    }
                })
                .collect()
        })
        .collect();
    let unit = vec![T::one(); bounds.len()];
    let to = |x: T| x.to_f64().unwrap_or(f64::NAN);
    HvResult {
        raw: to(raw),
        normalized: to(hypervolume(&scaled, &unit)),
        reference: reference.into_iter().map(to).collect(),
        bounds: bounds.iter().map(|&(b, w)| (to(b), to(w))).collect(),
    }
}
