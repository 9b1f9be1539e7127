//! Mann-Whitney U test, two-sided.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest per-sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least 3 samples per side, got {0} and {1}")]
    TooFewSamples(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// U statistic of the first sample.
    pub u: f64,
    pub p: f64,
    /// Significant and the second sample has the lower median.
    pub improved: bool,
    pub method: UMethod,
}

pub fn median<T: Float>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN sample"));
    let n = v.len();
    if n == 0 {
        return T::nan();
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / (T::one() + T::one())
    }
}

/// Mid-ranks of the pooled sample, doubled so they stay integral.
fn doubled_ranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).expect("NaN sample"));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged, times two
        let twice = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = twice;
        }
        i = j + 1;
    }
    ranks
}

/// Test whether `b` differs from `a`; `improved` means `b` is lower
/// (minimization). Exact enumeration when both sides have at most
/// [`EXACT_MAX_N`] values, otherwise the normal approximation.
pub fn mann_whitney_u<T: Float>(a: &[T], b: &[T], alpha: f64) -> Result<UTest, StatsError> {
    let method = if a.len() <= EXACT_MAX_N && b.len() <= EXACT_MAX_N {
        UMethod::Exact
    } else {
        UMethod::Normal
    };
    mann_whitney_u_with(a, b, alpha, method)
}

pub fn mann_whitney_u_with<T: Float>(
    a: &[T],
    b: &[T],
    alpha: f64,
    method: UMethod,
) -> Result<UTest, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na < 3 || nb < 3 {
        return Err(StatsError::TooFewSamples(na, nb));
    }
    let pooled: Vec<f64> = a
        .iter()
        .chain(b)
        .map(|x| x.to_f64().expect("finite sample"))
        .collect();
    let ranks = doubled_ranks(&pooled);
    let r2: u64 = ranks[..na].iter().sum();
    let u = r2 as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;
    if pooled.iter().all(|&x| x == pooled[0]) {
        return Ok(UTest {
            u,
            p: 1.0,
            improved: false,
            method,
        });
    }
    let p = match method {
        UMethod::Exact => exact_p(&ranks, na, r2),
        UMethod::Normal => normal_p(&pooled, na, nb, u),
    };
    let improved = p < alpha && median(b) < median(a);
    Ok(UTest {
        u,
        p,
        improved,
        method,
    })
}

/// Share of all size-`na` subsets of the pooled ranks whose doubled rank
/// sum lies at least as far from its mean as the observed one.
fn exact_p(ranks: &[u64], na: usize, observed: u64) -> f64 {
    let n = ranks.len();
    let max_sum: u64 = ranks.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0u128; max_sum as usize + 1]; na + 1];
    ways[0][0] = 1;
    for &r in ranks {
        for k in (1..=na).rev() {
            for s in (r as usize..=max_sum as usize).rev() {
                ways[k][s] += ways[k - 1][s - r as usize];
            }
        }
    }
    let mean2 = (na * (n + 1)) as i128; // doubled mean, exact
    let dev = (observed as i128 - mean2).abs();
    let mut hit = 0u128;
    let mut total = 0u128;
    for (s, &w) in ways[na].iter().enumerate() {
        total += w;
        if (s as i128 - mean2).abs() >= dev {
            hit += w;
        }
    }
    hit as f64 / total as f64
}

fn normal_p(pooled: &[f64], na: usize, nb: usize, u: f64) -> f64 {
    let n = (na + nb) as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("NaN sample"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&x| x == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let (fa, fb) = (na as f64, nb as f64);
    let mu = fa * fb / 2.0;
    let var = fa * fb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let diff = ((u - mu).abs() - 0.5).max(0.0);
    let z = diff / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - std.cdf(z))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let t = mann_whitney_u(&[5.0, 5.0, 5.0, 5.0], &[5.0, 5.0, 5.0, 5.0], 0.05).unwrap();
        assert_eq!(t.p, 1.0);
        assert!(!t.improved);
    }

    #[test]
    fn complete_separation_3v3() {
        let t = mann_whitney_u(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0], 0.05).unwrap();
        assert_eq!(t.method, UMethod::Exact);
        assert!((t.p - 0.1).abs() < 1e-12);
        assert_eq!(t.u, 9.0);
        assert!(!t.improved);
    }

    #[test]
    fn separation_4v4_is_significant() {
        let t = mann_whitney_u(&[9.0; 4], &[3.0; 4], 0.05).unwrap();
        assert!((t.p - 2.0 / 70.0).abs() < 1e-12);
        assert!(t.improved);
        let back = mann_whitney_u(&[3.0; 4], &[9.0; 4], 0.05).unwrap();
        assert_eq!(back.p, t.p);
        assert!(!back.improved);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            mann_whitney_u(&[1.0, 2.0], &[1.0, 2.0, 3.0], 0.05),
            Err(StatsError::TooFewSamples(2, 3))
        );
    }

    #[test]
    fn normal_path_large_separation() {
        let a: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let t = mann_whitney_u(&a, &b, 0.05).unwrap();
        assert_eq!(t.method, UMethod::Normal);
        assert!(t.p < 1e-6 && t.improved);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
