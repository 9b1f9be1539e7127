//! Vargha-Delaney A effect size.

use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectLabel {
    N,
    S,
    M,
    L,
}

impl EffectLabel {
    pub fn from_a(a: f64) -> Self {
        let d = (a - 0.5).abs();
        if d < 0.06 {
            EffectLabel::N
        } else if d < 0.14 {
            EffectLabel::S
        } else if d < 0.21 {
            EffectLabel::M
        } else {
            EffectLabel::L
        }
    }
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Probability that a value drawn from `a` exceeds one drawn from `b`,
/// ties counting half.
pub fn vargha_delaney_a<T: Float>(a: &[T], b: &[T]) -> (f64, EffectLabel) {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be non-empty");
    let mut twice = 0u64;
    for x in a {
        for y in b {
            twice += if x > y {
                2
            } else if x == y {
                1
            } else {
                0
            };
        }
    }
    let a_measure = twice as f64 / (2 * a.len() * b.len()) as f64;
    (a_measure, EffectLabel::from_a(a_measure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_cases() {
        assert_eq!(
            vargha_delaney_a(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]),
            (0.5, EffectLabel::N)
        );
        assert_eq!(
            vargha_delaney_a(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]),
            (1.0, EffectLabel::L)
        );
        assert_eq!(vargha_delaney_a(&[1.0f32], &[2.0]), (0.0, EffectLabel::L));
    }

    #[test]
    fn thresholds() {
        assert_eq!(EffectLabel::from_a(0.55), EffectLabel::N);
        assert_eq!(EffectLabel::from_a(0.56), EffectLabel::S);
        assert_eq!(EffectLabel::from_a(0.37), EffectLabel::S);
        assert_eq!(EffectLabel::from_a(0.30), EffectLabel::M);
        assert_eq!(EffectLabel::from_a(0.72), EffectLabel::L);
    }

    proptest! {
        #[test]
        fn complementary_without_ties(a in prop::collection::hash_set(0u32..1000, 1..20), b in prop::collection::hash_set(1000u32..2000, 1..20)) {
            // shift half of b below a's range too, keeping all values distinct
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().enumerate().map(|(i, x)| if i % 2 == 0 { f64::from(x) } else { f64::from(x) - 2000.5 }).collect();
            let (ab, _) = vargha_delaney_a(&a, &b);
            let (ba, _) = vargha_delaney_a(&b, &a);
            prop_assert!((ab + ba - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_invariant(a in prop::collection::vec(0u8..20, 1..15), b in prop::collection::vec(0u8..20, 1..15)) {
            let f = |v: &Vec<u8>| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
            let g = |v: &Vec<u8>| v.iter().map(|&x| (f64::from(x) * 0.3).exp() + 7.0).collect::<Vec<_>>();
            prop_assert_eq!(vargha_delaney_a(&f(&a), &f(&b)).0, vargha_delaney_a(&g(&a), &g(&b)).0);
        }
    }
}
