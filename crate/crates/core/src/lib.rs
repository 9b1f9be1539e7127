//! Multi-objective genetic improvement for a small instrumented language.
//!
//! Programs are parsed from `minilang`, executed by `interp` with step,
//! memory and network counters, edited through `patch` and `operators`,
//! and searched by the algorithms in `search`. `stats` compares runs and
//! `corpus` loads the shipped benchmarks.
//!
//! The numeric utilities (`pareto`, `stats`) are generic over
//! [`num_traits::Float`]; fitness values everywhere else are [`Scalar`].

pub mod corpus;
pub mod interp;
pub mod minilang;
pub mod operators;
pub mod pareto;
pub mod patch;
pub mod search;
pub mod stats;

/// Scalar used for fitness values.
pub type Scalar = f64;
/// One point in objective space.
pub type Point = Vec<Scalar>;
/// The three objectives of a [`interp::FitnessVector`] in order.
pub type Objectives3 = [Scalar; 3];

/// [`pareto::fast_nondominated_sort`] over [`Scalar`] points.
pub fn nondominated_fronts(points: &[Point]) -> Vec<Vec<usize>> {
    pareto::fast_nondominated_sort::<Scalar, Point>(points)
}

/// [`stats::hypervolume`] over [`Scalar`] points.
pub fn hypervolume(points: &[Point], reference: &[Scalar]) -> Scalar {
    stats::hypervolume::<Scalar, Point>(points, reference)
}
