//! Fixtures shared by the benchmarks.

use irf_core::nn::alg2_sizes;
use irf_core::synth::{evaluation_grid, make_model};
use irf_core::{Dataset, RandomStream, Scenario, Setup};

/// A dataset of size `n` drawn from the two-dimensional model.
pub fn dataset(setup: Setup, scenario: Scenario, n: usize, seed: u64) -> Dataset {
    let model = make_model(setup, scenario, 2).expect("calibrated model");
    model.generate(n, &mut RandomStream::new(seed)).expect("nonempty dataset")
}

/// Imbalanced dataset together with its default stratified sizes.
pub fn imbalanced(n: usize, seed: u64) -> (Dataset, usize, usize) {
    let ds = dataset(Setup::MarginalImbalance, Scenario::Imbalanced, n, seed);
    let (_, s0, s1) = alg2_sizes(ds.n0(), ds.n1());
    (ds, s0, s1)
}

pub fn grid(per_axis: usize) -> Vec<Vec<f64>> {
    evaluation_grid(2, per_axis).expect("two-dimensional grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_usable() {
        let (ds, s0, s1) = imbalanced(500, 1);
        assert_eq!(ds.len(), 500);
        assert!(s0 <= ds.n0() && s1 <= ds.n1() && s1 >= 1);
        assert_eq!(grid(4).len(), 16);
    }
}
