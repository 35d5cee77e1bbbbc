use rand::Rng;

use super::WalkChain;
use crate::sgd::seeded_rng;

/// Occupation frequencies of a direct simulation of the chain: `steps`
/// transitions from `start`, of which the first `burn_in` are not counted.
pub fn simulate_occupation(chain: &WalkChain, start: usize, steps: usize, burn_in: usize, seed: u64) -> Vec<f64> {
    let n = chain.n();
    let a = chain.a();
    let mut rng = seeded_rng(seed);
    let mut state = start.min(n);
    let mut counts = vec![0u64; n + 1];
    for step in 0..steps {
        let left = rng.random::<f64>() < a[state];
        state = if left { state.saturating_sub(1) } else { (state + 1).min(n) };
        if step >= burn_in {
            counts[state] += 1;
        }
    }
    let total = steps.saturating_sub(burn_in).max(1) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// `1/2 sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_sum_to_one() {
        let chain = WalkChain::uniform(5, 0.6).unwrap();
        let occ = simulate_occupation(&chain, 5, 10_000, 100, 1);
        assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(occ, simulate_occupation(&chain, 5, 10_000, 100, 1));
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(total_variation(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
    }
}
