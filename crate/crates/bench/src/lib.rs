//! Shared inputs for the benchmarks.

use hetdet_core::scenario::{trial_rng, Hypothesis};
use hetdet_core::{Burst, InterferenceModel, ScenarioConfig};

/// `n` H₁ bursts of `k` pulses at 5 dB in uniform heterogeneity with Δ = 10.
pub fn bursts(k: usize, n: usize) -> Vec<Burst> {
    let scen = ScenarioConfig {
        k,
        model: InterferenceModel::UniformHeterogeneous { delta: 10.0 },
        snr_db: 5.0,
        ..Default::default()
    };
    (0..n as u64)
        .map(|t| {
            scen.generate(Hypothesis::H1, &mut trial_rng(0xbe7c, t))
                .unwrap()
                .burst
        })
        .collect()
}
