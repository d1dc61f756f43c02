//! Bursts, the invariant statistic, synthetic interference models and
//! recorded-data ingestion.

mod recorded;
mod synthetic;

pub use recorded::{
    ingest_recorded, parse_recorded, sliding_bursts_count, OffsetMode, RecordedSeries,
};
pub use synthetic::{
    gen_compound_gaussian, gen_uniform_het, trial_rng, Hypothesis, InterferenceModel, Realization,
    ScenarioConfig, TrialRng,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::vec2::Vec2;

/// The `K` returns of one cell under test, each as `[Re, Im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    samples: Vec<Vec2>,
}

impl Burst {
    pub fn new(samples: Vec<Vec2>) -> Result<Self> {
        if samples.is_empty() {
            return domain("a burst needs at least one sample");
        }
        if let Some(k) = samples.iter().position(|s| !s.is_finite()) {
            return domain(format!("sample {k} is not finite"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Vec2] {
        &self.samples
    }

    /// Number of pulses `K`.
    pub fn k(&self) -> usize {
        self.samples.len()
    }

    /// Applies the per-sample positive scaling `x_k → c_k x_k`.
    pub fn scaled(&self, scales: &[f64]) -> Result<Burst> {
        if scales.len() != self.k() {
            return domain(format!(
                "scale vector has {} entries for a burst of {}",
                scales.len(),
                self.k()
            ));
        }
        if scales.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return domain("scales must be finite and positive");
        }
        Burst::new(
            self.samples
                .iter()
                .zip(scales)
                .map(|(&x, &c)| c * x)
                .collect(),
        )
    }

    /// Per-pulse power `‖x_k‖²`.
    pub fn powers(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.norm_sq()).collect()
    }
}

/// Maximal invariant of a burst under per-sample positive scaling: the unit
/// directions `z_k = x_k/‖x_k‖`, kept together with the norms `b_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantBurst {
    directions: Vec<Vec2>,
    norms: Vec<f64>,
}

impl InvariantBurst {
    /// Builds the statistic from directions alone; norms are set to one.
    pub fn from_directions(directions: Vec<Vec2>) -> Result<Self> {
        if directions.is_empty() {
            return domain("an invariant burst needs at least one direction");
        }
        for (k, z) in directions.iter().enumerate() {
            if !z.is_finite() || (z.norm() - 1.0).abs() > 1e-12 {
                return domain(format!("direction {k} is not a unit vector"));
            }
        }
        let norms = vec![1.0; directions.len()];
        Ok(Self { directions, norms })
    }

    pub fn directions(&self) -> &[Vec2] {
        &self.directions
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }
}

/// Maps a burst to its invariant statistic.
pub fn to_invariant(burst: &Burst) -> Result<InvariantBurst> {
    let mut directions = Vec::with_capacity(burst.k());
    let mut norms = Vec::with_capacity(burst.k());
    for (k, &x) in burst.samples().iter().enumerate() {
        let b = x.norm();
        if b == 0.0 {
            return domain(format!(
                "sample {k} has zero norm; its direction is undefined"
            ));
        }
        directions.push(Vec2::new(x.re / b, x.im / b));
        norms.push(b);
    }
    Ok(InvariantBurst { directions, norms })
}
