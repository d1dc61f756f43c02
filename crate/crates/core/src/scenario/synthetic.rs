use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Burst;
use crate::error::{config, Result};
use crate::vec2::Vec2;

pub type TrialRng = ChaCha8Rng;

/// The isolated random stream of one Monte Carlo trial.
///
/// `(seed, trial)` fully determines the stream, so trials can be generated in
/// any order or on any worker.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// Law of the per-pulse interference power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// `σ_k² = Δ u_k + σ_n²` with `u_k ~ U(0, 1)`.
    UniformHeterogeneous { delta: f64 },
    /// `x_k = √τ_k g_k`, `τ_k ~ Gamma(q, 1/q)` (unit mean).
    CompoundGaussian { shape: f64 },
}

/// Synthetic scenario parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Pulses per burst.
    pub k: usize,
    pub model: InterferenceModel,
    /// Thermal noise power per real axis.
    pub sigma_n2: f64,
    /// `‖m‖²/σ_n²` in dB; only used under H₁. Serialized as `"-inf"` when
    /// there is no target.
    #[serde(with = "snr_db_serde")]
    pub snr_db: f64,
    /// Direction of the target mean, radians.
    pub target_phase: f64,
    /// Noise-power floor forwarded to the estimators.
    pub c0: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            k: 16,
            model: InterferenceModel::UniformHeterogeneous { delta: 0.0 },
            sigma_n2: 1.0,
            snr_db: f64::NEG_INFINITY,
            target_phase: 0.0,
            c0: 1.0,
        }
    }
}

mod snr_db_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid SNR {t:?}"))),
        }
    }
}

/// One synthetic burst with its ground truth.
#[derive(Clone, Debug)]
pub struct Realization {
    pub burst: Burst,
    /// True mean (zero under H₀).
    pub mean: Vec2,
    /// True per-axis interference power of each pulse.
    pub sigma2: Vec<f64>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return config("K must be at least 1");
        }
        if !(self.sigma_n2.is_finite() && self.sigma_n2 > 0.0) {
            return config(format!("sigma_n2 must be > 0, got {}", self.sigma_n2));
        }
        if !(self.c0.is_finite() && self.c0 > 0.0) {
            return config(format!("c0 must be > 0, got {}", self.c0));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::INFINITY {
            return config(format!(
                "snr_db must be finite or -inf, got {}",
                self.snr_db
            ));
        }
        if !self.target_phase.is_finite() {
            return config("target_phase must be finite");
        }
        match self.model {
            InterferenceModel::UniformHeterogeneous { delta }
                if !(delta.is_finite() && delta >= 0.0) =>
            {
                config(format!("delta must be >= 0, got {delta}"))
            }
            InterferenceModel::CompoundGaussian { shape }
                if !(shape.is_finite() && shape > 0.0) =>
            {
                config(format!("texture shape must be > 0, got {shape}"))
            }
            _ => Ok(()),
        }
    }

    /// Target mean for this SNR and phase.
    pub fn target_mean(&self) -> Vec2 {
        if self.snr_db == f64::NEG_INFINITY {
            return Vec2::ZERO;
        }
        let amplitude = (self.sigma_n2 * 10f64.powf(self.snr_db / 10.0)).sqrt();
        amplitude * Vec2::from_angle(self.target_phase)
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        Self {
            snr_db,
            ..self.clone()
        }
    }

    pub fn with_model(&self, model: InterferenceModel) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    /// Draws one burst.
    ///
    /// All `2K` Gaussian components are drawn before the `K` power variables,
    /// so for a fixed stream the directions of the H₀ samples do not depend
    /// on the interference model, and the H₁ burst is the H₀ burst plus the
    /// target mean.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        hypothesis: Hypothesis,
        rng: &mut R,
    ) -> Result<Realization> {
        self.validate()?;
        let mut gauss: Vec<Vec2> = (0..self.k)
            .map(|_| Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let sigma2: Vec<f64> = match self.model {
            InterferenceModel::UniformHeterogeneous { delta } => (0..self.k)
                .map(|_| delta * rng.random::<f64>() + self.sigma_n2)
                .collect(),
            InterferenceModel::CompoundGaussian { shape } => {
                let gamma = Gamma::new(shape, 1.0 / shape)
                    .map_err(|e| crate::Error::Config(format!("texture law: {e}")))?;
                (0..self.k)
                    .map(|_| gamma.sample(rng) * self.sigma_n2)
                    .collect()
            }
        };
        let mean = match hypothesis {
            Hypothesis::H0 => Vec2::ZERO,
            Hypothesis::H1 => self.target_mean(),
        };
        for (g, s2) in gauss.iter_mut().zip(&sigma2) {
            *g = mean + s2.sqrt() * *g;
        }
        Ok(Realization {
            burst: Burst::new(gauss)?,
            mean,
            sigma2,
        })
    }
}

/// Uniform-heterogeneity draw: returns the burst, the true mean and the true
/// per-pulse powers.
pub fn gen_uniform_het<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<(Burst, Vec2, Vec<f64>)> {
    if !matches!(cfg.model, InterferenceModel::UniformHeterogeneous { .. }) {
        return config("scenario does not use the uniform-heterogeneity model");
    }
    let r = cfg.generate(hypothesis, rng)?;
    Ok((r.burst, r.mean, r.sigma2))
}

/// Compound-Gaussian draw: returns the burst, the true mean and the textures `τ_k`.
pub fn gen_compound_gaussian<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<(Burst, Vec2, Vec<f64>)> {
    if !matches!(cfg.model, InterferenceModel::CompoundGaussian { .. }) {
        return config("scenario does not use the compound-Gaussian model");
    }
    let r = cfg.generate(hypothesis, rng)?;
    let tau = r.sigma2.iter().map(|s| s / cfg.sigma_n2).collect();
    Ok((r.burst, r.mean, tau))
}
