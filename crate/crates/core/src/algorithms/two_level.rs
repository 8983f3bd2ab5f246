//! Two-level exponential weights: one low-level instance per ladder radius,
//! aggregated by a softmax over rungs whose scores carry a `√(n R_i)` offset.

use serde::{Deserialize, Serialize};

use super::ew::tilt;
use crate::distribution::{normalize_log_weights, Distribution};
use crate::error::{Error, Result};
use crate::ladder::RadiusLadder;
use crate::numeric::{dot, golden_section, log_sum_exp};

/// Choice of the high-level learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Minimizes the relaxation objective at every round.
    #[default]
    Optimized,
    /// Uses `λ = 1/√n` throughout.
    FixedInverseSqrtN,
}

/// Search window for λ, as multiples of `1/√n`.
pub const LAMBDA_WINDOW: (f64, f64) = (1e-6, 1e3);
/// Relative tolerance of the golden-section refinement on `log λ`.
pub const LAMBDA_TOLERANCE: f64 = 1e-10;

/// Full replayable state after `t` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    prior: Distribution,
    ladder: RadiusLadder,
    horizon: usize,
    lambda_mode: LambdaMode,
    /// Cumulative expert losses `Σ_{s≤t} y_s`.
    cumulative: Vec<f64>,
    /// `⟨q^{R_i}(y_{1:s−1}), y_s⟩` per rung and round.
    rung_losses: Vec<Vec<f64>>,
    /// Row sums of `rung_losses`.
    rung_totals: Vec<f64>,
}

impl TwoLevelState {
    pub fn new(
        prior: Distribution,
        ladder: RadiusLadder,
        horizon: usize,
        lambda_mode: LambdaMode,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        let k = prior.support_size();
        let rungs = ladder.i_max();
        Ok(Self {
            prior,
            ladder,
            horizon,
            lambda_mode,
            cumulative: vec![0.0; k],
            rung_losses: vec![Vec::with_capacity(horizon); rungs],
            rung_totals: vec![0.0; rungs],
        })
    }

    pub fn prior(&self) -> &Distribution {
        &self.prior
    }

    pub fn ladder(&self) -> RadiusLadder {
        self.ladder
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda_mode(&self) -> LambdaMode {
        self.lambda_mode
    }

    /// Rounds observed so far.
    pub fn round(&self) -> usize {
        self.rung_losses[0].len()
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn rung_losses(&self) -> &[Vec<f64>] {
        &self.rung_losses
    }

    /// Low-level prediction `q^{R_i}(y_{1:t})` for rung `i` (1-based).
    pub fn lowlevel(&self, i: usize) -> Result<Distribution> {
        let eta = (self.ladder.radius(i) / self.horizon as f64).sqrt();
        tilt(&self.prior, eta, &self.cumulative)
    }

    /// Rung scores `Σ_{s≤t} ℓ^{(i)}_s + √(n R_i)`.
    pub fn scores(&self) -> Vec<f64> {
        let n = self.horizon as f64;
        self.rung_totals
            .iter()
            .enumerate()
            .map(|(j, total)| total + (n * self.ladder.radius(j + 1)).sqrt())
            .collect()
    }

    /// Relaxation objective `(1/λ) log Σ_i exp(−λ A_i) + 2λ(n − t)` at the current prefix.
    pub fn objective(&self, lambda: f64) -> f64 {
        relaxation_objective(&self.scores(), lambda, self.horizon - self.round())
    }

    /// `(λ, value)` used at the current prefix: the mode's λ and the objective there.
    pub fn lambda_and_value(&self) -> (f64, f64) {
        let scores = self.scores();
        let remaining = self.horizon - self.round();
        let n = self.horizon as f64;
        match self.lambda_mode {
            LambdaMode::FixedInverseSqrtN => {
                let lam = 1.0 / n.sqrt();
                (lam, relaxation_objective(&scores, lam, remaining))
            }
            LambdaMode::Optimized => optimize_lambda(&scores, remaining, n),
        }
    }

    /// Relaxation value at the current prefix.
    pub fn relaxation(&self) -> f64 {
        self.lambda_and_value().1
    }

    /// High-level weights for the next round.
    pub fn highlevel_weights(&self) -> Result<Distribution> {
        let (lam, _) = self.lambda_and_value();
        let logw: Vec<f64> = self.scores().iter().map(|a| -lam * a).collect();
        normalize_log_weights(&logw)
    }

    /// Mixture `Σ_i (q*)_i q^{R_i}` played in the next round.
    pub fn predict(&self) -> Result<Distribution> {
        let high = self.highlevel_weights()?;
        let low = (1..=self.ladder.i_max())
            .map(|i| self.lowlevel(i))
            .collect::<Result<Vec<_>>>()?;
        Distribution::mixture(&high, &low)
    }

    /// Records loss vector `y` (entries in `[0, 1]`).
    pub fn observe(&mut self, y: &[f64]) -> Result<()> {
        let k = self.prior.support_size();
        if y.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: y.len(),
            });
        }
        if let Some(v) = y.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(Error::invalid(format!("loss {v} outside [0, 1]")));
        }
        if self.round() >= self.horizon {
            return Err(Error::invalid(format!(
                "horizon {} already reached",
                self.horizon
            )));
        }
        for i in 1..=self.ladder.i_max() {
            let loss = dot(self.lowlevel(i)?.weights(), y).clamp(0.0, 1.0);
            self.rung_losses[i - 1].push(loss);
            self.rung_totals[i - 1] += loss;
        }
        for (a, b) in self.cumulative.iter_mut().zip(y) {
            *a += b;
        }
        Ok(())
    }

    /// Copy advanced by one round.
    pub fn advanced(&self, y: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.observe(y)?;
        Ok(next)
    }
}

/// `(1/λ) log Σ_i exp(−λ A_i) + 2λ m`.
pub fn relaxation_objective(scores: &[f64], lambda: f64, remaining: usize) -> f64 {
    let z: Vec<f64> = scores.iter().map(|a| -lambda * a).collect();
    log_sum_exp(&z) / lambda + 2.0 * lambda * remaining as f64
}

/// Minimizes the objective over `λ ∈ [10^{-6}/√n, 10^3/√n]`: a log-spaced scan
/// (which contains `1/√n`) followed by golden-section refinement on `log λ`.
/// The result never exceeds the fixed-mode value.
pub fn optimize_lambda(scores: &[f64], remaining: usize, n: f64) -> (f64, f64) {
    let base = 1.0 / n.sqrt();
    let f = |log_lam: f64| relaxation_objective(scores, log_lam.exp(), remaining);
    let mut best = (base, relaxation_objective(scores, base, remaining));
    let mut best_k = 0i32;
    for k in -48..=24 {
        let lam = base * 10f64.powf(k as f64 / 8.0);
        let v = relaxation_objective(scores, lam, remaining);
        if v < best.1 {
            best = (lam, v);
            best_k = k;
        }
    }
    let lo = (base * 10f64.powf((best_k - 1).max(-48) as f64 / 8.0)).ln();
    let hi = (base * 10f64.powf((best_k + 1).min(24) as f64 / 8.0)).ln();
    let (x, v) = golden_section(f, lo, hi, LAMBDA_TOLERANCE, 400);
    if v < best.1 {
        (x.exp(), v)
    } else {
        best
    }
}

/// Relaxation value after replaying `prefix` from `state`.
pub fn relaxation_value(state: &TwoLevelState, prefix: &[Vec<f64>]) -> Result<f64> {
    let mut s = state.clone();
    for y in prefix {
        s.observe(y)?;
    }
    Ok(s.relaxation())
}
