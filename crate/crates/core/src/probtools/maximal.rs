//! Dilation multipliers for a family of tail-controlled variables and a
//! Monte Carlo check of the resulting maximal inequality.

use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::mean_and_stderr;
use crate::rng::RngSpec;

/// Number of standard errors allowed above the bound.
pub const MC_MARGIN_STDERRS: f64 = 4.0;

/// Tail condition `P(X_i − B_i > τ) ≤ C1 exp(−τ²/2σ_i²) + C2 exp(−τ s_i)` for
/// `i = 1..N`, together with the anchors `σ̄ ≤ σ_1` and `s̄ ≥ s_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub c1: f64,
    pub c2: f64,
    /// Typical sizes `B_i > 0`.
    pub b: Vec<f64>,
    /// Sub-gaussian scales `σ_i ≥ 0`.
    pub sigma: Vec<f64>,
    /// Sub-exponential rates `s_i ≥ 0`.
    pub s: Vec<f64>,
    pub sigma_bar: f64,
    pub s_bar: f64,
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl TailSpec {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.b.len();
        if n == 0 {
            return Err(Error::invalid("tail spec needs at least one index"));
        }
        for (what, v) in [("sigma", &self.sigma), ("s", &self.s)] {
            if v.len() != n {
                return Err(Error::invalid(format!(
                    "{what} has {} entries, b has {n}",
                    v.len()
                )));
            }
            if !v.iter().all(|x| nonneg(*x)) {
                return Err(Error::invalid(format!(
                    "{what} entries must be finite and nonnegative"
                )));
            }
        }
        if !self.b.iter().all(|x| x.is_finite() && *x > 0.0) {
            return Err(Error::invalid("b entries must be finite and positive"));
        }
        if !(nonneg(self.c1) && nonneg(self.c2) && nonneg(self.sigma_bar) && nonneg(self.s_bar)) {
            return Err(Error::invalid(
                "c1, c2, sigma_bar and s_bar must be finite and nonnegative",
            ));
        }
        if self.sigma_bar > self.sigma[0] {
            return Err(Error::invalid(format!(
                "sigma_bar {} exceeds sigma_1 {}",
                self.sigma_bar, self.sigma[0]
            )));
        }
        if self.s_bar < self.s[0] {
            return Err(Error::invalid(format!(
                "s_bar {} is below s_1 {}",
                self.s_bar, self.s[0]
            )));
        }
        Ok(())
    }
}

/// Multipliers `θ_i = max{gaussian branch, exponential branch} + 1`.
///
/// A branch is omitted when its constant or its own scale is zero. A negative
/// exponential branch is raised to zero, which only enlarges `B_i θ_i`.
pub fn theta_multipliers(spec: &TailSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..spec.len())
        .map(|k| {
            let i = (k + 1) as f64;
            let (b, sigma, s) = (spec.b[k], spec.sigma[k], spec.s[k]);
            let mut branch = 0.0f64;
            if spec.c1 > 0.0 && sigma > 0.0 {
                if sigma < spec.sigma_bar || spec.sigma_bar == 0.0 {
                    return Err(Error::invalid(format!(
                        "sigma_{} = {sigma} must be at least sigma_bar = {} > 0",
                        k + 1,
                        spec.sigma_bar
                    )));
                }
                branch = branch
                    .max(sigma / b * (2.0 * (sigma / spec.sigma_bar).ln() + 4.0 * i.ln()).sqrt());
            }
            if spec.c2 > 0.0 && s > 0.0 {
                if spec.s_bar == 0.0 {
                    return Err(Error::invalid(
                        "s_bar must be positive when the exponential term is active",
                    ));
                }
                branch = branch.max((i * i * spec.s_bar / s).ln() / (b * s));
            }
            Ok(branch + 1.0)
        })
        .collect()
}

/// Right-hand side `3 C1 σ̄ + 2 C2 / s̄`.
pub fn maximal_bound(spec: &TailSpec) -> Result<f64> {
    spec.validate()?;
    let exp_term = if spec.c2 > 0.0 {
        if spec.s_bar == 0.0 {
            return Err(Error::invalid("s_bar must be positive when c2 > 0"));
        }
        2.0 * spec.c2 / spec.s_bar
    } else {
        0.0
    };
    Ok(3.0 * spec.c1 * spec.sigma_bar + exp_term)
}

/// Synthetic families whose tails provably satisfy the condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailGenerator {
    /// `X_i = B_i + σ_i |Z|`; needs `C1 ≥ 1` since `P(|Z| > x) ≤ e^{−x²/2}`.
    ShiftedGaussian,
    /// `X_i = B_i + Exp(s_i)`; needs `C2 ≥ 1` and `s_i > 0`.
    ShiftedExponential,
}

impl TailGenerator {
    pub const NAMES: [&'static str; 2] = ["shifted_gaussian", "shifted_exponential"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "shifted_gaussian" | "gaussian" => Ok(Self::ShiftedGaussian),
            "shifted_exponential" | "exponential" => Ok(Self::ShiftedExponential),
            other => Err(Error::UnknownName {
                kind: "tail generator",
                name: other.to_string(),
                known: Self::NAMES.join(", "),
            }),
        }
    }

    fn check(self, spec: &TailSpec) -> Result<()> {
        match self {
            Self::ShiftedGaussian if spec.c1 < 1.0 => Err(Error::Incompatible(
                "shifted gaussian tails need c1 ≥ 1".into(),
            )),
            Self::ShiftedExponential if spec.c2 < 1.0 => Err(Error::Incompatible(
                "shifted exponential tails need c2 ≥ 1".into(),
            )),
            Self::ShiftedExponential if spec.s.iter().any(|s| *s <= 0.0) => Err(
                Error::Incompatible("shifted exponential tails need every s_i > 0".into()),
            ),
            _ => Ok(()),
        }
    }

    fn excess<R: Rng + ?Sized>(self, rng: &mut R, sigma: f64, s: f64) -> f64 {
        match self {
            Self::ShiftedGaussian => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z.abs()
            }
            Self::ShiftedExponential => rng.sample(Exp::new(s).expect("rate checked positive")),
        }
    }
}

/// Outcome of [`maximal_inequality_mc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub generator: TailGenerator,
    /// Sample mean of `max_i (X_i − B_i θ_i)`.
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub thetas: Vec<f64>,
    pub replicates: usize,
    pub pass: bool,
}

/// Estimates `E max_i (X_i − B_i θ_i)` and compares it with the bound plus four standard errors.
pub fn maximal_inequality_mc(
    spec: &TailSpec,
    generator: TailGenerator,
    replicates: usize,
    rng: &RngSpec,
) -> Result<MaximalReport> {
    let thetas = theta_multipliers(spec)?;
    let bound = maximal_bound(spec)?;
    generator.check(spec)?;
    rng.validate()?;
    if replicates < 2 {
        return Err(Error::invalid(
            "at least two replicates are needed for a standard error",
        ));
    }
    let samples: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut g = rng.stream(r).expect("validated");
            (0..spec.len())
                .map(|k| {
                    let x = spec.b[k] + generator.excess(&mut g, spec.sigma[k], spec.s[k]);
                    x - spec.b[k] * thetas[k]
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (estimate, stderr) = mean_and_stderr(&samples);
    Ok(MaximalReport {
        generator,
        estimate,
        stderr,
        bound,
        thetas,
        replicates,
        pass: estimate <= bound + MC_MARGIN_STDERRS * stderr,
    })
}
