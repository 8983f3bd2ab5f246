//! Sequential Rademacher and offset functionals: `E_ε sup_g Σ_t ε_t g(z_t(ε)) − penalty`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cover::{CoverNorm, CoverProfile};
use super::entropy::dudley_integral_exact;
use super::table::FunctionTable;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, mean_and_stderr};
use crate::rng::RngSpec;
use crate::tree::path_sign;

/// Deepest tree enumerated exhaustively.
pub const EXACT_DEPTH_CAP: usize = 12;
/// Fewest replicates accepted by Monte Carlo estimators.
pub const MIN_REPLICATES: usize = 100;

/// Penalty subtracted from each function's signed sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffsetForm {
    None,
    /// `2α Σ_t g²`.
    QuadraticAlpha {
        alpha: f64,
    },
    /// `4√(2 log n · log N₂(γ/2) · (Σg² + 1)) + 24√2 log n ∫_{1/n}^{γ} √(n log N₂)`,
    /// minimized over the dyadic γ grid; covers are taken on the supplied tree.
    EntropyAdaptive,
    /// `2 log(log N · Σg² + e) √(32 (log N · Σg² + e))` with `N = |G|`.
    FiniteClass,
    /// `constant + quadratic · Σ_t g²`.
    CustomPenalty {
        constant: f64,
        quadratic: f64,
    },
}

impl OffsetForm {
    /// Known upper bound on the offset expectation for depth `n`, where one holds:
    /// `1` for the finite-class form and `7 + 2 log n` for the entropy form.
    pub fn reference_bound(&self, n: usize) -> Option<f64> {
        match self {
            OffsetForm::FiniteClass => Some(1.0),
            OffsetForm::EntropyAdaptive => Some(7.0 + 2.0 * (n as f64).ln()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OffsetForm::QuadraticAlpha { alpha } if !(alpha.is_finite() && *alpha > 0.0) => Err(
                Error::invalid(format!("quadratic offset needs α > 0, got {alpha}")),
            ),
            OffsetForm::CustomPenalty {
                constant,
                quadratic,
            } if !(constant.is_finite() && quadratic.is_finite()) => {
                Err(Error::invalid("custom penalty coefficients must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Dyadic scale grid `{2^j / n : j = 0..=⌈log2 2n⌉}`.
pub fn dyadic_gamma_grid(n: usize) -> Vec<f64> {
    let top = (2.0 * n as f64).log2().ceil() as i32;
    (0..=top).map(|j| 2f64.powi(j) / n as f64).collect()
}

/// Monte Carlo or exact estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Zero for exact enumeration.
    pub stderr: f64,
    pub exact: bool,
    /// Whether every cover used was provably minimal.
    pub covers_exact: bool,
}

/// Estimation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimationMode {
    Exact,
    MonteCarlo { replicates: usize, rng: RngSpec },
}

/// Precomputed per-form state used inside the path loop.
struct Objective {
    form: OffsetForm,
    log_class: f64,
    /// `(log N₂(γ/2), ∫_{1/n}^{γ})` per grid scale.
    scales: Vec<(f64, f64)>,
    log_n: f64,
    covers_exact: bool,
}

impl Objective {
    fn new(table: &FunctionTable, form: &OffsetForm) -> Result<Self> {
        form.validate()?;
        let n = table.depth();
        let mut scales = Vec::new();
        let mut covers_exact = true;
        if matches!(form, OffsetForm::EntropyAdaptive) {
            let profile = CoverProfile::build(table, CoverNorm::L2)?;
            covers_exact = profile.exact;
            scales = dyadic_gamma_grid(n)
                .into_iter()
                .map(|g| {
                    (
                        profile.log_size_at(g / 2.0),
                        dudley_integral_exact(&profile, g, n),
                    )
                })
                .collect();
        }
        Ok(Self {
            form: form.clone(),
            log_class: (table.size() as f64).ln(),
            scales,
            log_n: (n as f64).ln(),
            covers_exact,
        })
    }

    fn penalty(&self, sum_sq: f64) -> f64 {
        match &self.form {
            OffsetForm::None => 0.0,
            OffsetForm::QuadraticAlpha { alpha } => 2.0 * alpha * sum_sq,
            OffsetForm::CustomPenalty {
                constant,
                quadratic,
            } => constant + quadratic * sum_sq,
            OffsetForm::FiniteClass => {
                let inner = self.log_class * sum_sq + std::f64::consts::E;
                2.0 * inner.ln() * (32.0 * inner).sqrt()
            }
            OffsetForm::EntropyAdaptive => self
                .scales
                .iter()
                .map(|&(log_cover, integral)| {
                    4.0 * (2.0 * self.log_n * log_cover * (sum_sq + 1.0)).sqrt()
                        + 24.0 * std::f64::consts::SQRT_2 * self.log_n * integral
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Supremum over the class on the path encoded by `code`.
    fn on_path(&self, table: &FunctionTable, code: usize) -> f64 {
        let vals = table.path_values(code);
        vals.iter()
            .map(|row| {
                let signed: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(t, g)| path_sign(code, t) * g)
                    .sum();
                let sum_sq: f64 = row.iter().map(|g| g * g).sum();
                signed - self.penalty(sum_sq)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn exact_average(table: &FunctionTable, obj: &Objective) -> Result<f64> {
    let n = table.depth();
    if n > EXACT_DEPTH_CAP {
        return Err(Error::DepthTooLarge {
            depth: n,
            cap: EXACT_DEPTH_CAP,
        });
    }
    let per_path: Vec<f64> = (0..1usize << n)
        .into_par_iter()
        .map(|code| obj.on_path(table, code))
        .collect();
    Ok(compensated_sum(per_path) / (1u64 << n) as f64)
}

fn mc_average(
    table: &FunctionTable,
    obj: &Objective,
    replicates: usize,
    rng: &RngSpec,
) -> Result<(f64, f64)> {
    if replicates < MIN_REPLICATES {
        return Err(Error::invalid(format!(
            "Monte Carlo needs at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    rng.validate()?;
    let n = table.depth();
    let samples: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut g = rng.stream(r).expect("validated");
            let code = (0..n).fold(0usize, |acc, t| {
                acc | (usize::from(g.random::<bool>()) << t)
            });
            obj.on_path(table, code)
        })
        .collect();
    Ok(mean_and_stderr(&samples))
}

/// Exact sequential Rademacher complexity by enumerating all sign paths.
pub fn seq_rademacher_exact(table: &FunctionTable) -> Result<f64> {
    exact_average(table, &Objective::new(table, &OffsetForm::None)?)
}

/// Monte Carlo estimate and standard error.
pub fn seq_rademacher_mc(
    table: &FunctionTable,
    replicates: usize,
    rng: &RngSpec,
) -> Result<(f64, f64)> {
    mc_average(
        table,
        &Objective::new(table, &OffsetForm::None)?,
        replicates,
        rng,
    )
}

/// Expected supremum of the offset process for `form`.
pub fn offset_expectation(
    table: &FunctionTable,
    form: &OffsetForm,
    mode: &EstimationMode,
) -> Result<Estimate> {
    let obj = Objective::new(table, form)?;
    match mode {
        EstimationMode::Exact => Ok(Estimate {
            value: exact_average(table, &obj)?,
            stderr: 0.0,
            exact: true,
            covers_exact: obj.covers_exact,
        }),
        EstimationMode::MonteCarlo { replicates, rng } => {
            let (value, stderr) = mc_average(table, &obj, *replicates, rng)?;
            Ok(Estimate {
                value,
                stderr,
                exact: false,
                covers_exact: obj.covers_exact,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_and_singleton_classes_vanish() {
        let zero = FunctionTable::from_levels(&[vec![0.0; 4]], 1.0).unwrap();
        assert_eq!(seq_rademacher_exact(&zero).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let single = FunctionTable::random(&mut rng, 1, 6, 1.0).unwrap();
        assert!(seq_rademacher_exact(&single).unwrap().abs() < 1e-12);
    }

    #[test]
    fn two_point_class_depth_one() {
        let t = FunctionTable::new(1, vec![vec![1.0], vec![-1.0]], 1.0).unwrap();
        assert_eq!(seq_rademacher_exact(&t).unwrap(), 1.0);
    }

    #[test]
    fn depth_cap_enforced() {
        let t = FunctionTable::from_levels(&[vec![0.0; 13]], 1.0).unwrap();
        assert!(matches!(
            seq_rademacher_exact(&t),
            Err(Error::DepthTooLarge { .. })
        ));
    }

    #[test]
    fn mc_zero_class_has_zero_stderr() {
        let zero = FunctionTable::from_levels(&[vec![0.0; 5]], 1.0).unwrap();
        assert_eq!(
            seq_rademacher_mc(&zero, 200, &RngSpec::new(1)).unwrap(),
            (0.0, 0.0)
        );
        assert!(seq_rademacher_mc(&zero, 99, &RngSpec::new(1)).is_err());
    }

    #[test]
    fn offset_none_is_rademacher() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = FunctionTable::random(&mut rng, 4, 5, 1.0).unwrap();
        let a = offset_expectation(&t, &OffsetForm::None, &EstimationMode::Exact).unwrap();
        assert_eq!(a.value, seq_rademacher_exact(&t).unwrap());
    }

    #[test]
    fn quadratic_alpha_requires_positive_alpha() {
        let t = FunctionTable::from_levels(&[vec![0.0; 2]], 1.0).unwrap();
        let r = offset_expectation(
            &t,
            &OffsetForm::QuadraticAlpha { alpha: 0.0 },
            &EstimationMode::Exact,
        );
        assert!(r.is_err());
    }

    #[test]
    fn gamma_grid_is_dyadic() {
        assert_eq!(dyadic_gamma_grid(4), vec![0.25, 0.5, 1.0, 2.0]);
        assert_eq!(dyadic_gamma_grid(5).len(), 5);
    }
}
