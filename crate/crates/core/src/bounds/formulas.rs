//! Closed-form adaptive rates. All logarithms are natural.

use std::f64::consts::{E, SQRT_2};

use serde::{Deserialize, Serialize};

use super::profile::CoveringProfile;
use super::spectral::{lambda_max, second_moment};
use crate::complexity::{dudley_integral, dyadic_gamma_grid};
use crate::distribution::{kl_divergence, Distribution};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Tolerated excess of `‖y_t‖₂` over one.
pub const UNIT_BALL_SLACK: f64 = 1e-9;

/// Coefficient of the square-root term of the predictable-sequence rate.
pub const PREDICTABLE_K1: f64 = 4.0 * SQRT_2;
/// Coefficient of the entropy-integral term of the predictable-sequence rate.
pub const PREDICTABLE_K2: f64 = 24.0 * SQRT_2;

/// `16√d log n (√λ_max(Σ y_t y_tᵀ) + 1)`.
pub fn spectral_rate(ys: &[Vec<f64>], d: usize) -> Result<f64> {
    let n = ys.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "spectral rate needs n ≥ 2, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    for (t, y) in ys.iter().enumerate() {
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: y.len(),
            });
        }
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 + UNIT_BALL_SLACK {
            return Err(Error::OutsideUnitBall { round: t + 1, norm });
        }
    }
    let lam = lambda_max(&second_moment(ys, d), d);
    Ok(16.0 * (d as f64).sqrt() * (n as f64).ln() * (lam.sqrt() + 1.0))
}

/// Minimum over the dyadic scale grid of
/// `K1 √(log n · log N₂(γ/2) · (Σ(f − M)² + 1)) + K2 log n · I(γ) + 2 log n + 7`,
/// where `I` is the entropy integral.
pub fn predictable_rate(
    f_values: &[f64],
    m: &[f64],
    profile: &CoveringProfile,
    n: usize,
) -> Result<f64> {
    profile.validate()?;
    if f_values.len() != n || m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if f_values.len() != n {
                f_values.len()
            } else {
                m.len()
            },
        });
    }
    if n == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let log_n = (n as f64).ln();
    let dev = compensated_sum(f_values.iter().zip(m).map(|(f, p)| (f - p) * (f - p)));
    Ok(dyadic_gamma_grid(n)
        .into_iter()
        .map(|gamma| {
            PREDICTABLE_K1
                * (log_n * profile.log_n2(gamma / 2.0) * (dev + 1.0))
                    .max(0.0)
                    .sqrt()
                + PREDICTABLE_K2 * log_n * dudley_integral(profile, gamma, n)
                + 2.0 * log_n
                + 7.0
        })
        .fold(f64::INFINITY, f64::min))
}

/// `4 log(log N · S + e) √(32 (log N · S + e)) + 2` with `S = Σ(f − f*)²`.
pub fn fixed_vs_best_rate(
    f_values: &[f64],
    fstar_values: &[f64],
    class_size: usize,
) -> Result<f64> {
    if class_size < 2 {
        return Err(Error::invalid(format!(
            "class size must be at least 2, got {class_size}"
        )));
    }
    if f_values.len() != fstar_values.len() {
        return Err(Error::DimensionMismatch {
            expected: fstar_values.len(),
            found: f_values.len(),
        });
    }
    let s = compensated_sum(
        f_values
            .iter()
            .zip(fstar_values)
            .map(|(a, b)| (a - b) * (a - b)),
    );
    let inner = (class_size as f64).ln() * s + E;
    Ok(4.0 * inner.ln() * (32.0 * inner).sqrt() + 2.0)
}

/// `√(50 (KL + log n) Σ_t Σ_i f_i y_{t,i}²) + 50 (KL + log n) + 10`; `+inf` for infinite KL.
pub fn pacbayes_rate(f: &Distribution, pi: &Distribution, ys: &[Vec<f64>]) -> Result<f64> {
    let k = pi.support_size();
    let n = ys.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "PAC-Bayes rate needs n ≥ 2, got {n}"
        )));
    }
    if let Some(y) = ys.iter().find(|y| y.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: y.len(),
        });
    }
    let kl = kl_divergence(f, pi)?;
    if kl.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let second = compensated_sum(
        ys.iter()
            .flat_map(|y| f.weights().iter().zip(y).map(|(w, v)| w * v * v)),
    );
    let c = 50.0 * (kl + (n as f64).ln());
    Ok((c * second).sqrt() + c + 10.0)
}

/// `3 √(2n · max(KL, 1)) + 4√n`.
pub fn kl_radius_rate(f: &Distribution, pi: &Distribution, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let kl = kl_divergence(f, pi)?;
    let nf = n as f64;
    Ok(3.0 * (2.0 * nf * kl.max(1.0)).sqrt() + 4.0 * nf.sqrt())
}

/// `D √n (8‖f‖(1 + √(log 2‖f‖ + log log 2‖f‖)) + 12)` for `‖f‖ ≥ 1`.
pub fn norm_adaptive_rate(norm_f: f64, smoothness: f64, n: usize) -> Result<f64> {
    if norm_f.is_nan() || norm_f < 1.0 {
        return Err(Error::BelowAdaptiveRange(norm_f));
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(Error::invalid(format!(
            "smoothness must be positive, got {smoothness}"
        )));
    }
    let l = (2.0 * norm_f).ln();
    Ok(smoothness * (n as f64).sqrt() * (8.0 * norm_f * (1.0 + (l + l.ln()).sqrt()) + 12.0))
}

/// Rademacher complexity of the class at each ladder radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusTable {
    /// Increasing radii.
    pub radii: Vec<f64>,
    /// `Rad_n(F(R))` at each radius; positive and nondecreasing.
    pub rad: Vec<f64>,
}

impl RadiusTable {
    pub fn new(radii: Vec<f64>, rad: Vec<f64>) -> Result<Self> {
        let table = Self { radii, rad };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.len() != self.rad.len() {
            return Err(Error::invalid(
                "radius table needs matching non-empty radius and value lists",
            ));
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "radius table radii must be strictly increasing",
            ));
        }
        if self.rad.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || self.rad.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::invalid(
                "radius table values must be positive and nondecreasing",
            ));
        }
        Ok(())
    }

    /// Value at the smallest radius `≥ r`.
    pub fn lookup(&self, r: f64) -> Result<f64> {
        self.radii
            .iter()
            .position(|&x| x >= r)
            .map(|i| self.rad[i])
            .ok_or(Error::TableGap {
                radius: r,
                largest: *self.radii.last().expect("non-empty"),
            })
    }
}

/// Default outer constant of the generic radius rate.
pub const GENERIC_K1: f64 = 64.0;
/// Default inner constant of the generic radius rate.
pub const GENERIC_K2: f64 = 16.0;

/// `K1 Rad(2R) log^{3/2} n (1 + √(log(Rad(2R)/Rad(1)) + log log 2R)) + K2 Γ Rad(1) log^{3/2} n`.
/// The square-root argument is clamped at zero (it is negative when `2R < e`).
pub fn generic_radius_rate(
    r_f: f64,
    table: &RadiusTable,
    k1: f64,
    k2: f64,
    gamma: f64,
    n: usize,
) -> Result<f64> {
    table.validate()?;
    if !(r_f.is_finite() && r_f >= 0.0) {
        return Err(Error::invalid(format!(
            "comparator radius must be finite and nonnegative, got {r_f}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let rad_2r = table.lookup(2.0 * r_f)?;
    let rad_1 = table.lookup(1.0)?;
    let log_term = (rad_2r / rad_1).ln() + (2.0 * r_f).ln().ln();
    let root = if log_term.is_nan() {
        0.0
    } else {
        log_term.max(0.0).sqrt()
    };
    let scale = (n as f64).ln().powf(1.5);
    Ok(k1 * rad_2r * scale * (1.0 + root) + k2 * gamma * rad_1 * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_examples() {
        let zeros = vec![vec![0.0, 0.0]; 4];
        let v = spectral_rate(&zeros, 2).unwrap();
        assert!((v - 16.0 * 2f64.sqrt() * 4f64.ln()).abs() < 1e-12);
        assert!((v - 31.37).abs() < 0.01);
        let e1 = vec![vec![1.0, 0.0]; 4];
        let v = spectral_rate(&e1, 2).unwrap();
        assert!((v - 94.10).abs() < 0.01);
        assert!(matches!(
            spectral_rate(&[vec![1.1, 0.0], vec![0.0, 0.0]], 2),
            Err(Error::OutsideUnitBall { round: 1, .. })
        ));
    }

    #[test]
    fn predictable_singleton_class() {
        use crate::complexity::{CoverNorm, FunctionTable};
        let t = FunctionTable::from_levels(&[vec![0.2; 8]], 1.0).unwrap();
        let p = CoveringProfile::from_table(&t, CoverNorm::L2).unwrap();
        let f = vec![0.3; 8];
        let v = predictable_rate(&f, &f, &p, 8).unwrap();
        assert!((v - (2.0 * 8f64.ln() + 7.0)).abs() < 1e-12);
        assert!(CoveringProfile::analytic(2.0).is_err());
        let bad = CoveringProfile::AnalyticPowerLaw { p: 2.5 };
        assert!(predictable_rate(&f, &f, &bad, 8).is_err());
    }

    #[test]
    fn fixed_vs_best_examples() {
        let f = vec![0.5; 10];
        let v = fixed_vs_best_rate(&f, &f, 2).unwrap();
        assert!((v - (4.0 * (32.0 * E).sqrt() + 2.0)).abs() < 1e-12);
        assert!((v - 39.30).abs() < 0.01);
        assert!(fixed_vs_best_rate(&f, &f, 1).is_err());
    }

    #[test]
    fn pacbayes_examples() {
        let u = Distribution::uniform(2).unwrap();
        let n = 10;
        let zeros = vec![vec![0.0, 0.0]; n];
        let v = pacbayes_rate(&u, &u, &zeros).unwrap();
        assert!((v - (50.0 * (n as f64).ln() + 10.0)).abs() < 1e-12);
        let ones = vec![vec![1.0, 1.0]; n];
        let v = pacbayes_rate(&u, &u, &ones).unwrap();
        let c = 50.0 * (n as f64).ln();
        assert!((v - ((c * n as f64).sqrt() + c + 10.0)).abs() < 1e-9);
        let e0 = Distribution::point_mass(2, 0).unwrap();
        assert_eq!(pacbayes_rate(&u, &e0, &ones).unwrap(), f64::INFINITY);
    }

    #[test]
    fn kl_radius_examples() {
        let u = Distribution::uniform(2).unwrap();
        let v = kl_radius_rate(&u, &u, 4).unwrap();
        assert!((v - (3.0 * 8f64.sqrt() + 8.0)).abs() < 1e-12);
        assert!((v - 16.485).abs() < 1e-3);
        assert_eq!(
            kl_radius_rate(&u, &u, 9).unwrap(),
            3.0 * 18f64.sqrt() + 12.0
        );
    }

    #[test]
    fn kl_radius_at_kl_two() {
        // KL = 2 requires a tilted prior: f = e_0, π_0 = e^{-2}.
        let p0 = (-2f64).exp();
        let pi = Distribution::new(vec![p0, 1.0 - p0]).unwrap();
        let f = Distribution::point_mass(2, 0).unwrap();
        let v = kl_radius_rate(&f, &pi, 100).unwrap();
        assert!((v - 100.0).abs() < 1e-9);
    }

    #[test]
    fn norm_adaptive_examples() {
        let v = norm_adaptive_rate(1.0, 1.0, 4).unwrap();
        let inner = 2f64.ln() + 2f64.ln().ln();
        assert!((inner - 0.32663).abs() < 1e-5);
        assert!((v - 2.0 * (8.0 * (1.0 + inner.sqrt()) + 12.0)).abs() < 1e-12);
        assert!((v - 49.14).abs() < 0.01);
        assert!(matches!(
            norm_adaptive_rate(0.5, 1.0, 4),
            Err(Error::BelowAdaptiveRange(_))
        ));
        let d2 = norm_adaptive_rate(3.0, 2.0, 16).unwrap();
        let d1 = norm_adaptive_rate(3.0, 1.0, 16).unwrap();
        let n4 = norm_adaptive_rate(3.0, 1.0, 64).unwrap();
        assert!((d2 / d1 - 2.0).abs() < 1e-12);
        assert!((n4 / d1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generic_radius_degenerate_rung() {
        let table = RadiusTable::new(vec![1.0, 2.0, 4.0], vec![3.0, 3.0, 5.0]).unwrap();
        let n = 16usize;
        let v = generic_radius_rate(0.5, &table, 1.0, 1.0, 1.0, n).unwrap();
        let scale = (n as f64).ln().powf(1.5);
        assert!((v - (3.0 * scale + 3.0 * scale)).abs() < 1e-12);
        assert!(matches!(
            generic_radius_rate(3.0, &table, 1.0, 1.0, 1.0, n),
            Err(Error::TableGap { .. })
        ));
    }
}
