//! Low-level exponential weights and the KL-ball comparator.

use serde::{Deserialize, Serialize};

use crate::distribution::{kl_divergence, normalize_log_weights, Distribution};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, dot};

/// Upper end of the tilt search in [`kl_ball_minimizer`].
pub const MAX_TILT: f64 = 1e6;
/// Target accuracy on the KL constraint.
pub const KL_TOLERANCE: f64 = 1e-10;
/// Margin below which the fixed-radius inequality counts as violated.
pub const FIXED_R_VIOLATION: f64 = -1e-8;

fn cumulative(ys: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    let mut total = vec![0.0; k];
    for y in ys {
        if y.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: y.len(),
            });
        }
        for (a, b) in total.iter_mut().zip(y) {
            *a += b;
        }
    }
    Ok(total)
}

/// `q ∝ π_k exp(−η L_k)`; atoms with `π_k = 0` stay at zero.
pub(crate) fn tilt(pi: &Distribution, eta: f64, losses: &[f64]) -> Result<Distribution> {
    let first = losses.first().copied().unwrap_or(0.0);
    if eta == 0.0 || losses.iter().all(|&l| l == first) {
        return Ok(pi.clone());
    }
    let logw: Vec<f64> = pi
        .weights()
        .iter()
        .zip(losses)
        .map(|(&p, &l)| {
            if p > 0.0 {
                p.ln() - eta * l
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    normalize_log_weights(&logw)
}

/// Exponential weights with rate `√(R/n)` after losses `y_{1:t}`.
pub fn lowlevel_ew(
    pi: &Distribution,
    radius: f64,
    n: usize,
    ys: &[Vec<f64>],
) -> Result<Distribution> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid(format!(
            "radius must be finite and nonnegative, got {radius}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let total = cumulative(ys, pi.support_size())?;
    tilt(pi, (radius / n as f64).sqrt(), &total)
}

/// Minimizer of `⟨L, f⟩` over `{f : KL(f | π) ≤ R}` and the minimum value.
pub fn kl_ball_minimizer(
    pi: &Distribution,
    radius: f64,
    losses: &[f64],
) -> Result<(Distribution, f64)> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::invalid(format!(
            "KL radius must be nonnegative, got {radius}"
        )));
    }
    let k = pi.support_size();
    if losses.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: losses.len(),
        });
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("losses must be finite"));
    }
    if radius == 0.0 {
        return Ok((pi.clone(), dot(pi.weights(), losses)));
    }
    let support: Vec<usize> = (0..k).filter(|&i| pi.weights()[i] > 0.0).collect();
    let min_loss = support
        .iter()
        .map(|&i| losses[i])
        .fold(f64::INFINITY, f64::min);
    let argmin_mass = compensated_sum(
        support
            .iter()
            .filter(|&&i| losses[i] == min_loss)
            .map(|&i| pi.weights()[i]),
    );
    if -argmin_mass.ln() <= radius {
        let restricted: Vec<f64> = (0..k)
            .map(|i| {
                if losses[i] == min_loss {
                    pi.weights()[i]
                } else {
                    0.0
                }
            })
            .collect();
        let f = Distribution::from_unnormalized(restricted)?;
        let value = dot(f.weights(), losses);
        return Ok((f, value));
    }
    // KL of the tilt increases with η; keep the feasible end of the bracket.
    let shifted: Vec<f64> = losses.iter().map(|l| l - min_loss).collect();
    let kl_at = |eta: f64| -> Result<(Distribution, f64)> {
        let f = tilt(pi, eta, &shifted)?;
        let kl = kl_divergence(&f, pi)?;
        Ok((f, kl))
    };
    let (mut lo, mut hi) = (0.0f64, MAX_TILT);
    let (mut best, _) = kl_at(0.0)?;
    let (f_hi, kl_hi) = kl_at(hi)?;
    if kl_hi <= radius {
        best = f_hi;
    } else {
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            let (f, kl) = kl_at(mid)?;
            if kl <= radius {
                lo = mid;
                best = f;
                if radius - kl <= KL_TOLERANCE {
                    break;
                }
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
    }
    let value = dot(best.weights(), losses);
    Ok((best, value))
}

/// Both sides of the fixed-radius regret inequality for one loss sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedRadiusReport {
    /// `−inf_{KL(f|π) ≤ R} Σ_t ⟨y_t, f⟩`.
    pub lhs: f64,
    /// `−Σ_t ⟨y_t, q^R(y_{1:t−1})⟩ + 2√(Rn)`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub violated: bool,
}

/// Checks that exponential weights at radius `R` competes with the KL ball of radius `R`.
pub fn fixed_r_inequality_check(
    pi: &Distribution,
    radius: f64,
    n: usize,
    ys: &[Vec<f64>],
) -> Result<FixedRadiusReport> {
    if ys.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: ys.len(),
        });
    }
    let k = pi.support_size();
    let eta = (radius / n as f64).sqrt();
    let mut total = vec![0.0; k];
    let mut played = Vec::with_capacity(n);
    for y in ys {
        if y.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: y.len(),
            });
        }
        let q = tilt(pi, eta, &total)?;
        played.push(dot(q.weights(), y));
        for (a, b) in total.iter_mut().zip(y) {
            *a += b;
        }
    }
    let (_, best) = kl_ball_minimizer(pi, radius, &total)?;
    let lhs = -best;
    let rhs = -compensated_sum(played) + 2.0 * (radius * n as f64).sqrt();
    let margin = rhs - lhs;
    Ok(FixedRadiusReport {
        lhs,
        rhs,
        margin,
        violated: margin < FIXED_R_VIOLATION,
    })
}
