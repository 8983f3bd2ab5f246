use super::cover::CoverProfile;
use crate::bounds::CoveringProfile;

/// Number of geometric grid points used by [`dudley_integral`].
pub const DUDLEY_POINTS: usize = 64;

/// `∫_{1/n}^{γ} √(n log N₂(δ)) dδ` by the trapezoid rule on a geometric grid.
/// Empty (zero) when `γ ≤ 1/n`.
pub fn dudley_integral(profile: &CoveringProfile, gamma: f64, n: usize) -> f64 {
    let lo = 1.0 / n as f64;
    if gamma.is_nan() || gamma <= lo {
        return 0.0;
    }
    let nf = n as f64;
    let ratio = gamma / lo;
    let grid: Vec<f64> = (0..DUDLEY_POINTS)
        .map(|k| {
            if k + 1 == DUDLEY_POINTS {
                gamma
            } else {
                lo * ratio.powf(k as f64 / (DUDLEY_POINTS - 1) as f64)
            }
        })
        .collect();
    let h: Vec<f64> = grid
        .iter()
        .map(|&d| (nf * profile.log_n2(d)).max(0.0).sqrt())
        .collect();
    grid.windows(2)
        .zip(h.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Same integral computed exactly for a step-function cover profile.
pub fn dudley_integral_exact(profile: &CoverProfile, gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    profile.integrate(1.0 / nf, gamma, |l| (nf * l).max(0.0).sqrt())
}
