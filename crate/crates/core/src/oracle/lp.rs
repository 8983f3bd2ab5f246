//! Zero-sum matrix games by a dense simplex method with Bland's rule.
//!
//! The row player minimizes and the column player maximizes. After shifting
//! the matrix to `A = M − min M + 1 > 0`, the row player's problem becomes
//! `max Σu s.t. Aᵀu ≤ 1, u ≥ 0` with value `1/Σu`; the origin is feasible so a
//! single phase suffices. The column strategy is read off the dual values of
//! the slack columns.

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};

/// Largest admissible gap between the two players' guarantees.
pub const DUALITY_GAP_TOLERANCE: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-12;

/// Value and optimal mixed strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    /// Minimizing row player's strategy.
    pub row: Distribution,
    /// Maximizing column player's strategy.
    pub col: Distribution,
    /// `max_y (qᵀM)_y − min_d (Mp)_d`.
    pub duality_gap: f64,
}

/// Solves `min_q max_p qᵀ M p` for a dense `r × c` matrix.
pub fn matrix_game_value(m: &[Vec<f64>]) -> Result<GameSolution> {
    let r = m.len();
    if r == 0 || m[0].is_empty() {
        return Err(Error::invalid(
            "matrix game needs at least one row and one column",
        ));
    }
    let c = m[0].len();
    if m.iter().any(|row| row.len() != c) {
        return Err(Error::invalid("matrix rows have different lengths"));
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix entries must be finite"));
    }
    let lo = m.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = lo - 1.0;

    // Tableau rows: one per column constraint. Columns: u (r), slack (c), rhs.
    let width = r + c + 1;
    let mut tab = vec![0.0; c * width];
    for y in 0..c {
        for d in 0..r {
            tab[y * width + d] = m[d][y] - shift;
        }
        tab[y * width + r + y] = 1.0;
        tab[y * width + r + c] = 1.0;
    }
    // Objective row stores reduced costs for maximizing Σu: −1 on u, 0 on slacks.
    let mut obj = vec![0.0; width];
    for v in obj.iter_mut().take(r) {
        *v = -1.0;
    }
    let mut basis: Vec<usize> = (r..r + c).collect();

    let max_iter = 50 * (r + c) + 1000;
    for _ in 0..max_iter {
        let Some(enter) = (0..r + c).find(|&j| obj[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for row in 0..c {
            let a = tab[row * width + enter];
            if a > PIVOT_EPS {
                let ratio = tab[row * width + r + c] / a;
                leave = match leave {
                    None => Some((row, ratio)),
                    Some((best, br)) => {
                        if ratio < br - PIVOT_EPS
                            || ((ratio - br).abs() <= PIVOT_EPS && basis[row] < basis[best])
                        {
                            Some((row, ratio))
                        } else {
                            Some((best, br))
                        }
                    }
                };
            }
        }
        let Some((prow, _)) = leave else {
            return Err(Error::Solver("unbounded row program".into()));
        };
        let piv = tab[prow * width + enter];
        for j in 0..width {
            tab[prow * width + j] /= piv;
        }
        for row in 0..c {
            if row != prow {
                let f = tab[row * width + enter];
                if f != 0.0 {
                    for j in 0..width {
                        tab[row * width + j] -= f * tab[prow * width + j];
                    }
                }
            }
        }
        let f = obj[enter];
        for j in 0..width {
            obj[j] -= f * tab[prow * width + j];
        }
        basis[prow] = enter;
    }
    if (0..r + c).any(|j| obj[j] < -PIVOT_EPS) {
        return Err(Error::Solver("simplex iteration limit reached".into()));
    }

    let mut u = vec![0.0; r];
    for (row, &b) in basis.iter().enumerate() {
        if b < r {
            u[b] = tab[row * width + r + c].max(0.0);
        }
    }
    let p: Vec<f64> = (0..c).map(|y| obj[r + y].max(0.0)).collect();
    let row = Distribution::from_unnormalized(u)
        .map_err(|e| Error::Solver(format!("row strategy: {e}")))?;
    let col = Distribution::from_unnormalized(p)
        .map_err(|e| Error::Solver(format!("column strategy: {e}")))?;

    let row_guarantee = (0..c)
        .map(|y| (0..r).map(|d| row.weights()[d] * m[d][y]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let col_guarantee = (0..r)
        .map(|d| (0..c).map(|y| col.weights()[y] * m[d][y]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let duality_gap = row_guarantee - col_guarantee;
    let scale = 1.0 + m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if duality_gap > DUALITY_GAP_TOLERANCE * scale {
        return Err(Error::Solver(format!(
            "duality gap {duality_gap:e} exceeds tolerance"
        )));
    }
    Ok(GameSolution {
        value: 0.5 * (row_guarantee + col_guarantee),
        row,
        col,
        duality_gap: duality_gap.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn matching_pennies() {
        let s = matrix_game_value(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.row.weights()[0] - 0.5).abs() < 1e-12);
        // Oracle: brute force over a 10^4-point grid of q.
        let best = (0..=10_000)
            .map(|k| {
                let q = k as f64 / 10_000.0;
                (1.0 - q).max(q)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((s.value - best).abs() < 1e-4);
    }

    #[test]
    fn constant_and_single_row() {
        let s = matrix_game_value(&[vec![3.5, 3.5], vec![3.5, 3.5]]).unwrap();
        assert!((s.value - 3.5).abs() < 1e-12);
        let s = matrix_game_value(&[vec![1.0, 2.0]]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(s.col.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn nan_rejected() {
        assert!(matrix_game_value(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn random_games_certify_both_players() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let r = rng.random_range(1..7);
            let c = rng.random_range(1..7);
            let m: Vec<Vec<f64>> = (0..r)
                .map(|_| (0..c).map(|_| rng.random_range(-3.0..3.0)).collect())
                .collect();
            let s = matrix_game_value(&m).unwrap();
            for y in 0..c {
                let v: f64 = s
                    .row
                    .weights()
                    .iter()
                    .zip(&m)
                    .map(|(p, row)| p * row[y])
                    .sum();
                assert!(v <= s.value + 1e-9);
            }
            for row in &m {
                let v: f64 = s.col.weights().iter().zip(row).map(|(q, x)| q * x).sum();
                assert!(v >= s.value - 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_games() {
        // Repeated rows and columns stress Bland's tie-breaking.
        let m = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let s = matrix_game_value(&m).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
    }
}
