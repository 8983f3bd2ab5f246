//! Largest eigenvalue of a small symmetric positive semidefinite matrix.

/// Relative tolerance on successive Rayleigh quotients.
pub const RAYLEIGH_TOLERANCE: f64 = 1e-12;
/// Iteration cap per start vector.
pub const MAX_POWER_ITERATIONS: usize = 100_000;

/// `Σ_t y_t y_tᵀ` as a dense row-major `d × d` matrix.
pub fn second_moment(ys: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for y in ys {
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += y[i] * y[j];
            }
        }
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d)
        .map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn power_from(m: &[f64], d: usize, start: Vec<f64>) -> f64 {
    let s = norm(&start);
    let mut v: Vec<f64> = start.iter().map(|x| x / s).collect();
    let mut rho = 0.0f64;
    for _ in 0..MAX_POWER_ITERATIONS {
        let w = mat_vec(m, &v, d);
        let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let wn = norm(&w);
        if wn == 0.0 {
            return 0.0;
        }
        let converged =
            (next - rho).abs() <= RAYLEIGH_TOLERANCE * next.abs().max(f64::MIN_POSITIVE);
        rho = next;
        v = w.into_iter().map(|x| x / wn).collect();
        if converged {
            break;
        }
    }
    rho
}

/// `λ_max` by power iteration. Starts from the normalized all-ones vector and
/// from each basis vector, keeping the largest Rayleigh quotient, so a start
/// orthogonal to the top eigenvector cannot stall the estimate.
pub fn lambda_max(m: &[f64], d: usize) -> f64 {
    let mut best = power_from(m, d, vec![1.0; d]);
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        best = best.max(power_from(m, d, e));
    }
    best.max(0.0)
}
