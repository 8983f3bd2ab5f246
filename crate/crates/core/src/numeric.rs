//! Small numerical helpers shared across modules.

/// Neumaier-compensated sum. Order-dependent only through the input order,
/// so reductions over replicates stay reproducible.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// `log Σ exp(x_i)` with max-shift. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + compensated_sum(xs.iter().map(|x| (x - max).exp())).ln()
}

pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let m = samples.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(samples.iter().copied()) / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean))) / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`; stops when the bracket width falls below
/// `rel_tol * max(1, |x|)`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= rel_tol * c.abs().max(1.0) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Snap to the dyadic grid `k / 2^32`. Values on this grid add and
/// subtract exactly while their magnitude stays below 2^20.
pub fn quantize(x: f64) -> f64 {
    const SCALE: f64 = 4_294_967_296.0;
    if !x.is_finite() {
        return x;
    }
    (x * SCALE).round() / SCALE
}
