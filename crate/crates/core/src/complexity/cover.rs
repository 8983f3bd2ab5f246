//! Internal sequential covers of a finite class on a tree.
//!
//! A set `V ⊆ G` covers at scale `α` when every pair (function, path) has
//! some `v ∈ V` within `α` on that path. The witness may change with the
//! path, so the search is a hitting-set problem over (function, path) pairs.

use serde::{Deserialize, Serialize};

use super::table::FunctionTable;
use crate::error::{Error, Result};

/// Largest class for which the minimum cover is searched exhaustively.
pub const EXACT_COVER_LIMIT: usize = 12;

/// Distance used along a single path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverNorm {
    /// Root-mean-square distance `√(Σ_t (g − v)² / n)`.
    L2,
    /// Maximum absolute distance.
    Linf,
}

/// Size of an internal cover and whether it is provably minimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSize {
    pub size: usize,
    /// `false` when the greedy upper bound was used.
    pub exact: bool,
}

/// Path distances between every pair of functions, `[path][g][v]`.
#[derive(Debug, Clone)]
struct PairDistances {
    size: usize,
    per_path: Vec<Vec<f64>>,
}

impl PairDistances {
    fn new(table: &FunctionTable, norm: CoverNorm) -> Self {
        let size = table.size();
        let n = table.depth() as f64;
        let per_path = (0..table.node_path_count())
            .map(|code| {
                let vals = table.path_values(code);
                let mut d = vec![0.0; size * size];
                for g in 0..size {
                    for v in (g + 1)..size {
                        let dist = match norm {
                            CoverNorm::L2 => {
                                let ss: f64 = vals[g]
                                    .iter()
                                    .zip(&vals[v])
                                    .map(|(a, b)| (a - b) * (a - b))
                                    .sum();
                                (ss / n).sqrt()
                            }
                            CoverNorm::Linf => vals[g]
                                .iter()
                                .zip(&vals[v])
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max),
                        };
                        d[g * size + v] = dist;
                        d[v * size + g] = dist;
                    }
                }
                d
            })
            .collect();
        Self { size, per_path }
    }

    /// Minimal (under inclusion) candidate masks that a cover must hit.
    fn requirements(&self, alpha: f64) -> Vec<u64> {
        let mut masks: Vec<u64> = Vec::new();
        for d in &self.per_path {
            for g in 0..self.size {
                let mut m = 0u64;
                for v in 0..self.size {
                    if d[g * self.size + v] <= alpha {
                        m |= 1 << v;
                    }
                }
                masks.push(m);
            }
        }
        masks.sort_unstable();
        masks.dedup();
        masks.sort_by_key(|m| m.count_ones());
        let mut minimal: Vec<u64> = Vec::new();
        for m in masks {
            // Keep `m` only when no kept mask is a subset of it.
            if minimal.iter().all(|&k| k & !m != 0) {
                minimal.push(m);
            }
        }
        minimal
    }

    fn cover_size(&self, alpha: f64) -> CoverSize {
        let reqs = self.requirements(alpha);
        if self.size <= EXACT_COVER_LIMIT {
            CoverSize {
                size: min_hitting_set(self.size, &reqs),
                exact: true,
            }
        } else {
            CoverSize {
                size: greedy_hitting_set(self.size, &reqs),
                exact: false,
            }
        }
    }

    fn distinct_distances(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.per_path.iter().flatten().copied().collect();
        all.push(0.0);
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

fn min_hitting_set(size: usize, reqs: &[u64]) -> usize {
    for k in 1..=size {
        if subsets_of_size(size, k).any(|s| reqs.iter().all(|&r| r & s != 0)) {
            return k;
        }
    }
    size
}

/// All `k`-subsets of `0..size` as bitmasks (Gosper's hack).
fn subsets_of_size(size: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit = 1u64 << size;
    let mut cur = (1u64 << k) - 1;
    std::iter::from_fn(move || {
        if cur >= limit {
            return None;
        }
        let out = cur;
        let c = cur & cur.wrapping_neg();
        let r = cur + c;
        cur = (((r ^ cur) >> 2) / c) | r;
        Some(out)
    })
}

fn greedy_hitting_set(size: usize, reqs: &[u64]) -> usize {
    let mut open: Vec<u64> = reqs.to_vec();
    let mut chosen = 0;
    while !open.is_empty() {
        let best = (0..size)
            .max_by_key(|&v| {
                (
                    open.iter().filter(|&&r| r >> v & 1 == 1).count(),
                    std::cmp::Reverse(v),
                )
            })
            .expect("non-empty class");
        open.retain(|&r| r >> best & 1 == 0);
        chosen += 1;
    }
    chosen
}

fn check_scale(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::invalid(format!(
            "cover scale must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Size of the smallest internal cover at scale `alpha`.
pub fn covering_number(table: &FunctionTable, alpha: f64, norm: CoverNorm) -> Result<CoverSize> {
    check_scale(alpha)?;
    if table.size() > 64 {
        return Err(Error::invalid("covering supports at most 64 functions"));
    }
    Ok(PairDistances::new(table, norm).cover_size(alpha))
}

/// Cover size as a right-continuous step function of the scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverProfile {
    /// `(threshold, size)`: `size` holds for scales from `threshold` up to the next threshold.
    steps: Vec<(f64, usize)>,
    pub exact: bool,
    pub norm: CoverNorm,
}

impl CoverProfile {
    pub fn build(table: &FunctionTable, norm: CoverNorm) -> Result<Self> {
        if table.size() > 64 {
            return Err(Error::invalid("covering supports at most 64 functions"));
        }
        let dist = PairDistances::new(table, norm);
        let cands = dist.distinct_distances();
        let exact = table.size() <= EXACT_COVER_LIMIT;
        let mut values: Vec<Option<usize>> = vec![None; cands.len()];
        if exact {
            // Cover size is monotone in the scale, so constant runs can be skipped.
            fill_monotone(&dist, &cands, &mut values, 0, cands.len() - 1);
        } else {
            // Greedy is not monotone; sample, then take running minima (a cover at a
            // smaller scale is still a cover).
            let stride = (cands.len() / 512).max(1);
            let mut best = usize::MAX;
            for (i, &c) in cands.iter().enumerate() {
                if i % stride == 0 || i + 1 == cands.len() {
                    best = best.min(dist.cover_size(c).size);
                }
                values[i] = Some(best);
            }
        }
        let mut steps: Vec<(f64, usize)> = Vec::new();
        for (c, v) in cands.iter().zip(values) {
            let v = v.expect("filled");
            if steps.last().map(|s| s.1) != Some(v) {
                steps.push((*c, v));
            }
        }
        Ok(Self { steps, exact, norm })
    }

    /// Cover size at scale `alpha > 0`.
    pub fn size_at(&self, alpha: f64) -> usize {
        let pos = self.steps.partition_point(|s| s.0 <= alpha);
        self.steps[pos.saturating_sub(1)].1
    }

    pub fn log_size_at(&self, alpha: f64) -> f64 {
        (self.size_at(alpha) as f64).ln()
    }

    pub fn steps(&self) -> &[(f64, usize)] {
        &self.steps
    }

    /// `∫_a^b h(log N(δ)) dδ`, integrating the step function exactly.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, h: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let pos = self.steps.partition_point(|s| s.0 <= lo);
            let hi = self.steps.get(pos).map(|s| s.0.min(b)).unwrap_or(b);
            total += (hi - lo) * h(self.log_size_at(lo));
            lo = hi;
        }
        total
    }
}

fn fill_monotone(
    dist: &PairDistances,
    cands: &[f64],
    values: &mut [Option<usize>],
    lo: usize,
    hi: usize,
) {
    let v_lo = *values[lo].get_or_insert_with(|| dist.cover_size(cands[lo]).size);
    let v_hi = *values[hi].get_or_insert_with(|| dist.cover_size(cands[hi]).size);
    if v_lo == v_hi {
        for v in &mut values[lo..=hi] {
            *v = Some(v_lo);
        }
        return;
    }
    if hi - lo <= 1 {
        return;
    }
    let mid = lo + (hi - lo) / 2;
    fill_monotone(dist, cands, values, lo, mid);
    fill_monotone(dist, cands, values, mid, hi);
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Exhaustive oracle: try every subset of the class directly against the definition.
    fn brute_force(table: &FunctionTable, alpha: f64, norm: CoverNorm) -> usize {
        let m = table.size();
        let n = table.depth() as f64;
        let mut best = m;
        for s in 1u64..(1 << m) {
            let ok = (0..table.node_path_count()).all(|code| {
                let vals = table.path_values(code);
                (0..m).all(|g| {
                    (0..m).filter(|v| s >> v & 1 == 1).any(|v| {
                        let d = match norm {
                            CoverNorm::L2 => (vals[g]
                                .iter()
                                .zip(&vals[v])
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum::<f64>()
                                / n)
                                .sqrt(),
                            CoverNorm::Linf => vals[g]
                                .iter()
                                .zip(&vals[v])
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max),
                        };
                        d <= alpha
                    })
                })
            });
            if ok {
                best = best.min(s.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn large_scale_gives_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = FunctionTable::random(&mut rng, 7, 4, 1.0).unwrap();
        assert_eq!(covering_number(&t, 2.0, CoverNorm::Linf).unwrap().size, 1);
        assert_eq!(covering_number(&t, 2.0, CoverNorm::L2).unwrap().size, 1);
    }

    #[test]
    fn tiny_scale_separates_distinct_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = FunctionTable::random(&mut rng, 9, 3, 1.0).unwrap();
        assert_eq!(covering_number(&t, 1e-12, CoverNorm::L2).unwrap().size, 9);
    }

    #[test]
    fn exact_cover_matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let t = FunctionTable::random(&mut rng, 6, 3 + trial % 2, 1.0).unwrap();
            for &alpha in &[0.1, 0.3, 0.5, 0.8, 1.2] {
                for norm in [CoverNorm::L2, CoverNorm::Linf] {
                    let got = covering_number(&t, alpha, norm).unwrap();
                    assert!(got.exact);
                    assert_eq!(
                        got.size,
                        brute_force(&t, alpha, norm),
                        "alpha {alpha} norm {norm:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn profile_agrees_with_pointwise_covers() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = FunctionTable::random(&mut rng, 5, 4, 1.0).unwrap();
        for norm in [CoverNorm::L2, CoverNorm::Linf] {
            let p = CoverProfile::build(&t, norm).unwrap();
            for k in 1..200 {
                let a = k as f64 / 90.0;
                assert_eq!(p.size_at(a), covering_number(&t, a, norm).unwrap().size);
            }
        }
    }

    #[test]
    fn linf_cover_dominates_l2_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = FunctionTable::random(&mut rng, 8, 4, 1.0).unwrap();
        let mut prev = usize::MAX;
        for k in 1..40 {
            let a = k as f64 / 20.0;
            let l2 = covering_number(&t, a, CoverNorm::L2).unwrap().size;
            let li = covering_number(&t, a, CoverNorm::Linf).unwrap().size;
            assert!(li >= l2);
            assert!(l2 <= prev);
            prev = l2;
        }
    }

    #[test]
    fn greedy_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = FunctionTable::random(&mut rng, 14, 3, 1.0).unwrap();
        let c = covering_number(&t, 0.5, CoverNorm::L2).unwrap();
        assert!(!c.exact);
        assert!(c.size >= 1 && c.size <= 14);
    }

    #[test]
    fn step_integral_of_constant_profile() {
        let t = FunctionTable::from_levels(&[vec![0.0, 0.0], vec![1.0, 1.0]], 1.0).unwrap();
        let p = CoverProfile::build(&t, CoverNorm::L2).unwrap();
        // Two functions at distance 1: N = 2 below 1, N = 1 from 1 on.
        assert_eq!(p.size_at(0.5), 2);
        assert_eq!(p.size_at(1.0), 1);
        let v = p.integrate(0.25, 2.0, |l| l);
        assert!((v - 0.75 * 2f64.ln()).abs() < 1e-15);
    }
}
