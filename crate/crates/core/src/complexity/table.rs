use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{node_count, path_node_indices, MAX_TREE_DEPTH};

/// Values `g(z_node)` of a finite class on every node of a depth-`n` tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableRepr")]
pub struct FunctionTable {
    /// Tree depth `n`.
    depth: usize,
    /// One row per function, heap-ordered node values.
    values: Vec<Vec<f64>>,
    /// Declared bound `b` with `|value| ≤ b`.
    bound: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    depth: usize,
    values: Vec<Vec<f64>>,
    #[serde(default = "unit_bound")]
    bound: f64,
}

fn unit_bound() -> f64 {
    1.0
}

impl TryFrom<TableRepr> for FunctionTable {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        Self::new(r.depth, r.values, r.bound)
    }
}

impl FunctionTable {
    pub fn new(depth: usize, values: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(Error::invalid(format!(
                "table depth must be in 1..={MAX_TREE_DEPTH}, got {depth}"
            )));
        }
        if values.is_empty() {
            return Err(Error::invalid("function class must be non-empty"));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::invalid(format!(
                "range bound must be positive, got {bound}"
            )));
        }
        let nodes = node_count(depth);
        for row in &values {
            if row.len() != nodes {
                return Err(Error::DimensionMismatch {
                    expected: nodes,
                    found: row.len(),
                });
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && x.abs() <= bound)) {
                return Err(Error::invalid(format!(
                    "table value {x} exceeds bound {bound}"
                )));
            }
        }
        Ok(Self {
            depth,
            values,
            bound,
        })
    }

    /// Class whose functions are constant along the tree: row `g` holds `levels[g][t]` at every level-`t` node.
    pub fn from_levels(levels: &[Vec<f64>], bound: f64) -> Result<Self> {
        let depth = levels.first().map(Vec::len).unwrap_or(0);
        let values = levels
            .iter()
            .map(|row| {
                (1..=depth)
                    .flat_map(|t| {
                        std::iter::repeat_n(
                            row.get(t - 1).copied().unwrap_or(f64::NAN),
                            1 << (t - 1),
                        )
                    })
                    .collect()
            })
            .collect();
        Self::new(depth, values, bound)
    }

    /// Uniform draws in `[-bound, bound]` at every node.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        size: usize,
        depth: usize,
        bound: f64,
    ) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(Error::invalid(format!(
                "table depth must be in 1..={MAX_TREE_DEPTH}, got {depth}"
            )));
        }
        let nodes = node_count(depth);
        let values = (0..size)
            .map(|_| {
                (0..nodes)
                    .map(|_| rng.random_range(-bound..=bound))
                    .collect()
            })
            .collect();
        Self::new(depth, values, bound)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Adds one function.
    pub fn with_row(&self, row: Vec<f64>) -> Result<Self> {
        let mut values = self.values.clone();
        values.push(row);
        Self::new(self.depth, values, self.bound)
    }

    /// `values[g][t]` along the path encoded by `code` (bit `t` = sign of round `t + 1`).
    pub fn path_values(&self, code: usize) -> Vec<Vec<f64>> {
        let idx = path_node_indices(self.depth, code);
        self.values
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).collect())
            .collect()
    }

    /// Number of distinct root-to-leaf node sequences (the last sign never selects a node).
    pub fn node_path_count(&self) -> usize {
        1usize << (self.depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_levels_repeats_per_level() {
        let t = FunctionTable::from_levels(&[vec![0.1, 0.2, 0.3]], 1.0).unwrap();
        assert_eq!(t.values()[0], vec![0.1, 0.2, 0.2, 0.3, 0.3, 0.3, 0.3]);
        assert_eq!(t.path_values(0b11)[0], vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn bound_enforced() {
        assert!(FunctionTable::new(1, vec![vec![1.5]], 1.0).is_err());
        assert!(FunctionTable::new(2, vec![vec![0.0; 2]], 1.0).is_err());
    }
}
