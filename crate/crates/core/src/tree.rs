//! Complete binary trees addressed by sign paths.
//!
//! Nodes are stored in heap order: the root is index 0 and the children of
//! node `i` are `2i + 1` (sign −1) and `2i + 2` (sign +1). Level `t` (1-based)
//! occupies indices `2^{t-1} − 1 .. 2^t − 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Depth-`n` tree with one vector value per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr")]
pub struct BinaryTree {
    depth: usize,
    nodes: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRepr {
    depth: usize,
    nodes: Vec<Vec<f64>>,
}

impl TryFrom<TreeRepr> for BinaryTree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        Self::new(r.depth, r.nodes)
    }
}

/// Largest supported depth; keeps node counts inside `usize` arithmetic.
pub const MAX_TREE_DEPTH: usize = 40;

impl BinaryTree {
    pub fn new(depth: usize, nodes: Vec<Vec<f64>>) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(Error::invalid(format!(
                "tree depth must be in 1..={MAX_TREE_DEPTH}, got {depth}"
            )));
        }
        let expected = node_count(depth);
        if nodes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: nodes.len(),
            });
        }
        Ok(Self { depth, nodes })
    }

    /// Tree whose every node holds `value`.
    pub fn constant(depth: usize, value: Vec<f64>) -> Result<Self> {
        if depth == 0 || depth > MAX_TREE_DEPTH {
            return Err(Error::invalid(format!(
                "tree depth must be in 1..={MAX_TREE_DEPTH}, got {depth}"
            )));
        }
        Ok(Self {
            depth,
            nodes: vec![value; node_count(depth)],
        })
    }

    /// Builds a tree from a function of (level, path).
    pub fn from_fn<F: FnMut(usize, &[i8]) -> Vec<f64>>(depth: usize, mut f: F) -> Result<Self> {
        let mut nodes = Vec::with_capacity(node_count(depth));
        for t in 1..=depth {
            for code in 0..(1usize << (t - 1)) {
                let path = decode_path(code, t - 1);
                nodes.push(f(t, &path));
            }
        }
        Self::new(depth, nodes)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }
}

pub fn node_count(depth: usize) -> usize {
    (1usize << depth) - 1
}

/// Heap index of the node at level `t` reached by `path`.
pub fn node_index(depth: usize, t: usize, path: &[i8]) -> Result<usize> {
    if t == 0 || t > depth {
        return Err(Error::IndexOutOfRange {
            what: "tree level",
            index: t,
            size: depth,
        });
    }
    if path.len() != t - 1 {
        return Err(Error::invalid(format!(
            "path for level {t} must have length {}, got {}",
            t - 1,
            path.len()
        )));
    }
    let mut idx = 0usize;
    for &s in path {
        idx = match s {
            -1 => 2 * idx + 1,
            1 => 2 * idx + 2,
            other => {
                return Err(Error::invalid(format!(
                    "path entries must be ±1, got {other}"
                )))
            }
        };
    }
    Ok(idx)
}

/// Value stored at level `t` along sign path `path` (length `t − 1`).
pub fn tree_get<'a>(tree: &'a BinaryTree, t: usize, path: &[i8]) -> Result<&'a [f64]> {
    let idx = node_index(tree.depth, t, path)?;
    Ok(&tree.nodes[idx])
}

/// Signs of a path encoded in the low `len` bits; bit `s` set means `ε_{s+1} = +1`.
pub fn decode_path(code: usize, len: usize) -> Vec<i8> {
    (0..len)
        .map(|s| if (code >> s) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Heap indices visited along the full path encoded by `code` (`depth` levels).
/// Only the first `depth − 1` bits of `code` affect the result.
pub fn path_node_indices(depth: usize, code: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(depth);
    let mut idx = 0usize;
    for t in 0..depth {
        out.push(idx);
        idx = if (code >> t) & 1 == 1 {
            2 * idx + 2
        } else {
            2 * idx + 1
        };
    }
    out
}

/// Sign of round `t` (0-based) on the path encoded by `code`.
pub fn path_sign(code: usize, t: usize) -> f64 {
    if (code >> t) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}
