//! JSON game descriptions: a full [`GameSpec`] or the binary-experts shorthand.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::game::{Comparator, GameSpec};

/// Experts game whose outcomes are all `2^K` binary loss columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryExpertsSpec {
    pub experts: usize,
    pub horizon: usize,
    /// Adds every simplex point with step `1/resolution` to the point-mass comparators.
    #[serde(default)]
    pub simplex_resolution: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameDescription {
    BinaryExperts { binary_experts: BinaryExpertsSpec },
    Full(GameSpec),
}

/// Point masses plus, when `resolution` is given, every interior simplex point on that grid.
pub fn simplex_comparators(k: usize, resolution: Option<usize>) -> Result<Vec<Comparator>> {
    let mut out: Vec<Comparator> = (0..k).map(Comparator::Expert).collect();
    let Some(r) = resolution else {
        return Ok(out);
    };
    if r == 0 {
        return Err(Error::invalid("simplex resolution must be positive"));
    }
    let mut stack = vec![(Vec::<usize>::new(), r)];
    let mut points = Vec::new();
    while let Some((prefix, left)) = stack.pop() {
        if prefix.len() + 1 == k {
            let mut c = prefix;
            c.push(left);
            points.push(c);
            continue;
        }
        for x in (0..=left).rev() {
            let mut p = prefix.clone();
            p.push(x);
            stack.push((p, left - x));
        }
    }
    for c in points {
        if c.iter().filter(|&&x| x > 0).count() > 1 {
            let w = c.iter().map(|&x| x as f64 / r as f64).collect();
            out.push(Comparator::Mixture(Distribution::from_unnormalized(w)?));
        }
    }
    Ok(out)
}

impl GameDescription {
    pub fn into_game(self) -> Result<GameSpec> {
        match self {
            GameDescription::Full(g) => {
                g.validate()?;
                Ok(g)
            }
            GameDescription::BinaryExperts { binary_experts: b } => {
                let comparators = simplex_comparators(b.experts, b.simplex_resolution)?;
                GameSpec::binary_experts(b.experts, comparators, b.horizon)
            }
        }
    }
}

/// Reads and validates a game description.
pub fn load_game(path: &Path) -> Result<GameSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let desc: GameDescription = serde_json::from_str(&text)?;
    desc.into_game()
}
