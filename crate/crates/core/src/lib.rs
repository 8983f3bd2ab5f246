//! Adaptive online-learning rates: evaluators, the two-level exponential
//! weights strategy, game-tree certification and empirical auditing.

pub mod algorithms;
pub mod bounds;
pub mod complexity;
pub mod distribution;
pub mod error;
pub mod game;
pub mod harness;
pub mod ladder;
pub mod numeric;
pub mod oracle;
pub mod probtools;
pub mod relaxation;
pub mod rng;
pub mod tree;

pub use distribution::{kl_divergence, normalize_log_weights, Distribution};
pub use error::{Error, Result};
pub use game::{expected_loss, Comparator, GameSpec, History, LossRange};
pub use ladder::RadiusLadder;
pub use relaxation::{Relaxation, TwoLevelRelaxation};
pub use rng::RngSpec;
pub use tree::{tree_get, BinaryTree};
