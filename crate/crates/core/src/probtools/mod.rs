//! Maximal inequalities from per-index tail conditions and validators for
//! one-sided tail bounds.

mod maximal;
mod tails;

pub use maximal::{
    maximal_bound, maximal_inequality_mc, theta_multipliers, MaximalReport, TailGenerator,
    TailSpec, MC_MARGIN_STDERRS,
};
pub use tails::{
    chaining_gamma, chaining_scale, offset_gamma, tail_validate, TailInstance, TailKind, TailPoint,
    TailReport,
};
