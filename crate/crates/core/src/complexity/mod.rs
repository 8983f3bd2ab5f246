//! Sequential complexity of finite classes on trees: Rademacher and offset
//! functionals, internal covers, and entropy integrals.

mod cover;
mod entropy;
mod rademacher;
mod table;

pub use cover::{covering_number, CoverNorm, CoverProfile, CoverSize, EXACT_COVER_LIMIT};
pub use entropy::{dudley_integral, dudley_integral_exact, DUDLEY_POINTS};
pub use rademacher::{
    dyadic_gamma_grid, offset_expectation, seq_rademacher_exact, seq_rademacher_mc, Estimate,
    EstimationMode, OffsetForm, EXACT_DEPTH_CAP, MIN_REPLICATES,
};
pub use table::FunctionTable;
