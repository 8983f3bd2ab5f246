//! Exact desk-scale certification: matrix games, offset minimax values and
//! relaxation admissibility.

mod admissibility;
mod lp;
mod minimax;

pub use admissibility::{
    admissibility_check, regret_certificate, AdmissibilityReport, CertificateReport, CheckMode,
    PrefixMargin, ADMISSIBILITY_TOLERANCE, EXHAUSTIVE_BUDGET,
};
pub use lp::{matrix_game_value, GameSolution, DUALITY_GAP_TOLERANCE};
pub use minimax::{
    achievability_check, offset_minimax_report, offset_minimax_value, AchievabilityVerdict,
    MinimaxReport, ACHIEVABILITY_TOLERANCE, SEQUENCE_BUDGET,
};
