//! Constructive strategies for experts games with linear loss.

mod ew;
mod two_level;

pub use ew::{
    fixed_r_inequality_check, kl_ball_minimizer, lowlevel_ew, FixedRadiusReport, FIXED_R_VIOLATION,
    KL_TOLERANCE, MAX_TILT,
};
pub use two_level::{
    optimize_lambda, relaxation_objective, relaxation_value, LambdaMode, TwoLevelState,
    LAMBDA_TOLERANCE, LAMBDA_WINDOW,
};
