//! Explicit constants and verifiable checks of the discrete Agmon,
//! summation-by-parts and interpolation inequalities.

pub mod checks;
pub mod constants;
pub mod fuzz;

pub use checks::{
    check_agmon, check_dq_derivative, check_function_theorem, check_lemma, check_scale_factor,
    check_weighted_dq_derivative, sample_values, FunctionTheorem, FunctionTheoremReports, Lemma,
    DEFAULT_QUAD_POINTS,
};
pub use constants::{
    base_constants, c_a, c_a1, c_b1, c_m, compare_with_published, hat_sequences, BaseConstants,
    ConstantsTable, HatSeed, PUBLISHED_C_M,
};
pub use fuzz::{fuzz_lemma, sharpness_search, FuzzConfig, FuzzSummary, SearchDims};
