//! Numerical checks of the smoothing estimates and the named suites that
//! run them.

mod decay;
mod golden;
mod presets;
mod principles;
mod schedule;
mod smoothing;
mod timeweight;

pub use decay::{
    block_decay_rates, check_block_decay, check_drift_decay, fit_rate_law, in_band_rates,
    BlockRate, DecayWindow, EXACT_TOL,
};
pub use golden::{Golden, GoldenComparison};
pub use presets::{default_config, golden_report, run_preset, PresetOutcome, Table, PRESETS};
pub use principles::{
    check_lp_bound, check_lp_constant_stability, check_maximum_principle, lp_growth_constant,
    LpCap, TOL_MP,
};
pub use schedule::{
    fit_j0, fit_j0_resolved, ladder_depth, DecayConstants, EmbeddingChain, Framework,
    IterationSchedule, Threshold,
};
pub use smoothing::{
    c1gamma_window, check_c1gamma, check_ladder, check_lp_smoothing_ladder, check_smoothing_rate,
    data_norm, smoothing_profile, FrozenConstant, LadderRung, WindowNorm, REFINEMENT_TOL,
};
pub use timeweight::{
    check_time_weight_lemma, time_weight_factor, time_weight_integral, time_weight_ratio,
};
