//! Decay-growth machinery for energy traces `r ↦ 𝓔(u_r)`.

mod bounds;
mod checks;
mod dyadic;
mod params;
mod report;
mod synth;
mod trace;

pub use bounds::{
    check_dini, comparison_bound, comparison_bound_negative, dini_bound, fit_dini_constant,
    growth_decay_bounds, limit_rate_fit, DiniCheck, IntervalBound, RateFit, Side,
};
pub use checks::{check_assumptions, find_threshold, verify_ode, verify_ode_with, OdeForm};
pub use dyadic::dyadic_lemma_check;
pub use params::{delta_constants, derive_delta, derive_delta_rational, DecayParams, DeltaConstants};
pub use report::VerificationReport;
pub use synth::{saturating_competitor, saturating_g, synth_hypothesis_trace, synth_saturating_trace};
pub use trace::{compute_g, log_spaced, EnergyTrace, GTrace};
