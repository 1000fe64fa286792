//! The solve, estimate, mark, refine loop over all parametric problems.

mod driver;
mod marking;
mod rates;

pub use driver::{
    run, run_with, run_with_scheme, Checkpoint, IterationRecord, IterationTrace, KappaMode, RunConfig,
    RunOutput, StopReason, Strategy, DEFAULT_KAPPA, DEFAULT_MAX_ITERATIONS,
};
pub use marking::{doerfler_mark, doerfler_mark_weighted};
pub use rates::{decay_rate, loglog_slope, DofAbscissa, Estimate, DEFAULT_WINDOW};
