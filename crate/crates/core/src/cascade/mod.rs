//! Forward dynamics: activation functions, Monte-Carlo cascades, the
//! mean-field recursion and empirical activation curves.

mod activation;
mod meanfield;
mod simulate;
mod traces;

pub use activation::{ActivationFunction, ActivationTable, GKind};
pub use meanfield::{binomial_weight, empirical_curves, meanfield_forward, MeanFieldCurves, MeanFieldRule};
pub(crate) use meanfield::binomial_row;
pub use simulate::{cascade_rng, run_experiments, run_experiments_with, simulate_cascade, Simulator};
pub use traces::{format_traces, load_traces, parse_traces, save_traces, ActivationTime, CascadeTraceSet};
