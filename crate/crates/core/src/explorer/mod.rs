//! Design-space exploration: synthetic corpora, configuration sweeps and
//! Pareto extraction.

pub mod pareto;
pub mod sweep;
pub mod synth;

pub use pareto::{dominates, pareto_flags, Objectives};
pub use sweep::{
    dynamic_beats_fixed, preset, run_sweep, sig6, to_csv, Evaluation, SweepConfig, SweepMode,
    SweepOptions, SweepRow, SweepSpec, Workload, CSV_HEADER, PRESETS,
};
pub use synth::{gen_synthetic, Distribution};
