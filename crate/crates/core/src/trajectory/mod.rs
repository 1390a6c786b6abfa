//! Quantum trajectories and temporal postselection.

pub mod mcwf;
pub mod postselect;

pub use mcwf::{
    default_step, ensemble_populations, run_ensemble, run_trajectory, trajectory_seed,
    EnsemblePopulations, Jump, TrajectoryEngine, TrajectoryRecord,
};
pub use postselect::{
    conditional_overlap_oracle, postselect_records, simulate_cascade_records,
    visibility_from_overlap, visibility_vs_cutoff, CoherencePreset, ConditionalIntensity,
    CutoffMode, PostselectionResult,
};
