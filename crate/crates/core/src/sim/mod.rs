//! Benchmark plant, control generators and experiment pipelines.

mod control;
mod experiment;
mod plant;

pub use control::{
    add_noise, derive_seed, gen_discrete_control, gen_reflected_walk, GaussianSource,
};
pub use experiment::{
    coarse_point_sample, downsample, error_l1, error_l2_normalized, run_experiment,
    run_replication, table1, table2, table3, ExperimentConfig, ExperimentSummary, Scenario,
    DEFAULT_HEADLINE_REPS, DEFAULT_TABLE_REPS, TABLE1_COLS, TABLE1_ROWS, TABLE2_ALPHAS,
    TABLE2_SIGMAS, TABLE3_ALPHAS, TABLE3_SIGMAS,
};
pub use plant::{plant_force, simulate_plant, MechanicalSystemParams};
