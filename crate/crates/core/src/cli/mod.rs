//! Scenario files, sweeps and result tables behind the `nearfield` binary.

mod config;
mod run;
mod table;

pub use config::{
    plan_from_str, validate_config, AtomsSpec, Axis, Case, ConfigError, FrequencySpec, LinearRange, Plan,
    Scenario, ShiftSpec, Surfaces, Task, TransportSpec,
};
pub use run::{is_convergence_failure, run_plan, run_scenario, RunError, RunOptions, RunReport};
pub use table::{stable_lines, Cell, Column, ResultTable, TIMESTAMP_KEY};
