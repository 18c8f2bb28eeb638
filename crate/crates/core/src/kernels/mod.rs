//! Base-case kernels and the workgroup model they are derived from.

mod base;
mod frame;
pub mod program;
pub mod simulator;

pub use base::{trmm_base, trmm_base_with, trsm_base, trsm_base_with, KernelConfig, DEFAULT_TILE_LIMIT};
pub use program::{build_trsm_program, WorkgroupProgram};
pub use simulator::{
    distinct_schedules, exhaustive_schedules, simulate, HazardReport, KernelTrace, Schedule, SimOutcome,
};
