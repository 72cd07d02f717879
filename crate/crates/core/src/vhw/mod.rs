//! Virtual FPGA toolchain and runtime model.
//!
//! [`implement`] turns a design point into resource counts, an achieved
//! clock or a modeled failure. [`measure_runtime`] turns an implemented
//! overlay plus a schedule into a latency. Everything is a pure function of
//! its inputs.

mod arch;
mod bram;
mod device;
mod implement;
mod roofline;
mod runtime;

pub use arch::{peak_gops, OverlayArch, ACC_BITS};
pub use bram::{bram_cost, lane_bytes, BramCost, Directive, DirectiveMode};
pub use device::DeviceModel;
pub use implement::{
    dsp_packing, estimate_resources, fmax_eff, implement, implement_knobs, strategy_factor, Datapath,
    ImplementationResult, Knobs, Resources, Status, Unroll, Violation, C1_PARTITION, C2_UTILIZATION, GEMM_DEPTH,
    HLS_SLACK_GAIN,
};
pub use roofline::{l2_to_optimal, roofline_attainable, RooflinePoint};
pub use runtime::{cycle_breakdown, delivered_gops, latency_in, measure_runtime, CycleBreakdown, NoiseModel, UNPIPELINED_ISSUE};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VhwError {
    #[error("bad device: {0}")]
    BadDevice(String),
    #[error("bad overlay architecture: {0}")]
    BadArch(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("illegal schedule: {0}")]
    IllegalSchedule(String),
    #[error("domain error: {0}")]
    Domain(String),
}
