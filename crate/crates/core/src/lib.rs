//! Core algorithms for importance-guided autotuning of a transprecision
//! tensor accelerator overlay.
//!
//! The crate is `no_std` (with `alloc`) and contains no IO. It is split into:
//!
//! * [`designspace`]: the hardware knob space, its constraints, feature
//!   encoding and importance-guided sampling of overlay candidates.
//! * [`vhw`]: a deterministic virtual FPGA toolchain and runtime cost model
//!   (BRAM partition/reshape, congestion, rooflines, cycle model).
//! * [`gbt`]: gradient boosted regression trees with sparsity-aware splits,
//!   cover-weighted gain importance and the cross-validation protocol.
//! * [`schedspace`]: convolution workloads lowered onto a GEMM intrinsic and
//!   the tiling/ordering schedule space searched by the tuner.
//! * [`tuner`]: the two-level tuning loop (overlay sprints outside, simulated
//!   annealing with epsilon-greedy batch selection inside).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod designspace;
pub mod gbt;
pub mod rng;
pub mod schedspace;
pub mod tuner;
pub mod vhw;
