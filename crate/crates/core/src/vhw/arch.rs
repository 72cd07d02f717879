use serde::{Deserialize, Serialize};

use super::VhwError;

/// Shape of the GEMM intrinsic and on-chip buffer capacities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayArch {
    pub gemm_batch: u64,
    pub gemm_block_in: u64,
    pub gemm_block_out: u64,
    pub precision: u32,
    pub input_buffer_bytes: u64,
    pub weight_buffer_bytes: u64,
    /// Accumulators are 32-bit regardless of operand precision.
    pub acc_buffer_bytes: u64,
}

pub const ACC_BITS: u32 = 32;

impl OverlayArch {
    /// `(8/bits, 16, 16)` intrinsic: the multiplier budget of the 8-bit
    /// `(1,16)x(16,16)` core re-spent on more rows at lower precision.
    pub fn vta_default(precision: u32) -> Self {
        Self {
            gemm_batch: (8 / precision.clamp(1, 8)) as u64,
            gemm_block_in: 16,
            gemm_block_out: 16,
            precision,
            input_buffer_bytes: 32 << 10,
            weight_buffer_bytes: 256 << 10,
            acc_buffer_bytes: 128 << 10,
        }
    }

    pub fn with_gemm(mut self, batch: u64, block_in: u64, block_out: u64) -> Self {
        self.gemm_batch = batch;
        self.gemm_block_in = block_in;
        self.gemm_block_out = block_out;
        self
    }

    pub fn validate(&self) -> Result<(), VhwError> {
        let dims = [
            self.gemm_batch,
            self.gemm_block_in,
            self.gemm_block_out,
            self.input_buffer_bytes,
            self.weight_buffer_bytes,
            self.acc_buffer_bytes,
        ];
        if dims.contains(&0) || self.precision == 0 {
            return Err(VhwError::BadArch("all dimensions and capacities must be >= 1".into()));
        }
        Ok(())
    }

    pub fn multipliers(&self) -> u64 {
        self.gemm_batch * self.gemm_block_in * self.gemm_block_out
    }

    /// Short `b x i x o @ bits` label.
    pub fn label(&self) -> alloc::string::String {
        alloc::format!(
            "({},{})x({},{})@{}b",
            self.gemm_batch,
            self.gemm_block_in,
            self.gemm_block_in,
            self.gemm_block_out,
            self.precision
        )
    }
}

/// `2 * batch * block_in * block_out * f` (one MAC is two ops), in GOPs.
pub fn peak_gops(arch: &OverlayArch, freq_mhz: f64) -> f64 {
    2.0 * arch.multipliers() as f64 * freq_mhz * 1e-3
}
