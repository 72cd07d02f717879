use serde::{Deserialize, Serialize};

use super::{DeviceModel, VhwError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectiveMode {
    #[default]
    None,
    Cyclic,
    Block,
}

impl DirectiveMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "cyclic" => Some(Self::Cyclic),
            "block" => Some(Self::Block),
            _ => None,
        }
    }
}

/// An array partition or reshape directive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Directive {
    pub mode: DirectiveMode,
    pub dim: u32,
    pub factor: u64,
}

impl Default for Directive {
    fn default() -> Self {
        Self::none()
    }
}

impl Directive {
    pub const fn none() -> Self {
        Self { mode: DirectiveMode::None, dim: 1, factor: 1 }
    }

    pub const fn cyclic(dim: u32, factor: u64) -> Self {
        Self { mode: DirectiveMode::Cyclic, dim, factor }
    }

    pub const fn block(dim: u32, factor: u64) -> Self {
        Self { mode: DirectiveMode::Block, dim, factor }
    }

    /// Factor in effect: 1 when the mode is `none`.
    pub fn effective(&self) -> u64 {
        match self.mode {
            DirectiveMode::None => 1,
            _ => self.factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BramCost {
    pub brams: u64,
    pub bytes_per_cycle: f64,
}

/// Bytes one port delivers per cycle for one element lane. Sub-byte
/// elements are packed `8/bits` to a byte lane, so halving the precision
/// doubles the lane throughput.
pub fn lane_bytes(bits: u32) -> f64 {
    if bits >= 8 {
        bits as f64 / 8.0
    } else {
        8.0 / bits as f64
    }
}

/// BRAM count and read throughput of an `elem_count x elem_bits` array.
///
/// Partition by `f` splits it into `f` banks; reshape by `r` widens each
/// word to `r` elements. Both multiply throughput.
pub fn bram_cost(
    elem_count: u64,
    elem_bits: u32,
    partition: Directive,
    reshape: Directive,
    device: &DeviceModel,
) -> Result<BramCost, VhwError> {
    let f = partition.effective();
    let r = reshape.effective();
    if elem_count == 0 || elem_bits == 0 {
        return Err(VhwError::ConstraintViolation("empty array".into()));
    }
    if f == 0 || !elem_count.is_multiple_of(f) {
        return Err(VhwError::ConstraintViolation(alloc::format!("partition factor {f} does not divide {elem_count}")));
    }
    let bank = elem_count / f;
    if r == 0 || !bank.is_multiple_of(r) {
        return Err(VhwError::ConstraintViolation(alloc::format!("reshape factor {r} does not divide {bank}")));
    }
    let words = bank / r;
    let bits_per_bank = words * r * elem_bits as u64;
    let brams = f * bits_per_bank.div_ceil(device.bram_bits);
    let bytes_per_cycle = (f * r * device.bram_ports) as f64 * lane_bytes(elem_bits);
    Ok(BramCost { brams, bytes_per_cycle })
}
