use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SchedError;

/// A 2-D convolution layer at batch 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvWorkload {
    #[serde(default)]
    pub name: String,
    pub in_channels: u64,
    pub out_channels: u64,
    pub height: u64,
    pub width: u64,
    pub kernel_h: u64,
    pub kernel_w: u64,
    #[serde(default = "unit")]
    pub stride: (u64, u64),
    #[serde(default)]
    pub padding: (u64, u64),
}

fn unit() -> (u64, u64) {
    (1, 1)
}

impl ConvWorkload {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        ic: u64,
        oc: u64,
        h: u64,
        w: u64,
        k: u64,
        stride: u64,
        pad: u64,
    ) -> Result<Self, SchedError> {
        let wl = Self {
            name: name.into(),
            in_channels: ic,
            out_channels: oc,
            height: h,
            width: w,
            kernel_h: k,
            kernel_w: k,
            stride: (stride, stride),
            padding: (pad, pad),
        };
        wl.validate()?;
        Ok(wl)
    }

    pub fn validate(&self) -> Result<(), SchedError> {
        let dims = [self.in_channels, self.out_channels, self.height, self.width, self.kernel_h, self.kernel_w];
        if dims.contains(&0) || self.stride.0 == 0 || self.stride.1 == 0 {
            return Err(SchedError::BadWorkload(alloc::format!("`{}` has a zero dimension or stride", self.name)));
        }
        if self.height + 2 * self.padding.0 < self.kernel_h || self.width + 2 * self.padding.1 < self.kernel_w {
            return Err(SchedError::BadWorkload(alloc::format!("`{}`: kernel larger than padded input", self.name)));
        }
        Ok(())
    }

    /// Output rows, `floor((H + 2p - KH) / s) + 1`.
    pub fn out_h(&self) -> u64 {
        (self.height + 2 * self.padding.0 - self.kernel_h) / self.stride.0 + 1
    }

    pub fn out_w(&self) -> u64 {
        (self.width + 2 * self.padding.1 - self.kernel_w) / self.stride.1 + 1
    }

    /// `2 * IC * OC * OH * OW * KH * KW`.
    pub fn total_ops(&self) -> u64 {
        2 * self.in_channels * self.out_channels * self.out_h() * self.out_w() * self.kernel_h * self.kernel_w
    }

    /// Rows of padded input touched by `rows` consecutive output rows.
    pub fn input_rows(&self, rows: u64) -> u64 {
        footprint(rows, self.stride.0, self.kernel_h)
    }

    pub fn input_cols(&self, cols: u64) -> u64 {
        footprint(cols, self.stride.1, self.kernel_w)
    }

    /// Bytes of input, weights and output touched once, at `bits` per element.
    pub fn unique_bytes(&self, bits: u32) -> u64 {
        let input = self.in_channels * self.input_rows(self.out_h()) * self.input_cols(self.out_w());
        let weight = self.in_channels * self.out_channels * self.kernel_h * self.kernel_w;
        let output = self.out_channels * self.out_h() * self.out_w();
        bytes(input, bits) + bytes(weight, bits) + bytes(output, bits)
    }

    /// Ops per unique byte.
    pub fn arithmetic_intensity(&self, bits: u32) -> f64 {
        self.total_ops() as f64 / self.unique_bytes(bits) as f64
    }
}

/// Input extent covered by `n` outputs at stride `s` with kernel `k`
/// (gaps between windows are skipped when `s > k`).
pub fn footprint(n: u64, s: u64, k: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    ((n - 1) * s + k).min(n * k)
}

pub fn bytes(elems: u64, bits: u32) -> u64 {
    (elems * bits as u64).div_ceil(8)
}

/// The 3x3, 256-channel, 14x14 layer used for single-layer studies.
pub fn fig7_layer() -> ConvWorkload {
    ConvWorkload::new("fig7", 256, 256, 14, 14, 3, 1, 0).expect("valid")
}

/// A tiny layer for fast tests and demos.
pub fn toy_layer() -> ConvWorkload {
    ConvWorkload::new("toy", 32, 32, 8, 8, 3, 1, 1).expect("valid")
}

/// The distinct 3x3 and 1x1 convolutions of ResNet-18 after the stem.
pub fn resnet18_layers() -> Vec<ConvWorkload> {
    let layers: [(&str, u64, u64, u64, u64, u64, u64); 10] = [
        ("resnet18.c2", 64, 64, 56, 3, 1, 1),
        ("resnet18.c3", 64, 128, 56, 3, 2, 1),
        ("resnet18.c4", 64, 128, 56, 1, 2, 0),
        ("resnet18.c5", 128, 128, 28, 3, 1, 1),
        ("resnet18.c6", 128, 256, 28, 3, 2, 1),
        ("resnet18.c7", 128, 256, 28, 1, 2, 0),
        ("resnet18.c8", 256, 256, 14, 3, 1, 1),
        ("resnet18.c9", 256, 512, 14, 3, 2, 1),
        ("resnet18.c10", 256, 512, 14, 1, 2, 0),
        ("resnet18.c11", 512, 512, 7, 3, 1, 1),
    ];
    layers
        .iter()
        .map(|&(n, ic, oc, hw, k, s, p)| ConvWorkload::new(n, ic, oc, hw, hw, k, s, p).expect("valid"))
        .collect()
}

/// Built-in workload lists by name: `fig7`, `toy`, `resnet18`.
pub fn builtin(name: &str) -> Option<Vec<ConvWorkload>> {
    match name {
        "fig7" => Some(alloc::vec![fig7_layer()]),
        "toy" => Some(alloc::vec![toy_layer()]),
        "resnet18" => Some(resnet18_layers()),
        _ => None,
    }
}
