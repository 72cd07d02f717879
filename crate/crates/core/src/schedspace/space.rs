use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::workload::bytes;
use super::{BatchMapping, ConvWorkload, Dim, LoopOrder, SchedError, ScheduleConfig};
use crate::vhw::{OverlayArch, ACC_BITS};

/// Ascending divisors of `n`.
pub fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

/// The legal schedules of one workload on one overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpace {
    workload: ConvWorkload,
    arch: OverlayArch,
    mappings: Vec<BatchMapping>,
    orders: Vec<LoopOrder>,
}

impl ScheduleSpace {
    /// All six loop orders. With a single-row intrinsic only the batch
    /// mapping is offered, since the three mappings then coincide.
    pub fn new(workload: ConvWorkload, arch: OverlayArch) -> Result<Self, SchedError> {
        workload.validate()?;
        arch.validate().map_err(|e| SchedError::BadWorkload(alloc::format!("{e}")))?;
        let mappings = if arch.gemm_batch == 1 { alloc::vec![BatchMapping::Batch] } else { BatchMapping::ALL.to_vec() };
        Ok(Self { workload, arch, mappings, orders: LoopOrder::ALL.to_vec() })
    }

    pub fn with_mappings(mut self, mappings: Vec<BatchMapping>) -> Result<Self, SchedError> {
        if mappings.is_empty() {
            return Err(SchedError::BadWorkload("no admissible batch mapping".into()));
        }
        self.mappings = mappings;
        Ok(self)
    }

    pub fn with_orders(mut self, orders: Vec<LoopOrder>) -> Result<Self, SchedError> {
        if orders.is_empty() {
            return Err(SchedError::BadWorkload("no admissible loop order".into()));
        }
        self.orders = orders;
        Ok(self)
    }

    pub fn workload(&self) -> &ConvWorkload {
        &self.workload
    }

    pub fn arch(&self) -> &OverlayArch {
        &self.arch
    }

    pub fn mappings(&self) -> &[BatchMapping] {
        &self.mappings
    }

    pub fn orders(&self) -> &[LoopOrder] {
        &self.orders
    }

    /// Elements of dim `d` covered by one intrinsic block.
    pub fn block(&self, mapping: BatchMapping, d: Dim) -> u64 {
        let b = self.arch.gemm_batch;
        match (d, mapping) {
            (Dim::Oc, _) => self.arch.gemm_block_out,
            (Dim::Ic, _) => self.arch.gemm_block_in,
            (Dim::Batch, BatchMapping::Batch) | (Dim::Oh, BatchMapping::OutH) | (Dim::Ow, BatchMapping::OutW) => b,
            _ => 1,
        }
    }

    pub fn extent(&self, d: Dim) -> u64 {
        let w = &self.workload;
        match d {
            Dim::Batch => 1,
            Dim::Oc => w.out_channels,
            Dim::Ic => w.in_channels,
            Dim::Oh => w.out_h(),
            Dim::Ow => w.out_w(),
        }
    }

    /// Block counts `ceil(extent / block)` per dim.
    pub fn blocks(&self, mapping: BatchMapping) -> [u64; 5] {
        Dim::ALL.map(|d| self.extent(d).div_ceil(self.block(mapping, d)))
    }

    /// Admissible tile factors (in blocks) per dim.
    pub fn tile_choices(&self, mapping: BatchMapping) -> [Vec<u64>; 5] {
        self.blocks(mapping).map(divisors)
    }

    /// Padded tile elements `[batch, oc, ic, oh, ow]`.
    pub fn tile_elems(&self, cfg: &ScheduleConfig) -> [u64; 5] {
        let mut out = [0; 5];
        for d in Dim::ALL {
            out[d as usize] = cfg.tile(d) * self.block(cfg.mapping, d);
        }
        out
    }

    /// Bytes of one input, weight and accumulator tile.
    pub fn tile_bytes(&self, cfg: &ScheduleConfig) -> (u64, u64, u64) {
        let [b, oc, ic, oh, ow] = self.tile_elems(cfg);
        let w = &self.workload;
        let bits = self.arch.precision;
        let input = b * ic * w.input_rows(oh) * w.input_cols(ow);
        let weight = oc * ic * w.kernel_h * w.kernel_w;
        let acc = b * oc * oh * ow;
        (bytes(input, bits), bytes(weight, bits), bytes(acc, ACC_BITS))
    }

    pub fn check(&self, cfg: &ScheduleConfig) -> Result<(), SchedError> {
        let illegal = |m: alloc::string::String| Err(SchedError::Illegal(m));
        if !self.mappings.contains(&cfg.mapping) {
            return illegal(alloc::format!("mapping {:?} not admissible", cfg.mapping));
        }
        if !self.orders.contains(&cfg.order) {
            return illegal(alloc::format!("loop order {} not admissible", cfg.order));
        }
        let n = self.blocks(cfg.mapping);
        for d in Dim::ALL {
            let t = cfg.tile(d);
            if t == 0 || !n[d as usize].is_multiple_of(t) {
                return illegal(alloc::format!("tile {t} of {d:?} does not divide {} blocks", n[d as usize]));
            }
        }
        let (i, w, a) = self.tile_bytes(cfg);
        let fits = [
            ("input", i, self.arch.input_buffer_bytes),
            ("weight", w, self.arch.weight_buffer_bytes),
            ("acc", a, self.arch.acc_buffer_bytes),
        ];
        for (name, need, cap) in fits {
            if need > cap {
                return illegal(alloc::format!("{name} tile of {need} B exceeds the {cap} B buffer"));
            }
        }
        Ok(())
    }

    pub fn is_legal(&self, cfg: &ScheduleConfig) -> bool {
        self.check(cfg).is_ok()
    }

    /// Legal schedules: mapping, then order, then tiles with `ow` fastest.
    pub fn enumerate(&self) -> impl Iterator<Item = ScheduleConfig> + '_ {
        self.mappings.iter().flat_map(move |&mapping| {
            let choices = self.tile_choices(mapping);
            let total: usize = choices.iter().map(Vec::len).product();
            self.orders.iter().flat_map(move |&order| {
                let choices = choices.clone();
                (0..total).filter_map(move |mut k| {
                    let mut tiles = [0u64; 5];
                    for d in (0..5).rev() {
                        let c = &choices[d];
                        tiles[d] = c[k % c.len()];
                        k /= c.len();
                    }
                    let cfg = ScheduleConfig { tiles, order, mapping };
                    self.is_legal(&cfg).then_some(cfg)
                })
            })
        })
    }

    pub fn catalog(&self) -> Vec<ScheduleConfig> {
        self.enumerate().collect()
    }

    /// Every legal config one knob step away: mapping to an adjacent list
    /// entry, two adjacent loops swapped, or one tile to the next or
    /// previous divisor.
    pub fn neighbors(&self, cfg: &ScheduleConfig) -> Vec<ScheduleConfig> {
        let mut out = Vec::new();
        let mut push = |c: ScheduleConfig| {
            if self.is_legal(&c) && !out.contains(&c) {
                out.push(c);
            }
        };
        if let Some(mi) = self.mappings.iter().position(|&m| m == cfg.mapping) {
            for j in [mi.wrapping_sub(1), mi + 1] {
                if let Some(&m) = self.mappings.get(j) {
                    push(ScheduleConfig { mapping: m, ..*cfg });
                }
            }
        }
        for i in 0..2 {
            push(ScheduleConfig { order: cfg.order.swapped(i), ..*cfg });
        }
        let choices = self.tile_choices(cfg.mapping);
        for d in 0..5 {
            let Some(ti) = choices[d].iter().position(|&t| t == cfg.tiles[d]) else { continue };
            for j in [ti.wrapping_sub(1), ti + 1] {
                if let Some(&t) = choices[d].get(j) {
                    let mut tiles = cfg.tiles;
                    tiles[d] = t;
                    push(ScheduleConfig { tiles, ..*cfg });
                }
            }
        }
        out
    }

    /// A uniformly chosen legal single-knob move. The flag is `true` (and the
    /// input is returned) when no move exists.
    pub fn neighbor<R: Rng + ?Sized>(&self, cfg: &ScheduleConfig, rng: &mut R) -> (ScheduleConfig, bool) {
        let n = self.neighbors(cfg);
        if n.is_empty() {
            (*cfg, true)
        } else {
            (n[rng.random_range(0..n.len())], false)
        }
    }
}
