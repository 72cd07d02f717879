use serde::{Deserialize, Serialize};

use super::VhwError;

/// FPGA capacities and clocking/bandwidth limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceModel {
    pub name: alloc::string::String,
    pub bram_count: u64,
    pub dsp_count: u64,
    pub lut_count: u64,
    pub ff_count: u64,
    #[serde(default = "default_bram_bits")]
    pub bram_bits: u64,
    #[serde(default = "default_bram_ports")]
    pub bram_ports: u64,
    pub dram_bandwidth_bytes_per_s: f64,
    pub fmax_base_mhz: f64,
}

fn default_bram_bits() -> u64 {
    18_432
}

fn default_bram_ports() -> u64 {
    2
}

impl DeviceModel {
    /// Zynq-7020 class board (280 BRAM18, 220 DSP48).
    pub fn pynq_z1_like() -> Self {
        Self {
            name: "pynq-z1-like".into(),
            bram_count: 280,
            dsp_count: 220,
            lut_count: 53_200,
            ff_count: 106_400,
            bram_bits: 18_432,
            bram_ports: 2,
            dram_bandwidth_bytes_per_s: 2.0e9,
            fmax_base_mhz: 250.0,
        }
    }

    /// Zynq-7010 class part.
    pub fn small() -> Self {
        Self {
            name: "small".into(),
            bram_count: 120,
            dsp_count: 80,
            lut_count: 17_600,
            ff_count: 35_200,
            bram_bits: 18_432,
            bram_ports: 2,
            dram_bandwidth_bytes_per_s: 1.0e9,
            fmax_base_mhz: 200.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "pynq-z1" | "pynq-z1-like" => Some(Self::pynq_z1_like()),
            "small" => Some(Self::small()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), VhwError> {
        let counts = [self.bram_count, self.dsp_count, self.lut_count, self.ff_count, self.bram_bits, self.bram_ports];
        let rates = [self.dram_bandwidth_bytes_per_s, self.fmax_base_mhz];
        if counts.contains(&0) || rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(VhwError::BadDevice(alloc::format!("device `{}` has a non-positive capacity", self.name)));
        }
        Ok(())
    }

    pub fn dram_gbps(&self) -> f64 {
        self.dram_bandwidth_bytes_per_s * 1e-9
    }

    /// DRAM bytes per clock cycle at `freq_mhz`.
    pub fn dram_bytes_per_cycle(&self, freq_mhz: f64) -> f64 {
        self.dram_bandwidth_bytes_per_s / (freq_mhz * 1e6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_are_valid() {
        DeviceModel::pynq_z1_like().validate().unwrap();
        DeviceModel::small().validate().unwrap();
        let mut d = DeviceModel::small();
        d.dsp_count = 0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn dram_per_cycle() {
        assert_eq!(DeviceModel::pynq_z1_like().dram_bytes_per_cycle(100.0), 20.0);
    }
}
