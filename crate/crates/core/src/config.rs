//! Encoder configuration and its `key=value` text form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SaoConfig {
    Off,
    FixedBlock,
    AdaptiveBlock,
}

impl SaoConfig {
    pub fn code(self) -> u8 {
        match self {
            SaoConfig::Off => 0,
            SaoConfig::FixedBlock => 1,
            SaoConfig::AdaptiveBlock => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SaoConfig::Off),
            1 => Some(SaoConfig::FixedBlock),
            2 => Some(SaoConfig::AdaptiveBlock),
            _ => None,
        }
    }
}

impl fmt::Display for SaoConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SaoConfig::Off => "off",
            SaoConfig::FixedBlock => "fixed",
            SaoConfig::AdaptiveBlock => "adaptive",
        })
    }
}

impl FromStr for SaoConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "0" => Ok(SaoConfig::Off),
            "fixed" | "fixedblock" => Ok(SaoConfig::FixedBlock),
            "adaptive" | "adaptiveblock" => Ok(SaoConfig::AdaptiveBlock),
            other => Err(Error::InvalidConfig(format!("unknown SAO mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncoderConfig {
    pub max_scu_width: usize,
    pub max_scu_height: usize,
    pub max_partition_depth: u32,
    pub max_direct_partition_depth: u32,
    pub qp: u8,
    /// Distance between intra frames; 1 makes every frame intra.
    pub intra_period: usize,
    pub search_range: usize,
    pub sao_mode: SaoConfig,
    pub sao_block_size: usize,
    pub alf_enabled: bool,
    pub bit_depth: u8,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            max_scu_width: 128,
            max_scu_height: 128,
            max_partition_depth: 4,
            max_direct_partition_depth: 1,
            qp: 32,
            intra_period: 32,
            search_range: 8,
            sao_mode: SaoConfig::AdaptiveBlock,
            sao_block_size: 32,
            alf_enabled: true,
            bit_depth: 8,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl EncoderConfig {
    /// Checks every cross-field constraint. Nothing is encoded with a config
    /// that fails here.
    pub fn validate(&self) -> Result<()> {
        if self.max_scu_width != self.max_scu_height {
            return Err(invalid("maxScuWidth and maxScuHeight must be equal"));
        }
        if !self.max_scu_width.is_power_of_two() || self.max_scu_width > 1024 {
            return Err(invalid("maxScuWidth must be a power of two no larger than 1024"));
        }
        if self.max_direct_partition_depth > self.max_partition_depth {
            return Err(invalid(format!(
                "maxDirectPartitionDepth ({}) must be no greater than maxPartitionDepth ({})",
                self.max_direct_partition_depth, self.max_partition_depth
            )));
        }
        let log2 = self.max_scu_width.trailing_zeros();
        if self.max_partition_depth > log2 || (self.max_scu_width >> self.max_partition_depth) < 8 {
            return Err(invalid("minimum coding unit would be smaller than 8x8"));
        }
        if self.qp > 51 {
            return Err(invalid(format!("qp {} out of range 0..=51", self.qp)));
        }
        if self.intra_period == 0 || self.intra_period > usize::from(u16::MAX) {
            return Err(invalid("intraPeriod must be between 1 and 65535"));
        }
        if self.search_range > 64 {
            return Err(invalid("searchRange must be at most 64"));
        }
        if !matches!(self.bit_depth, 8 | 10) {
            return Err(invalid(format!("bitDepth {} unsupported (8 or 10)", self.bit_depth)));
        }
        if self.sao_mode != SaoConfig::Off {
            let b = self.sao_block_size;
            if !b.is_power_of_two() || b < 8 || b > self.max_scu_width {
                return Err(invalid("saoBlockSize must be a power of two between 8 and maxScuWidth"));
            }
        }
        Ok(())
    }

    /// Applies one `key=value` setting using the configuration field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| invalid(format!("`{key}`: cannot parse `{value}`")))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value.to_ascii_lowercase().as_str() {
                "1" | "true" | "on" | "yes" => Ok(true),
                "0" | "false" | "off" | "no" => Ok(false),
                _ => Err(invalid(format!("`{key}`: expected on/off, got `{value}`"))),
            }
        }
        match key {
            "maxScuWidth" => self.max_scu_width = num(key, value)?,
            "maxScuHeight" => self.max_scu_height = num(key, value)?,
            "maxPartitionDepth" => self.max_partition_depth = num(key, value)?,
            "maxDirectPartitionDepth" => self.max_direct_partition_depth = num(key, value)?,
            "qp" => self.qp = num(key, value)?,
            "intraPeriod" => self.intra_period = num(key, value)?,
            "searchRange" => self.search_range = num(key, value)?,
            "saoMode" => self.sao_mode = value.parse()?,
            "saoBlockSize" => self.sao_block_size = num(key, value)?,
            "alfEnabled" => self.alf_enabled = flag(key, value)?,
            "bitDepth" => self.bit_depth = num(key, value)?,
            _ => return Err(invalid(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a `key=value` file body on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = EncoderConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| invalid(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "maxScuWidth={}\nmaxScuHeight={}\nmaxPartitionDepth={}\nmaxDirectPartitionDepth={}\n\
             qp={}\nintraPeriod={}\nsearchRange={}\nsaoMode={}\nsaoBlockSize={}\nalfEnabled={}\nbitDepth={}\n",
            self.max_scu_width,
            self.max_scu_height,
            self.max_partition_depth,
            self.max_direct_partition_depth,
            self.qp,
            self.intra_period,
            self.search_range,
            self.sao_mode,
            self.sao_block_size,
            if self.alf_enabled { "on" } else { "off" },
            self.bit_depth,
        )
    }
}
