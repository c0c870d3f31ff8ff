//! Sweep configuration: TOML file plus command-line overrides.

use crate::channel::{channel_for_capacity, ChannelModel, Family};
use crate::construction::design_profile;
use crate::decoder::{CrcSpec, DecoderKind};
use crate::error::{invalid, Error, Result};
use crate::llr::CheckNode;
use crate::rateless::{AckPolicy, Combining, Placement, SessionOptions, SessionPlan};

/// What a sweep simulates at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    /// Incremental-freezing sessions; one record per stage.
    #[default]
    Rateless,
    /// A single fixed-rate code.
    Fixed,
}

/// Where the reliability order comes from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Design {
    /// Rateless: the family member of capacity `R`. Fixed: each grid point.
    #[default]
    Auto,
    /// Redesign at every grid point.
    PerPoint,
    /// A fixed design channel.
    Channel(ChannelModel),
}

impl std::str::FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(Design::Auto),
            "per-point" => Ok(Design::PerPoint),
            other => Ok(Design::Channel(other.parse()?)),
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Design::Auto => f.write_str("auto"),
            Design::PerPoint => f.write_str("per-point"),
            Design::Channel(c) => write!(f, "{c}"),
        }
    }
}

impl serde::Serialize for Design {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Design {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub block_length: usize,
    /// Information bits of the (peak) code, CRC included.
    pub info_bits: usize,
    pub max_stages: usize,
    pub extra_retransmit: usize,
    pub delta_schedule: Option<Vec<f64>>,
    /// 0 disables the CRC.
    pub crc_width: u32,
    pub family: Family,
    /// Channel parameters to visit, in order.
    pub grid: Vec<f64>,
    pub design: Design,
    pub decoder: DecoderKind,
    pub check_node: CheckNode,
    pub combining: Combining,
    pub placement: Placement,
    pub ack: AckPolicy,
    pub attempt_from_stage: usize,
    /// Upper bound on sessions per grid point.
    pub trials: u64,
    /// A point ends once this many final-stage frame errors are seen.
    pub stop_at_errors: u64,
    pub seed: u64,
    /// Reuse the same noise and message streams at every grid point.
    pub paired_seeds: bool,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Sessions per work item.
    pub batch: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            mode: SweepMode::Rateless,
            block_length: 1024,
            info_bits: 512,
            max_stages: 2,
            extra_retransmit: 0,
            delta_schedule: None,
            crc_width: 16,
            family: Family::BiAwgn,
            grid: vec![0.0],
            design: Design::Auto,
            decoder: DecoderKind::Sc,
            check_node: CheckNode::Exact,
            combining: Combining::Hard,
            placement: Placement::Successive,
            ack: AckPolicy::Crc,
            attempt_from_stage: 1,
            trials: 10_000,
            stop_at_errors: 100,
            seed: 1,
            paired_seeds: true,
            workers: 0,
            batch: 32,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        crate::polar::log2_exact(self.block_length)?;
        if self.block_length < 2 {
            return invalid("block length must be at least 2");
        }
        if self.info_bits == 0 || self.info_bits > self.block_length {
            return invalid(format!("info_bits {} outside 1..={}", self.info_bits, self.block_length));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.grid.is_empty() {
            return invalid("the parameter grid is empty");
        }
        if self.batch == 0 {
            return invalid("batch must be at least 1");
        }
        for &p in &self.grid {
            self.family.with_parameter(p)?;
        }
        if let DecoderKind::Scl { max_list } = self.decoder {
            if max_list == 0 || !max_list.is_power_of_two() {
                return invalid(format!("max_list {max_list} must be a power of two"));
            }
        }
        if self.stages() < self.attempt_from_stage.max(1) {
            return invalid("attempt_from_stage is past the last stage");
        }
        Ok(())
    }

    /// Stages per session (1 for fixed codes).
    pub fn stages(&self) -> usize {
        match self.mode {
            SweepMode::Rateless => self.max_stages,
            SweepMode::Fixed => 1,
        }
    }

    pub fn crc(&self) -> Result<Option<CrcSpec>> {
        match self.crc_width {
            0 => Ok(None),
            w => CrcSpec::for_width(w).map(Some),
        }
    }

    pub fn session_options(&self) -> SessionOptions {
        SessionOptions {
            decoder: self.decoder,
            check_node: self.check_node,
            combining: self.combining,
            ack: self.ack,
            attempt_from_stage: match self.mode {
                SweepMode::Rateless => self.attempt_from_stage.max(1),
                SweepMode::Fixed => 1,
            },
        }
    }

    /// Design channel used at grid parameter `parameter`.
    pub fn design_channel(&self, parameter: f64) -> Result<ChannelModel> {
        match (&self.design, self.mode) {
            (Design::Channel(c), _) => Ok(*c),
            (Design::PerPoint, _) | (Design::Auto, SweepMode::Fixed) => self.family.with_parameter(parameter),
            (Design::Auto, SweepMode::Rateless) => {
                let rate = self.info_bits as f64 / self.block_length as f64;
                if rate >= 1.0 {
                    return invalid("a rate-1 peak code has no design channel");
                }
                channel_for_capacity(self.family, rate)
            }
        }
    }

    /// Plan simulated at `parameter`.
    pub fn plan(&self, parameter: f64) -> Result<SessionPlan> {
        let n = crate::polar::log2_exact(self.block_length)?;
        let profile = design_profile(self.design_channel(parameter)?, n)?;
        let mut b = SessionPlan::builder(self.info_bits, self.stages()).placement(self.placement);
        if self.mode == SweepMode::Rateless {
            b = b.extra_retransmit(self.extra_retransmit);
            if let Some(d) = &self.delta_schedule {
                b = b.delta_schedule(d.clone());
            }
        }
        if let Some(crc) = self.crc()? {
            b = b.crc(crc);
        }
        b.build(profile)
    }
}

/// Parses a grid written as `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |t: &str| Error::Parse(format!("bad grid value `{t}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
            .collect::<Result<_>>()?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(Error::Parse(format!("grid `{text}` is empty or has a non-positive step")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = SweepConfig {
            grid: vec![-1.0, -0.5],
            design: "biawgn:-2".parse().unwrap(),
            decoder: DecoderKind::Scl { max_list: 8 },
            combining: Combining::Soft,
            ..Default::default()
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(SweepConfig::from_toml(&text).unwrap(), cfg);
        let partial = SweepConfig::from_toml("block_length = 64\ninfo_bits = 16\ngrid = [0.5]\n").unwrap();
        assert_eq!(partial.stop_at_errors, 100);
        assert_eq!(partial.block_length, 64);
        assert!(SweepConfig::from_toml("nonsense = 3").is_err());
        let scl = SweepConfig::from_toml("[decoder]\nkind = \"scl\"\nmax_list = 4\n").unwrap();
        assert_eq!(scl.decoder, DecoderKind::Scl { max_list: 4 });
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1,2.5, 3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_grid("-1:0:0.25").unwrap(), vec![-1.0, -0.75, -0.5, -0.25, 0.0]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = [
            SweepConfig { block_length: 100, ..Default::default() },
            SweepConfig { grid: vec![], ..Default::default() },
            SweepConfig { trials: 0, ..Default::default() },
            SweepConfig { family: Family::Bec, grid: vec![1.5], ..Default::default() },
            SweepConfig { decoder: DecoderKind::Scl { max_list: 6 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn design_selection() {
        let cfg = SweepConfig { family: Family::Bec, grid: vec![0.3], ..Default::default() };
        assert!((cfg.design_channel(0.3).unwrap().parameter() - 0.5).abs() < 1e-9);
        let fixed = SweepConfig { mode: SweepMode::Fixed, ..cfg.clone() };
        assert_eq!(fixed.design_channel(0.3).unwrap(), ChannelModel::bec(0.3).unwrap());
    }
}
