//! The incremental-freezing rateless scheme.

mod plan;
mod session;

pub use plan::{Assignment, Placement, Rate, SessionPlan, SessionPlanBuilder, StagePlan};
pub use session::{
    backward_decode, backward_decode_with, effective_rate, run_session, run_session_with, stage_codeword,
    AckPolicy, Combining, SessionDecoders, SessionOptions, SessionOutcome, SessionState, StageAttempt,
};

use std::path::PathBuf;

use crate::channel::ChannelModel;
use crate::construction::{design_profile, ReliabilityProfile};
use crate::decoder::CrcSpec;
use crate::error::{invalid, Error, Result};

/// Text form of a [`SessionPlan`]. The profile is rebuilt from the design
/// channel unless a profile CSV is named.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub block_length: usize,
    pub peak_rate: f64,
    pub max_stages: usize,
    #[serde(default)]
    pub extra_retransmit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_schedule: Option<Vec<f64>>,
    pub design_channel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crc_width: Option<u32>,
    #[serde(default)]
    pub placement: Placement,
}

impl PlanConfig {
    /// Peak information count; `N R` must be a whole number.
    pub fn peak_info_bits(&self) -> Result<usize> {
        let k = self.peak_rate * self.block_length as f64;
        if !(0.0..=self.block_length as f64).contains(&k) || (k - k.round()).abs() > 1e-9 {
            return invalid(format!(
                "peak rate {} does not give a whole number of bits at N = {}",
                self.peak_rate, self.block_length
            ));
        }
        Ok(k.round() as usize)
    }

    pub fn build(&self) -> Result<SessionPlan> {
        let channel: ChannelModel = self.design_channel.parse()?;
        let n = crate::polar::log2_exact(self.block_length)?;
        let profile = match &self.profile {
            Some(path) => {
                let file = std::fs::File::open(path)?;
                let p = ReliabilityProfile::read_csv(file, channel)?;
                if p.len() != self.block_length {
                    return invalid(format!("profile has {} entries for N = {}", p.len(), self.block_length));
                }
                p
            }
            None => design_profile(channel, n)?,
        };
        let mut b = SessionPlan::builder(self.peak_info_bits()?, self.max_stages)
            .extra_retransmit(self.extra_retransmit)
            .placement(self.placement);
        if let Some(d) = &self.delta_schedule {
            b = b.delta_schedule(d.clone());
        }
        if let Some(w) = self.crc_width {
            b = b.crc(CrcSpec::for_width(w)?);
        }
        b.build(profile)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl SessionPlan {
    /// Text description of this plan; the profile is referenced through its
    /// design channel.
    pub fn to_config(&self) -> PlanConfig {
        PlanConfig {
            block_length: self.block_length(),
            peak_rate: self.peak_rate(),
            max_stages: self.max_stages(),
            extra_retransmit: self.extra_retransmit(),
            delta_schedule: self.delta_schedule().map(<[f64]>::to_vec),
            design_channel: self.profile().design_channel().to_string(),
            profile: None,
            crc_width: self.crc().map(|c| c.width),
            placement: self.placement(),
        }
    }
}

#[cfg(test)]
mod tests;
