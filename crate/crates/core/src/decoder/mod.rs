//! Successive-cancellation family of decoders and their shared types.

mod crc;
mod joint;
mod sc;
mod scl;

pub use crc::CrcSpec;
pub use joint::{JointCodeword, JointResult, JointScDecoder};
pub use sc::ScDecoder;
pub use scl::{ListCandidate, SclDecoder};

use crate::error::Result;
use crate::llr::LLR_INF;
use crate::polar::{extract_message, CodeSpec};

/// Per-index LLR offsets added to the decision LLR at information indices.
/// A magnitude of at least [`LLR_INF`] fixes the bit outright.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    values: Vec<f64>,
}

impl Priors {
    pub fn zeros(len: usize) -> Self {
        Priors { values: vec![0.0; len] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Priors { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set_soft(&mut self, i: usize, llr: f64) {
        self.values[i] = llr;
    }

    /// Marks index `i` as known to carry `bit`.
    pub fn set_hard(&mut self, i: usize, bit: u8) {
        self.values[i] = if bit == 0 { LLR_INF } else { -LLR_INF };
    }

    pub fn is_hard(&self, i: usize) -> bool {
        crate::llr::is_infinite(self.values[i])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Output of a decoder call.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub u_hat: Vec<u8>,
    pub message: Vec<u8>,
    pub crc_ok: bool,
    pub path_metric: f64,
    pub list_size_used: usize,
}

impl DecodeResult {
    pub(crate) fn from_u(u_hat: Vec<u8>, spec: &CodeSpec, crc_ok: bool, path_metric: f64, list: usize) -> Result<Self> {
        let message = extract_message(&u_hat, spec)?;
        Ok(DecodeResult {
            u_hat,
            message,
            crc_ok,
            path_metric,
            list_size_used: list,
        })
    }
}

/// Decoder selection shared by sessions and the sweep harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DecoderKind {
    Sc,
    Scl { max_list: usize },
}

impl Default for DecoderKind {
    fn default() -> Self {
        DecoderKind::Sc
    }
}

/// SC decode; see [`ScDecoder::decode`].
pub fn sc_decode(llrs: &[f64], spec: &CodeSpec, priors: Option<&Priors>) -> Result<DecodeResult> {
    ScDecoder::new(Default::default()).decode(llrs, spec, priors)
}

/// Adaptive CRC-aided list decode; see [`SclDecoder::decode_adaptive`].
pub fn scl_decode(
    llrs: &[f64],
    spec: &CodeSpec,
    max_list: usize,
    crc: Option<&CrcSpec>,
    priors: Option<&Priors>,
) -> Result<DecodeResult> {
    SclDecoder::new(Default::default(), max_list)?.decode_adaptive(llrs, spec, crc, priors)
}
