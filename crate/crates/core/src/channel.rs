//! Symmetric binary-input channels: capacity, simulation, LLRs and the
//! degradation order inside each family.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::llr::{LlrVector, LLR_INF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bec,
    Bsc,
    #[serde(alias = "awgn")]
    BiAwgn,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Bec => "bec",
            Family::Bsc => "bsc",
            Family::BiAwgn => "biawgn",
        }
    }

    /// Builds the family member with the given parameter.
    pub fn with_parameter(self, parameter: f64) -> Result<ChannelModel> {
        match self {
            Family::Bec => ChannelModel::bec(parameter),
            Family::Bsc => ChannelModel::bsc(parameter),
            Family::BiAwgn => ChannelModel::biawgn(parameter),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bec" => Ok(Family::Bec),
            "bsc" => Ok(Family::Bsc),
            "biawgn" | "awgn" => Ok(Family::BiAwgn),
            other => Err(Error::Parse(format!("unknown channel family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A binary-input symmetric channel.
///
/// The BI-AWGN parameter is Es/N0 in dB for unit-energy BPSK, so the noise
/// variance is `1 / (2 * 10^(snr_db/10))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Bec { erasure: f64 },
    Bsc { crossover: f64 },
    BiAwgn { snr_db: f64 },
}

/// Channel output for one block.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// `None` marks an erasure.
    Bec(Vec<Option<u8>>),
    Bsc(Vec<u8>),
    BiAwgn(Vec<f64>),
}

impl Observation {
    pub fn len(&self) -> usize {
        match self {
            Observation::Bec(v) => v.len(),
            Observation::Bsc(v) => v.len(),
            Observation::BiAwgn(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ChannelModel {
    pub fn bec(erasure: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&erasure) {
            return invalid(format!("BEC erasure probability {erasure} outside [0, 1]"));
        }
        Ok(ChannelModel::Bec { erasure })
    }

    pub fn bsc(crossover: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&crossover) {
            return invalid(format!("BSC crossover {crossover} outside [0, 0.5]"));
        }
        Ok(ChannelModel::Bsc { crossover })
    }

    pub fn biawgn(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return invalid("BI-AWGN SNR must be finite");
        }
        Ok(ChannelModel::BiAwgn { snr_db })
    }

    pub fn family(&self) -> Family {
        match self {
            ChannelModel::Bec { .. } => Family::Bec,
            ChannelModel::Bsc { .. } => Family::Bsc,
            ChannelModel::BiAwgn { .. } => Family::BiAwgn,
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            ChannelModel::Bec { erasure } => erasure,
            ChannelModel::Bsc { crossover } => crossover,
            ChannelModel::BiAwgn { snr_db } => snr_db,
        }
    }

    /// Noise variance of the BI-AWGN member; `None` for the discrete families.
    pub fn noise_variance(&self) -> Option<f64> {
        match *self {
            ChannelModel::BiAwgn { snr_db } => Some(awgn_noise_variance(snr_db)),
            _ => None,
        }
    }

    pub fn capacity(&self) -> f64 {
        match *self {
            ChannelModel::Bec { erasure } => 1.0 - erasure,
            ChannelModel::Bsc { crossover } => 1.0 - binary_entropy(crossover),
            ChannelModel::BiAwgn { snr_db } => biawgn_capacity(awgn_noise_variance(snr_db)),
        }
    }

    /// Sends a codeword through the channel.
    ///
    /// One uniform (BEC, BSC) or standard normal (BI-AWGN) draw is consumed
    /// per position, so two members of a family driven by equally seeded rngs
    /// see coupled noise: the erasures or flips of the worse channel are a
    /// superset of those of the better one.
    pub fn transmit<R: Rng + ?Sized>(&self, codeword: &[u8], rng: &mut R) -> Observation {
        match *self {
            ChannelModel::Bec { erasure } => Observation::Bec(
                codeword
                    .iter()
                    .map(|&x| {
                        let u: f64 = rng.gen();
                        if u < erasure {
                            None
                        } else {
                            Some(x)
                        }
                    })
                    .collect(),
            ),
            ChannelModel::Bsc { crossover } => Observation::Bsc(
                codeword
                    .iter()
                    .map(|&x| {
                        let u: f64 = rng.gen();
                        x ^ u8::from(u < crossover)
                    })
                    .collect(),
            ),
            ChannelModel::BiAwgn { snr_db } => {
                let sigma = awgn_noise_variance(snr_db).sqrt();
                Observation::BiAwgn(
                    codeword
                        .iter()
                        .map(|&x| {
                            let z: f64 = rng.sample(StandardNormal);
                            (1.0 - 2.0 * f64::from(x)) + sigma * z
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn llr(&self, observation: &Observation) -> Result<LlrVector> {
        self.llr_with_saturation(observation, LLR_INF)
    }

    /// LLRs with certain outcomes mapped to `±saturation`.
    pub fn llr_with_saturation(&self, observation: &Observation, saturation: f64) -> Result<LlrVector> {
        match (*self, observation) {
            (ChannelModel::Bec { .. }, Observation::Bec(obs)) => Ok(obs
                .iter()
                .map(|o| match o {
                    None => 0.0,
                    Some(0) => saturation,
                    Some(_) => -saturation,
                })
                .collect()),
            (ChannelModel::Bsc { crossover }, Observation::Bsc(obs)) => {
                let mag = if crossover == 0.0 {
                    saturation
                } else {
                    ((1.0 - crossover) / crossover).ln().min(saturation)
                };
                Ok(obs.iter().map(|&b| if b == 0 { mag } else { -mag }).collect())
            }
            (ChannelModel::BiAwgn { snr_db }, Observation::BiAwgn(obs)) => {
                let scale = 2.0 / awgn_noise_variance(snr_db);
                Ok(obs
                    .iter()
                    .map(|&y| (scale * y).clamp(-saturation, saturation))
                    .collect())
            }
            (ch, _) => invalid(format!("observation does not come from a {} channel", ch.family())),
        }
    }

    /// `self ⪯ other`: `self` is a degraded version of `other`.
    pub fn is_degraded(&self, other: &ChannelModel) -> Result<bool> {
        match (*self, *other) {
            (ChannelModel::Bec { erasure: a }, ChannelModel::Bec { erasure: b }) => Ok(a >= b),
            (ChannelModel::Bsc { crossover: a }, ChannelModel::Bsc { crossover: b }) => Ok(a >= b),
            (ChannelModel::BiAwgn { snr_db: a }, ChannelModel::BiAwgn { snr_db: b }) => Ok(a <= b),
            (a, b) => Err(Error::UnsupportedComparison(format!(
                "{} vs {}",
                a.family(),
                b.family()
            ))),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family(), self.parameter())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Parses descriptors such as `bec:0.5`, `bsc:0.11` or `biawgn:2.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, param) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel descriptor `{s}` lacks `family:parameter`")))?;
        let family: Family = family.parse()?;
        let value: f64 = param
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad channel parameter `{param}`")))?;
        family.with_parameter(value).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn awgn_noise_variance(snr_db: f64) -> f64 {
    1.0 / (2.0 * 10f64.powf(snr_db / 10.0))
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

const HERMITE_ORDER: usize = 400;

/// Gauss–Hermite nodes and weights for the weight `e^{-t^2}` via the
/// Golub–Welsch eigenproblem of the Hermite Jacobi matrix, solved with
/// implicit QL iterations that track only the first eigenvector row.
pub(crate) fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut d = vec![0.0f64; n];
    // e[i] couples rows i and i+1
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { ((i + 1) as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations < 100, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z).map(|(x, v)| (x, sqrt_pi * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_ORDER))
}

/// `log2(1 + e^x)` without overflow.
fn softplus_log2(x: f64) -> f64 {
    (x.max(0.0) + (-x.abs()).exp().ln_1p()) / std::f64::consts::LN_2
}

/// Mutual information of equiprobable BPSK (±1) over real AWGN with variance
/// `sigma2`: `1 - E[log2(1 + e^{-L})]`, `L ~ N(2/σ², 4/σ²)`.
pub fn biawgn_capacity(sigma2: f64) -> f64 {
    let (nodes, weights) = hermite_rule();
    let sigma = sigma2.sqrt();
    let mean = 2.0 / sigma2;
    let spread = 2.0 * std::f64::consts::SQRT_2 / sigma;
    let expectation: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &w)| w * softplus_log2(-(mean + spread * t)))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt();
    (1.0 - expectation).clamp(0.0, 1.0)
}

/// The member of `family` whose capacity is `target`, by bisection.
pub fn channel_for_capacity(family: Family, target: f64) -> Result<ChannelModel> {
    if !(target > 0.0 && target < 1.0) {
        return invalid(format!("target capacity {target} outside (0, 1)"));
    }
    let (mut lo, mut hi, increasing) = match family {
        Family::Bec => return ChannelModel::bec(1.0 - target),
        Family::Bsc => (0.0, 0.5, false),
        Family::BiAwgn => (-80.0, 60.0, true),
    };
    let cap = |p: f64| family.with_parameter(p).map(|c| c.capacity());
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let c = cap(mid)?;
        if (c - target).abs() <= 1e-13 {
            return family.with_parameter(mid);
        }
        if (c < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * 4.0 * hi.abs().max(1e-300) {
            break;
        }
    }
    family.with_parameter(0.5 * (lo + hi))
}
