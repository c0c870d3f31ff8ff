//! Bit-channel reliabilities, the reliability order and nested frozen sets.
//!
//! Index bits map most-significant first to the polarization levels, and the
//! `-` branch (bit 0) comes before the `+` branch (bit 1).

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::decoder::ScDecoder;
use crate::error::{invalid, Error, Result};
use crate::polar::{polar_transform, CodeSpec};
use crate::rng::{purpose, substream};

/// Per-index reliability metric (larger is more reliable) and the induced
/// total order, best first, ties by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    metric: Vec<f64>,
    order: Vec<usize>,
    design_channel: ChannelModel,
}

impl ReliabilityProfile {
    pub fn from_metric(metric: Vec<f64>, design_channel: ChannelModel) -> Result<Self> {
        crate::polar::log2_exact(metric.len())?;
        if metric.iter().any(|m| m.is_nan()) {
            return invalid("reliability metric contains NaN");
        }
        let mut order: Vec<usize> = (0..metric.len()).collect();
        order.sort_by(|&a, &b| metric[b].total_cmp(&metric[a]).then(a.cmp(&b)));
        Ok(ReliabilityProfile {
            metric,
            order,
            design_channel,
        })
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn exponent(&self) -> u32 {
        self.metric.len().trailing_zeros()
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    /// Indices from most to least reliable.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn design_channel(&self) -> ChannelModel {
        self.design_channel
    }

    /// Rank of every index in the order (0 = most reliable).
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.len()];
        for (r, &i) in self.order.iter().enumerate() {
            rank[i] = r;
        }
        rank
    }

    /// Writes `index,metric,rank` rows; metrics carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "metric", "rank"])?;
        for (i, rank) in self.ranks().into_iter().enumerate() {
            w.write_record([i.to_string(), format!("{:.16e}", self.metric[i]), rank.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a profile written by [`write_csv`](Self::write_csv). The stored
    /// ranks must agree with the order implied by the metrics.
    pub fn read_csv<R: Read>(input: R, design_channel: ChannelModel) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::Parse("short profile row".into()))
            };
            let index: usize = field(0)?.parse().map_err(|_| Error::Parse("bad index".into()))?;
            let metric: f64 = field(1)?.parse().map_err(|_| Error::Parse("bad metric".into()))?;
            let rank: usize = field(2)?.parse().map_err(|_| Error::Parse("bad rank".into()))?;
            rows.push((index, metric, rank));
        }
        let mut metric = vec![f64::NAN; rows.len()];
        let mut ranks = vec![usize::MAX; rows.len()];
        for &(i, m, k) in &rows {
            if i >= rows.len() || !metric[i].is_nan() {
                return Err(Error::Parse(format!("index {i} repeated or out of range")));
            }
            metric[i] = m;
            ranks[i] = k;
        }
        let profile = Self::from_metric(metric, design_channel)?;
        if profile.ranks() != ranks {
            return Err(Error::Parse("ranks disagree with metrics".into()));
        }
        Ok(profile)
    }
}

/// Exact erasure probabilities of the `2^n` bit channels of BEC(`epsilon`).
pub fn bec_bit_channel_erasures(epsilon: f64, n: u32) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("erasure probability {epsilon} outside [0, 1]"));
    }
    Ok(bhattacharyya_recursion(epsilon, n))
}

/// `z- = 2z - z^2`, `z+ = z^2`, expanded level by level.
fn bhattacharyya_recursion(z0: f64, n: u32) -> Vec<f64> {
    let mut z = vec![z0];
    for _ in 0..n {
        z = z
            .iter()
            .flat_map(|&z| [2.0 * z - z * z, z * z])
            .collect();
    }
    z
}

/// Profile from the Bhattacharyya-parameter recursion; exact for the BEC and
/// an upper bound on each bit channel for the BSC.
pub fn bhattacharyya_profile(channel: ChannelModel, n: u32) -> Result<ReliabilityProfile> {
    let z0 = match channel {
        ChannelModel::Bec { erasure } => erasure,
        ChannelModel::Bsc { crossover } => 2.0 * (crossover * (1.0 - crossover)).sqrt(),
        ChannelModel::BiAwgn { snr_db } => (-1.0 / (2.0 * crate::channel::awgn_noise_variance(snr_db))).exp(),
    };
    let z = bhattacharyya_recursion(z0, n);
    ReliabilityProfile::from_metric(z.into_iter().map(|z| 1.0 - z).collect(), channel)
}

/// `ln phi(x)` for the Gaussian approximation, where
/// `phi(x) = 1 - E[tanh(L/2)]` for `L ~ N(x, 2x)`.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 0.867 {
        0.0564 * x * x - 0.48560 * x
    } else if x < 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

/// Mean of the check-node output: solves `phi(y) = 1 - (1 - phi(x))^2`.
fn check_mean(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let lp = ln_phi(x);
    let p = lp.exp();
    let target = lp + (2.0 - p).ln();
    let (mut lo, mut hi) = (0.0, x);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Gaussian-approximation density evolution for BI-AWGN at `snr_db` (Es/N0).
/// The metric is the mean decision LLR of each bit channel.
pub fn awgn_reliabilities(snr_db: f64, n: u32) -> Result<ReliabilityProfile> {
    let channel = ChannelModel::biawgn(snr_db)?;
    let m0 = 2.0 / crate::channel::awgn_noise_variance(snr_db);
    let mut m = vec![m0];
    for _ in 0..n {
        m = m.iter().flat_map(|&x| [check_mean(x), 2.0 * x]).collect();
    }
    ReliabilityProfile::from_metric(m, channel)
}

/// Construction used for a design channel: exact recursion for the BEC, the
/// Bhattacharyya bound for the BSC and Gaussian approximation for BI-AWGN.
pub fn design_profile(channel: ChannelModel, n: u32) -> Result<ReliabilityProfile> {
    match channel {
        ChannelModel::BiAwgn { snr_db } => awgn_reliabilities(snr_db, n),
        _ => bhattacharyya_profile(channel, n),
    }
}

/// Monte Carlo genie-aided construction: per trial a uniform random input is
/// sent and every decision is judged with all earlier bits revealed. The
/// metric is one minus the empirical error rate. Trials use independent
/// substreams and integer counts, so the result does not depend on the
/// thread count.
pub fn mc_reliabilities(channel: ChannelModel, n: u32, trials: u64, seed: u64) -> Result<ReliabilityProfile> {
    let errors = mc_error_counts(channel, n, trials, seed)?;
    let t = trials as f64;
    ReliabilityProfile::from_metric(errors.iter().map(|&e| 1.0 - e as f64 / t).collect(), channel)
}

/// Genie-aided error counts per bit channel, see [`mc_reliabilities`].
pub fn mc_error_counts(channel: ChannelModel, n: u32, trials: u64, seed: u64) -> Result<Vec<u64>> {
    use rand::Rng;
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    if n == 0 || n > 24 {
        return invalid(format!("exponent {n} out of range 1..=24"));
    }
    let len = 1usize << n;
    const CHUNK: u64 = 256;
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut dec = ScDecoder::default();
            let mut counts = vec![0u64; len];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = substream(seed, &[t, purpose::CONSTRUCTION]);
                let u: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
                let x = polar_transform(&u)?;
                let llr = channel.llr(&channel.transmit(&x, &mut rng))?;
                for (count, wrong) in counts.iter_mut().zip(dec.genie_errors(&llr, &u)?) {
                    *count += u64::from(wrong);
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

/// Code whose information set is the `k` most reliable indices.
pub fn frozen_set_for_rate(profile: &ReliabilityProfile, k: usize) -> Result<CodeSpec> {
    if k > profile.len() {
        return invalid(format!("{k} information bits exceed block length {}", profile.len()));
    }
    CodeSpec::from_info(profile.exponent(), &profile.order()[..k])
}
