//! Stage planning for incremental freezing.
//!
//! Every stage uses the same design order. Logical bit `j` of stage 1 rides
//! rank `j`, and stage `s` carries its bits on ranks `0..count_s`. After `k`
//! stages, stage `s` still has ranks `0..unresolved_s` to decode; everything
//! ranked past that has been retransmitted later and acts as side
//! information.

use std::io::Write;

use crate::channel::{channel_for_capacity, ChannelModel};
use crate::construction::{frozen_set_for_rate, ReliabilityProfile};
use crate::decoder::CrcSpec;
use crate::error::{invalid, Result};
use crate::polar::CodeSpec;

/// One logical bit placed in a stage. Stages are numbered from 1, logical
/// bits from 0 (`u1` is bit 0), positions are code indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub logical_bit: usize,
    pub source_stage: usize,
    pub source_index: usize,
    pub dest_index: usize,
}

impl Assignment {
    pub fn is_fresh(&self, stage: usize) -> bool {
        self.source_stage == stage
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    pub stage: usize,
    /// In destination rank order, most reliable first.
    pub assignments: Vec<Assignment>,
    pub spec: CodeSpec,
    /// Family member whose capacity equals this stage's rate, when defined.
    pub target_channel: Option<ChannelModel>,
    /// Bits introduced by this stage (all of them for stage 1).
    pub new_bits: usize,
    pub retransmitted: usize,
    pub extras: usize,
}

impl StagePlan {
    pub fn count(&self) -> usize {
        self.assignments.len()
    }
}

/// How a stage maps its bits onto its information positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Bits sorted by source rank ride the destination ranks in order.
    #[default]
    Reliability,
    /// Shared bits keep the same relative index order in every stage, so
    /// stages can be decoded jointly in successive-cancellation order. The
    /// set of positions is unchanged.
    Successive,
}

/// A rateless session: peak code, stage count and retransmission policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPlan {
    profile: ReliabilityProfile,
    k: usize,
    max_stages: usize,
    extra_retransmit: usize,
    delta_schedule: Option<Vec<f64>>,
    crc: Option<CrcSpec>,
    placement: Placement,
    stages: Vec<StagePlan>,
    /// `unresolved[k - 1][s - 1]`: ranks of stage `s` still undecided once
    /// `k` stages have been sent.
    unresolved: Vec<Vec<usize>>,
    /// One block per stage that introduces bits: `(first bit, length)`.
    blocks: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct SessionPlanBuilder {
    k: usize,
    max_stages: usize,
    extra_retransmit: usize,
    delta_schedule: Option<Vec<f64>>,
    crc: Option<CrcSpec>,
    placement: Placement,
}

impl SessionPlanBuilder {
    /// Extra bits retransmitted at each stage beyond the basic band.
    pub fn extra_retransmit(mut self, delta_bits: usize) -> Self {
        self.extra_retransmit = delta_bits;
        self
    }

    /// Rate decrements for stages `2..=max_stages`: after stage `j` the
    /// combined rate drops by `schedule[j - 2]` instead of to `R / j`.
    pub fn delta_schedule(mut self, schedule: Vec<f64>) -> Self {
        self.delta_schedule = Some(schedule);
        self
    }

    pub fn crc(mut self, crc: CrcSpec) -> Self {
        self.crc = Some(crc);
        self
    }

    pub fn placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn build(self, profile: ReliabilityProfile) -> Result<SessionPlan> {
        SessionPlan::build(profile, self)
    }
}

impl SessionPlan {
    /// Starts a plan with `k` peak information bits and up to `max_stages`
    /// transmissions.
    pub fn builder(k: usize, max_stages: usize) -> SessionPlanBuilder {
        SessionPlanBuilder {
            k,
            max_stages,
            ..Default::default()
        }
    }

    fn build(profile: ReliabilityProfile, b: SessionPlanBuilder) -> Result<Self> {
        let len = profile.len();
        let k = b.k;
        if k == 0 || k > len {
            return invalid(format!("peak information count {k} outside 1..={len}"));
        }
        if b.max_stages == 0 {
            return invalid("at least one stage is required");
        }
        if let Some(crc) = &b.crc {
            if crc.width() >= k {
                return invalid(format!("{k} information bits cannot hold a {}-bit CRC", crc.width()));
            }
        }
        let removed: Option<Vec<usize>> = match &b.delta_schedule {
            None => None,
            Some(d) => {
                if d.len() + 1 != b.max_stages {
                    return invalid(format!(
                        "rate schedule has {} entries, expected {}",
                        d.len(),
                        b.max_stages - 1
                    ));
                }
                let mut out = Vec::with_capacity(d.len());
                for &x in d {
                    if !(x.is_finite() && x >= 0.0) {
                        return invalid(format!("rate decrement {x} must be finite and non-negative"));
                    }
                    out.push((x * len as f64).round() as usize);
                }
                Some(out)
            }
        };

        let order = profile.order();
        // bit_at_rank[s][r]: logical bit carried by rank r of stage s + 1
        let mut bit_at_rank: Vec<Vec<usize>> = vec![(0..k).collect()];
        let mut unresolved_now = vec![k];
        let mut unresolved = vec![unresolved_now.clone()];
        let mut blocks = vec![(0, k)];
        let mut next_bit = k;
        // ordering key of each logical bit under successive placement
        let mut birth: Vec<(usize, usize)> = (0..k).map(|j| (1, order[j])).collect();
        let mut stages = vec![Self::stage_record(
            &profile,
            1,
            (0..k)
                .map(|j| Assignment {
                    logical_bit: j,
                    source_stage: 1,
                    source_index: order[j],
                    dest_index: order[j],
                })
                .collect(),
            k,
            0,
            0,
        )?];

        let mut target = k;
        for stage in 2..=b.max_stages {
            let prev = stage - 1;
            target = match &removed {
                None => k / stage,
                Some(r) => target.checked_sub(r[stage - 2]).ok_or_else(|| {
                    crate::Error::InvalidArgument(format!("rate schedule exhausts the code at stage {stage}"))
                })?,
            };
            // (source rank, source stage, logical bit)
            let mut carried: Vec<(usize, usize, usize)> = Vec::new();
            for s in 0..prev {
                let u = unresolved_now[s];
                if u > target {
                    carried.extend((target..u).map(|r| (r, s + 1, bit_at_rank[s][r])));
                    unresolved_now[s] = target;
                }
            }
            let retransmitted = carried.len();
            let mut extras = 0;
            while extras < b.extra_retransmit {
                let mut took = false;
                for s in 0..prev {
                    if extras == b.extra_retransmit {
                        break;
                    }
                    if unresolved_now[s] > 0 {
                        let r = unresolved_now[s] - 1;
                        carried.push((r, s + 1, bit_at_rank[s][r]));
                        unresolved_now[s] = r;
                        extras += 1;
                        took = true;
                    }
                }
                if !took {
                    return invalid(format!(
                        "stage {stage} cannot retransmit {} extra bits",
                        b.extra_retransmit
                    ));
                }
            }
            carried.sort_by_key(|&(rank, s, _)| (rank, s, order[rank]));
            let new_bits = if removed.is_some() {
                let needed = target.checked_sub(retransmitted).ok_or_else(|| {
                    crate::Error::InvalidArgument(format!(
                        "stage {stage} retransmits {retransmitted} bits, beyond its target of {target}"
                    ))
                })?;
                needed
            } else {
                0
            };
            let count = new_bits + carried.len();
            if count > len {
                return invalid(format!("stage {stage} needs {count} positions out of {len}"));
            }
            // (logical bit, source stage, source index), in rank order
            let mut bits: Vec<(usize, usize, usize)> = (0..new_bits)
                .map(|j| (next_bit + j, stage, order[j]))
                .chain(carried.iter().map(|&(rank, s, bit)| (bit, s, order[rank])))
                .collect();
            if new_bits > 0 {
                blocks.push((next_bit, new_bits));
            }
            next_bit += new_bits;
            let mut dests: Vec<usize> = order[..count].to_vec();
            if b.placement == Placement::Successive {
                for (j, bit) in bits.iter().enumerate().take(new_bits) {
                    birth.push((stage, j));
                    debug_assert_eq!(birth.len(), bit.0 + 1);
                }
                bits.sort_by_key(|&(bit, _, _)| birth[bit]);
                dests.sort_unstable();
                // back to rank order
                let ranks = profile.ranks();
                let mut paired: Vec<_> = bits.into_iter().zip(dests).collect();
                paired.sort_by_key(|&(_, d)| ranks[d]);
                (bits, dests) = paired.into_iter().unzip();
            }
            let assignments: Vec<Assignment> = bits
                .iter()
                .zip(&dests)
                .map(|(&(logical_bit, source_stage, source_index), &dest_index)| Assignment {
                    logical_bit,
                    source_stage,
                    source_index,
                    dest_index,
                })
                .collect();
            let here: Vec<usize> = bits.iter().map(|b| b.0).collect();
            bit_at_rank.push(here);
            unresolved_now.push(count);
            unresolved.push(unresolved_now.clone());
            stages.push(Self::stage_record(&profile, stage, assignments, new_bits, retransmitted, extras)?);
        }

        if let Some(crc) = &b.crc {
            if let Some(&(_, short)) = blocks.iter().find(|b| b.1 <= crc.width()) {
                return invalid(format!("a block of {short} new bits cannot hold a {}-bit CRC", crc.width()));
            }
        }

        Ok(SessionPlan {
            profile,
            k,
            max_stages: b.max_stages,
            extra_retransmit: b.extra_retransmit,
            delta_schedule: b.delta_schedule,
            crc: b.crc,
            placement: b.placement,
            stages,
            unresolved,
            blocks,
        })
    }

    fn stage_record(
        profile: &ReliabilityProfile,
        stage: usize,
        assignments: Vec<Assignment>,
        new_bits: usize,
        retransmitted: usize,
        extras: usize,
    ) -> Result<StagePlan> {
        let spec = frozen_set_for_rate(profile, assignments.len())?;
        let rate = assignments.len() as f64 / profile.len() as f64;
        let target_channel = if rate > 0.0 && rate < 1.0 {
            channel_for_capacity(profile.design_channel().family(), rate).ok()
        } else {
            None
        };
        Ok(StagePlan {
            stage,
            assignments,
            spec,
            target_channel,
            new_bits,
            retransmitted,
            extras,
        })
    }

    pub fn profile(&self) -> &ReliabilityProfile {
        &self.profile
    }

    pub fn block_length(&self) -> usize {
        self.profile.len()
    }

    /// Peak information count `K = N R`.
    pub fn peak_info_bits(&self) -> usize {
        self.k
    }

    pub fn peak_rate(&self) -> f64 {
        self.k as f64 / self.block_length() as f64
    }

    pub fn max_stages(&self) -> usize {
        self.max_stages
    }

    pub fn extra_retransmit(&self) -> usize {
        self.extra_retransmit
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn delta_schedule(&self) -> Option<&[f64]> {
        self.delta_schedule.as_deref()
    }

    pub fn crc(&self) -> Option<&CrcSpec> {
        self.crc.as_ref()
    }

    /// Plan of stage `k` (1-based).
    pub fn plan_stage(&self, k: usize) -> Result<&StagePlan> {
        if k == 0 || k > self.max_stages {
            return invalid(format!("stage {k} outside 1..={}", self.max_stages));
        }
        Ok(&self.stages[k - 1])
    }

    pub fn stages(&self) -> &[StagePlan] {
        &self.stages
    }

    /// Ranks of stage `m` left to decode once `k` stages have been sent.
    pub fn unresolved(&self, m: usize, k: usize) -> usize {
        self.unresolved[k - 1][m - 1]
    }

    /// Information positions of stage `m` turned into side information once
    /// `k` stages have been sent.
    pub fn frozen_by_side_information(&self, m: usize, k: usize) -> usize {
        self.stages[m - 1].count() - self.unresolved(m, k)
    }

    /// Logical bits introduced by stages `1..=k`.
    pub fn logical_bits(&self, k: usize) -> usize {
        self.stages[..k].iter().map(|s| s.new_bits).sum()
    }

    /// Length of the full logical message (all stages).
    pub fn message_len(&self) -> usize {
        self.logical_bits(self.max_stages)
    }

    /// Payload length once every block carries its CRC.
    pub fn payload_len(&self) -> usize {
        let w = self.crc.as_ref().map_or(0, CrcSpec::width);
        self.message_len() - w * self.blocks.len()
    }

    /// `(first logical bit, length)` of each block of new bits.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Builds the logical message from a payload. With a CRC, the last bits
    /// of each block hold the CRC of every logical bit before them.
    pub fn frame(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.payload_len() {
            return invalid(format!("payload has {} bits, plan expects {}", payload.len(), self.payload_len()));
        }
        let Some(crc) = &self.crc else {
            return Ok(payload.to_vec());
        };
        let w = crc.width();
        let mut message = Vec::with_capacity(self.message_len());
        let mut rest = payload;
        for &(_, len) in &self.blocks {
            let (head, tail) = rest.split_at(len - w);
            message.extend_from_slice(head);
            let with_crc = crc.attach(&message)?;
            message = with_crc;
            rest = tail;
        }
        Ok(message)
    }

    /// Checks the CRC of every block lying within `bits` (a message prefix).
    pub fn check_blocks(&self, bits: &[u8]) -> bool {
        let Some(crc) = &self.crc else {
            return true;
        };
        self.blocks
            .iter()
            .filter(|&&(start, len)| start + len <= bits.len())
            .all(|&(start, len)| crc.check(&bits[..start + len]))
    }

    /// Writes `stage,logical_bit,source_stage,source_index,dest_index` rows
    /// for stages `1..=k`, logical bits numbered from 1.
    pub fn write_csv<W: Write>(&self, k: usize, out: W) -> Result<()> {
        self.plan_stage(k)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "logical_bit", "source_stage", "source_index", "dest_index"])?;
        for plan in &self.stages[..k] {
            for a in &plan.assignments {
                w.write_record([
                    plan.stage.to_string(),
                    (a.logical_bit + 1).to_string(),
                    a.source_stage.to_string(),
                    a.source_index.to_string(),
                    a.dest_index.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Cumulative rate after `k` stages: distinct logical bits over channel uses.
    pub fn cumulative_rate(&self, k: usize) -> Rate {
        Rate::new(self.logical_bits(k) as u64, (k * self.block_length()) as u64)
    }
}

/// An exact non-negative rational rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate {
    pub bits: u64,
    pub uses: u64,
}

impl Rate {
    pub fn new(bits: u64, uses: u64) -> Self {
        let g = gcd(bits, uses).max(1);
        Rate {
            bits: bits / g,
            uses: uses / g,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.bits as f64 / self.uses as f64
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.bits, self.uses)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
