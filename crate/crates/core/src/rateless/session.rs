//! Transmission and backward decoding of a rateless session.

use rand::Rng;

use crate::channel::ChannelModel;
use crate::decoder::{DecodeResult, DecoderKind, JointCodeword, JointScDecoder, Priors, ScDecoder, SclDecoder};
use crate::error::{invalid, Error, Result};
use crate::llr::{is_infinite, CheckNode, LLR_INF};
use crate::polar::polar_transform;

use super::plan::{Placement, Rate, SessionPlan};

/// How repeated bits are combined across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combining {
    /// Retransmitted bits are decoded from their latest stage alone.
    #[default]
    Hard,
    /// With SC and [`Placement::Successive`], all received stages are
    /// decoded jointly and every shared bit is decided from the sum of its
    /// leaf LLRs in all stages holding it. Otherwise backward decoding keeps
    /// hard side information and a stage decode also takes soft estimates of
    /// undecoded bits it shares with the stage before it.
    Soft,
}

/// What acknowledges a decoded session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckPolicy {
    /// Every block CRC of the assembled message passes.
    #[default]
    Crc,
    /// The receiver is told whether its estimate is right.
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionOptions {
    pub decoder: DecoderKind,
    pub check_node: CheckNode,
    pub combining: Combining,
    pub ack: AckPolicy,
    /// First stage after which decoding is attempted.
    pub attempt_from_stage: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            decoder: DecoderKind::Sc,
            check_node: CheckNode::Exact,
            combining: Combining::Hard,
            ack: AckPolicy::Crc,
            attempt_from_stage: 1,
        }
    }
}

/// Receiver-side memory of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    /// Channel LLRs of each received stage.
    pub received: Vec<Vec<f64>>,
    /// Decoded value of each logical bit, with the latest stage holding it.
    pub decoded: Vec<Option<(u8, usize)>>,
    /// Acknowledgement after each received stage (`None`: not attempted).
    pub outcomes: Vec<Option<bool>>,
}

impl SessionState {
    pub fn new(plan: &SessionPlan) -> Self {
        SessionState {
            received: Vec::new(),
            decoded: vec![None; plan.message_len()],
            outcomes: Vec::new(),
        }
    }

    pub fn current_stage(&self) -> usize {
        self.received.len()
    }
}

/// Record of one decoding attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StageAttempt {
    pub stage: usize,
    pub acked: bool,
    /// Largest list size the attempt went up to.
    pub list_size: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub stages_used: usize,
    pub acked: bool,
    /// Acknowledged and equal to the transmitted message.
    pub success: bool,
    pub attempts: Vec<StageAttempt>,
    pub effective_rate: Rate,
    pub state: SessionState,
}

/// Decoder instances reused across the stages of a session.
pub struct SessionDecoders {
    sc: ScDecoder,
    scl: Option<SclDecoder>,
    joint: JointScDecoder,
}

impl SessionDecoders {
    pub fn new(options: &SessionOptions) -> Result<Self> {
        let scl = match options.decoder {
            DecoderKind::Sc => None,
            DecoderKind::Scl { max_list } => Some(SclDecoder::new(options.check_node, max_list)?),
        };
        Ok(SessionDecoders {
            sc: ScDecoder::new(options.check_node),
            scl,
            joint: JointScDecoder::new(options.check_node),
        })
    }
}

/// Channel input of stage `k` for a logical message.
pub fn stage_codeword(plan: &SessionPlan, k: usize, message: &[u8]) -> Result<Vec<u8>> {
    if message.len() != plan.message_len() {
        return invalid(format!("message has {} bits, plan expects {}", message.len(), plan.message_len()));
    }
    let st = plan.plan_stage(k)?;
    let mut u = vec![0u8; plan.block_length()];
    for a in &st.assignments {
        u[a.dest_index] = message[a.logical_bit];
    }
    polar_transform(&u)
}

/// Sends stage after stage over `channel`, attempting a backward decode after
/// each one from `attempt_from_stage` on, until acknowledged or out of stages.
/// The rng supplies exactly one block of channel noise per stage.
pub fn run_session<R: Rng + ?Sized>(
    plan: &SessionPlan,
    channel: &ChannelModel,
    message: &[u8],
    options: &SessionOptions,
    rng: &mut R,
) -> Result<SessionOutcome> {
    let mut decoders = SessionDecoders::new(options)?;
    run_session_with(plan, channel, message, options, &mut decoders, rng)
}

/// [`run_session`] with caller-owned decoders.
pub fn run_session_with<R: Rng + ?Sized>(
    plan: &SessionPlan,
    channel: &ChannelModel,
    message: &[u8],
    options: &SessionOptions,
    decoders: &mut SessionDecoders,
    rng: &mut R,
) -> Result<SessionOutcome> {
    let mut state = SessionState::new(plan);
    let mut attempts = Vec::new();
    let mut acked = false;
    for k in 1..=plan.max_stages() {
        let x = stage_codeword(plan, k, message)?;
        state.received.push(channel.llr(&channel.transmit(&x, rng))?);
        if k < options.attempt_from_stage {
            state.outcomes.push(None);
            continue;
        }
        let attempt = backward_decode_with(plan, &mut state, options, decoders, Some(message))?;
        state.outcomes.push(Some(attempt.acked));
        acked = attempt.acked;
        attempts.push(attempt);
        if acked {
            break;
        }
    }
    let stages_used = state.current_stage();
    let logical = plan.logical_bits(stages_used);
    let success = acked
        && state.decoded[..logical]
            .iter()
            .zip(message)
            .all(|(d, &m)| d.map(|(b, _)| b) == Some(m));
    Ok(SessionOutcome {
        stages_used,
        acked,
        success,
        attempts,
        effective_rate: effective_rate(plan, &state)?,
        state,
    })
}

/// Distinct logical bits over channel uses for the stages received so far.
pub fn effective_rate(plan: &SessionPlan, state: &SessionState) -> Result<Rate> {
    let k = state.current_stage();
    if k == 0 {
        return invalid("no stage received yet");
    }
    Ok(plan.cumulative_rate(k))
}

/// Backward decode of every stage received so far, mutating `state`. Returns
/// the decoded logical bits of stages `1..=k`, or a stage failure.
pub fn backward_decode(plan: &SessionPlan, state: &mut SessionState, options: &SessionOptions) -> Result<Vec<u8>> {
    let mut decoders = SessionDecoders::new(options)?;
    let attempt = backward_decode_with(plan, state, options, &mut decoders, None)?;
    if let Some(reason) = attempt.failure {
        return Err(Error::StageFailure {
            stage: attempt.stage,
            reason,
        });
    }
    let logical = plan.logical_bits(state.current_stage());
    Ok(state.decoded[..logical].iter().map(|d| d.map_or(0, |(b, _)| b)).collect())
}

/// One acknowledgement attempt. With an SC-list decoder the whole backward
/// pass is repeated with list sizes 1, 2, 4, … until acknowledged. `truth`
/// is required by the genie policy.
pub fn backward_decode_with(
    plan: &SessionPlan,
    state: &mut SessionState,
    options: &SessionOptions,
    decoders: &mut SessionDecoders,
    truth: Option<&[u8]>,
) -> Result<StageAttempt> {
    let k = state.current_stage();
    if k == 0 {
        return invalid("no stage received yet");
    }
    if state.received.iter().any(|r| r.len() != plan.block_length()) {
        return invalid("received stage length differs from block length");
    }
    let logical = plan.logical_bits(k);
    if options.ack == AckPolicy::Genie && truth.is_none() {
        return invalid("genie acknowledgement needs the transmitted message");
    }
    let max_list = match options.decoder {
        DecoderKind::Sc => 1,
        DecoderKind::Scl { max_list } => max_list,
    };
    let mut list = 1;
    loop {
        let failure = match one_pass(plan, state, options, decoders, list) {
            Ok(()) => None,
            Err(Error::StageFailure { stage, reason }) => Some((stage, reason)),
            Err(e) => return Err(e),
        };
        let bits: Vec<u8> = state.decoded[..logical].iter().map(|d| d.map_or(0, |(b, _)| b)).collect();
        let acked = failure.is_none()
            && match options.ack {
                AckPolicy::Crc => plan.check_blocks(&bits),
                AckPolicy::Genie => truth.is_some_and(|t| t[..logical] == bits[..]),
            };
        if acked || list >= max_list {
            return Ok(StageAttempt {
                stage: failure.as_ref().map_or(k, |f| f.0),
                acked,
                list_size: list,
                failure: failure.map(|f| f.1),
            });
        }
        list *= 2;
    }
}

fn one_pass(
    plan: &SessionPlan,
    state: &mut SessionState,
    options: &SessionOptions,
    decoders: &mut SessionDecoders,
    list: usize,
) -> Result<()> {
    let k = state.current_stage();
    let len = plan.block_length();
    let soft = options.combining == Combining::Soft;
    state.decoded.iter_mut().for_each(|d| *d = None);
    if soft && k >= 2 && list == 1 && plan.placement() == Placement::Successive {
        return joint_pass(plan, state, decoders);
    }
    for m in (1..=k).rev() {
        let st = plan.plan_stage(m)?;
        let mut priors = Priors::zeros(len);
        for a in &st.assignments {
            if let Some((b, _)) = state.decoded[a.logical_bit] {
                priors.set_hard(a.dest_index, b);
            }
        }
        if soft && m >= 2 {
            let shared: Vec<_> = st
                .assignments
                .iter()
                .filter(|a| a.source_stage == m - 1 && state.decoded[a.logical_bit].is_none())
                .collect();
            if !shared.is_empty() {
                let prev = plan.plan_stage(m - 1)?;
                let mut prev_priors = Priors::zeros(len);
                for a in &prev.assignments {
                    if let Some((b, _)) = state.decoded[a.logical_bit] {
                        prev_priors.set_hard(a.dest_index, b);
                    }
                }
                let ext = decoders.sc.soft_pass(&state.received[m - 2], &prev.spec, Some(&prev_priors))?;
                for a in shared {
                    priors.set_soft(a.dest_index, ext[a.source_index].clamp(-LLR_INF / 2.0, LLR_INF / 2.0));
                }
            }
        }
        let llrs = &state.received[m - 1];
        let result: DecodeResult = match (&mut decoders.scl, list) {
            (Some(scl), l) if l > 1 => {
                if m == 1 {
                    decode_first_stage_list(plan, scl, llrs, &st.spec, l, &priors)?
                } else {
                    let best = scl.list_decode(llrs, &st.spec, l, Some(&priors))?.swap_remove(0);
                    DecodeResult {
                        message: crate::polar::extract_message(&best.u_hat, &st.spec)?,
                        u_hat: best.u_hat,
                        crc_ok: true,
                        path_metric: best.metric,
                        list_size_used: l,
                    }
                }
            }
            _ => decoders.sc.decode(llrs, &st.spec, Some(&priors))?,
        };
        if is_infinite(result.path_metric) {
            return Err(Error::StageFailure {
                stage: m,
                reason: "side information contradicts a certain channel decision".into(),
            });
        }
        for a in &st.assignments {
            let bit = result.u_hat[a.dest_index];
            match state.decoded[a.logical_bit] {
                Some((known, _)) if known != bit => unreachable!("hard priors fix known bits"),
                Some(_) => {}
                None => state.decoded[a.logical_bit] = Some((bit, m)),
            }
        }
    }
    Ok(())
}

/// Joint SC decode of every received stage.
fn joint_pass(plan: &SessionPlan, state: &mut SessionState, decoders: &mut SessionDecoders) -> Result<()> {
    let k = state.current_stage();
    let len = plan.block_length();
    let mut vars = vec![vec![None; len]; k];
    let mut latest = vec![0; state.decoded.len()];
    for m in 1..=k {
        for a in &plan.plan_stage(m)?.assignments {
            vars[m - 1][a.dest_index] = Some(a.logical_bit);
            latest[a.logical_bit] = m;
        }
    }
    let words: Vec<JointCodeword<'_>> = (1..=k)
        .map(|m| -> Result<_> {
            Ok(JointCodeword {
                llrs: &state.received[m - 1],
                spec: &plan.plan_stage(m)?.spec,
                vars: &vars[m - 1],
            })
        })
        .collect::<Result<_>>()?;
    let result = decoders.joint.decode(&words, state.decoded.len(), None)?;
    if is_infinite(result.path_metric) {
        return Err(Error::StageFailure {
            stage: 1,
            reason: "stages disagree on a certain decision".into(),
        });
    }
    for (b, d) in state.decoded.iter_mut().enumerate() {
        if latest[b] > 0 {
            *d = Some((result.values[b], latest[b]));
        }
    }
    Ok(())
}

/// Stage 1 holds the first block; its CRC selects among the list.
fn decode_first_stage_list(
    plan: &SessionPlan,
    scl: &mut SclDecoder,
    llrs: &[f64],
    spec: &crate::polar::CodeSpec,
    list: usize,
    priors: &Priors,
) -> Result<DecodeResult> {
    let candidates = scl.list_decode(llrs, spec, list, Some(priors))?;
    let st = plan.plan_stage(1)?;
    let passing = candidates.iter().position(|c| {
        let bits: Vec<u8> = st.assignments.iter().map(|a| c.u_hat[a.dest_index]).collect();
        plan.check_blocks(&bits)
    });
    let c = &candidates[passing.unwrap_or(0)];
    Ok(DecodeResult {
        message: crate::polar::extract_message(&c.u_hat, spec)?,
        u_hat: c.u_hat.clone(),
        crc_ok: passing.is_some(),
        path_metric: c.metric,
        list_size_used: list,
    })
}
