//! Implementations behind the command-line subcommands.

use std::io::Write;

use crate::channel::ChannelModel;
use crate::construction::{
    awgn_reliabilities, bhattacharyya_profile, design_profile, mc_reliabilities, ReliabilityProfile,
};
use crate::error::{invalid, Result};
use crate::polar::{encode, polar_transform};
use crate::rateless::{
    backward_decode_with, stage_codeword, AckPolicy, Combining, SessionDecoders, SessionOptions, SessionPlan,
    SessionState,
};
use crate::rng::substream;

/// Construction method for `construct`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Exact recursion (BEC), Bhattacharyya bound (BSC), Gaussian approximation (BI-AWGN).
    #[default]
    Auto,
    Bhattacharyya,
    Gaussian,
    MonteCarlo { trials: u64, seed: u64 },
}

pub fn construct_profile(channel: ChannelModel, n: u32, method: Method) -> Result<ReliabilityProfile> {
    match method {
        Method::Auto => design_profile(channel, n),
        Method::Bhattacharyya => bhattacharyya_profile(channel, n),
        Method::Gaussian => match channel {
            ChannelModel::BiAwgn { snr_db } => awgn_reliabilities(snr_db, n),
            other => invalid(format!("Gaussian approximation needs a BI-AWGN channel, not {other}")),
        },
        Method::MonteCarlo { trials, seed } => mc_reliabilities(channel, n, trials, seed),
    }
}

/// Writes the profile CSV to `csv_out` and a short summary naming the `top`
/// most reliable indices to `summary`.
pub fn cmd_construct<W: Write, S: Write>(
    channel: ChannelModel,
    n: u32,
    method: Method,
    top: usize,
    csv_out: W,
    mut summary: S,
) -> Result<ReliabilityProfile> {
    let profile = construct_profile(channel, n, method)?;
    profile.write_csv(csv_out)?;
    let top = top.min(profile.len());
    let best: Vec<String> = profile.order()[..top].iter().map(usize::to_string).collect();
    writeln!(summary, "{channel}, N = {}: top {top} indices {}", profile.len(), best.join(" "))?;
    Ok(profile)
}

/// Settings of the traced demo session.
#[derive(Debug, Clone)]
pub struct DemoSettings {
    pub plan: SessionPlan,
    pub channel: ChannelModel,
    pub options: SessionOptions,
    pub seed: u64,
    /// Keep sending stages after an acknowledgement.
    pub force_all_stages: bool,
}

/// Runs one seeded session and writes a stage-by-stage trace.
/// Returns the stage that acknowledged, if any.
pub fn cmd_session_demo<W: Write>(settings: &DemoSettings, mut out: W) -> Result<Option<usize>> {
    use rand::Rng;
    let plan = &settings.plan;
    let mut mrng = substream(settings.seed, &[0, 0, crate::rng::purpose::MESSAGE]);
    let payload: Vec<u8> = (0..plan.payload_len()).map(|_| mrng.gen_range(0..2)).collect();
    let message = plan.frame(&payload)?;
    let mut nrng = substream(settings.seed, &[0, 0, crate::rng::purpose::NOISE]);
    let mut decoders = SessionDecoders::new(&settings.options)?;
    let mut state = SessionState::new(plan);
    writeln!(
        out,
        "N = {}, K = {}, up to {} stages, design {}, channel {}",
        plan.block_length(),
        plan.peak_info_bits(),
        plan.max_stages(),
        plan.profile().design_channel(),
        settings.channel
    )?;
    let mut acked_at = None;
    for k in 1..=plan.max_stages() {
        let st = plan.plan_stage(k)?;
        writeln!(out, "stage {k}: {} bits, rate so far {}", st.count(), plan.cumulative_rate(k))?;
        for a in &st.assignments {
            let origin = if a.is_fresh(k) {
                "new".to_string()
            } else {
                format!("from stage {} index {}", a.source_stage, a.source_index)
            };
            writeln!(out, "  u{} -> index {} ({origin})", a.logical_bit + 1, a.dest_index)?;
        }
        let x = stage_codeword(plan, k, &message)?;
        state.received.push(settings.channel.llr(&settings.channel.transmit(&x, &mut nrng))?);
        if k < settings.options.attempt_from_stage {
            state.outcomes.push(None);
            continue;
        }
        let attempt = backward_decode_with(plan, &mut state, &settings.options, &mut decoders, Some(&message))?;
        state.outcomes.push(Some(attempt.acked));
        for m in (1..=k).rev() {
            writeln!(
                out,
                "  decode stage {m}: {} known from later stages, {} to decode",
                plan.frozen_by_side_information(m, k),
                plan.unresolved(m, k)
            )?;
        }
        match &attempt.failure {
            Some(reason) => writeln!(out, "  stage {} failed: {reason}", attempt.stage)?,
            None => writeln!(
                out,
                "  {} (list size {})",
                if attempt.acked { "ack" } else { "nack" },
                attempt.list_size
            )?,
        }
        if attempt.acked && acked_at.is_none() {
            acked_at = Some(k);
            if !settings.force_all_stages {
                break;
            }
        }
    }
    let logical = plan.logical_bits(state.current_stage());
    let correct = state.decoded[..logical]
        .iter()
        .zip(&message)
        .all(|(d, &m)| d.map(|x| x.0) == Some(m));
    match acked_at {
        Some(k) if correct => writeln!(out, "decoded at stage {k}")?,
        Some(k) => writeln!(out, "acknowledged at stage {k} with an undetected error")?,
        None => writeln!(out, "not decoded after {} stages", state.current_stage())?,
    }
    Ok(acked_at)
}

/// One quick self-check.
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

/// Fast sanity checks of every layer; prints one line per check.
pub fn selftest<W: Write>(mut out: W) -> Result<bool> {
    let checks = vec![
        Check {
            name: "transform involution (N <= 16)",
            passed: (1..=4u32).all(|n| {
                let len = 1usize << n;
                (0..1u32 << len).all(|w| {
                    let u: Vec<u8> = (0..len).map(|i| ((w >> i) & 1) as u8).collect();
                    polar_transform(&polar_transform(&u).unwrap()).unwrap() == u
                })
            }),
        },
        Check {
            name: "BEC(0.5) n=2 erasures",
            passed: crate::construction::bec_bit_channel_erasures(0.5, 2)? == vec![0.9375, 0.5625, 0.4375, 0.0625],
        },
        Check {
            name: "noiseless SC round trip",
            passed: {
                let p = awgn_reliabilities(1.0, 8)?;
                let spec = crate::construction::frozen_set_for_rate(&p, 100)?;
                let msg: Vec<u8> = (0..100).map(|i| (i * 7 % 3 == 0) as u8).collect();
                let x = encode(&msg, &spec)?;
                let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect();
                crate::decoder::sc_decode(&llr, &spec, None)?.message == msg
            },
        },
        Check {
            name: "four-stage plan sizes 12/6/4/3",
            passed: {
                let plan = SessionPlan::builder(12, 4).build(bhattacharyya_profile(ChannelModel::bec(0.5)?, 4)?)?;
                plan.stages().iter().map(|s| s.count()).collect::<Vec<_>>() == vec![12, 6, 4, 3]
            },
        },
        Check {
            name: "noiseless session acknowledges at stage 1",
            passed: {
                let plan = SessionPlan::builder(64, 3)
                    .crc(crate::decoder::CrcSpec::crc8())
                    .build(bhattacharyya_profile(ChannelModel::bec(0.5)?, 7)?)?;
                let msg = plan.frame(&vec![1; plan.payload_len()])?;
                let options = SessionOptions {
                    combining: Combining::Soft,
                    ack: AckPolicy::Crc,
                    ..Default::default()
                };
                let out =
                    crate::rateless::run_session(&plan, &ChannelModel::bec(0.0)?, &msg, &options, &mut substream(1, &[]))?;
                out.success && out.stages_used == 1
            },
        },
        Check {
            name: "BSC capacity inversion",
            passed: {
                let c = crate::channel::channel_for_capacity(crate::channel::Family::Bsc, 0.5)?;
                (c.parameter() - 0.110_027_864).abs() < 1e-8
            },
        },
    ];
    let mut ok = true;
    for c in &checks {
        writeln!(out, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name)?;
        ok &= c.passed;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construct_output() {
        let mut csv = Vec::new();
        let mut summary = Vec::new();
        cmd_construct(ChannelModel::bec(0.5).unwrap(), 2, Method::Auto, 1, &mut csv, &mut summary).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let metrics: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        let want = [0.9375, 0.5625, 0.4375, 0.0625];
        assert!(metrics.iter().zip(want).all(|(m, z)| (*m - (1.0 - z)).abs() < 1e-15));
        assert!(String::from_utf8(summary).unwrap().contains("top 1 indices 3"));
        let mut again = Vec::new();
        cmd_construct(ChannelModel::bec(0.5).unwrap(), 2, Method::Auto, 1, &mut again, std::io::sink()).unwrap();
        assert_eq!(again, text.into_bytes());
        let mut clean = Vec::new();
        cmd_construct(ChannelModel::bec(0.0).unwrap(), 4, Method::Auto, 4, &mut clean, std::io::sink()).unwrap();
        let clean = String::from_utf8(clean).unwrap();
        assert_eq!(clean.lines().count(), 17);
        assert!(clean.lines().skip(1).all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 1.0));
        assert!(construct_profile(ChannelModel::bec(0.5).unwrap(), 3, Method::Gaussian).is_err());
    }

    #[test]
    fn demo_traces() {
        let plan = SessionPlan::builder(12, 4)
            .build(bhattacharyya_profile(ChannelModel::bec(0.5).unwrap(), 4).unwrap())
            .unwrap();
        let settings = DemoSettings {
            plan,
            channel: ChannelModel::bec(0.0).unwrap(),
            options: SessionOptions {
                ack: AckPolicy::Genie,
                ..Default::default()
            },
            seed: 1,
            force_all_stages: false,
        };
        let mut out = Vec::new();
        assert_eq!(cmd_session_demo(&settings, &mut out).unwrap(), Some(1));
        let text = String::from_utf8(out).unwrap();
        assert!(text.trim_end().ends_with("decoded at stage 1"));

        let forced = DemoSettings {
            channel: ChannelModel::bec(1.0 - 0.75 / 4.0).unwrap(),
            force_all_stages: true,
            options: SessionOptions {
                ack: AckPolicy::Genie,
                attempt_from_stage: 1,
                ..Default::default()
            },
            ..settings
        };
        let mut out = Vec::new();
        cmd_session_demo(&forced, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let frozen: Vec<&str> = text
            .lines()
            .filter(|l| l.trim_start().starts_with("decode stage 1:"))
            .map(|l| l.split_whitespace().nth(3).unwrap())
            .collect();
        assert_eq!(frozen, vec!["0", "6", "8", "9"]);
        assert!(text.contains("u4 -> index"));
    }

    #[test]
    fn selftest_passes() {
        let mut out = Vec::new();
        assert!(selftest(&mut out).unwrap());
        assert!(!String::from_utf8(out).unwrap().contains("FAIL"));
    }
}
