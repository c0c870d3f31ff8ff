use super::*;
use crate::construction::{awgn_reliabilities, bhattacharyya_profile, design_profile};
use crate::decoder::{DecoderKind, Priors, ScDecoder};
use crate::polar::{extract_message, CodeSpec};
use crate::rng::substream;
use rand::Rng;

fn bec(e: f64) -> ChannelModel {
    ChannelModel::bec(e).unwrap()
}

fn random_payload(plan: &SessionPlan, seed: u64) -> Vec<u8> {
    let mut rng = substream(seed, &[0]);
    (0..plan.payload_len()).map(|_| rng.gen_range(0..2)).collect()
}

#[test]
fn noiseless_session_acks_at_stage_one() {
    let profile = bhattacharyya_profile(bec(0.5), 8).unwrap();
    let plan = SessionPlan::builder(128, 4).crc(CrcSpec::crc8()).build(profile).unwrap();
    for seed in 0..5 {
        let msg = plan.frame(&random_payload(&plan, seed)).unwrap();
        let mut rng = substream(seed, &[1]);
        let out = run_session(&plan, &bec(0.0), &msg, &SessionOptions::default(), &mut rng).unwrap();
        assert!(out.success);
        assert_eq!(out.stages_used, 1);
        assert_eq!(out.effective_rate, Rate::new(1, 2));
    }
}

#[test]
fn weak_channel_needs_a_second_stage() {
    let profile = bhattacharyya_profile(bec(0.5), 10).unwrap();
    let plan = SessionPlan::builder(512, 2).crc(CrcSpec::crc16()).build(profile).unwrap();
    let mut stage2 = 0;
    let trials = 100;
    for seed in 0..trials {
        let msg = plan.frame(&random_payload(&plan, seed)).unwrap();
        let mut rng = substream(seed, &[1]);
        let out = run_session(&plan, &bec(0.55), &msg, &SessionOptions::default(), &mut rng).unwrap();
        assert_eq!(out.stages_used, 2, "seed {seed} decoded at stage 1");
        stage2 += usize::from(out.success);
        assert_eq!(out.acked, out.success);
    }
    assert!(stage2 >= 99, "{stage2}");
}

#[test]
fn side_information_equals_a_lower_rate_code() {
    // Revealing the retransmitted bits turns stage 1 into the rate K/k code
    // whose frozen values are those bits, on the same noise.
    let profile = awgn_reliabilities(0.0, 9).unwrap();
    let plan = SessionPlan::builder(256, 4).build(profile.clone()).unwrap();
    let ch = ChannelModel::biawgn(-1.0).unwrap();
    let mut dec = ScDecoder::default();
    for seed in 0..20u64 {
        let msg = plan.frame(&random_payload(&plan, seed)).unwrap();
        let x = stage_codeword(&plan, 1, &msg).unwrap();
        let llr = ch.llr(&ch.transmit(&x, &mut substream(seed, &[2]))).unwrap();
        let st1 = plan.plan_stage(1).unwrap();
        for k in 2..=4 {
            let keep = plan.unresolved(1, k);
            let mut priors = Priors::zeros(512);
            for a in &st1.assignments[keep..] {
                priors.set_hard(a.dest_index, msg[a.logical_bit]);
            }
            let with_priors = dec.decode(&llr, &st1.spec, Some(&priors)).unwrap();
            let reduced = CodeSpec::from_info(9, &profile.order()[..keep]).unwrap();
            let mut u = vec![0u8; 512];
            for a in &st1.assignments {
                u[a.dest_index] = msg[a.logical_bit];
            }
            let values: Vec<u8> = reduced.frozen_indices().iter().map(|&i| u[i]).collect();
            let reduced = reduced.with_frozen_values(&values).unwrap();
            let fixed = dec.decode(&llr, &reduced, None).unwrap();
            assert_eq!(with_priors.u_hat, fixed.u_hat);
            assert_eq!(extract_message(&with_priors.u_hat, &reduced).unwrap(), fixed.message);
        }
    }
}

#[test]
fn backward_decode_freezes_the_expected_counts() {
    let profile = bhattacharyya_profile(bec(0.5), 4).unwrap();
    let plan = SessionPlan::builder(12, 4).build(profile).unwrap();
    let msg: Vec<u8> = (0..12).map(|i| (i % 2) as u8).collect();
    let mut state = SessionState::new(&plan);
    for k in 1..=4 {
        let x = stage_codeword(&plan, k, &msg).unwrap();
        state.received.push(bec(0.0).llr(&bec(0.0).transmit(&x, &mut substream(0, &[k as u64]))).unwrap());
        let out = backward_decode(&plan, &mut state, &SessionOptions::default()).unwrap();
        assert_eq!(out, msg);
        let from_stage1 = state.decoded.iter().filter(|d| d.unwrap().1 == 1).count();
        assert_eq!(from_stage1, 12 / k);
    }
}

#[test]
fn conflicting_side_information_is_a_stage_failure() {
    let profile = bhattacharyya_profile(bec(0.5), 4).unwrap();
    let plan = SessionPlan::builder(12, 2).build(profile).unwrap();
    let msg = vec![0u8; 12];
    let mut state = SessionState::new(&plan);
    let clean = |x: &[u8]| bec(0.0).llr(&bec(0.0).transmit(x, &mut substream(0, &[]))).unwrap();
    state.received.push(clean(&stage_codeword(&plan, 1, &msg).unwrap()));
    let mut flipped = msg.clone();
    flipped[11] = 1;
    state.received.push(clean(&stage_codeword(&plan, 2, &flipped).unwrap()));
    match backward_decode(&plan, &mut state, &SessionOptions::default()) {
        Err(crate::Error::StageFailure { stage, .. }) => assert_eq!(stage, 1),
        other => panic!("expected a stage failure, got {other:?}"),
    }
}

#[test]
fn soft_combining_does_not_hurt() {
    let n = 8;
    let profile = awgn_reliabilities(0.0, n).unwrap();
    let ch = ChannelModel::biawgn(-4.5).unwrap();
    let hard = SessionOptions {
        attempt_from_stage: 2,
        ..Default::default()
    };
    let soft = SessionOptions {
        combining: Combining::Soft,
        ..hard
    };
    for placement in [Placement::Reliability, Placement::Successive] {
        let plan = SessionPlan::builder(128, 2)
            .crc(CrcSpec::crc8())
            .placement(placement)
            .build(profile.clone())
            .unwrap();
        let (mut h, mut s) = (0, 0);
        for seed in 0..400 {
            let msg = plan.frame(&random_payload(&plan, seed)).unwrap();
            h += usize::from(run_session(&plan, &ch, &msg, &hard, &mut substream(seed, &[1])).unwrap().success);
            s += usize::from(run_session(&plan, &ch, &msg, &soft, &mut substream(seed, &[1])).unwrap().success);
        }
        assert!(h < 350, "operating point too clean: {h}");
        match placement {
            Placement::Reliability => assert!(s + 8 >= h, "soft {s} vs hard {h}"),
            Placement::Successive => assert!(s > h, "joint soft {s} vs hard {h}"),
        }
    }
}

#[test]
fn list_decoding_retries_the_whole_pass() {
    let profile = awgn_reliabilities(0.0, 8).unwrap();
    let plan = SessionPlan::builder(128, 2).crc(CrcSpec::crc8()).build(profile).unwrap();
    let ch = ChannelModel::biawgn(-4.5).unwrap();
    let sc = SessionOptions {
        attempt_from_stage: 2,
        ..Default::default()
    };
    let scl = SessionOptions {
        decoder: DecoderKind::Scl { max_list: 8 },
        ..sc
    };
    let (mut a, mut b, mut grew) = (0, 0, false);
    for seed in 0..200 {
        let msg = plan.frame(&random_payload(&plan, seed)).unwrap();
        a += usize::from(run_session(&plan, &ch, &msg, &sc, &mut substream(seed, &[1])).unwrap().success);
        let out = run_session(&plan, &ch, &msg, &scl, &mut substream(seed, &[1])).unwrap();
        b += usize::from(out.success);
        grew |= out.attempts.iter().any(|t| t.list_size > 1 && t.acked);
    }
    assert!(grew);
    assert!(b >= a, "list {b} vs sc {a}");
}

#[test]
fn delta_mode_session() {
    let profile = bhattacharyya_profile(bec(0.3), 8).unwrap();
    let plan = SessionPlan::builder(160, 2)
        .delta_schedule(vec![0.125])
        .crc(CrcSpec::crc8())
        .build(profile)
        .unwrap();
    assert_eq!(plan.cumulative_rate(2).as_f64(), 160.0 / 256.0 - 0.125);
    let opts = SessionOptions {
        attempt_from_stage: 2,
        ..Default::default()
    };
    let msg = plan.frame(&random_payload(&plan, 3)).unwrap();
    let out = run_session(&plan, &bec(0.0), &msg, &opts, &mut substream(3, &[1])).unwrap();
    assert!(out.success);
    assert_eq!(out.stages_used, 2);
    assert_eq!(out.state.outcomes, vec![None, Some(true)]);
}

#[test]
fn genie_acknowledgement() {
    let profile = bhattacharyya_profile(bec(0.5), 6).unwrap();
    let plan = SessionPlan::builder(32, 3).build(profile).unwrap();
    let opts = SessionOptions {
        ack: AckPolicy::Genie,
        ..Default::default()
    };
    let msg: Vec<u8> = (0..32).map(|i| (i % 3 == 0) as u8).collect();
    let out = run_session(&plan, &bec(0.6), &msg, &opts, &mut substream(1, &[])).unwrap();
    assert_eq!(out.acked, out.success);
    let mut state = SessionState::new(&plan);
    state.received.push(vec![0.0; 64]);
    assert!(backward_decode_with(&plan, &mut state, &opts, &mut SessionDecoders::new(&opts).unwrap(), None).is_err());
}

#[test]
fn plan_config_round_trip() {
    let cfg = PlanConfig {
        block_length: 64,
        peak_rate: 0.5,
        max_stages: 3,
        extra_retransmit: 2,
        delta_schedule: None,
        design_channel: "biawgn:1.5".into(),
        profile: None,
        crc_width: Some(8),
        placement: Placement::Successive,
    };
    let text = cfg.to_toml().unwrap();
    let back = PlanConfig::from_toml(&text).unwrap();
    assert_eq!(back, cfg);
    let plan = back.build().unwrap();
    assert_eq!(plan.to_config(), cfg);
    assert_eq!(plan.peak_info_bits(), 32);
    let bad = PlanConfig {
        peak_rate: 0.3,
        ..cfg.clone()
    };
    assert!(bad.build().is_err());
    assert!(PlanConfig::from_toml("block_length = 64\nbogus = 1").is_err());
}



#[test]
fn successive_placement_keeps_sets_and_orders_shared_bits() {
    let profile = bhattacharyya_profile(bec(0.5), 4).unwrap();
    let by_rank = SessionPlan::builder(12, 4).build(profile.clone()).unwrap();
    let by_index = SessionPlan::builder(12, 4)
        .placement(Placement::Successive)
        .build(profile)
        .unwrap();
    for (a, b) in by_rank.stages().iter().zip(by_index.stages()) {
        let sets = |st: &StagePlan| {
            let mut bits: Vec<_> = st.assignments.iter().map(|x| x.logical_bit).collect();
            let mut pos: Vec<_> = st.assignments.iter().map(|x| x.dest_index).collect();
            bits.sort_unstable();
            pos.sort_unstable();
            (bits, pos)
        };
        assert_eq!(sets(a).1, sets(b).1);
        assert_eq!(a.spec, b.spec);
        if a.stage <= 2 {
            assert_eq!(sets(a).0, sets(b).0);
        }
    }
    // stage 2 in index order: u11 u10 u9 u12 u8 u7 on 7 11 12 13 14 15
    let mut st2: Vec<_> = by_index.stages()[1].assignments.iter().map(|a| (a.dest_index, a.logical_bit + 1)).collect();
    st2.sort_unstable();
    assert_eq!(st2, vec![(7, 11), (11, 10), (12, 9), (13, 12), (14, 8), (15, 7)]);
    for k in 1..=4 {
        assert_eq!(by_index.frozen_by_side_information(1, k), by_rank.frozen_by_side_information(1, k));
    }

    // every pair of bits shared by two stages keeps its relative order
    let n = 9;
    let profile = design_profile(ChannelModel::biawgn(-1.0).unwrap(), n).unwrap();
    for plan in [
        SessionPlan::builder(256, 4).extra_retransmit(5).placement(Placement::Successive).build(profile.clone()),
        SessionPlan::builder(256, 3)
            .delta_schedule(vec![0.2, 0.1])
            .placement(Placement::Successive)
            .build(profile.clone()),
    ] {
        let plan = plan.unwrap();
        let pos: Vec<std::collections::HashMap<usize, usize>> = plan
            .stages()
            .iter()
            .map(|st| st.assignments.iter().map(|a| (a.logical_bit, a.dest_index)).collect())
            .collect();
        for p in 0..pos.len() {
            for q in p + 1..pos.len() {
                let mut shared: Vec<_> = pos[q].keys().filter(|b| pos[p].contains_key(b)).copied().collect();
                shared.sort_by_key(|b| pos[p][b]);
                assert!(shared.windows(2).all(|w| pos[q][&w[0]] < pos[q][&w[1]]), "stages {p} {q}");
            }
        }
        for st in plan.stages() {
            for a in &st.assignments {
                if !a.is_fresh(st.stage) {
                    let src = &plan.stages()[a.source_stage - 1];
                    assert!(src.assignments.iter().any(|x| x.logical_bit == a.logical_bit && x.dest_index == a.source_index));
                }
            }
        }
    }
}
