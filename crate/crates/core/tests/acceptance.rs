//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. `POLAR_ACCEPTANCE=1,3` limits the run to the listed criteria
//! (criterion 7 also needs 4 and 5).

use std::time::Instant;

use polar_rateless::channel::{ChannelModel, Family};
use polar_rateless::construction::{
    awgn_reliabilities, bec_bit_channel_erasures, bhattacharyya_profile, frozen_set_for_rate, mc_error_counts,
};
use polar_rateless::decoder::{DecoderKind, ScDecoder, SclDecoder};
use polar_rateless::harness::{crossing, run_descent, run_point, run_sweep, SweepConfig, SweepMode};
use polar_rateless::llr::CheckNode;
use polar_rateless::polar::{encode, extract_message, polar_transform};
use polar_rateless::rateless::{Combining, SessionPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_PLAN: &str = include_str!("data/plan_bec16_k12.csv");
const TARGET_FER: f64 = 1e-2;

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut fails = Vec::new();

    for n in 1..=4u32 {
        let len = 1usize << n;
        let ok = (0u32..1 << len).all(|w| {
            let u: Vec<u8> = (0..len).map(|i| ((w >> i) & 1) as u8).collect();
            polar_transform(&polar_transform(&u).unwrap()).unwrap() == u
        });
        if !ok {
            fails.push(format!("involution N={len}"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let clean = ChannelModel::bec(0.0).unwrap();
    let mut sc = ScDecoder::default();
    for n in [4u32, 8, 10] {
        let len = 1usize << n;
        let spec = frozen_set_for_rate(&awgn_reliabilities(0.0, n).unwrap(), len / 2).unwrap();
        let ok = (0..1000).all(|_| {
            let msg: Vec<u8> = (0..len / 2).map(|_| rng.gen_range(0..2)).collect();
            let x = encode(&msg, &spec).unwrap();
            let llr = clean.llr(&clean.transmit(&x, &mut rng)).unwrap();
            sc.decode(&llr, &spec, None).unwrap().message == msg
        });
        if !ok {
            fails.push(format!("round trip N={len}"));
        }
    }

    let plan = SessionPlan::builder(12, 4)
        .build(bhattacharyya_profile(ChannelModel::bec(0.5).unwrap(), 4).unwrap())
        .unwrap();
    let mut csv = Vec::new();
    plan.write_csv(4, &mut csv).unwrap();
    if csv != GOLDEN_PLAN.as_bytes() {
        fails.push("golden plan".into());
    }
    let sets: Vec<Vec<usize>> = plan.stages()[1..]
        .iter()
        .map(|st| {
            let mut v: Vec<usize> = st.assignments.iter().map(|a| a.logical_bit + 1).collect();
            v.sort_unstable();
            v
        })
        .collect();
    if sets != [vec![7, 8, 9, 10, 11, 12], vec![5, 6, 11, 12], vec![4, 10, 12]] {
        fails.push(format!("stage sets {sets:?}"));
    }
    for k in 1..=3 {
        if plan.stages()[k].count() != 12 / (k + 1) {
            fails.push(format!("stage {} size", k + 1));
        }
    }
    for k in 1..=4 {
        for m in 1..=k {
            if plan.frozen_by_side_information(m, k) != 12 / m - 12 / k || plan.unresolved(m, k) != 12 / k {
                fails.push(format!("freeze count (m={m}, k={k})"));
            }
        }
    }

    let secs = started.elapsed().as_secs_f64();
    if secs >= 10.0 {
        fails.push(format!("took {secs:.1} s"));
    }
    verdict(fails.is_empty(), format!("exactness suite in {secs:.1} s {}", fails.join("; ")))
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let trials = 100_000u64;
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for eps in [0.3, 0.5] {
        // independent recursion
        let mut z = vec![eps];
        for _ in 0..6 {
            z = z.iter().flat_map(|&x| [2.0 * x - x * x, x * x]).collect();
        }
        let lib = bec_bit_channel_erasures(eps, 6).unwrap();
        if lib.iter().zip(&z).any(|(a, b)| (a - b).abs() > 1e-15) {
            fails.push(format!("recursion at {eps}"));
        }
        let conserved: f64 = lib.iter().map(|zi| 1.0 - zi).sum();
        if (conserved - 64.0 * (1.0 - eps)).abs() > 1e-12 {
            fails.push(format!("conservation at {eps}: {conserved}"));
        }
        // an erased genie bit is decided as 0, so it errs half the time
        let counts = mc_error_counts(ChannelModel::bec(eps).unwrap(), 6, trials, 5).unwrap();
        for (i, (&c, &zi)) in counts.iter().zip(&z).enumerate() {
            let p = zi / 2.0;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let dev = (c as f64 / trials as f64 - p).abs();
            if sigma == 0.0 {
                if c != 0 {
                    fails.push(format!("index {i} at {eps}"));
                }
            } else {
                worst = worst.max(dev / sigma);
                if dev > 4.0 * sigma {
                    fails.push(format!("index {i} at {eps}: {:.1} sigma", dev / sigma));
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 60.0 {
        fails.push(format!("took {secs:.1} s"));
    }
    verdict(
        fails.is_empty(),
        format!("BEC recursion vs Monte Carlo, worst {worst:.2} sigma, {secs:.1} s {}", fails.join("; ")),
    )
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let spec = frozen_set_for_rate(&awgn_reliabilities(0.0, 3).unwrap(), 4).unwrap();
    let channel = ChannelModel::biawgn(0.0).unwrap();
    let mut dec = SclDecoder::new(CheckNode::MinSum, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut compared, mut mismatches) = (0, 0);
    for _ in 0..10_000 {
        let msg: Vec<u8> = (0..4).map(|_| rng.gen_range(0..2)).collect();
        let llr = channel.llr(&channel.transmit(&encode(&msg, &spec).unwrap(), &mut rng)).unwrap();
        // exhaustive ML: least total |LLR| over disagreeing positions
        let mut scored: Vec<(f64, Vec<u8>)> = (0..16u8)
            .map(|w| {
                let m: Vec<u8> = (0..4).map(|i| (w >> i) & 1).collect();
                let x = encode(&m, &spec).unwrap();
                let cost = x
                    .iter()
                    .zip(&llr)
                    .filter(|&(&b, &l)| (l < 0.0) != (b == 1))
                    .map(|(_, l)| l.abs())
                    .sum();
                (cost, m)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        if scored[1].0 - scored[0].0 < 1e-9 {
            continue;
        }
        compared += 1;
        let best = &dec.list_decode(&llr, &spec, 16, None).unwrap()[0];
        if extract_message(&best.u_hat, &spec).unwrap() != scored[0].1 {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && compared > 9000 && secs < 60.0,
        format!("list 16 vs ML on {compared} inputs with a unique optimum: {mismatches} mismatches, {secs:.1} s"),
    )
}

fn bec_config(workers: usize) -> SweepConfig {
    bec_config_with_margin(workers, 0.08)
}

fn bec_config_with_margin(workers: usize, margin: f64) -> SweepConfig {
    let r = 0.5;
    SweepConfig {
        mode: SweepMode::Rateless,
        block_length: 1024,
        info_bits: 512,
        max_stages: 4,
        crc_width: 16,
        family: Family::Bec,
        grid: (1..=4).map(|k| 1.0 - (r / k as f64 + margin)).collect(),
        trials: 500,
        stop_at_errors: 501,
        seed: 4,
        workers,
        ..Default::default()
    }
}

fn criterion_4(csv: &mut Vec<u8>) -> Outcome {
    let started = Instant::now();
    let cfg = bec_config(1);
    let points = run_sweep(&cfg, &mut *csv).unwrap();
    let success: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.records.iter().map(|r| 1.0 - r.fer).collect())
        .collect();
    let mut fails = Vec::new();
    for k in 1..=4 {
        let s = success[k - 1][k - 1];
        if s < 0.95 {
            fails.push(format!("stage {k} at erasure {:.4}: {s:.3}", cfg.grid[k - 1]));
        }
    }
    for (c, row) in success.iter().enumerate() {
        if row.windows(2).any(|w| w[1] < w[0]) {
            fails.push(format!("not monotone in stages at point {c}"));
        }
    }
    for k in 0..4 {
        if success.windows(2).any(|w| w[1][k] > w[0][k]) {
            fails.push(format!("not monotone in channel at stage {}", k + 1));
        }
    }
    let diag: Vec<String> = (0..4).map(|k| format!("{:.3}", success[k][k])).collect();
    let wide = run_sweep(&bec_config_with_margin(1, 0.16), std::io::sink()).unwrap();
    let wide: Vec<String> = (0..4)
        .map(|k| format!("{:.3}", 1.0 - wide[k].records[k].fer))
        .collect();
    println!("note: the same sessions with margin 0.16 succeed by stage k at {}", wide.join(" "));
    let secs = started.elapsed().as_secs_f64();
    verdict(
        fails.is_empty(),
        format!("BEC success by stage k at capacity R/k+0.08: {} ({secs:.0} s) {}", diag.join(" "), fails.join("; ")),
    )
}

fn awgn_rateless(block_length: usize, workers: usize) -> SweepConfig {
    SweepConfig {
        mode: SweepMode::Rateless,
        block_length,
        info_bits: block_length / 2,
        max_stages: 2,
        crc_width: 16,
        family: Family::BiAwgn,
        attempt_from_stage: 2,
        trials: 20_000,
        stop_at_errors: 100,
        seed: 5,
        workers,
        ..Default::default()
    }
}

fn awgn_fixed(block_length: usize, info_bits: usize, workers: usize) -> SweepConfig {
    SweepConfig {
        mode: SweepMode::Fixed,
        block_length,
        info_bits,
        max_stages: 1,
        attempt_from_stage: 1,
        ..awgn_rateless(block_length, workers)
    }
}

const START_DB: f64 = -5.5;

/// Required Es/N0 for FER 1e-2 along a 0.25 dB descent, with its CSV.
fn required_snr(cfg: &SweepConfig) -> (Option<f64>, Vec<u8>, Vec<(f64, f64)>) {
    let mut csv = Vec::new();
    let pts = run_descent(cfg, START_DB, 0.25, TARGET_FER, 24, &mut csv).unwrap();
    let curve: Vec<(f64, f64)> = pts.iter().map(|(p, r)| (*p, r.records.last().unwrap().fer)).collect();
    (crossing(&curve, TARGET_FER), csv, curve)
}

struct Curves {
    configs: Vec<SweepConfig>,
    csvs: Vec<Vec<u8>>,
}

fn fmt_db(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.2}"))
}

fn criterion_5(out: &mut Option<Curves>) -> Outcome {
    let started = Instant::now();
    let hard = awgn_rateless(2048, 1);
    let (x_hard, csv_hard, curve_hard) = required_snr(&hard);

    // tune the extra bits on paired seeds at the last hard point above target
    let tune_at = curve_hard
        .iter()
        .rev()
        .find(|&&(_, f)| f >= TARGET_FER)
        .map_or(START_DB, |&(p, _)| p);
    let mut best = (u64::MAX, 0);
    let mut tuning = Vec::new();
    for delta in (0..=32).step_by(4) {
        let cfg = SweepConfig {
            combining: Combining::Soft,
            extra_retransmit: delta,
            trials: 4000,
            stop_at_errors: 4001,
            ..hard.clone()
        };
        let errors = run_point(&cfg, 0, tune_at).unwrap().records.last().unwrap().errors;
        tuning.push(format!("{delta}:{errors}"));
        if errors < best.0 {
            best = (errors, delta);
        }
    }
    let soft = SweepConfig {
        combining: Combining::Soft,
        extra_retransmit: best.1,
        ..hard.clone()
    };
    let (x_soft, csv_soft, _) = required_snr(&soft);
    let short = awgn_fixed(2048, 512, 1);
    let (x_short, csv_short, _) = required_snr(&short);
    let long = awgn_fixed(4096, 1024, 1);
    let (x_long, csv_long, _) = required_snr(&long);

    let mut fails = Vec::new();
    match (x_hard, x_soft, x_short, x_long) {
        (Some(h), Some(s), Some(f2), Some(f4)) => {
            if s >= h {
                fails.push("(a) tuned soft does not improve on hard".to_string());
            }
            if (s - f2).abs() > 0.3 {
                fails.push(format!("(b) {:.2} dB from the (2048,512) code", s - f2));
            }
            if !(0.1..=0.6).contains(&(s - f4)) {
                fails.push(format!("(c) gap {:.2} dB to the (4096,1024) code", s - f4));
            }
        }
        _ => fails.push("a curve never reached the target".to_string()),
    }
    *out = Some(Curves {
        configs: vec![hard, soft, short, long],
        csvs: vec![csv_hard, csv_soft, csv_short, csv_long],
    });
    let secs = started.elapsed().as_secs_f64();
    verdict(
        fails.is_empty(),
        format!(
            "Es/N0 at FER 1e-2: hard {} / soft delta={} {} / (2048,512) {} / (4096,1024) {} dB; tuning at {tune_at} dB {} ({secs:.0} s) {}",
            fmt_db(x_hard),
            best.1,
            fmt_db(x_soft),
            fmt_db(x_short),
            fmt_db(x_long),
            tuning.join(" "),
            fails.join("; ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    let sc = SweepConfig {
        combining: Combining::Soft,
        ..awgn_rateless(1024, 1)
    };
    let list = SweepConfig {
        decoder: DecoderKind::Scl { max_list: 32 },
        ..sc.clone()
    };
    let (x_sc, _, _) = required_snr(&sc);
    let (x_list, _, _) = required_snr(&list);
    let secs = started.elapsed().as_secs_f64();
    let passed = matches!((x_sc, x_list), (Some(a), Some(b)) if b < a);
    verdict(
        passed,
        format!(
            "N=1024 peak, Es/N0 at FER 1e-2: SC {} dB, adaptive list 32 + CRC {} dB ({secs:.0} s)",
            fmt_db(x_sc),
            fmt_db(x_list)
        ),
    )
}

fn criterion_7(bec_csv: &[u8], curves: &Curves) -> Outcome {
    let started = Instant::now();
    let mut fails = Vec::new();
    for workers in [1, 8] {
        let mut again = Vec::new();
        run_sweep(&bec_config(workers), &mut again).unwrap();
        if again != bec_csv {
            fails.push(format!("BEC sweep with {workers} workers"));
        }
    }
    let names = ["hard", "soft", "(2048,512)", "(4096,1024)"];
    for ((cfg, csv), name) in curves.configs.iter().zip(&curves.csvs).zip(names) {
        let cfg = SweepConfig {
            workers: 8,
            ..cfg.clone()
        };
        let (_, again, _) = required_snr(&cfg);
        if &again != csv {
            fails.push(format!("{name} curve with 8 workers"));
        }
    }
    let (_, again, _) = required_snr(&curves.configs[0]);
    if again != curves.csvs[0] {
        fails.push("repeat of the hard curve".into());
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        fails.is_empty(),
        format!("CSV byte equality across runs and 1 vs 8 workers ({secs:.0} s) {}", fails.join("; ")),
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("POLAR_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |c: u32| only.as_ref().map_or(true, |o| o.contains(&c));
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |c: u32, o: Outcome| {
        println!("criterion {c}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail.trim_end());
        results.push((c, o));
    };
    if wanted(1) {
        report(1, criterion_1());
    }
    if wanted(2) {
        report(2, criterion_2());
    }
    if wanted(3) {
        report(3, criterion_3());
    }
    let mut bec_csv = Vec::new();
    if wanted(4) || wanted(7) {
        report(4, criterion_4(&mut bec_csv));
    }
    let mut curves = None;
    if wanted(5) || wanted(7) {
        report(5, criterion_5(&mut curves));
    }
    if wanted(6) {
        report(6, criterion_6());
    }
    if wanted(7) {
        report(7, criterion_7(&bec_csv, curves.as_ref().unwrap()));
    }
    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.passed).map(|(c, _)| *c).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
