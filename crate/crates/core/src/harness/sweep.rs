//! Deterministic Monte Carlo FER sweeps.
//!
//! Trial `t` at grid point `g` draws its message and noise from substreams
//! keyed by `(seed, g, t)` (or `(seed, 0, t)` with paired seeds), trials run
//! in parallel batches, and the stopping rule is applied in trial order, so
//! the records do not depend on the worker count.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{ChannelModel, Family};
use crate::error::{invalid, Result};
use crate::rateless::{run_session_with, SessionDecoders, SessionPlan};
use crate::rng::{purpose, substream};

use super::config::SweepConfig;

/// Frame error statistics of one stage at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct FerRecord {
    pub channel: ChannelModel,
    pub stage: usize,
    pub trials: u64,
    pub errors: u64,
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Cumulative rate after `stage` stages.
    pub effective_rate: f64,
    /// Es/N0 and Eb/N0 in dB for BI-AWGN points.
    pub es_n0_db: Option<f64>,
    pub eb_n0_db: Option<f64>,
}

pub const CSV_HEADER: [&str; 12] = [
    "family",
    "parameter",
    "stage",
    "trials",
    "errors",
    "fer",
    "ci_low",
    "ci_high",
    "effective_rate",
    "es_n0_db",
    "eb_n0_db",
    "mean_stages",
];

impl FerRecord {
    fn fields(&self, mean_stages: f64) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        vec![
            self.channel.family().to_string(),
            self.channel.parameter().to_string(),
            self.stage.to_string(),
            self.trials.to_string(),
            self.errors.to_string(),
            self.fer.to_string(),
            self.ci_low.to_string(),
            self.ci_high.to_string(),
            self.effective_rate.to_string(),
            opt(self.es_n0_db),
            opt(self.eb_n0_db),
            mean_stages.to_string(),
        ]
    }
}

/// Result of one grid point: a record per evaluated stage plus the mean
/// number of stages sessions used.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub records: Vec<FerRecord>,
    pub mean_stages: f64,
}

/// Wilson score interval at 95 % confidence.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Per-trial result: first stage by which the session succeeded
/// (`None` for a failure) and the number of stages used.
type TrialResult = (Option<usize>, usize);

fn run_trial(
    cfg: &SweepConfig,
    plan: &SessionPlan,
    channel: &ChannelModel,
    key: u64,
    trial: u64,
    decoders: &mut SessionDecoders,
) -> Result<TrialResult> {
    let mut mrng = substream(cfg.seed, &[key, trial, purpose::MESSAGE]);
    let payload: Vec<u8> = (0..plan.payload_len()).map(|_| mrng.gen_range(0..2)).collect();
    let message = plan.frame(&payload)?;
    let mut nrng = substream(cfg.seed, &[key, trial, purpose::NOISE]);
    let out = run_session_with(plan, channel, &message, &cfg.session_options(), decoders, &mut nrng)?;
    Ok((out.success.then_some(out.stages_used), out.stages_used))
}

/// Simulates grid point `index` at channel parameter `parameter`.
pub fn run_point(cfg: &SweepConfig, index: usize, parameter: f64) -> Result<PointResult> {
    cfg.validate()?;
    let channel = cfg.family.with_parameter(parameter)?;
    let plan = cfg.plan(parameter)?;
    let key = if cfg.paired_seeds { 0 } else { index as u64 };
    let options = cfg.session_options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    let stages = cfg.stages();
    let workers = pool.current_num_threads() as u64;
    let wave = cfg.batch * workers.max(1) * 4;

    let mut results: Vec<TrialResult> = Vec::new();
    let mut final_errors = 0u64;
    let mut done = 0u64;
    'outer: while done < cfg.trials {
        let end = (done + wave).min(cfg.trials);
        let batches: Vec<(u64, u64)> = (done..end)
            .step_by(cfg.batch as usize)
            .map(|s| (s, (s + cfg.batch).min(end)))
            .collect();
        let chunk: Vec<Vec<TrialResult>> = pool.install(|| {
            batches
                .par_iter()
                .map(|&(s, e)| -> Result<Vec<TrialResult>> {
                    let mut decoders = SessionDecoders::new(&options)?;
                    (s..e)
                        .map(|t| run_trial(cfg, &plan, &channel, key, t, &mut decoders))
                        .collect()
                })
                .collect::<Result<_>>()
        })?;
        for r in chunk.into_iter().flatten() {
            results.push(r);
            if r.0.is_none() {
                final_errors += 1;
                if final_errors >= cfg.stop_at_errors.max(1) {
                    break 'outer;
                }
            }
        }
        done = end;
    }

    let trials = results.len() as u64;
    let first = options.attempt_from_stage;
    let mut records = Vec::new();
    for stage in first..=stages {
        let errors = results
            .iter()
            .filter(|(ok, _)| !matches!(ok, Some(s) if *s <= stage))
            .count() as u64;
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        let rate = plan.cumulative_rate(stage).as_f64();
        let (es, eb) = match channel {
            ChannelModel::BiAwgn { snr_db } => (Some(snr_db), Some(snr_db - 10.0 * rate.log10())),
            _ => (None, None),
        };
        records.push(FerRecord {
            channel,
            stage,
            trials,
            errors,
            fer: errors as f64 / trials as f64,
            ci_low,
            ci_high,
            effective_rate: rate,
            es_n0_db: es,
            eb_n0_db: eb,
        });
    }
    let mean_stages = results.iter().map(|r| r.1 as f64).sum::<f64>() / trials as f64;
    Ok(PointResult { records, mean_stages })
}

/// Runs every grid point in order, writing CSV rows to `out` as each point
/// completes (so an interrupted run keeps what it finished).
pub fn run_sweep<W: Write>(cfg: &SweepConfig, out: W) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    w.flush()?;
    let mut all = Vec::with_capacity(cfg.grid.len());
    for (i, &p) in cfg.grid.iter().enumerate() {
        all.push(run_and_write(cfg, i, p, &mut w)?);
    }
    Ok(all)
}

fn run_and_write<W: Write>(cfg: &SweepConfig, index: usize, p: f64, w: &mut csv::Writer<W>) -> Result<PointResult> {
    let started = std::time::Instant::now();
    let point = run_point(cfg, index, p)?;
    for r in &point.records {
        w.write_record(r.fields(point.mean_stages))?;
    }
    w.flush()?;
    let last = point.records.last().expect("at least one stage");
    eprintln!(
        "{}:{} fer {} ({} / {}) in {:.1} s",
        cfg.family,
        p,
        last.fer,
        last.errors,
        last.trials,
        started.elapsed().as_secs_f64()
    );
    Ok(point)
}

/// Walks the channel parameter from `start` in steps of `step` (signed,
/// towards better channels) until the final-stage FER drops below
/// `target`, or `max_points` points have run. `cfg.grid` is ignored; the
/// visited parameters come back with their results.
pub fn run_descent<W: Write>(
    cfg: &SweepConfig,
    start: f64,
    step: f64,
    target: f64,
    max_points: usize,
    out: W,
) -> Result<Vec<(f64, PointResult)>> {
    if !(step.is_finite() && step != 0.0) {
        return invalid("descent step must be finite and non-zero");
    }
    cfg.validate()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    w.flush()?;
    let mut all = Vec::new();
    for i in 0..max_points {
        // rounded so the CSV shows 0.25-dB steps exactly
        let p = ((start + step * i as f64) * 1e9).round() / 1e9;
        let point = run_and_write(cfg, i, p, &mut w)?;
        let fer = point.records.last().expect("at least one stage").fer;
        all.push((p, point));
        if fer < target {
            break;
        }
    }
    Ok(all)
}

/// Sweep CSV as a string.
pub fn sweep_to_string(cfg: &SweepConfig) -> Result<String> {
    let mut buf = Vec::new();
    run_sweep(cfg, &mut buf)?;
    String::from_utf8(buf).map_err(|e| crate::Error::Io(e.to_string()))
}

/// Channel parameter where a FER curve crosses `target`, by linear
/// interpolation of log10 FER between the bracketing points. `points` are
/// `(parameter, fer)` pairs along improving channel quality.
pub fn crossing(points: &[(f64, f64)], target: f64) -> Option<f64> {
    if !(target > 0.0) {
        return None;
    }
    let t = target.log10();
    for w in points.windows(2) {
        let ((p0, f0), (p1, f1)) = (w[0], w[1]);
        if f0 >= target && f1 < target {
            if f1 == 0.0 {
                return Some(p1);
            }
            let (l0, l1) = (f0.log10(), f1.log10());
            return Some(p0 + (p1 - p0) * (l0 - t) / (l0 - l1));
        }
    }
    None
}

/// Family and grid ordered from worst to best channel.
pub fn improving(family: Family, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return invalid("empty grid");
    }
    let mut g = grid.to_vec();
    match family {
        Family::BiAwgn => g.sort_by(f64::total_cmp),
        _ => g.sort_by(|a, b| b.total_cmp(a)),
    }
    Ok(g)
}
