//! Command-line front end. Exit codes: 0 success, 1 selftest failure, 2 usage
//! or input error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::commands::{cmd_construct, cmd_session_demo, selftest, DemoSettings, Method};
use super::config::{parse_grid, Design, SweepConfig, SweepMode};
use super::sweep::run_sweep;
use crate::channel::{ChannelModel, Family};
use crate::construction::design_profile;
use crate::decoder::{CrcSpec, DecoderKind};
use crate::error::{invalid, Error, Result};
use crate::llr::CheckNode;
use crate::rateless::{AckPolicy, Combining, Placement, SessionOptions, SessionPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "polar-rateless", version, about = "Rateless polar codes by incremental freezing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank the synthetic bit channels of a design channel.
    Construct(ConstructArgs),
    /// Frame error rate sweep from a TOML config plus overrides.
    FerSweep(SweepArgs),
    /// Trace a single seeded rateless session.
    SessionDemo(DemoArgs),
    /// Quick internal checks.
    Selftest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Auto,
    Ga,
    Bhattacharyya,
    Mc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CheckNodeArg {
    Exact,
    MinSum,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CombiningArg {
    Hard,
    Soft,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PlacementArg {
    Reliability,
    Successive,
}

impl From<PlacementArg> for Placement {
    fn from(a: PlacementArg) -> Self {
        match a {
            PlacementArg::Reliability => Placement::Reliability,
            PlacementArg::Successive => Placement::Successive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AckArg {
    Crc,
    Genie,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Rateless,
    Fixed,
}

impl From<CheckNodeArg> for CheckNode {
    fn from(a: CheckNodeArg) -> Self {
        match a {
            CheckNodeArg::Exact => CheckNode::Exact,
            CheckNodeArg::MinSum => CheckNode::MinSum,
        }
    }
}

impl From<CombiningArg> for Combining {
    fn from(a: CombiningArg) -> Self {
        match a {
            CombiningArg::Hard => Combining::Hard,
            CombiningArg::Soft => Combining::Soft,
        }
    }
}

impl From<AckArg> for AckPolicy {
    fn from(a: AckArg) -> Self {
        match a {
            AckArg::Crc => AckPolicy::Crc,
            AckArg::Genie => AckPolicy::Genie,
        }
    }
}

/// `sc` or `scl:<max list>`.
pub fn parse_decoder(s: &str) -> Result<DecoderKind> {
    match s.split_once(':') {
        None if s == "sc" => Ok(DecoderKind::Sc),
        Some(("scl", l)) => {
            let max_list: usize = l.parse().map_err(|_| Error::Parse(format!("bad list size {l:?}")))?;
            if max_list == 0 || !max_list.is_power_of_two() {
                return invalid(format!("list size must be a power of two, got {max_list}"));
            }
            Ok(DecoderKind::Scl { max_list })
        }
        _ => Err(Error::Parse(format!("decoder must be sc or scl:<L>, got {s:?}"))),
    }
}

fn parse_deltas(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad delta {t:?}"))))
        .collect()
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    /// Design channel, e.g. bec:0.5, bsc:0.11, biawgn:1.5 (SNR in dB).
    #[arg(long)]
    pub channel: String,
    /// Block length exponent, N = 2^n.
    #[arg(long)]
    pub n: u32,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Indices listed in the summary.
    #[arg(long, default_value_t = 8)]
    pub top: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// TOML config; flags below take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Block length N.
    #[arg(long = "block-length")]
    pub block_length: Option<usize>,
    /// Information bits K (peak, for rateless).
    #[arg(long = "info-bits")]
    pub info_bits: Option<usize>,
    #[arg(long = "max-stages")]
    pub max_stages: Option<usize>,
    #[arg(long = "extra-retransmit")]
    pub extra_retransmit: Option<usize>,
    /// Comma-separated rate decrements, one per stage after the first.
    #[arg(long = "delta-schedule", allow_hyphen_values = true)]
    pub delta_schedule: Option<String>,
    /// 0, 4, 8 or 16; 0 disables the CRC.
    #[arg(long = "crc-width")]
    pub crc_width: Option<u32>,
    #[arg(long)]
    pub family: Option<String>,
    /// Channel parameters, "a,b,c" or "start:stop:step".
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// auto, per-point or a channel descriptor.
    #[arg(long)]
    pub design: Option<String>,
    /// sc or scl:<L>.
    #[arg(long)]
    pub decoder: Option<String>,
    #[arg(long = "check-node", value_enum)]
    pub check_node: Option<CheckNodeArg>,
    #[arg(long, value_enum)]
    pub combining: Option<CombiningArg>,
    #[arg(long, value_enum)]
    pub placement: Option<PlacementArg>,
    #[arg(long, value_enum)]
    pub ack: Option<AckArg>,
    #[arg(long = "attempt-from-stage")]
    pub attempt_from_stage: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long = "stop-at-errors")]
    pub stop_at_errors: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent noise per grid point instead of shared seeds.
    #[arg(long = "unpaired-seeds")]
    pub unpaired_seeds: bool,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl SweepArgs {
    /// Merges the config file (if any) with the flags.
    pub fn to_config(&self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(p) => SweepConfig::from_toml(&std::fs::read_to_string(p)?)?,
            None => SweepConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Rateless => SweepMode::Rateless,
                ModeArg::Fixed => SweepMode::Fixed,
            };
        }
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { cfg.$field = v; })* };
        }
        set!(block_length, info_bits, max_stages, extra_retransmit, crc_width, attempt_from_stage, trials, stop_at_errors, seed, workers);
        if let Some(d) = &self.delta_schedule {
            cfg.delta_schedule = Some(parse_deltas(d)?);
        }
        if let Some(f) = &self.family {
            cfg.family = f.parse::<Family>()?;
        }
        if let Some(g) = &self.grid {
            cfg.grid = parse_grid(g)?;
        }
        if let Some(d) = &self.design {
            cfg.design = d.parse::<Design>()?;
        }
        if let Some(d) = &self.decoder {
            cfg.decoder = parse_decoder(d)?;
        }
        if let Some(c) = self.check_node {
            cfg.check_node = c.into();
        }
        if let Some(c) = self.combining {
            cfg.combining = c.into();
        }
        if let Some(p) = self.placement {
            cfg.placement = p.into();
        }
        if let Some(a) = self.ack {
            cfg.ack = a.into();
        }
        if self.unpaired_seeds {
            cfg.paired_seeds = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Peak information bits K.
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    /// Block length exponent, N = 2^n.
    #[arg(long, default_value_t = 4)]
    pub n: u32,
    #[arg(long = "max-stages", default_value_t = 4)]
    pub max_stages: usize,
    /// Design channel.
    #[arg(long, default_value = "bec:0.5")]
    pub design: String,
    /// Transmission channel.
    #[arg(long, default_value = "bec:0.3")]
    pub channel: String,
    /// sc or scl:<L>.
    #[arg(long, default_value = "sc")]
    pub decoder: String,
    #[arg(long, value_enum, default_value = "soft")]
    pub combining: CombiningArg,
    #[arg(long, value_enum, default_value = "reliability")]
    pub placement: PlacementArg,
    /// CRC width; 0 uses the genie acknowledgement.
    #[arg(long = "crc-width", default_value_t = 0)]
    pub crc_width: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Send every stage even after an acknowledgement.
    #[arg(long)]
    pub force: bool,
}

impl DemoArgs {
    pub fn to_settings(&self) -> Result<DemoSettings> {
        let design: ChannelModel = self.design.parse()?;
        let channel: ChannelModel = self.channel.parse()?;
        let mut builder = SessionPlan::builder(self.k, self.max_stages).placement(self.placement.into());
        let ack = if self.crc_width == 0 {
            AckPolicy::Genie
        } else {
            builder = builder.crc(CrcSpec::for_width(self.crc_width)?);
            AckPolicy::Crc
        };
        let plan = builder.build(design_profile(design, self.n)?)?;
        Ok(DemoSettings {
            plan,
            channel,
            options: SessionOptions {
                decoder: parse_decoder(&self.decoder)?,
                combining: self.combining.into(),
                ack,
                ..Default::default()
            },
            seed: self.seed,
            force_all_stages: self.force,
        })
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Construct(a) => {
            let channel: ChannelModel = a.channel.parse()?;
            let method = match a.method {
                MethodArg::Auto => Method::Auto,
                MethodArg::Ga => Method::Gaussian,
                MethodArg::Bhattacharyya => Method::Bhattacharyya,
                MethodArg::Mc => Method::MonteCarlo {
                    trials: a.trials,
                    seed: a.seed,
                },
            };
            let mut out = output(&a.output)?;
            cmd_construct(channel, a.n, method, a.top, &mut out, io::stderr())?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::FerSweep(a) => {
            let cfg = a.to_config()?;
            let mut out = output(&a.output)?;
            run_sweep(&cfg, &mut out)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::SessionDemo(a) => {
            cmd_session_demo(&a.to_settings()?, io::stdout().lock())?;
            Ok(EXIT_OK)
        }
        Command::Selftest => Ok(if selftest(io::stdout().lock())? { EXIT_OK } else { EXIT_SELFTEST }),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_SELFTEST,
                _ => EXIT_USAGE,
            }
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(main_with(["p", "bogus"]), EXIT_USAGE);
        assert_eq!(main_with(["p", "construct", "--channel", "bec:2", "--n", "3"]), EXIT_USAGE);
        assert_eq!(main_with(["p", "construct", "--channel", "foo", "--n", "3"]), EXIT_USAGE);
        assert_eq!(main_with(["p", "fer-sweep", "--decoder", "scl:3"]), EXIT_USAGE);
        assert_eq!(main_with(["p", "--help"]), EXIT_OK);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "block_length = 256\ninfo_bits = 128\ntrials = 50\ngrid = [1.0]\n").unwrap();
        let args = Cli::try_parse_from([
            "p",
            "fer-sweep",
            "--config",
            path.to_str().unwrap(),
            "--trials",
            "7",
            "--grid",
            "0:1:0.5",
            "--decoder",
            "scl:8",
        ])
        .unwrap();
        let Command::FerSweep(a) = args.command else { panic!() };
        let cfg = a.to_config().unwrap();
        assert_eq!((cfg.block_length, cfg.info_bits, cfg.trials), (256, 128, 7));
        assert_eq!(cfg.grid, vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.decoder, DecoderKind::Scl { max_list: 8 });
    }

    #[test]
    fn construct_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let code = main_with(["p", "construct", "--channel", "bec:0.5", "--n", "3", "--output", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().next(), Some("index,metric,rank"));
        assert_eq!(text.lines().count(), 9);
    }
}
