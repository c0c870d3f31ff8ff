//! A small FER sweep configured from TOML, with CSV on stdout.

use polar_rateless::harness::{crossing, run_sweep, SweepConfig};

const CONFIG: &str = r#"
mode = "rateless"
block_length = 256
info_bits = 128
max_stages = 2
crc_width = 8
family = "biawgn"
grid = [-5.0, -4.5, -4.0, -3.5]
trials = 2000
stop_at_errors = 50
combining = "soft"
"#;

fn main() -> polar_rateless::Result<()> {
    let cfg = SweepConfig::from_toml(CONFIG)?;
    let points = run_sweep(&cfg, std::io::stdout().lock())?;
    let stage2: Vec<(f64, f64)> = cfg.grid.iter().zip(&points).map(|(&g, p)| (g, p.records[1].fer)).collect();
    match crossing(&stage2, 0.05) {
        Some(x) => eprintln!("stage 2 reaches FER 0.05 at {x:.2} dB"),
        None => eprintln!("stage 2 never reaches FER 0.05 on this grid"),
    }
    Ok(())
}
