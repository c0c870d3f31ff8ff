//! Prints the incremental-freezing plan for a 16-bit code carrying 12 bits
//! over four stages, and the per-stage freeze counts of backward decoding.

use polar_rateless::channel::ChannelModel;
use polar_rateless::construction::bhattacharyya_profile;
use polar_rateless::rateless::SessionPlan;

fn main() -> polar_rateless::Result<()> {
    let profile = bhattacharyya_profile(ChannelModel::bec(0.5)?, 4)?;
    let plan = SessionPlan::builder(12, 4).build(profile)?;
    plan.write_csv(4, std::io::stdout().lock())?;
    println!();
    for k in 1..=4 {
        let counts: Vec<String> = (1..=k).map(|m| plan.frozen_by_side_information(m, k).to_string()).collect();
        println!("after stage {k} (rate {}): known bits per stage {}", plan.cumulative_rate(k), counts.join(" "));
    }
    Ok(())
}
