//! Channel descriptors, capacities and the inverse capacity map used to pick
//! design channels.

use polar_rateless::channel::{channel_for_capacity, ChannelModel, Family};

fn main() -> polar_rateless::Result<()> {
    for d in ["bec:0.5", "bsc:0.11", "biawgn:0", "biawgn:-3"] {
        let c: ChannelModel = d.parse()?;
        println!("{c:<10} capacity {:.4}", c.capacity());
    }
    println!();
    for family in [Family::Bec, Family::Bsc, Family::BiAwgn] {
        let row: Vec<String> = [0.5, 0.25, 1.0 / 6.0, 0.125]
            .iter()
            .map(|&r| channel_for_capacity(family, r).map(|c| format!("{:.4}", c.parameter())))
            .collect::<Result<_, _>>()?;
        println!("{:<6} at capacity 1/2, 1/4, 1/6, 1/8: {}", family.name(), row.join(" "));
    }
    Ok(())
}
