//! Runs rateless sessions over a BEC and reports how many stages each needed.

use polar_rateless::channel::ChannelModel;
use polar_rateless::construction::design_profile;
use polar_rateless::decoder::CrcSpec;
use polar_rateless::rateless::{run_session, SessionOptions, SessionPlan};
use polar_rateless::rng::substream;
use rand::Rng;

fn main() -> polar_rateless::Result<()> {
    let crc = CrcSpec::crc16();
    let plan = SessionPlan::builder(512, 4)
        .crc(crc)
        .build(design_profile(ChannelModel::bec(0.5)?, 10)?)?;
    let channel = ChannelModel::bec(0.7)?;
    let options = SessionOptions::default();

    let mut histogram = vec![0u32; plan.max_stages() + 1];
    let mut failures = 0;
    for seed in 0..200 {
        let mut rng = substream(seed, &[]);
        let payload: Vec<u8> = (0..plan.payload_len()).map(|_| rng.gen_range(0..2)).collect();
        let message = plan.frame(&payload)?;
        let out = run_session(&plan, &channel, &message, &options, &mut rng)?;
        if out.success {
            histogram[out.stages_used] += 1;
        } else {
            failures += 1;
        }
    }
    println!("N = 1024, K = 512 with CRC-16 over {channel} (capacity {:.2})", channel.capacity());
    for k in 1..=plan.max_stages() {
        println!("decoded at stage {k} (rate {}): {}", plan.cumulative_rate(k), histogram[k]);
    }
    println!("not decoded: {failures}");
    Ok(())
}
