//! Hard side information against joint decoding of both stages, on paired
//! noise.

use polar_rateless::channel::{channel_for_capacity, ChannelModel, Family};
use polar_rateless::construction::design_profile;
use polar_rateless::decoder::CrcSpec;
use polar_rateless::rateless::{run_session, Combining, Placement, SessionOptions, SessionPlan};
use polar_rateless::rng::substream;
use rand::Rng;

fn main() -> polar_rateless::Result<()> {
    let design = channel_for_capacity(Family::BiAwgn, 0.5)?;
    let plan = SessionPlan::builder(256, 2)
        .crc(CrcSpec::crc8())
        .placement(Placement::Successive)
        .build(design_profile(design, 9)?)?;
    let channel = ChannelModel::biawgn(-4.5)?;
    for combining in [Combining::Hard, Combining::Soft] {
        let options = SessionOptions {
            combining,
            attempt_from_stage: 2,
            ..Default::default()
        };
        let mut errors = 0;
        for seed in 0..400 {
            let mut rng = substream(seed, &[]);
            let payload: Vec<u8> = (0..plan.payload_len()).map(|_| rng.gen_range(0..2)).collect();
            let message = plan.frame(&payload)?;
            errors += !run_session(&plan, &channel, &message, &options, &mut rng)?.success as u32;
        }
        println!("{combining:?}: {errors} stage-2 failures in 400");
    }
    Ok(())
}
