//! Encode a random message with a (256, 128) polar code, send it over
//! BI-AWGN and decode with successive cancellation.

use polar_rateless::channel::ChannelModel;
use polar_rateless::construction::{awgn_reliabilities, frozen_set_for_rate};
use polar_rateless::decoder::sc_decode;
use polar_rateless::polar::encode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> polar_rateless::Result<()> {
    let snr_db = 2.0;
    let spec = frozen_set_for_rate(&awgn_reliabilities(snr_db, 8)?, 128)?;
    let channel = ChannelModel::biawgn(snr_db)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let frames = 2000;
    let mut errors = 0;
    for _ in 0..frames {
        let message: Vec<u8> = (0..spec.info_count()).map(|_| rng.gen_range(0..2)).collect();
        let x = encode(&message, &spec)?;
        let llr = channel.llr(&channel.transmit(&x, &mut rng))?;
        if sc_decode(&llr, &spec, None)?.message != message {
            errors += 1;
        }
    }
    println!("N = {}, K = {}, {channel}: {errors} frame errors in {frames}", spec.len(), spec.info_count());
    Ok(())
}
