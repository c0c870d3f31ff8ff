//! Frame error rate of SC against CRC-aided adaptive list decoding on the
//! same noise.

use polar_rateless::channel::ChannelModel;
use polar_rateless::construction::{awgn_reliabilities, frozen_set_for_rate};
use polar_rateless::decoder::{CrcSpec, ScDecoder, SclDecoder};
use polar_rateless::polar::encode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> polar_rateless::Result<()> {
    let snr_db = 1.0;
    let crc = CrcSpec::crc8();
    let spec = frozen_set_for_rate(&awgn_reliabilities(snr_db, 9)?, 256 + crc.width())?;
    let channel = ChannelModel::biawgn(snr_db)?;
    let mut sc = ScDecoder::default();
    let mut scl = SclDecoder::new(Default::default(), 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let frames = 500;
    let (mut sc_err, mut scl_err, mut lists) = (0, 0, 0);
    for _ in 0..frames {
        let payload: Vec<u8> = (0..256).map(|_| rng.gen_range(0..2)).collect();
        let message = crc.attach(&payload)?;
        let llr = channel.llr(&channel.transmit(&encode(&message, &spec)?, &mut rng))?;
        sc_err += (sc.decode(&llr, &spec, None)?.message != message) as u32;
        let r = scl.decode_adaptive(&llr, &spec, Some(&crc), None)?;
        scl_err += (r.message != message) as u32;
        lists += r.list_size_used;
    }
    println!("(512, 256) + CRC-8 at {channel}, {frames} frames");
    println!("SC:        {sc_err} errors");
    println!("SCL <= 32: {scl_err} errors, mean list {:.2}", lists as f64 / frames as f64);
    Ok(())
}
