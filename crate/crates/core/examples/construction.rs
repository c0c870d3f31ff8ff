//! Compares bit-channel reliabilities from the exact erasure recursion, the
//! Gaussian approximation and a Monte Carlo genie-aided estimate.

use std::collections::HashSet;

use polar_rateless::channel::ChannelModel;
use polar_rateless::construction::{awgn_reliabilities, bec_bit_channel_erasures, mc_error_counts, mc_reliabilities};

fn main() -> polar_rateless::Result<()> {
    let trials = 100_000;
    let z = bec_bit_channel_erasures(0.5, 3)?;
    let errors = mc_error_counts(ChannelModel::bec(0.5)?, 3, trials, 1)?;
    // an erased genie decision falls to 0, so half of the erasures are errors
    println!("BEC(0.5), N = 8");
    println!("index  erasure  erasure/2  mc error");
    for (i, (zi, e)) in z.iter().zip(&errors).enumerate() {
        println!("{i:>5}  {zi:.5}  {:.5}    {:.5}", zi / 2.0, *e as f64 / trials as f64);
    }

    let k = 512;
    let ga = awgn_reliabilities(0.0, 10)?;
    let mc = mc_reliabilities(ChannelModel::biawgn(0.0)?, 10, 20_000, 1)?;
    let ga_set: HashSet<usize> = ga.order()[..k].iter().copied().collect();
    let shared = mc.order()[..k].iter().filter(|i| ga_set.contains(i)).count();
    println!("\nBI-AWGN 0 dB, N = 1024, K = {k}");
    println!("GA and MC information sets share {shared} of {k} indices");
    println!("least reliable GA pick: {}", ga.order()[k - 1]);
    Ok(())
}
