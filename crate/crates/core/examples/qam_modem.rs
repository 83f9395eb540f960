//! Gray-mapped QAM: labels, round trip and the per-point error kernel.
//!
//! ```bash
//! cargo run --example qam_modem
//! ```

use mixnum::modem::{self, ConstellationMap};
use num_complex::Complex64;

fn main() -> mixnum::Result<()> {
    let qpsk = ConstellationMap::new(4)?;
    for s in 0..4 {
        println!("{:?} -> {:.4}", qpsk.label(s), qpsk.points()[s]);
    }

    let bits = modem::random_bits(42, 8 * 1000);
    let points = modem::qam_modulate(&bits, 256)?;
    let back = modem::qam_demodulate(&points, 256)?;
    println!("256-QAM round trip exact: {}", back.bits == bits.bits);
    let es: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
    println!("mean symbol energy {es:.4}");

    println!("\norder  Eb/N0  kernel average  closed form");
    for order in [4u32, 16, 64, 256] {
        let map = ConstellationMap::new(order)?;
        for ebn0_db in [4.0, 8.0, 12.0] {
            let ebn0 = 10f64.powf(ebn0_db / 10.0);
            let sigma = (1.0 / (2.0 * (order as f64).log2() * ebn0)).sqrt();
            let avg: f64 = (0..order as usize)
                .map(|s| {
                    map.bit_error_probability(map.points()[s], s, sigma)
                        .unwrap()
                })
                .sum::<f64>()
                / order as f64;
            println!(
                "{order:>5}  {ebn0_db:>5}  {avg:>14.4e}  {:>11.4e}",
                modem::gray_qam_ber(order, ebn0)
            );
        }
    }

    let off = qpsk.points()[0] + Complex64::new(-0.5, 0.1);
    println!(
        "\nQPSK point 0 moved to {off:.3}: bit error probability at sigma 0.3 = {:.4}",
        qpsk.bit_error_probability(off, 0, 0.3)?
    );
    Ok(())
}
