//! Eb/N0 needed for BER 0.05 as the band separation grows.
//!
//! ```bash
//! cargo run --release --example separation_sweep -- 256
//! ```

use mixnum::config::{self, WaveformKind};
use mixnum::metrics;

fn main() -> mixnum::Result<()> {
    let order: u32 = std::env::args()
        .nth(1)
        .map_or(4, |s| s.parse().expect("modulation order"));
    let m_grid = [0, 1, 2, 3, 4];
    let mut template = config::table1();
    template.n_symbols = 20;
    let band = template.n_bands() - 1;

    println!("{order}-QAM, band {}, Eb/N0 (dB) at BER 0.05", band + 1);
    print!("{:<8}", "m");
    for m in m_grid {
        print!("{m:>8}");
    }
    println!();
    for kind in WaveformKind::ALL {
        let mut sc = template.clone();
        sc.waveform = kind;
        let points = metrics::ebn0_at_target_ber(&sc, band, order, 0.05, &m_grid, 1)?;
        print!("{kind:<8}");
        for p in &points {
            match p.ebn0_db {
                Some(v) => print!("{v:>8.3}"),
                None => print!("{:>8}", "-"),
            }
        }
        println!();
    }
    println!(
        "single numerology: {:.3}",
        20.0 * metrics::q_inverse(0.05).log10() - 10.0 * 2f64.log10()
    );
    Ok(())
}
