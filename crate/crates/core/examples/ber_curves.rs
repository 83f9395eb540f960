//! Per-band BER versus Eb/N0, semi-analytic with a Monte Carlo spot check.
//!
//! ```bash
//! cargo run --release --example ber_curves -- f-ofdm 256
//! ```

use mixnum::config::{self, WaveformKind};
use mixnum::metrics::{self, BandLink, SemiAnalytic, StopRule};

fn main() -> mixnum::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: WaveformKind = args.next().as_deref().unwrap_or("cp-ofdm").parse()?;
    let order: u32 = args
        .next()
        .map_or(4, |s| s.parse().expect("modulation order"));

    let mut sc = config::table1();
    sc.waveform = kind;
    let grid: Vec<f64> = if order >= 64 {
        (0..=6).map(|k| 8.0 + 3.0 * k as f64).collect()
    } else {
        (0..=6).map(|k| 2.0 * k as f64).collect()
    };

    println!("{kind}, {order}-QAM");
    print!("Eb/N0 ");
    for d in &grid {
        print!("{d:>10}");
    }
    println!();
    for band in 0..sc.n_bands() {
        let link = BandLink::new(sc.clone(), band)?;
        let sa = SemiAnalytic::prepare(&link, order, sc.seed)?;
        print!("band {}", band + 1);
        for &d in &grid {
            print!("{:>10.3e}", sa.ber(d));
        }
        println!("   EVM {:.1} dB", sa.evm_db());
    }

    let link = BandLink::new(sc.clone(), 0)?;
    let d = grid[2];
    let stop = StopRule {
        min_errors: 500,
        max_bits: 20_000_000,
    };
    let mc = metrics::monte_carlo_ber(&link, order, d, stop, 1)?;
    let sa = metrics::semianalytic_ber(&link, order, d, sc.seed)?;
    println!(
        "band 1 at {d} dB: Monte Carlo {:.3e} ({} errors / {} bits), semi-analytic {:.3e}",
        mc.ber, mc.n_errors, mc.n_bits, sa.ber
    );
    Ok(())
}
