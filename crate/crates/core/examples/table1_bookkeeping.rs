//! Rate plan and frequency plan of the three-band reference scenario.
//!
//! ```bash
//! cargo run --example table1_bookkeeping
//! ```

use mixnum::config;

fn main() -> mixnum::Result<()> {
    let sc = config::table1();
    sc.validate()?;
    let fs = sc.composite_rate()?;
    println!("composite rate {:.2} MHz", fs / 1e6);

    let f = sc.center_frequencies();
    let counts = sc.symbols_per_band();
    println!("band  scs_kHz  fs_MHz  U  center_MHz  guard_sc  gain    symbols");
    for (i, nm) in sc.subbands.iter().enumerate() {
        println!(
            "{:>4}  {:>7}  {:>6.2}  {}  {:>10.3}  {:>8}  {:.4}  {:>7}",
            i + 1,
            nm.scs_hz / 1e3,
            nm.sample_rate() / 1e6,
            sc.upsampling_factor(i),
            f[i] / 1e6,
            sc.n_guard(i),
            sc.band_gain(i),
            counts[i]
        );
    }
    for i in 0..sc.n_bands() - 1 {
        let (lo, hi) = sc.gap(i);
        println!(
            "gap {}-{}: {:.3} .. {:.3} MHz",
            i + 1,
            i + 2,
            lo / 1e6,
            hi / 1e6
        );
    }
    println!("f2 - f1 = {:.2} MHz", (f[1] - f[0]) / 1e6);
    println!("hash {}", sc.hash());
    Ok(())
}
