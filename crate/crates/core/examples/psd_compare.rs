//! Welch PSD of the composite signal for the three waveforms.
//!
//! Writes `freq_hz,cp_ofdm,f_ofdm,w_ofdm` to the given path.
//!
//! ```bash
//! cargo run --release --example psd_compare -- psd_compare.csv
//! ```

use std::fmt::Write as _;

use mixnum::config::{self, WaveformKind};
use mixnum::link;
use mixnum::metrics::{self, PsdCurve, WelchConfig};
use mixnum::modem::{self, ConstellationMap};

fn main() -> mixnum::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "psd_compare.csv".into());
    let base = config::table1();
    let mut curves: Vec<PsdCurve> = Vec::new();
    for kind in WaveformKind::ALL {
        let mut sc = base.clone();
        sc.waveform = kind;
        let map = ConstellationMap::new(sc.mod_order)?;
        let frame = link::transmit(&sc, &map, &mut modem::substream(sc.seed, 0))?;
        curves.push(metrics::welch_psd(
            &frame.composite,
            &WelchConfig::default(),
        )?);
    }

    println!("mean level in dB over the central 90 kHz of each gap");
    for i in 0..base.n_bands() - 1 {
        let (lo, hi) = base.gap(i);
        let c = 0.5 * (lo + hi);
        print!("gap {}-{}:", i + 1, i + 2);
        for (kind, psd) in WaveformKind::ALL.iter().zip(&curves) {
            print!("  {kind} {:.2}", psd.mean_in(c - 45e3, c + 45e3));
        }
        println!();
    }
    let top = base.occupied_band(base.n_bands() - 1).1;
    print!("1 MHz above the last band:");
    for (kind, psd) in WaveformKind::ALL.iter().zip(&curves) {
        print!("  {kind} {:.2}", psd.level_at(top + 1e6));
    }
    println!();

    let mut csv = String::from("freq_hz,cp_ofdm,f_ofdm,w_ofdm\n");
    for k in 0..curves[0].freq_hz.len() {
        let _ = writeln!(
            csv,
            "{},{:.4},{:.4},{:.4}",
            curves[0].freq_hz[k], curves[0].psd_db[k], curves[1].psd_db[k], curves[2].psd_db[k]
        );
    }
    std::fs::write(&path, csv).map_err(|source| mixnum::Error::Io {
        path: path.clone().into(),
        source,
    })?;
    println!("wrote {path}");
    Ok(())
}
