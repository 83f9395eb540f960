//! Dump a composite burst as interleaved f64 I/Q with a JSON sidecar.
//!
//! ```bash
//! cargo run --example raw_iq_export -- /tmp/table1.iq
//! ```

use mixnum::config::{self, WaveformKind};
use mixnum::modem::{self, ConstellationMap};
use mixnum::{link, waveform};

fn main() -> mixnum::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "composite.iq".into());
    let mut sc = config::table1();
    sc.waveform = WaveformKind::FOfdm;
    sc.n_symbols = 4;
    let map = ConstellationMap::new(16)?;
    let frame = link::transmit(&sc, &map, &mut modem::substream(sc.seed, 0))?;
    waveform::write_iq(path.as_ref(), &frame.composite, &sc.hash())?;

    let (x, side) = waveform::read_iq(path.as_ref())?;
    println!(
        "{path}: {} samples at {:.2} MHz, power {:.4e}, identical on read back: {}",
        side.n_samples,
        side.rate_hz / 1e6,
        x.power(),
        x == frame.composite
    );
    Ok(())
}
