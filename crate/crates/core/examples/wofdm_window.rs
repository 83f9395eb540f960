//! Blackman-edged w-OFDM window and the overlap-added symbol train.
//!
//! ```bash
//! cargo run --example wofdm_window
//! ```

use mixnum::config::{SubbandNumerology, WaveformKind};
use mixnum::{dsp, modem, waveform};

fn main() -> mixnum::Result<()> {
    let ramp = dsp::blackman_transition(8)?;
    println!(
        "transition (8): {:?}",
        ramp.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
    );

    let w = dsp::wofdm_window(16, 2, 3, 2)?;
    println!("window N=16 Ng*=2 Nm=3 Ntr=2, {} samples:", w.len());
    println!(
        "{}",
        w.iter()
            .map(|v| format!("{v:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    let nm = SubbandNumerology {
        n_fft: 64,
        n_cp: 8,
        scs_hz: 15e3,
        n_used: 48,
        filter_len: 1,
        transition_hz: 0.0,
        n_prefix: 4,
        n_transition: 4,
    };
    let bits = modem::random_bits(1, nm.n_used * 2 * 3);
    let grid = waveform::map_to_subcarriers(&modem::qam_modulate(&bits, 4)?, &nm)?;
    for kind in [WaveformKind::CpOfdm, WaveformKind::WOfdm] {
        let b = waveform::build_burst(kind, &grid, &nm)?;
        let edge: Vec<String> = b.signal.samples[nm.stride() - 4..nm.stride() + 4]
            .iter()
            .map(|v| format!("{:.3}", v.norm()))
            .collect();
        println!(
            "{kind}: {} samples, |x| around the first symbol boundary: {}",
            b.signal.len(),
            edge.join(" ")
        );
    }
    Ok(())
}
