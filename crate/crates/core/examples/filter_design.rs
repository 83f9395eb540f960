//! Windowed-sinc sub-band filters and interpolators of the reference scenario.
//!
//! ```bash
//! cargo run --example filter_design
//! ```

use mixnum::{config, dsp, link, waveform};

fn db(x: f64) -> f64 {
    20.0 * x.abs().max(1e-300).log10()
}

fn main() -> mixnum::Result<()> {
    let sc = config::table1();
    for (i, nm) in sc.subbands.iter().enumerate() {
        let h = dsp::design_subband_filter(nm.n_fft, nm.n_used, nm.r_subcarriers(), nm.filter_len)?;
        let n = nm.n_fft as f64;
        let edge = nm.n_used as f64 / 2.0 / n;
        let cutoff = (nm.n_used as f64 + 2.0 * nm.r_subcarriers()) / 2.0 / n;
        println!(
            "band {}: L={} delay={} | band edge {:.2} dB, cutoff {:.2} dB, 2x cutoff {:.2} dB",
            i + 1,
            h.len(),
            h.group_delay(),
            db(h.amplitude(edge)),
            db(h.amplitude(cutoff)),
            db(h.amplitude(2.0 * cutoff)),
        );
        let interp = waveform::interpolation_filter(&sc, i)?;
        let rx = link::receive_filter(&sc, i)?;
        println!(
            "        interpolator L={} (U={}), receive filter L={}",
            interp.len(),
            sc.upsampling_factor(i),
            rx.len()
        );
    }

    println!("\nband 1 magnitude response, f in subcarriers from center:");
    let nm = &sc.subbands[0];
    let h = dsp::design_subband_filter(nm.n_fft, nm.n_used, nm.r_subcarriers(), nm.filter_len)?;
    for k in (0..=200).step_by(10) {
        let f = k as f64 / nm.n_fft as f64;
        println!("{k:>4} {:>8.2}", db(h.amplitude(f)));
    }
    Ok(())
}
