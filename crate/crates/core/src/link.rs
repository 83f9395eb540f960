//! AWGN channel and the single-sub-band receiver: down-convert, lowpass,
//! decimate, cut FFT windows, FFT, pick the used bins, equalize.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::dsp::{self, ComplexSignal, Direction, FilterTaps};
use crate::error::{Error, Result};
use crate::modem::{self, ConstellationMap};
use crate::waveform::{self, Burst, BurstMeta};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    /// Complex noise variance per composite-rate sample.
    pub noise_variance_per_sample: f64,
    pub seed: u64,
}

pub fn awgn(x: &ComplexSignal, ch: &ChannelSpec) -> ComplexSignal {
    let mut rng = ChaCha12Rng::seed_from_u64(ch.seed);
    awgn_with(x, ch.noise_variance_per_sample, &mut rng)
}

pub(crate) fn awgn_with<R: Rng>(x: &ComplexSignal, variance: f64, rng: &mut R) -> ComplexSignal {
    if variance == 0.0 {
        return x.clone();
    }
    let sd = (variance / 2.0).sqrt();
    let samples = x
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s + Complex64::new(sd * re, sd * im)
        })
        .collect();
    ComplexSignal {
        samples,
        rate_hz: x.rate_hz,
    }
}

/// Receive lowpass for band `i` at the composite rate: the sub-band
/// filter design with its length stretched by the upsampling factor.
pub fn receive_filter(sc: &ScenarioConfig, i: usize) -> Result<FilterTaps> {
    let nm = &sc.subbands[i];
    let u = sc.upsampling_factor(i);
    dsp::design_subband_filter(
        nm.n_fft * u,
        nm.n_used,
        nm.r_subcarriers(),
        u * (nm.filter_len - 1) + 1,
    )
}

/// Per-band equalizer and noise bookkeeping derived from a noiseless
/// known-symbol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverCalibration {
    pub scenario_hash: String,
    pub band: usize,
    pub eq_coeffs: Vec<Complex64>,
    /// Mean equalized symbol energy per subcarrier on the calibration run.
    pub es_per_subcarrier: Vec<f64>,
    /// Equalizer-output noise variance per subcarrier for unit complex
    /// variance per composite-rate input sample.
    pub noise_gain_per_subcarrier: Vec<f64>,
}

impl ReceiverCalibration {
    pub fn mean_noise_gain(&self) -> f64 {
        self.noise_gain_per_subcarrier.iter().sum::<f64>()
            / self.noise_gain_per_subcarrier.len() as f64
    }
}

/// Receiver output before equalization: used-bin values for each symbol.
pub fn receive_raw(
    y: &ComplexSignal,
    sc: &ScenarioConfig,
    i: usize,
    meta: &BurstMeta,
) -> Result<Vec<Vec<Complex64>>> {
    let fs = sc.composite_rate()?;
    if (y.rate_hz - fs).abs() > 1e-6 * fs {
        return Err(Error::Receiver(format!(
            "input at {} Hz, expected composite {fs} Hz",
            y.rate_hz
        )));
    }
    let nm = &sc.subbands[i];
    let u = sc.upsampling_factor(i);
    let h = receive_filter(sc, i)?;
    let gd = h.group_delay();
    let n = nm.n_fft;

    let last_native = (meta.n_symbols.max(1) - 1) * meta.stride + meta.fft_offset + n - 1;
    if meta.n_symbols > 0 && last_native * u >= y.len() {
        return Err(Error::Receiver(format!(
            "FFT window ends at composite sample {} beyond signal length {}",
            last_native * u,
            y.len()
        )));
    }

    let mut z = y.samples.clone();
    dsp::mix_in_place(&mut z, -sc.center_frequencies()[i] / fs);
    let inv_gain = 1.0 / sc.band_gain(i);

    // Native-rate sample m sits at filtered index m*u + gd.
    let native: Box<dyn Fn(usize) -> Complex64 + Sync> = if h.len() > 512 {
        let filtered = dsp::convolve(&z, h.taps());
        Box::new(move |m| filtered[m * u + gd] * inv_gain)
    } else {
        let taps = h.taps().to_vec();
        Box::new(move |m| {
            let c = m * u + gd;
            let lo = c.saturating_sub(z.len() - 1);
            let hi = c.min(taps.len() - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in lo..=hi {
                acc += z[c - k] * taps[k];
            }
            acc * inv_gain
        })
    };

    let bins: Vec<usize> = waveform::used_bins(n, nm.n_used).collect();
    let out = (0..meta.n_symbols)
        .into_par_iter()
        .map(|k| {
            let start = k * meta.stride + meta.fft_offset;
            let mut buf: Vec<Complex64> = (start..start + n).map(&native).collect();
            dsp::fft_plan(n, Direction::Forward).process(&mut buf);
            bins.iter().map(|&b| buf[b]).collect()
        })
        .collect();
    Ok(out)
}

/// Equalized used-subcarrier points, symbol by symbol.
pub fn receive_subband(
    y: &ComplexSignal,
    sc: &ScenarioConfig,
    i: usize,
    meta: &BurstMeta,
    cal: &ReceiverCalibration,
) -> Result<Vec<Complex64>> {
    if cal.band != i || cal.scenario_hash != sc.hash() {
        return Err(Error::Receiver(format!(
            "calibration is for band {} of scenario {}, not band {} of {}",
            cal.band + 1,
            &cal.scenario_hash[..12.min(cal.scenario_hash.len())],
            i + 1,
            &sc.hash()[..12]
        )));
    }
    let raw = receive_raw(y, sc, i, meta)?;
    Ok(raw
        .iter()
        .flat_map(|sym| sym.iter().zip(&cal.eq_coeffs).map(|(r, e)| r * e))
        .collect())
}

/// Noise variance at the FFT output (before equalization and band gain)
/// of bin `bin` for unit-variance white noise at the composite rate,
/// from the receive filter autocorrelation.
pub fn fft_noise_variance(h: &FilterTaps, u: usize, n_fft: usize, bin: i64) -> f64 {
    let n = n_fft as f64;
    let mut v = n * h.autocorrelation(0);
    let max_lag = (h.len() - 1) / u;
    for tau in 1..=max_lag.min(n_fft - 1) {
        let r = h.autocorrelation(tau * u);
        v += 2.0 * (n - tau as f64) * r * (2.0 * PI * bin as f64 * tau as f64 / n).cos();
    }
    v
}

/// Number of symbols in the calibration burst.
pub const CALIBRATION_SYMBOLS: usize = 32;

/// Stream id of the calibration payload.
const CALIBRATION_STREAM: u64 = 0xCA1;

/// Equalizer from a noiseless, interference-free known-QPSK burst of band
/// `i`; noise gain from the receiver's linear response to white noise.
pub fn calibrate(sc: &ScenarioConfig, i: usize) -> Result<ReceiverCalibration> {
    if i >= sc.n_bands() {
        return Err(Error::config(format!("band {} out of range", i + 1)));
    }
    let nm = &sc.subbands[i];
    let qpsk = ConstellationMap::new(4)?;
    let mut rng = modem::substream(sc.seed, CALIBRATION_STREAM);
    let n_sym = CALIBRATION_SYMBOLS;
    let bits = modem::fill_bits(&mut rng, 2 * nm.n_used * n_sym);
    let tx = qpsk.modulate(&bits)?;
    let grid = waveform::map_to_subcarriers(&tx, nm)?;
    let burst = waveform::build_burst(sc.waveform, &grid, nm)?;
    let y = waveform::compose_band(&burst, sc, i)?;
    let raw = receive_raw(&y, sc, i, &burst.meta)?;

    let nu = nm.n_used;
    let mut eq = Vec::with_capacity(nu);
    let mut es = Vec::with_capacity(nu);
    for (k, idx) in waveform::used_indices(nu).enumerate() {
        let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
        for (s, sym) in raw.iter().enumerate() {
            num += tx[s * nu + k] * sym[k].conj();
            den += sym[k].norm_sqr();
        }
        if !(den > 1e-20 * n_sym as f64) {
            return Err(Error::DegenerateSubcarrier { subcarrier: idx });
        }
        let e = num / den;
        es.push(raw.iter().map(|sym| (sym[k] * e).norm_sqr()).sum::<f64>() / n_sym as f64);
        eq.push(e);
    }

    let h = receive_filter(sc, i)?;
    let u = sc.upsampling_factor(i);
    let g2 = sc.band_gain(i).powi(2);
    let noise_gain = waveform::used_indices(nu)
        .zip(&eq)
        .map(|(idx, e)| fft_noise_variance(&h, u, nm.n_fft, idx) * e.norm_sqr() / g2)
        .collect();

    Ok(ReceiverCalibration {
        scenario_hash: sc.hash(),
        band: i,
        eq_coeffs: eq,
        es_per_subcarrier: es,
        noise_gain_per_subcarrier: noise_gain,
    })
}

/// One random multi-band transmission.
#[derive(Debug, Clone)]
pub struct Frame {
    pub composite: ComplexSignal,
    /// Transmitted symbol indices per band, symbol by symbol.
    pub symbols: Vec<Vec<usize>>,
    pub metas: Vec<BurstMeta>,
}

/// Builds random payloads for every band, their bursts, and the composite.
pub fn transmit<R: Rng>(sc: &ScenarioConfig, map: &ConstellationMap, rng: &mut R) -> Result<Frame> {
    let counts = sc.symbols_per_band();
    let mut symbols = Vec::with_capacity(sc.n_bands());
    let mut payload_bits = Vec::with_capacity(sc.n_bands());
    for (nm, &ns) in sc.subbands.iter().zip(&counts) {
        let bits = modem::fill_bits(rng, map.bits_per_symbol() * nm.n_used * ns);
        symbols.push(map.symbol_indices(&bits)?);
        payload_bits.push(bits);
    }
    let bursts: Vec<Burst> = sc
        .subbands
        .par_iter()
        .zip(&symbols)
        .map(|(nm, syms)| {
            let pts: Vec<Complex64> = syms.iter().map(|&s| map.points()[s]).collect();
            let grid = waveform::map_to_subcarriers(&pts, nm)?;
            waveform::build_burst(sc.waveform, &grid, nm)
        })
        .collect::<Result<_>>()?;
    let composite = waveform::compose(&bursts, sc)?;
    Ok(Frame {
        composite,
        symbols,
        metas: bursts.iter().map(|b| b.meta).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    #[test]
    fn awgn_basics() {
        let x = ComplexSignal::new(vec![Complex64::new(1.0, -1.0); 100], 1.0).unwrap();
        let ch0 = ChannelSpec {
            noise_variance_per_sample: 0.0,
            seed: 1,
        };
        assert_eq!(awgn(&x, &ch0), x);
        let ch = ChannelSpec {
            noise_variance_per_sample: 0.5,
            seed: 9,
        };
        assert_eq!(awgn(&x, &ch), awgn(&x, &ch));
    }

    #[test]
    fn awgn_variance() {
        let x = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 1_000_000], 1.0).unwrap();
        let y = awgn(
            &x,
            &ChannelSpec {
                noise_variance_per_sample: 1.0,
                seed: 4,
            },
        );
        let v = y.power();
        assert!((v - 1.0).abs() < 0.005, "{v}");
    }

    #[test]
    fn bypass_calibration() {
        let sc = config::bypass();
        let cal = calibrate(&sc, 0).unwrap();
        assert!(cal
            .eq_coeffs
            .iter()
            .all(|e| (e - Complex64::new(1.0, 0.0)).norm() < 1e-10));
        // one tap, no decimation: each FFT bin collects n_fft unit-variance samples
        assert!(cal
            .noise_gain_per_subcarrier
            .iter()
            .all(|&g| (g - 256.0).abs() < 1e-9));
        assert_eq!(calibrate(&sc, 0).unwrap(), cal);
        assert!(calibrate(&sc, 1).is_err());
    }

    #[test]
    fn bypass_perfect_reconstruction() {
        let sc = config::bypass();
        let cal = calibrate(&sc, 0).unwrap();
        let map = ConstellationMap::new(16).unwrap();
        let frame = transmit(&sc, &map, &mut modem::substream(5, 0)).unwrap();
        let rx = receive_subband(&frame.composite, &sc, 0, &frame.metas[0], &cal).unwrap();
        let err = rx
            .iter()
            .zip(&frame.symbols[0])
            .map(|(r, &s)| (r - map.points()[s]).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn calibration_mismatch() {
        let sc = config::bypass();
        let cal = calibrate(&sc, 0).unwrap();
        let mut other = sc.clone();
        other.seed = 99;
        let map = ConstellationMap::new(4).unwrap();
        let frame = transmit(&other, &map, &mut modem::substream(5, 0)).unwrap();
        assert!(matches!(
            receive_subband(&frame.composite, &other, 0, &frame.metas[0], &cal),
            Err(Error::Receiver(_))
        ));
    }

    #[test]
    fn timing_beyond_signal() {
        let sc = config::bypass();
        let map = ConstellationMap::new(4).unwrap();
        let frame = transmit(&sc, &map, &mut modem::substream(5, 0)).unwrap();
        let mut meta = frame.metas[0];
        meta.n_symbols += 1;
        assert!(receive_raw(&frame.composite, &sc, 0, &meta).is_err());
    }
}
