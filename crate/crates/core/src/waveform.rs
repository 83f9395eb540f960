//! Per-sub-band burst generation (CP-OFDM, f-OFDM, w-OFDM) and the
//! multirate combiner that places all sub-bands on one composite-rate
//! sample stream.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, SubbandNumerology, WaveformKind};
use crate::dsp::{self, ComplexSignal, Direction};
use crate::error::{Error, Result};

/// Frequency-domain OFDM symbols, each in natural FFT bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierGrid {
    n_fft: usize,
    n_used: usize,
    pub symbols: Vec<Vec<Complex64>>,
}

/// FFT bins of the used subcarriers, logical index `-n_used/2 .. n_used/2`.
pub fn used_bins(n_fft: usize, n_used: usize) -> impl Iterator<Item = usize> {
    let half = (n_used / 2) as isize;
    (-half..n_used as isize - half).map(move |k| k.rem_euclid(n_fft as isize) as usize)
}

/// Signed subcarrier index of each used bin, same order as [`used_bins`].
pub fn used_indices(n_used: usize) -> impl Iterator<Item = i64> {
    let half = (n_used / 2) as i64;
    -half..n_used as i64 - half
}

impl SubcarrierGrid {
    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    /// Used-subcarrier values, symbol by symbol.
    pub fn extract_used(&self) -> Vec<Complex64> {
        self.symbols
            .iter()
            .flat_map(|sym| used_bins(self.n_fft, self.n_used).map(move |b| sym[b]))
            .collect()
    }
}

/// Places `n_used` points per OFDM symbol on contiguous subcarriers around
/// DC; every other bin stays zero.
pub fn map_to_subcarriers(qam: &[Complex64], nm: &SubbandNumerology) -> Result<SubcarrierGrid> {
    if nm.n_used == 0 || nm.n_used > nm.n_fft {
        return Err(Error::param(format!(
            "n_used {} invalid for n_fft {}",
            nm.n_used, nm.n_fft
        )));
    }
    if !qam.len().is_multiple_of(nm.n_used) {
        return Err(Error::param(format!(
            "{} points do not fill whole symbols of {} subcarriers",
            qam.len(),
            nm.n_used
        )));
    }
    let symbols = qam
        .chunks(nm.n_used)
        .map(|chunk| {
            let mut sym = vec![Complex64::new(0.0, 0.0); nm.n_fft];
            for (b, &v) in used_bins(nm.n_fft, nm.n_used).zip(chunk) {
                sym[b] = v;
            }
            sym
        })
        .collect();
    Ok(SubcarrierGrid {
        n_fft: nm.n_fft,
        n_used: nm.n_used,
        symbols,
    })
}

/// Timing metadata the receiver needs to find each FFT window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurstMeta {
    pub waveform: WaveformKind,
    pub n_symbols: usize,
    /// Samples between consecutive symbol starts.
    pub stride: usize,
    /// Offset of symbol `k`'s FFT window from `k * stride`.
    pub fft_offset: usize,
    /// Delay of symbol 0's start from the first burst sample.
    pub leading_delay: usize,
    pub total_len: usize,
}

impl BurstMeta {
    /// Metadata of the burst [`build_burst`] produces for these inputs.
    pub fn expected(kind: WaveformKind, nm: &SubbandNumerology, n_symbols: usize) -> BurstMeta {
        let stride = nm.stride();
        let body = n_symbols * stride;
        let (leading_delay, total_len) = match kind {
            WaveformKind::CpOfdm => (0, body),
            WaveformKind::FOfdm => ((nm.filter_len - 1) / 2, body + nm.filter_len - 1),
            WaveformKind::WOfdm => (0, body + nm.n_prefix + 1),
        };
        BurstMeta {
            waveform: kind,
            n_symbols,
            stride,
            fft_offset: nm.n_cp,
            leading_delay,
            total_len,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Burst {
    pub signal: ComplexSignal,
    pub meta: BurstMeta,
}

fn ifft_symbols(grid: &SubcarrierGrid) -> Vec<Vec<Complex64>> {
    let plan = dsp::fft_plan(grid.n_fft, Direction::Inverse);
    let scale = 1.0 / grid.n_fft as f64;
    grid.symbols
        .iter()
        .map(|sym| {
            let mut t = sym.clone();
            plan.process(&mut t);
            t.iter_mut().for_each(|v| *v *= scale);
            t
        })
        .collect()
}

fn check_grid(grid: &SubcarrierGrid, nm: &SubbandNumerology) -> Result<()> {
    if grid.n_fft != nm.n_fft || grid.n_used != nm.n_used {
        return Err(Error::param(
            "subcarrier grid does not match the numerology",
        ));
    }
    Ok(())
}

pub fn build_cp_ofdm(grid: &SubcarrierGrid, nm: &SubbandNumerology) -> Result<Burst> {
    check_grid(grid, nm)?;
    let n = nm.n_fft;
    let mut out = Vec::with_capacity(grid.n_symbols() * nm.stride());
    for t in ifft_symbols(grid) {
        out.extend_from_slice(&t[n - nm.n_cp..]);
        out.extend_from_slice(&t);
    }
    Ok(Burst {
        signal: ComplexSignal::new(out, nm.sample_rate())?,
        meta: BurstMeta::expected(WaveformKind::CpOfdm, nm, grid.n_symbols()),
    })
}

pub fn build_f_ofdm(grid: &SubcarrierGrid, nm: &SubbandNumerology) -> Result<Burst> {
    let cp = build_cp_ofdm(grid, nm)?;
    let h = dsp::design_subband_filter(nm.n_fft, nm.n_used, nm.r_subcarriers(), nm.filter_len)?;
    Ok(Burst {
        signal: dsp::convolve_full(&cp.signal, &h),
        meta: BurstMeta::expected(WaveformKind::FOfdm, nm, grid.n_symbols()),
    })
}

/// Windowed OFDM. Each symbol is extended to
/// `[last (Ng* + Nm) | body | first (Nm + 1)]` with `Ng* = Ng - Nm`,
/// multiplied by the transition window, and overlap-added at stride
/// `n_fft + n_cp`.
pub fn build_w_ofdm(grid: &SubcarrierGrid, nm: &SubbandNumerology) -> Result<Burst> {
    check_grid(grid, nm)?;
    if nm.n_prefix >= nm.n_cp {
        return Err(Error::param(format!(
            "w-OFDM prefix {} must be shorter than the CP {}",
            nm.n_prefix, nm.n_cp
        )));
    }
    if nm.n_transition > nm.n_prefix {
        return Err(Error::param(format!(
            "w-OFDM transition {} exceeds prefix {}",
            nm.n_transition, nm.n_prefix
        )));
    }
    let n = nm.n_fft;
    let cp_star = nm.n_cp_star();
    let head = cp_star + nm.n_prefix;
    let window = dsp::wofdm_window(n, cp_star, nm.n_prefix, nm.n_transition)?;
    let meta = BurstMeta::expected(WaveformKind::WOfdm, nm, grid.n_symbols());
    let mut out = vec![Complex64::new(0.0, 0.0); meta.total_len];
    for (k, t) in ifft_symbols(grid).into_iter().enumerate() {
        let extended = t[n - head..].iter().chain(&t).chain(&t[..nm.n_prefix + 1]);
        let start = k * meta.stride;
        for ((o, &x), &w) in out[start..].iter_mut().zip(extended).zip(&window) {
            *o += x * w;
        }
    }
    Ok(Burst {
        signal: ComplexSignal::new(out, nm.sample_rate())?,
        meta,
    })
}

pub fn build_burst(
    kind: WaveformKind,
    grid: &SubcarrierGrid,
    nm: &SubbandNumerology,
) -> Result<Burst> {
    match kind {
        WaveformKind::CpOfdm => build_cp_ofdm(grid, nm),
        WaveformKind::FOfdm => build_f_ofdm(grid, nm),
        WaveformKind::WOfdm => build_w_ofdm(grid, nm),
    }
}

/// Interpolation filter used for band `i` of a scenario.
pub fn interpolation_filter(sc: &ScenarioConfig, i: usize) -> Result<dsp::FilterTaps> {
    let nm = &sc.subbands[i];
    let u = sc.upsampling_factor(i);
    dsp::design_interpolation_filter(
        u,
        nm.n_fft,
        nm.n_fft * u,
        dsp::default_interpolation_len(u, nm.n_cp),
    )
}

/// One band brought to the composite rate: interpolated, aligned so its
/// symbol 0 starts at composite sample 0, scaled by the band gain, and
/// shifted to its center frequency.
pub fn compose_band(burst: &Burst, sc: &ScenarioConfig, i: usize) -> Result<ComplexSignal> {
    let fs = sc.composite_rate()?;
    let u = sc.upsampling_factor(i);
    let expected_rate = fs / u as f64;
    if (burst.signal.rate_hz - expected_rate).abs() > 1e-6 * fs {
        return Err(Error::param(format!(
            "band {} burst at {} Hz, expected {expected_rate} Hz",
            i + 1,
            burst.signal.rate_hz
        )));
    }
    let h = interpolation_filter(sc, i)?;
    let up = dsp::upsample_zero_stuff(&burst.signal, u)?;
    let filtered = dsp::convolve_full(&up, &h);
    let skip = h.group_delay() + u * burst.meta.leading_delay;
    let gain = sc.band_gain(i);
    let mut samples: Vec<Complex64> = filtered.samples[skip.min(filtered.len())..]
        .iter()
        .map(|v| v * gain)
        .collect();
    let fc = sc.center_frequencies()[i];
    if fc.abs() >= fs / 2.0 {
        return Err(Error::param(format!(
            "center frequency {fc} Hz beyond Nyquist"
        )));
    }
    dsp::mix_in_place(&mut samples, fc / fs);
    ComplexSignal::new(samples, fs)
}

/// Sum of all bands at the composite rate.
pub fn compose(bursts: &[Burst], sc: &ScenarioConfig) -> Result<ComplexSignal> {
    if bursts.len() != sc.n_bands() {
        return Err(Error::param(format!(
            "{} bursts for a scenario with {} sub-bands",
            bursts.len(),
            sc.n_bands()
        )));
    }
    let parts: Vec<ComplexSignal> = bursts
        .par_iter()
        .enumerate()
        .map(|(i, b)| compose_band(b, sc, i))
        .collect::<Result<_>>()?;
    let len = parts.iter().map(ComplexSignal::len).max().unwrap_or(0);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for p in &parts {
        for (o, v) in out.iter_mut().zip(&p.samples) {
            *o += v;
        }
    }
    ComplexSignal::new(out, sc.composite_rate()?)
}

/// JSON sidecar written next to a raw I/Q dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub rate_hz: f64,
    pub n_samples: usize,
    pub scenario_hash: String,
    pub format: String,
}

/// Writes interleaved little-endian f64 I/Q to `path` and a JSON sidecar
/// to `path` with `.json` appended.
pub fn write_iq(path: &Path, x: &ComplexSignal, scenario_hash: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::with_capacity(16 * x.len());
    for s in &x.samples {
        bytes.extend_from_slice(&s.re.to_le_bytes());
        bytes.extend_from_slice(&s.im.to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(io_err)?;
    let sidecar = IqSidecar {
        rate_hz: x.rate_hz,
        n_samples: x.len(),
        scenario_hash: scenario_hash.to_string(),
        format: "f64le-iq".to_string(),
    };
    let side_path = sidecar_path(path);
    std::fs::write(
        &side_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )
    .map_err(|source| Error::Io {
        path: side_path,
        source,
    })
}

pub fn read_iq(path: &Path) -> Result<(ComplexSignal, IqSidecar)> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let side_path = sidecar_path(path);
    let text = std::fs::read_to_string(&side_path).map_err(|source| Error::Io {
        path: side_path.clone(),
        source,
    })?;
    let sidecar: IqSidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side_path,
        source,
    })?;
    if bytes.len() != 16 * sidecar.n_samples {
        return Err(Error::config(format!(
            "{}: {} bytes but sidecar declares {} samples",
            path.display(),
            bytes.len(),
            sidecar.n_samples
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok((ComplexSignal::new(samples, sidecar.rate_hz)?, sidecar))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}
