//! Numerology and scenario data model.
//!
//! A scenario is an ordered list of sub-bands placed side by side in
//! frequency. Each sub-band has its own FFT size and subcarrier spacing
//! (always `f0 * 2^p`), so every sub-band sampling rate `n_fft * scs` is a
//! power-of-two fraction of the fastest one. That fastest rate is the
//! composite rate at which all sub-bands are summed.
//!
//! Guard bands are given as one shared gap in Hz between neighbouring
//! sub-bands. Each sub-band contributes half of the gap on each side, so
//! its guard in subcarriers is `gap_hz / scs_hz` and may be fractional.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Minimum subcarrier spacing in Hz.
pub const F0_HZ: f64 = 15_000.0;

/// Subcarriers per physical resource block.
pub const PRB_SUBCARRIERS: usize = 12;

const SUPPORTED_ORDERS: [u32; 4] = [4, 16, 64, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveformKind {
    #[serde(rename = "cp-ofdm")]
    CpOfdm,
    #[serde(rename = "f-ofdm")]
    FOfdm,
    #[serde(rename = "w-ofdm")]
    WOfdm,
}

impl WaveformKind {
    pub const ALL: [WaveformKind; 3] = [
        WaveformKind::CpOfdm,
        WaveformKind::FOfdm,
        WaveformKind::WOfdm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WaveformKind::CpOfdm => "cp-ofdm",
            WaveformKind::FOfdm => "f-ofdm",
            WaveformKind::WOfdm => "w-ofdm",
        }
    }
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp-ofdm" | "cp" => Ok(WaveformKind::CpOfdm),
            "f-ofdm" | "f" => Ok(WaveformKind::FOfdm),
            "w-ofdm" | "w" => Ok(WaveformKind::WOfdm),
            other => Err(Error::config(format!("unknown waveform `{other}`"))),
        }
    }
}

/// Parameters of one sub-band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubbandNumerology {
    /// IFFT size, a power of two.
    pub n_fft: usize,
    /// Cyclic prefix length in samples.
    pub n_cp: usize,
    /// Subcarrier spacing in Hz.
    pub scs_hz: f64,
    /// Number of data subcarriers, a whole number of resource blocks.
    pub n_used: usize,
    /// Sub-band filter length in taps (odd). Also sets the receive filter.
    pub filter_len: usize,
    /// One-sided filter transition band in Hz.
    pub transition_hz: f64,
    /// w-OFDM prefix/suffix length in samples.
    pub n_prefix: usize,
    /// w-OFDM window transition length in samples (even).
    pub n_transition: usize,
}

impl SubbandNumerology {
    /// Native sampling rate `n_fft * scs_hz`.
    pub fn sample_rate(&self) -> f64 {
        self.n_fft as f64 * self.scs_hz
    }

    /// One-sided transition band in subcarriers.
    pub fn r_subcarriers(&self) -> f64 {
        self.transition_hz / self.scs_hz
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn stride(&self) -> usize {
        self.n_fft + self.n_cp
    }

    /// w-OFDM cyclic prefix after handing `n_prefix` samples to the window.
    pub fn n_cp_star(&self) -> usize {
        self.n_cp.saturating_sub(self.n_prefix)
    }

    /// Exponent `p` with `scs_hz = f0 * 2^p`.
    pub fn scs_exponent(&self) -> Option<u32> {
        pow2_exponent(self.scs_hz / F0_HZ)
    }

    /// Exponent `q` with `n_fft = 2^q`.
    pub fn fft_exponent(&self) -> Option<u32> {
        self.n_fft
            .is_power_of_two()
            .then(|| self.n_fft.trailing_zeros())
    }

    /// Checks every per-band invariant except the guard, which depends on
    /// the scenario.
    pub fn validate(&self, waveform: WaveformKind) -> Result<()> {
        match self.fft_exponent() {
            Some(q) if q >= 4 => {}
            _ => {
                return Err(Error::config(format!(
                    "n_fft {} is not a power of two >= 16",
                    self.n_fft
                )))
            }
        }
        if self.scs_exponent().is_none() {
            return Err(Error::config(format!(
                "scs_hz {} is not f0 * 2^p with f0 = {F0_HZ} Hz",
                self.scs_hz
            )));
        }
        if self.n_used == 0 || !self.n_used.is_multiple_of(PRB_SUBCARRIERS) {
            return Err(Error::config(format!(
                "n_used {} is not a positive multiple of {PRB_SUBCARRIERS}",
                self.n_used
            )));
        }
        if self.n_used > self.n_fft {
            return Err(Error::config(format!(
                "n_used {} exceeds n_fft {}",
                self.n_used, self.n_fft
            )));
        }
        if self.filter_len.is_multiple_of(2) {
            return Err(Error::config(format!(
                "filter_len {} must be odd",
                self.filter_len
            )));
        }
        if !(self.transition_hz >= 0.0) {
            return Err(Error::config("transition_hz must be non-negative"));
        }
        if self.n_used as f64 + 2.0 * self.r_subcarriers() > self.n_fft as f64 {
            return Err(Error::config(format!(
                "filter cutoff ({} + 2*{}) subcarriers exceeds n_fft {}",
                self.n_used,
                self.r_subcarriers(),
                self.n_fft
            )));
        }
        if waveform == WaveformKind::WOfdm {
            if !self.n_transition.is_multiple_of(2) {
                return Err(Error::config(format!(
                    "n_transition {} must be even",
                    self.n_transition
                )));
            }
            if self.n_transition > self.n_prefix {
                return Err(Error::config(format!(
                    "n_transition {} exceeds n_prefix {}",
                    self.n_transition, self.n_prefix
                )));
            }
            if self.n_prefix >= self.n_cp {
                return Err(Error::config(format!(
                    "n_prefix {} must be smaller than n_cp {}",
                    self.n_prefix, self.n_cp
                )));
            }
        }
        Ok(())
    }
}

fn pow2_exponent(ratio: f64) -> Option<u32> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return None;
    }
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-9 * ratio {
        return None;
    }
    let r = rounded as u64;
    r.is_power_of_two().then(|| r.trailing_zeros())
}

/// An ordered set of sub-bands plus global simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub subbands: Vec<SubbandNumerology>,
    #[serde(default = "default_f0")]
    pub f0_hz: f64,
    pub waveform: WaveformKind,
    /// Shared guard gap between adjacent sub-bands in Hz.
    #[serde(default)]
    pub gap_hz: f64,
    /// Center frequency of the first sub-band. `None` centers the whole
    /// occupied spectrum on 0 Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1_hz: Option<f64>,
    /// Symbols carried by the sub-band with the longest symbol duration;
    /// faster sub-bands fill the same time span.
    pub n_symbols: usize,
    pub seed: u64,
    pub mod_order: u32,
}

fn default_f0() -> f64 {
    F0_HZ
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subbands.is_empty() {
            return Err(Error::config("scenario has no sub-bands"));
        }
        if self.f0_hz != F0_HZ {
            return Err(Error::config(format!(
                "f0_hz must be {F0_HZ}, got {}",
                self.f0_hz
            )));
        }
        if !SUPPORTED_ORDERS.contains(&self.mod_order) {
            return Err(Error::config(format!(
                "mod_order {} not in {:?}",
                self.mod_order, SUPPORTED_ORDERS
            )));
        }
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be positive"));
        }
        if !(self.gap_hz >= 0.0) || !self.gap_hz.is_finite() {
            return Err(Error::config("gap_hz must be non-negative"));
        }
        for (i, nm) in self.subbands.iter().enumerate() {
            nm.validate(self.waveform)
                .map_err(|e| Error::config(format!("sub-band {}: {}", i + 1, strip(e))))?;
            let guard = self.n_guard(i);
            if nm.n_used as f64 + guard > nm.n_fft as f64 {
                return Err(Error::config(format!(
                    "sub-band {}: n_used {} + guard {guard} exceeds n_fft {}",
                    i + 1,
                    nm.n_used,
                    nm.n_fft
                )));
            }
        }
        let fs = self.composite_rate()?;
        for (i, (fc, nm)) in self
            .center_frequencies()
            .iter()
            .zip(&self.subbands)
            .enumerate()
        {
            let half = nm.scs_hz * (nm.n_used as f64 + self.n_guard(i)) / 2.0;
            if fc.abs() + half > fs / 2.0 {
                return Err(Error::config(format!(
                    "sub-band {} at {fc} Hz does not fit the composite rate {fs} Hz",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n_bands(&self) -> usize {
        self.subbands.len()
    }

    /// Guard subcarriers of band `i`, split evenly between its two sides.
    pub fn n_guard(&self, i: usize) -> f64 {
        self.gap_hz / self.subbands[i].scs_hz
    }

    pub fn composite_rate(&self) -> Result<f64> {
        composite_rate(self)
    }

    pub fn upsampling_factor(&self, i: usize) -> usize {
        upsampling_factor(self, i)
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        center_frequencies(self)
    }

    /// Edges in Hz of the used subcarriers of band `i`.
    pub fn occupied_band(&self, i: usize) -> (f64, f64) {
        let f = self.center_frequencies()[i];
        let half = self.subbands[i].scs_hz * self.subbands[i].n_used as f64 / 2.0;
        (f - half, f + half)
    }

    /// Empty spectrum between band `i` and band `i + 1`.
    pub fn gap(&self, i: usize) -> (f64, f64) {
        (self.occupied_band(i).1, self.occupied_band(i + 1).0)
    }

    /// First-band center frequency actually used.
    pub fn effective_f1(&self) -> f64 {
        match self.f1_hz {
            Some(f1) => f1,
            None => {
                let offsets = self.center_offsets();
                let first = &self.subbands[0];
                let last = self.subbands.len() - 1;
                let lower = -first.scs_hz * (first.n_used as f64 + self.n_guard(0)) / 2.0;
                let upper = offsets[last]
                    + self.subbands[last].scs_hz
                        * (self.subbands[last].n_used as f64 + self.n_guard(last))
                        / 2.0;
                -(lower + upper) / 2.0
            }
        }
    }

    fn center_offsets(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.subbands.len());
        let mut f = 0.0;
        for i in 0..self.subbands.len() {
            if i > 0 {
                let prev = &self.subbands[i - 1];
                let cur = &self.subbands[i];
                f += prev.scs_hz * (prev.n_used as f64 + self.n_guard(i - 1)) / 2.0
                    + cur.scs_hz * (cur.n_used as f64 + self.n_guard(i)) / 2.0;
            }
            out.push(f);
        }
        out
    }

    /// Amplitude applied to band `i` at the composite rate so that every
    /// band has the same energy per resource element (equal PSD level).
    pub fn band_gain(&self, i: usize) -> f64 {
        let top = (0..self.n_bands())
            .find(|&j| self.upsampling_factor(j) == 1)
            .unwrap_or(0);
        let n_ref = self.subbands[top].n_fft as f64;
        (self.subbands[i].n_fft as f64 / (self.upsampling_factor(i) as f64 * n_ref)).sqrt()
    }

    /// Symbol count per band so that all bands cover the same time span.
    pub fn symbols_per_band(&self) -> Vec<usize> {
        let durations: Vec<usize> = (0..self.n_bands())
            .map(|i| self.subbands[i].stride() * self.upsampling_factor(i))
            .collect();
        let span = self.n_symbols * durations.iter().copied().max().unwrap_or(0);
        durations.iter().map(|&d| span.div_ceil(d)).collect()
    }

    /// Same scenario with `m` resource blocks of separation between
    /// adjacent bands and one-sided filter transition equal to half the gap.
    pub fn with_separation(&self, m: usize) -> ScenarioConfig {
        let gap = (PRB_SUBCARRIERS * m) as f64 * self.f0_hz;
        let mut sc = self.clone();
        sc.gap_hz = gap;
        for nm in &mut sc.subbands {
            nm.transition_hz = gap / 2.0;
        }
        sc
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::config(format!("scenario JSON: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Loads a built-in preset by name, or a JSON file by path.
    pub fn load(spec: &str) -> Result<Self> {
        if let Some(sc) = preset(spec) {
            return Ok(sc);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let sc: ScenarioConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        sc.validate()?;
        Ok(sc)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

pub fn subband_sample_rate(nm: &SubbandNumerology) -> f64 {
    nm.sample_rate()
}

pub fn composite_rate(sc: &ScenarioConfig) -> Result<f64> {
    sc.subbands
        .iter()
        .map(SubbandNumerology::sample_rate)
        .reduce(f64::max)
        .ok_or_else(|| Error::config("scenario has no sub-bands"))
}

pub fn upsampling_factor(sc: &ScenarioConfig, i: usize) -> usize {
    let exps: Vec<u32> = sc
        .subbands
        .iter()
        .map(|nm| nm.scs_exponent().unwrap_or(0) + nm.fft_exponent().unwrap_or(0))
        .collect();
    let top = exps.iter().copied().max().unwrap_or(0);
    1usize << (top - exps[i])
}

pub fn center_frequencies(sc: &ScenarioConfig) -> Vec<f64> {
    let f1 = sc.effective_f1();
    sc.center_offsets().into_iter().map(|o| f1 + o).collect()
}

/// Built-in scenarios.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "table1" => Some(table1()),
        "single-band" => Some(single_band()),
        "bypass" => Some(bypass()),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["table1", "single-band", "bypass"];

fn table1_band(scs_khz: f64, filter_len: usize) -> SubbandNumerology {
    SubbandNumerology {
        n_fft: 1024,
        n_cp: 64,
        scs_hz: scs_khz * 1e3,
        n_used: 15 * PRB_SUBCARRIERS,
        filter_len,
        transition_hz: 90e3,
        n_prefix: 32,
        n_transition: 32,
    }
}

/// Three bands at 30/60/15 kHz, N = 1024, 64-sample CP, 15 PRBs each,
/// 180 kHz gaps, 90 kHz transition bands, filter lengths 177/89/353.
pub fn table1() -> ScenarioConfig {
    ScenarioConfig {
        subbands: vec![
            table1_band(30.0, 177),
            table1_band(60.0, 89),
            table1_band(15.0, 353),
        ],
        f0_hz: F0_HZ,
        waveform: WaveformKind::CpOfdm,
        gap_hz: 180e3,
        f1_hz: None,
        n_symbols: 100,
        seed: 1,
        mod_order: 4,
    }
}

/// One 30 kHz band of the table1 set, alone.
pub fn single_band() -> ScenarioConfig {
    ScenarioConfig {
        subbands: vec![table1_band(30.0, 177)],
        gap_hz: 0.0,
        ..table1()
    }
}

/// Single band, no filtering anywhere: the receiver is an exact inverse of
/// the CP-OFDM transmitter.
pub fn bypass() -> ScenarioConfig {
    ScenarioConfig {
        subbands: vec![SubbandNumerology {
            n_fft: 256,
            n_cp: 16,
            scs_hz: F0_HZ,
            n_used: 240,
            filter_len: 1,
            transition_hz: 0.0,
            n_prefix: 8,
            n_transition: 8,
        }],
        f0_hz: F0_HZ,
        waveform: WaveformKind::CpOfdm,
        gap_hz: 0.0,
        f1_hz: Some(0.0),
        n_symbols: 64,
        seed: 1,
        mod_order: 4,
    }
}
