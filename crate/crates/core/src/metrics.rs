//! Spectrum and error-rate measurements.
//!
//! Eb/N0 is referenced to the demapper input: with unit equalized symbol
//! energy, the per-subcarrier complex noise variance there is
//! `1 / (log2(M) * Eb/N0)`. The composite-rate noise that produces it on
//! average is that variance divided by the band's mean noise gain. Both
//! the Monte Carlo and the semi-analytic estimators use this convention,
//! so they are directly comparable.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::dsp::{self, ComplexSignal, Direction};
use crate::error::{Error, Result};
use crate::link::{self, ReceiverCalibration};
use crate::modem::{self, ConstellationMap};
use crate::waveform::BurstMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment_len: usize,
    pub overlap: f64,
    pub window: WindowKind,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segment_len: 4096,
            overlap: 0.5,
            window: WindowKind::Hann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdCurve {
    pub freq_hz: Vec<f64>,
    /// Density in dB relative to the maximum bin.
    pub psd_db: Vec<f64>,
    pub resolution_hz: f64,
    /// Absolute density (power per Hz) of the 0 dB level.
    pub reference_density: f64,
}

impl PsdCurve {
    fn nearest(&self, f_hz: f64) -> usize {
        let step = self.resolution_hz;
        let first = self.freq_hz[0];
        (((f_hz - first) / step).round().max(0.0) as usize).min(self.freq_hz.len() - 1)
    }

    /// Relative level in dB of the bin nearest `f_hz`.
    pub fn level_at(&self, f_hz: f64) -> f64 {
        self.psd_db[self.nearest(f_hz)]
    }

    /// Absolute density of bin `k`.
    pub fn density(&self, k: usize) -> f64 {
        self.reference_density * 10f64.powf(self.psd_db[k] / 10.0)
    }

    fn range(&self, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.freq_hz.len()).filter(move |&k| self.freq_hz[k] >= lo && self.freq_hz[k] <= hi)
    }

    pub fn max_in(&self, lo: f64, hi: f64) -> f64 {
        self.range(lo, hi)
            .map(|k| self.psd_db[k])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_in(&self, lo: f64, hi: f64) -> f64 {
        self.range(lo, hi)
            .map(|k| self.psd_db[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// Level in dB of the mean density over `[lo, hi]`; NaN when no bin
    /// falls inside.
    pub fn mean_in(&self, lo: f64, hi: f64) -> f64 {
        let (sum, n) = self.range(lo, hi).fold((0.0, 0usize), |(s, n), k| {
            (s + 10f64.powf(self.psd_db[k] / 10.0), n + 1)
        });
        if n == 0 {
            return f64::NAN;
        }
        10.0 * (sum / n as f64).log10()
    }

    /// Total power, the density integrated over all bins.
    pub fn integrated_power(&self) -> f64 {
        (0..self.freq_hz.len())
            .map(|k| self.density(k))
            .sum::<f64>()
            * self.resolution_hz
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,psd_db\n");
        for (f, p) in self.freq_hz.iter().zip(&self.psd_db) {
            s.push_str(&format!("{f},{p:.6}\n"));
        }
        s
    }
}

/// Averaged modified periodogram, two-sided, frequencies in
/// `(-fs/2, fs/2]`.
pub fn welch_psd(x: &ComplexSignal, cfg: &WelchConfig) -> Result<PsdCurve> {
    let n = cfg.segment_len;
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param(format!(
            "segment length {n} is not a power of two"
        )));
    }
    if x.len() < n {
        return Err(Error::param(format!(
            "signal of {} samples shorter than one segment of {n}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(Error::param("overlap fraction must be in [0, 1)"));
    }
    let window: Vec<f64> = match cfg.window {
        WindowKind::Hann => (0..n)
            .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
            .collect(),
        WindowKind::Rectangular => vec![1.0; n],
    };
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let step = (((1.0 - cfg.overlap) * n as f64).round() as usize).max(1);
    let starts: Vec<usize> = (0..=(x.len() - n) / step).map(|s| s * step).collect();
    let plan = dsp::fft_plan(n, Direction::Forward);

    let acc = starts
        .par_chunks(16)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for &s in chunk {
                for ((b, &v), &w) in buf.iter_mut().zip(&x.samples[s..s + n]).zip(&window) {
                    *b = v * w;
                }
                plan.process(&mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += b.norm_sqr();
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; n], |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        });

    let scale = 1.0 / (x.rate_hz * wpow * starts.len() as f64);
    let df = x.rate_hz / n as f64;
    let half = (n / 2) as isize;
    let mut freq = Vec::with_capacity(n);
    let mut dens = Vec::with_capacity(n);
    for k in (-half + 1)..=half {
        freq.push(k as f64 * df);
        dens.push(acc[k.rem_euclid(n as isize) as usize] * scale);
    }
    let peak = dens.iter().copied().fold(0.0, f64::max);
    let psd_db = dens
        .iter()
        .map(|&d| {
            if peak > 0.0 && d > 0.0 {
                10.0 * (d / peak).log10()
            } else {
                -300.0
            }
        })
        .collect();
    Ok(PsdCurve {
        freq_hz: freq,
        psd_db,
        resolution_hz: df,
        reference_density: peak,
    })
}

/// Floor reported for an exact match.
pub const EVM_FLOOR_DB: f64 = -300.0;

pub fn evm_db(rx: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if rx.len() != reference.len() || rx.is_empty() {
        return Err(Error::param(format!(
            "EVM needs equal non-empty inputs, got {} and {}",
            rx.len(),
            reference.len()
        )));
    }
    let e_ref: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    if e_ref == 0.0 {
        return Err(Error::param("reference has zero energy"));
    }
    let e_err: f64 = rx
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if e_err == 0.0 {
        return Ok(EVM_FLOOR_DB);
    }
    Ok((10.0 * (e_err / e_ref).log10()).max(EVM_FLOOR_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BerMethod {
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
    #[serde(rename = "semi-analytic")]
    SemiAnalytic,
}

impl BerMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BerMethod::MonteCarlo => "monte-carlo",
            BerMethod::SemiAnalytic => "semi-analytic",
        }
    }
}

impl fmt::Display for BerMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BerMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "monte-carlo" => Ok(BerMethod::MonteCarlo),
            "sa" | "semi-analytic" => Ok(BerMethod::SemiAnalytic),
            other => Err(Error::config(format!("unknown BER method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub ber: f64,
    pub method: BerMethod,
    pub n_bits: u64,
    pub n_errors: u64,
    /// Monte Carlo run hit its bit budget without any error.
    pub upper_bound_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub label: String,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ebn0_db,ber,method,n_bits,n_errors\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{:.9e},{},{},{}\n",
                p.ebn0_db, p.ber, p.method, p.n_bits, p.n_errors
            ));
        }
        s
    }
}

/// A scenario, the band under test and its calibration.
#[derive(Debug, Clone)]
pub struct BandLink {
    pub scenario: ScenarioConfig,
    pub band: usize,
    pub calibration: ReceiverCalibration,
}

impl BandLink {
    pub fn new(scenario: ScenarioConfig, band: usize) -> Result<Self> {
        scenario.validate()?;
        let calibration = link::calibrate(&scenario, band)?;
        Ok(BandLink {
            scenario,
            band,
            calibration,
        })
    }

    /// Demapper-input complex noise variance for `ebn0_db`.
    pub fn demapper_noise_variance(&self, order: u32, ebn0_db: f64) -> f64 {
        let bits = (order as f64).log2();
        1.0 / (bits * 10f64.powf(ebn0_db / 10.0))
    }

    /// Composite-rate per-sample noise variance for `ebn0_db`.
    pub fn channel_noise_variance(&self, order: u32, ebn0_db: f64) -> f64 {
        self.demapper_noise_variance(order, ebn0_db) / self.calibration.mean_noise_gain()
    }

    fn receive(&self, y: &ComplexSignal, meta: &BurstMeta) -> Result<Vec<Complex64>> {
        link::receive_subband(y, &self.scenario, self.band, meta, &self.calibration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_errors: 100,
            max_bits: 100_000_000,
        }
    }
}

/// Trials run per batch; fixed so results do not depend on thread count.
const MC_BATCH: u64 = 8;

/// Bit errors counted by noise-injection simulation of the full chain,
/// all bands carrying random data.
pub fn monte_carlo_ber(
    link: &BandLink,
    order: u32,
    ebn0_db: f64,
    stop: StopRule,
    seed: u64,
) -> Result<BerPoint> {
    let map = ConstellationMap::new(order)?;
    let variance = link.channel_noise_variance(order, ebn0_db);
    let run = |trial: u64| -> Result<(u64, u64)> {
        let frame = link::transmit(&link.scenario, &map, &mut modem::substream(seed, 2 * trial))?;
        let noisy = link::awgn_with(
            &frame.composite,
            variance,
            &mut modem::substream(seed, 2 * trial + 1),
        );
        let rx = link.receive(&noisy, &frame.metas[link.band])?;
        let errors = rx
            .iter()
            .zip(&frame.symbols[link.band])
            .map(|(&p, &s)| (map.decide(p) ^ s).count_ones() as u64)
            .sum();
        Ok((errors, (rx.len() * map.bits_per_symbol()) as u64))
    };
    let (mut errors, mut bits, mut trial) = (0u64, 0u64, 0u64);
    while errors < stop.min_errors && bits < stop.max_bits {
        let batch: Vec<(u64, u64)> = (trial..trial + MC_BATCH)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?;
        for (e, b) in batch {
            if errors >= stop.min_errors || bits >= stop.max_bits {
                break;
            }
            errors += e;
            bits += b;
        }
        trial += MC_BATCH;
    }
    Ok(BerPoint {
        ebn0_db,
        ber: errors as f64 / bits as f64,
        method: BerMethod::MonteCarlo,
        n_bits: bits,
        n_errors: errors,
        upper_bound_only: errors == 0,
    })
}

/// Noiseless received points of one multi-band burst, ready for
/// semi-analytic BER evaluation at any Eb/N0.
#[derive(Debug, Clone)]
pub struct SemiAnalytic {
    map: ConstellationMap,
    rx: Vec<Complex64>,
    tx: Vec<usize>,
    /// Per-subcarrier noise gain relative to the band mean.
    relative_noise: Vec<f64>,
    demapper_bits: f64,
}

const SEMI_ANALYTIC_STREAM: u64 = 0x5A;

impl SemiAnalytic {
    pub fn prepare(link: &BandLink, order: u32, seed: u64) -> Result<Self> {
        let map = ConstellationMap::new(order)?;
        let frame = link::transmit(
            &link.scenario,
            &map,
            &mut modem::substream(seed, SEMI_ANALYTIC_STREAM),
        )?;
        let rx = link.receive(&frame.composite, &frame.metas[link.band])?;
        let mean = link.calibration.mean_noise_gain();
        let relative_noise = link
            .calibration
            .noise_gain_per_subcarrier
            .iter()
            .map(|g| g / mean)
            .collect();
        Ok(SemiAnalytic {
            demapper_bits: (order as f64).log2(),
            map,
            rx,
            tx: frame.symbols[link.band].clone(),
            relative_noise,
        })
    }

    /// Equalized noiseless points and the symbols they carry.
    pub fn points(&self) -> (&[Complex64], &[usize]) {
        (&self.rx, &self.tx)
    }

    pub fn evm_db(&self) -> f64 {
        let reference: Vec<Complex64> = self.tx.iter().map(|&s| self.map.points()[s]).collect();
        evm_db(&self.rx, &reference).unwrap_or(EVM_FLOOR_DB)
    }

    pub fn ber(&self, ebn0_db: f64) -> f64 {
        let var = 1.0 / (self.demapper_bits * 10f64.powf(ebn0_db / 10.0));
        let nu = self.relative_noise.len();
        let sigmas: Vec<f64> = self
            .relative_noise
            .iter()
            .map(|r| (var * r / 2.0).sqrt())
            .collect();
        let total: f64 = self
            .rx
            .par_chunks(nu)
            .zip(self.tx.par_chunks(nu))
            .map(|(rx, tx)| {
                rx.iter()
                    .zip(tx)
                    .zip(&sigmas)
                    .map(|((&p, &s), &sd)| {
                        self.map
                            .bit_error_probability(p, s, sd)
                            .expect("valid inputs")
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        total / self.rx.len() as f64
    }

    pub fn point(&self, ebn0_db: f64) -> BerPoint {
        BerPoint {
            ebn0_db,
            ber: self.ber(ebn0_db),
            method: BerMethod::SemiAnalytic,
            n_bits: (self.rx.len() * self.map.bits_per_symbol()) as u64,
            n_errors: 0,
            upper_bound_only: false,
        }
    }
}

pub fn semianalytic_ber(link: &BandLink, order: u32, ebn0_db: f64, seed: u64) -> Result<BerPoint> {
    Ok(SemiAnalytic::prepare(link, order, seed)?.point(ebn0_db))
}

/// Initial bisection interval and the widest allowed one, in dB.
const BRACKET_START: (f64, f64) = (0.0, 30.0);
const BRACKET_LIMIT: (f64, f64) = (-5.0, 40.0);

/// Eb/N0 in dB at which `ber` (non-increasing in Eb/N0) crosses `target`.
pub fn bisect_ebn0(ber: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let (mut lo, mut hi) = BRACKET_START;
    if ber(lo) < target {
        lo = BRACKET_LIMIT.0;
    }
    if ber(hi) > target {
        hi = BRACKET_LIMIT.1;
    }
    let (b_lo, b_hi) = (ber(lo), ber(hi));
    if !(b_lo >= target && b_hi <= target) {
        return Err(Error::NotBracketed {
            target,
            lo_db: lo,
            hi_db: hi,
        });
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let b = ber(mid);
        if (b - target).abs() <= 1e-4 && hi - lo <= 0.01 {
            return Ok(mid);
        }
        if b > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub waveform: crate::config::WaveformKind,
    pub mod_order: u32,
    pub band: usize,
    /// `None` when the target BER was not reachable.
    pub ebn0_db: Option<f64>,
    pub note: Option<String>,
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("m,waveform,mod_order,band,ebn0_db\n");
    for p in points {
        let v = p
            .ebn0_db
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "nan".into());
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            p.m,
            p.waveform,
            p.mod_order,
            p.band + 1,
            v
        ));
    }
    s
}

/// Eb/N0 needed to reach `target` BER on `band` for each separation of
/// `m` resource blocks. Unreachable points are reported, not fatal.
pub fn ebn0_at_target_ber(
    template: &ScenarioConfig,
    band: usize,
    order: u32,
    target: f64,
    m_grid: &[usize],
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if !(target > 0.0 && target < 0.5) {
        return Err(Error::config(format!(
            "target BER {target} outside (0, 0.5)"
        )));
    }
    m_grid
        .par_iter()
        .map(|&m| {
            let sc = template.with_separation(m);
            let link = BandLink::new(sc, band)?;
            let sa = SemiAnalytic::prepare(&link, order, seed)?;
            let (ebn0_db, note) = match bisect_ebn0(|db| sa.ber(db), target) {
                Ok(v) => (Some(v), None),
                Err(e @ Error::NotBracketed { .. }) => (None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            Ok(SweepPoint {
                m,
                waveform: template.waveform,
                mod_order: order,
                band,
                ebn0_db,
                note,
            })
        })
        .collect()
}

/// Inverse of [`modem::q_function`] by bisection.
pub fn q_inverse(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if modem::q_function(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;
    use crate::link::ChannelSpec;

    fn tone(f: f64, fs: f64, n: usize) -> ComplexSignal {
        let s = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64 / fs))
            .collect();
        ComplexSignal::new(s, fs).unwrap()
    }

    #[test]
    fn welch_tone() {
        let fs = 1e6;
        let f = 123_456.0;
        let x = tone(f, fs, 1 << 16);
        let psd = welch_psd(
            &x,
            &WelchConfig {
                segment_len: 1024,
                ..Default::default()
            },
        )
        .unwrap();
        let peak = psd
            .psd_db
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((psd.freq_hz[peak] - f).abs() <= psd.resolution_hz / 2.0);
        let mut sorted = psd.psd_db.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(-sorted[sorted.len() / 2] >= 30.0);
        assert!(psd.freq_hz[0] > -fs / 2.0 && *psd.freq_hz.last().unwrap() == fs / 2.0);
    }

    #[test]
    fn welch_white_noise_level() {
        let fs = 2e6;
        let x = ComplexSignal::new(vec![Complex64::new(0.0, 0.0); 1 << 18], fs).unwrap();
        let y = link::awgn(
            &x,
            &ChannelSpec {
                noise_variance_per_sample: 0.25,
                seed: 3,
            },
        );
        let psd = welch_psd(
            &y,
            &WelchConfig {
                segment_len: 512,
                ..Default::default()
            },
        )
        .unwrap();
        let expect = 0.25 / fs;
        for k in 0..psd.freq_hz.len() {
            let db = 10.0 * (psd.density(k) / expect).log10();
            assert!(db.abs() < 1.5, "bin {k}: {db} dB");
        }
        let p = psd.integrated_power();
        assert!((10.0 * (p / y.power()).log10()).abs() < 0.2);
    }

    #[test]
    fn welch_too_short() {
        let x = tone(0.0, 1.0, 100);
        assert!(welch_psd(&x, &WelchConfig::default()).is_err());
    }

    #[test]
    fn evm_cases() {
        let r = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0)];
        assert_eq!(evm_db(&r, &r).unwrap(), EVM_FLOOR_DB);
        assert!(evm_db(&[Complex64::new(0.0, 0.0); 2], &r).unwrap().abs() < 1e-12);
        let off: Vec<Complex64> = r.iter().map(|v| v + Complex64::new(0.1, 0.0)).collect();
        assert!((evm_db(&off, &r).unwrap() - (-20.0)).abs() < 1e-12);
        assert!(evm_db(&r, &[Complex64::new(0.0, 0.0); 2]).is_err());
        assert!(evm_db(&r[..1], &r).is_err());
    }

    #[test]
    fn bypass_semi_analytic_is_closed_form() {
        let link = BandLink::new(config::bypass(), 0).unwrap();
        let sa = SemiAnalytic::prepare(&link, 4, 1).unwrap();
        for db in [0.0, 3.0, 6.0, 9.0] {
            let expect = modem::q_function((2.0 * 10f64.powf(db / 10.0)).sqrt());
            assert!((sa.ber(db) - expect).abs() < 1e-12 * expect.max(1e-3));
        }
        assert_eq!(
            sa.ber(4.0),
            SemiAnalytic::prepare(&link, 4, 1).unwrap().ber(4.0)
        );
    }

    #[test]
    fn bisection_on_closed_form() {
        let target = 0.05;
        let g = q_inverse(target).powi(2) / 2.0;
        let expect = 10.0 * g.log10();
        assert!((expect - 1.3128).abs() < 1e-3);
        let got = bisect_ebn0(
            |db| modem::q_function((2.0 * 10f64.powf(db / 10.0)).sqrt()),
            target,
        )
        .unwrap();
        assert!((got - expect).abs() < 0.01);
        assert!(matches!(
            bisect_ebn0(|_| 0.3, target),
            Err(Error::NotBracketed { .. })
        ));
    }

    #[test]
    fn monte_carlo_bypass_high_snr() {
        let link = BandLink::new(config::bypass(), 0).unwrap();
        let p = monte_carlo_ber(
            &link,
            4,
            30.0,
            StopRule {
                min_errors: 10,
                max_bits: 200_000,
            },
            1,
        )
        .unwrap();
        assert_eq!(p.n_errors, 0);
        assert!(p.upper_bound_only);
        assert!(p.n_bits >= 200_000);
    }
}
