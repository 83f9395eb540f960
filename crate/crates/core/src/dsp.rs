//! Complex baseband signal primitives and the sub-band filter / symbol
//! window constructions.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(Error::param(format!(
                "sample rate must be positive, got {rate_hz}"
            )));
        }
        Ok(ComplexSignal { samples, rate_hz })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power per sample; zero for an empty signal.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }
}

/// Real, symmetric, odd-length FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTaps {
    taps: Vec<f64>,
}

impl FilterTaps {
    pub fn identity() -> Self {
        FilterTaps { taps: vec![1.0] }
    }

    /// Wraps taps after checking odd length and symmetry.
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::param(format!(
                "filter length {} must be odd",
                taps.len()
            )));
        }
        let l = taps.len();
        for k in 0..l / 2 {
            if (taps[k] - taps[l - 1 - k]).abs() > 1e-15 {
                return Err(Error::param(format!("taps not symmetric at index {k}")));
            }
        }
        Ok(FilterTaps { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Frequency response at `f` cycles per sample.
    pub fn response(&self, f: f64) -> Complex64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| Complex64::from_polar(h, -2.0 * PI * f * n as f64))
            .sum()
    }

    /// Zero-phase (delay-removed) real response at `f` cycles per sample.
    pub fn amplitude(&self, f: f64) -> f64 {
        let d = self.group_delay() as isize;
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| h * (2.0 * PI * f * (n as isize - d) as f64).cos())
            .sum()
    }

    /// Autocorrelation `sum_l h[l] h[l + lag]`.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        if lag >= self.taps.len() {
            return 0.0;
        }
        self.taps
            .iter()
            .zip(&self.taps[lag..])
            .map(|(a, b)| a * b)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached FFT plan. Plans are unnormalized in both directions.
pub(crate) fn fft_plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    })
}

/// Power-of-two DFT. The forward transform is unnormalized and the inverse
/// carries the `1/n` factor, so `inverse(forward(x)) == x`.
pub fn dft(x: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::param(format!("DFT size {n} is not a power of two")));
    }
    let mut buf = x.to_vec();
    fft_plan(n, direction).process(&mut buf);
    if direction == Direction::Inverse {
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(buf)
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine-to-the-0.6 taper over `n` in `[-(L-1)/2, (L-1)/2]`.
/// Both end taps are exactly zero.
fn filter_window(n: isize, len: usize) -> f64 {
    let half = ((len - 1) / 2) as isize;
    if n.unsigned_abs() as isize >= half {
        return 0.0;
    }
    (0.5 * (1.0 + (2.0 * PI * n as f64 / (len - 1) as f64).cos())).powf(0.6)
}

/// Windowed-sinc lowpass with `sinc(bandwidth * n / n_fft)` prototype,
/// normalized to a DC gain of `dc_gain`.
fn windowed_sinc(
    bandwidth: f64,
    n_fft: f64,
    filter_len: usize,
    dc_gain: f64,
) -> Result<FilterTaps> {
    if filter_len.is_multiple_of(2) {
        return Err(Error::param(format!(
            "filter length {filter_len} must be odd"
        )));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::param("filter bandwidth must be positive"));
    }
    if bandwidth > n_fft {
        return Err(Error::param(format!(
            "cutoff of {bandwidth}/{n_fft} of the sample rate exceeds Nyquist"
        )));
    }
    if filter_len == 1 {
        return Ok(FilterTaps {
            taps: vec![dc_gain],
        });
    }
    let half = (filter_len - 1) / 2;
    let side: Vec<f64> = (0..=half as isize)
        .map(|n| sinc(bandwidth * n as f64 / n_fft) * filter_window(n, filter_len))
        .collect();
    let mut taps = Vec::with_capacity(filter_len);
    taps.extend(side.iter().rev());
    taps.extend(&side[1..]);
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t *= dc_gain / sum);
    let residual = dc_gain - taps.iter().sum::<f64>();
    taps[half] += residual;
    Ok(FilterTaps { taps })
}

/// Sub-band lowpass: passband of `n_used + 2 r` subcarriers out of
/// `n_fft`, unit DC gain.
pub fn design_subband_filter(
    n_fft: usize,
    n_used: usize,
    r_subcarriers: f64,
    filter_len: usize,
) -> Result<FilterTaps> {
    if r_subcarriers < 0.0 {
        return Err(Error::param("transition band must be non-negative"));
    }
    windowed_sinc(
        n_used as f64 + 2.0 * r_subcarriers,
        n_fft as f64,
        filter_len,
        1.0,
    )
}

/// Interpolation lowpass for upsampling by `u`. The passband spans
/// `band_width_subcarriers` out of `n_fft_composite_equiv` bins at the
/// output rate, and the gain is `u` to restore amplitude after zero
/// stuffing.
pub fn design_interpolation_filter(
    u: usize,
    band_width_subcarriers: usize,
    n_fft_composite_equiv: usize,
    filter_len: usize,
) -> Result<FilterTaps> {
    if u == 0 {
        return Err(Error::param("upsampling factor must be positive"));
    }
    if u == 1 {
        return Ok(FilterTaps::identity());
    }
    if !u.is_power_of_two() {
        return Err(Error::param(format!(
            "upsampling factor {u} is not a power of two"
        )));
    }
    windowed_sinc(
        band_width_subcarriers as f64,
        n_fft_composite_equiv as f64,
        filter_len,
        u as f64,
    )
}

/// Default interpolation filter length: `8 u n_cp + 1`, at most 1025.
pub fn default_interpolation_len(u: usize, n_cp: usize) -> usize {
    (8 * u * n_cp + 1).min(1025)
}

/// Rising half of a Blackman window over `n_tr` samples.
pub fn blackman_transition(n_tr: usize) -> Result<Vec<f64>> {
    if !n_tr.is_multiple_of(2) {
        return Err(Error::param(format!(
            "transition length {n_tr} must be even"
        )));
    }
    let m = n_tr as f64;
    Ok((0..n_tr)
        .map(|n| {
            let n = n as f64;
            (0.42 - 0.5 * (PI * n / m).cos() + 0.08 * (2.0 * PI * n / m).cos()).max(0.0)
        })
        .collect())
}

/// w-OFDM symbol window of length `n_fft + n_cp_star + 2 n_prefix + 1`:
/// zeros, Blackman ramp up, flat top, ramp down, zeros.
pub fn wofdm_window(
    n_fft: usize,
    n_cp_star: usize,
    n_prefix: usize,
    n_tr: usize,
) -> Result<Vec<f64>> {
    if n_tr > 2 * n_prefix {
        return Err(Error::param(format!(
            "transition {n_tr} longer than twice the prefix {n_prefix}"
        )));
    }
    let up = blackman_transition(n_tr)?;
    if n_fft + n_cp_star + 1 < n_tr {
        return Err(Error::param("transition longer than the symbol"));
    }
    let pad = n_prefix - n_tr / 2;
    let flat = n_fft + n_cp_star - n_tr + 1;
    let mut w = Vec::with_capacity(n_fft + n_cp_star + 2 * n_prefix + 1);
    w.extend(std::iter::repeat_n(0.0, pad));
    w.extend(&up);
    w.extend(std::iter::repeat_n(1.0, flat));
    w.extend(up.iter().rev());
    w.extend(std::iter::repeat_n(0.0, pad));
    Ok(w)
}

pub fn upsample_zero_stuff(x: &ComplexSignal, u: usize) -> Result<ComplexSignal> {
    if u == 0 {
        return Err(Error::param("upsampling factor must be positive"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); x.len() * u];
    for (o, s) in out.iter_mut().step_by(u).zip(&x.samples) {
        *o = *s;
    }
    ComplexSignal::new(out, x.rate_hz * u as f64)
}

/// Keeps every `u`-th sample starting at `phase`.
pub fn decimate(x: &ComplexSignal, u: usize, phase: usize) -> Result<ComplexSignal> {
    if u == 0 || phase >= u {
        return Err(Error::param(format!(
            "bad decimation factor {u} / phase {phase}"
        )));
    }
    let samples = x.samples.iter().skip(phase).step_by(u).copied().collect();
    ComplexSignal::new(samples, x.rate_hz / u as f64)
}

/// `y[n] = x[n] exp(j 2 pi f n / rate)`, with `n` counted from the first
/// sample.
pub fn frequency_shift(x: &ComplexSignal, f_hz: f64) -> Result<ComplexSignal> {
    if f_hz.abs() >= x.rate_hz / 2.0 {
        return Err(Error::param(format!(
            "shift {f_hz} Hz beyond Nyquist of {} Hz",
            x.rate_hz
        )));
    }
    let mut y = x.samples.clone();
    mix_in_place(&mut y, f_hz / x.rate_hz);
    ComplexSignal::new(y, x.rate_hz)
}

pub(crate) fn mix_in_place(x: &mut [Complex64], cycles_per_sample: f64) {
    if cycles_per_sample == 0.0 {
        return;
    }
    for (n, v) in x.iter_mut().enumerate() {
        let c = cycles_per_sample * n as f64;
        let phase = 2.0 * PI * (c - c.floor());
        *v *= Complex64::from_polar(1.0, phase);
    }
}

const DIRECT_CONV_MAX_TAPS: usize = 512;

/// Full linear convolution, output length `len(x) + L - 1`.
pub fn convolve_full(x: &ComplexSignal, h: &FilterTaps) -> ComplexSignal {
    let samples = convolve(&x.samples, h.taps());
    ComplexSignal {
        samples,
        rate_hz: x.rate_hz,
    }
}

pub(crate) fn convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    if h.len() <= DIRECT_CONV_MAX_TAPS {
        convolve_direct(x, h)
    } else {
        convolve_overlap_save(x, h)
    }
}

fn convolve_direct(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (k, &hk) in h.iter().enumerate() {
        if hk == 0.0 {
            continue;
        }
        for (yv, xv) in y[k..].iter_mut().zip(x) {
            *yv += xv * hk;
        }
    }
    y
}

fn convolve_overlap_save(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let l = h.len();
    let out_len = x.len() + l - 1;
    let nfft = (4 * l).next_power_of_two();
    let block = nfft - l + 1;
    let fwd = fft_plan(nfft, Direction::Forward);
    let inv = fft_plan(nfft, Direction::Inverse);

    let mut hf: Vec<Complex64> = h.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    hf.resize(nfft, Complex64::new(0.0, 0.0));
    fwd.process(&mut hf);
    let scale = 1.0 / nfft as f64;
    hf.iter_mut().for_each(|v| *v *= scale);

    // x padded with l-1 zeros on the left; out-of-range reads are zero.
    let padded = |i: usize| -> Complex64 {
        if i < l - 1 {
            Complex64::new(0.0, 0.0)
        } else {
            x.get(i - (l - 1)).copied().unwrap_or_default()
        }
    };

    let mut y = Vec::with_capacity(out_len);
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut start = 0;
    while start < out_len {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = padded(start + j);
        }
        fwd.process(&mut buf);
        buf.iter_mut().zip(&hf).for_each(|(b, hv)| *b *= hv);
        inv.process(&mut buf);
        let take = block.min(out_len - start);
        y.extend_from_slice(&buf[l - 1..l - 1 + take]);
        start += block;
    }
    y
}
