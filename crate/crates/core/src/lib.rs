//! Mixed-numerology OFDM downlink simulator.
//!
//! Several OFDM sub-bands with different subcarrier spacings are generated
//! at their own sampling rates, interpolated to a common rate, shifted to
//! their center frequencies and summed. Each sub-band can use plain
//! CP-OFDM, sub-band filtered OFDM (f-OFDM) or windowed OFDM with
//! overlap-add (w-OFDM). A single-band receiver recovers any one band so
//! that adjacent-channel interference between numerologies can be measured
//! as PSD, EVM and BER (Monte Carlo or semi-analytic).
//!
//! Modules, bottom up:
//!
//! - [`config`]: numerology and scenario model, rate and frequency plan.
//! - [`dsp`]: FFT, filters, windows, resampling, mixing, convolution.
//! - [`modem`]: Gray-mapped QAM and the per-point bit error kernel.
//! - [`waveform`]: burst builders and the multirate combiner.
//! - [`link`]: AWGN channel, receiver, calibration.
//! - [`metrics`]: Welch PSD, EVM, BER estimators, separation sweep.
//! - [`cli`]: the `mixnum` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod cli;
pub mod config;
pub mod dsp;
pub mod error;
pub mod link;
pub mod metrics;
pub mod modem;
pub mod waveform;

pub use config::{ScenarioConfig, SubbandNumerology, WaveformKind};
pub use dsp::{ComplexSignal, FilterTaps};
pub use error::{Error, Result};
