//! Gray-mapped square QAM.
//!
//! Mapping: each symbol carries `k = log2(M)/2` bits per dimension, I bits
//! first then Q bits, most significant bit first. A dimension's bit label
//! `b` selects PAM level index `j = gray_decode(b)`, and level `j` sits at
//! `(L - 1 - 2j) / norm` with `L = sqrt(M)` and `norm = sqrt(2(M-1)/3)`.
//! So label 0 is the most positive level: QPSK `00` maps to `(1 + j)/sqrt(2)`.
//!
//! Hard decisions that land exactly on a threshold go to the lower level.
//!
//! Random streams use ChaCha12 seeded from a `u64`; independent trials
//! take separate ChaCha streams of the same seed (see [`substream`]).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Generator for trial `stream` of master seed `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pub bits: Vec<u8>,
    pub seed: u64,
}

pub fn random_bits(seed: u64, n: usize) -> BitStream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    BitStream {
        bits: fill_bits(&mut rng, n),
        seed,
    }
}

pub(crate) fn fill_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word: u64 = rng.random();
        let take = (n - bits.len()).min(64);
        bits.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    bits
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

fn gray_decode(mut g: usize) -> usize {
    let mut j = g;
    while g > 1 {
        g >>= 1;
        j ^= g;
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationMap {
    order: u32,
    levels: usize,
    bits_per_dim: usize,
    norm: f64,
    points: Vec<Complex64>,
}

impl ConstellationMap {
    pub fn new(order: u32) -> Result<Self> {
        if ![4, 16, 64, 256].contains(&order) {
            return Err(Error::param(format!("unsupported QAM order {order}")));
        }
        let bits_per_dim = order.trailing_zeros() as usize / 2;
        let levels = 1usize << bits_per_dim;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let mut map = ConstellationMap {
            order,
            levels,
            bits_per_dim,
            norm,
            points: Vec::new(),
        };
        map.points = (0..order as usize)
            .map(|s| {
                let i_lab = s >> bits_per_dim;
                let q_lab = s & (levels - 1);
                Complex64::new(map.level(gray_decode(i_lab)), map.level(gray_decode(q_lab)))
            })
            .collect();
        Ok(map)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim
    }

    /// Constellation point for each symbol index (the index is the bit label).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit label of symbol `s`, MSB first.
    pub fn label(&self, s: usize) -> Vec<u8> {
        let nb = self.bits_per_symbol();
        (0..nb).map(|b| ((s >> (nb - 1 - b)) & 1) as u8).collect()
    }

    fn level(&self, j: usize) -> f64 {
        (self.levels as f64 - 1.0 - 2.0 * j as f64) / self.norm
    }

    fn decide_level(&self, coord: f64) -> usize {
        let t = ((self.levels as f64 - 1.0) - coord * self.norm) / 2.0;
        let j = (t + 0.5).floor();
        j.clamp(0.0, self.levels as f64 - 1.0) as usize
    }

    /// Symbol index of the decision region containing `p`.
    pub fn decide(&self, p: Complex64) -> usize {
        (gray(self.decide_level(p.re)) << self.bits_per_dim) | gray(self.decide_level(p.im))
    }

    pub fn symbol_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let nb = self.bits_per_symbol();
        if !bits.len().is_multiple_of(nb) {
            return Err(Error::param(format!(
                "{} bits is not a multiple of {nb} bits per symbol",
                bits.len()
            )));
        }
        Ok(bits
            .chunks(nb)
            .map(|c| {
                c.iter()
                    .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
            })
            .collect())
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .symbol_indices(bits)?
            .into_iter()
            .map(|s| self.points[s])
            .collect())
    }

    pub fn demodulate(&self, points: &[Complex64]) -> Vec<u8> {
        points
            .iter()
            .flat_map(|&p| self.label(self.decide(p)))
            .collect()
    }

    /// Probability that a received point `rx`, sent as symbol `tx`, is
    /// decoded with a wrong bit when circular Gaussian noise of standard
    /// deviation `sigma_per_dim` per dimension is added. Averaged over the
    /// symbol's bits.
    pub fn bit_error_probability(
        &self,
        rx: Complex64,
        tx: usize,
        sigma_per_dim: f64,
    ) -> Result<f64> {
        if !(sigma_per_dim >= 0.0) {
            return Err(Error::param(format!(
                "negative noise deviation {sigma_per_dim}"
            )));
        }
        if tx >= self.points.len() {
            return Err(Error::param(format!("symbol index {tx} out of range")));
        }
        let i_lab = tx >> self.bits_per_dim;
        let q_lab = tx & (self.levels - 1);
        let total = self.dimension_errors(rx.re, i_lab, sigma_per_dim)
            + self.dimension_errors(rx.im, q_lab, sigma_per_dim);
        Ok(total / self.bits_per_symbol() as f64)
    }

    /// Sum over this dimension's bits of the probability that the bit flips.
    fn dimension_errors(&self, coord: f64, tx_label: usize, sigma: f64) -> f64 {
        let u = coord * self.norm;
        let s = sigma * self.norm;
        let l = self.levels;
        let k = self.bits_per_dim;
        if s == 0.0 {
            let got = gray(self.decide_level(coord));
            return (got ^ tx_label).count_ones() as f64;
        }
        // Probability of landing in each level's decision interval.
        // Level j owns (L-2-2j, L-2j] in unnormalized units.
        let region_prob = |j: usize| -> f64 {
            let lo = if j == l - 1 {
                f64::NEG_INFINITY
            } else {
                l as f64 - 2.0 - 2.0 * j as f64
            };
            let hi = if j == 0 {
                f64::INFINITY
            } else {
                l as f64 - 2.0 * j as f64
            };
            interval_prob(u, s, lo, hi)
        };
        let probs: Vec<f64> = (0..l).map(region_prob).collect();
        (0..k)
            .map(|b| {
                let mask = 1 << (k - 1 - b);
                probs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| (gray(j) ^ tx_label) & mask != 0)
                    .map(|(_, p)| p)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// `P(lo < u + n <= hi)` for `n ~ N(0, s^2)`, arranged so that no term
/// is a difference of two numbers close to one.
fn interval_prob(u: f64, s: f64, lo: f64, hi: f64) -> f64 {
    if lo >= u {
        q_function((lo - u) / s) - q_function((hi - u) / s)
    } else if hi <= u {
        q_function((u - hi) / s) - q_function((u - lo) / s)
    } else {
        1.0 - q_function((u - lo) / s) - q_function((hi - u) / s)
    }
}

pub fn qam_modulate(bits: &BitStream, order: u32) -> Result<Vec<Complex64>> {
    ConstellationMap::new(order)?.modulate(&bits.bits)
}

pub fn qam_demodulate(points: &[Complex64], order: u32) -> Result<BitStream> {
    Ok(BitStream {
        bits: ConstellationMap::new(order)?.demodulate(points),
        seed: 0,
    })
}

/// Exact AWGN bit error rate of Gray-coded square M-QAM at `Eb/N0`
/// (linear), from the per-bit-position closed form.
pub fn gray_qam_ber(order: u32, ebn0: f64) -> f64 {
    let m = order as f64;
    let sqrt_m = m.sqrt();
    let bits_per_dim = (order.trailing_zeros() / 2) as i32;
    let arg = (3.0 * m.log2() * ebn0 / (2.0 * (m - 1.0))).sqrt();
    let mut total = 0.0;
    for k in 1..=bits_per_dim {
        let p2 = 2f64.powi(k - 1);
        let upper = ((1.0 - 2f64.powi(-k)) * sqrt_m) as usize;
        let mut pk = 0.0;
        for i in 0..upper {
            let x = i as f64 * p2 / sqrt_m;
            let sign = if (x.floor() as i64) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let weight = p2 - (x + 0.5).floor();
            pk += sign * weight * libm::erfc((2 * i + 1) as f64 * arg);
        }
        total += pk / sqrt_m;
    }
    total / bits_per_dim as f64
}
