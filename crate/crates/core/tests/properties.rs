use mixnum::config::{self, ScenarioConfig, SubbandNumerology, WaveformKind};
use mixnum::dsp;
use mixnum::metrics::{self, WelchConfig};
use mixnum::modem::{self, ConstellationMap};
use mixnum::waveform::{self, BurstMeta};
use mixnum::ComplexSignal;
use num_complex::Complex64;
use proptest::prelude::*;

fn numerology() -> impl Strategy<Value = SubbandNumerology> {
    (4u32..=7, 0u32..=2)
        .prop_flat_map(|(q, p)| {
            let n = 1usize << q;
            let max_prb = (n - 4) / 12;
            (
                Just(n),
                Just(15e3 * (1u32 << p) as f64),
                2..=n / 4,
                1..=max_prb.max(1),
                0usize..=2,
                0usize..=20,
            )
        })
        .prop_flat_map(|(n, scs, cp, prb, r, half_len)| {
            (Just((n, scs, cp, prb, r, half_len)), 0..cp)
        })
        .prop_flat_map(|((n, scs, cp, prb, r, half_len), nm)| {
            let tr = 0..=nm / 2;
            (Just((n, scs, cp, prb, r, half_len, nm)), tr)
        })
        .prop_map(
            |((n, scs, cp, prb, r, half_len, nm), tr_half)| SubbandNumerology {
                n_fft: n,
                n_cp: cp,
                scs_hz: scs,
                n_used: 12 * prb,
                filter_len: 2 * half_len + 1,
                transition_hz: r as f64 * scs,
                n_prefix: nm,
                n_transition: 2 * tr_half,
            },
        )
}

fn kind() -> impl Strategy<Value = WaveformKind> {
    prop_oneof![
        Just(WaveformKind::CpOfdm),
        Just(WaveformKind::FOfdm),
        Just(WaveformKind::WOfdm)
    ]
}

fn random_grid(nm: &SubbandNumerology, n_sym: usize, seed: u64) -> waveform::SubcarrierGrid {
    let bits = modem::random_bits(seed, nm.n_used * 2 * n_sym);
    waveform::map_to_subcarriers(&modem::qam_modulate(&bits, 4).unwrap(), nm).unwrap()
}

fn two_band(kind: WaveformKind, m: usize) -> ScenarioConfig {
    let band = |scs: f64| SubbandNumerology {
        n_fft: 64,
        n_cp: 8,
        scs_hz: scs,
        n_used: 24,
        filter_len: 17,
        transition_hz: 0.0,
        n_prefix: 4,
        n_transition: 4,
    };
    let sc = ScenarioConfig {
        subbands: vec![band(15e3), band(30e3)],
        f0_hz: 15e3,
        waveform: kind,
        gap_hz: 0.0,
        f1_hz: None,
        n_symbols: 4,
        seed: 1,
        mod_order: 4,
    };
    sc.with_separation(m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn burst_length_follows_waveform(nm in numerology(), k in kind(), n_sym in 1usize..5, seed in any::<u64>()) {
        prop_assume!(nm.validate(k).is_ok());
        let b = waveform::build_burst(k, &random_grid(&nm, n_sym, seed), &nm).unwrap();
        let expected = BurstMeta::expected(k, &nm, n_sym);
        prop_assert_eq!(b.meta, expected);
        prop_assert_eq!(b.signal.len(), expected.total_len);
        let stride = nm.n_fft + nm.n_cp;
        let want = match k {
            WaveformKind::CpOfdm => n_sym * stride,
            WaveformKind::FOfdm => n_sym * stride + nm.filter_len - 1,
            WaveformKind::WOfdm => n_sym * stride + nm.n_prefix + 1,
        };
        prop_assert_eq!(b.signal.len(), want);
    }

    #[test]
    fn cyclic_prefix_repeats_symbol_tail(nm in numerology(), n_sym in 1usize..4, seed in any::<u64>()) {
        prop_assume!(nm.validate(WaveformKind::CpOfdm).is_ok());
        let b = waveform::build_cp_ofdm(&random_grid(&nm, n_sym, seed), &nm).unwrap();
        let s = &b.signal.samples;
        let stride = nm.n_fft + nm.n_cp;
        for k in 0..n_sym {
            let start = k * stride;
            prop_assert_eq!(&s[start..start + nm.n_cp], &s[start + nm.n_fft..start + stride]);
        }
    }

    #[test]
    fn wofdm_window_is_palindromic_in_unit_interval(n in 4usize..200, cp_star in 0usize..40, nm in 0usize..20, tr in 0usize..20) {
        let tr = 2 * (tr / 2);
        prop_assume!(tr <= 2 * nm && tr <= n + cp_star + 1);
        let w = dsp::wofdm_window(n, cp_star, nm, tr).unwrap();
        prop_assert_eq!(w.len(), n + cp_star + 2 * nm + 1);
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((0..w.len()).all(|k| w[k] == w[w.len() - 1 - k]));
    }

    #[test]
    fn subband_filter_is_normalized_and_symmetric(prb in 1usize..6, r in 0.0f64..3.0, half in 0usize..150) {
        let n = 128;
        let nu = 12 * prb;
        prop_assume!(nu as f64 + 2.0 * r <= n as f64);
        let h = dsp::design_subband_filter(n, nu, r, 2 * half + 1).unwrap();
        let t = h.taps();
        prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert!((0..t.len()).all(|k| t[k] == t[t.len() - 1 - k]));
        if t.len() > 1 {
            prop_assert!(t[0] == 0.0);
        }
    }

    #[test]
    fn compose_is_linear(k in kind(), m in 0usize..3, a in -2.0f64..2.0, s1 in any::<u64>(), s2 in any::<u64>()) {
        let sc = two_band(k, m);
        prop_assert!(sc.validate().is_ok());
        let bursts = |seed: u64, scale: f64| -> Vec<waveform::Burst> {
            sc.subbands
                .iter()
                .enumerate()
                .map(|(i, nm)| {
                    let mut g = random_grid(nm, sc.symbols_per_band()[i], seed + i as u64);
                    g.symbols.iter_mut().flatten().for_each(|v| *v *= scale);
                    waveform::build_burst(k, &g, nm).unwrap()
                })
                .collect()
        };
        let x = waveform::compose(&bursts(s1, 1.0), &sc).unwrap();
        let y = waveform::compose(&bursts(s2, 1.0), &sc).unwrap();
        let mut sum = bursts(s1, a);
        for (b, other) in sum.iter_mut().zip(bursts(s2, 1.0)) {
            for (u, v) in b.signal.samples.iter_mut().zip(&other.signal.samples) {
                *u += v;
            }
        }
        let z = waveform::compose(&sum, &sc).unwrap();
        for ((zz, xx), yy) in z.samples.iter().zip(&x.samples).zip(&y.samples) {
            prop_assert!((zz - (xx * a + yy)).norm() < 1e-9);
        }
    }

    #[test]
    fn scenario_json_round_trips(seed in any::<u64>(), n_sym in 1usize..500, m in 0usize..9, k in kind(), order in prop_oneof![Just(4u32), Just(16), Just(64), Just(256)]) {
        let mut sc = config::table1().with_separation(m);
        sc.seed = seed;
        sc.n_symbols = n_sym;
        sc.waveform = k;
        sc.mod_order = order;
        let back = ScenarioConfig::from_json(&sc.to_json()).unwrap();
        prop_assert_eq!(&back, &sc);
        prop_assert_eq!(back.hash(), sc.hash());
    }

    #[test]
    fn multirate_plan_is_consistent(exps in prop::collection::vec(0u32..3, 1..5), m in 0usize..5) {
        let subbands: Vec<SubbandNumerology> = exps
            .iter()
            .map(|&p| SubbandNumerology {
                n_fft: 1024,
                n_cp: 64,
                scs_hz: 15e3 * (1u32 << p) as f64,
                n_used: 96,
                filter_len: 65,
                transition_hz: 0.0,
                n_prefix: 16,
                n_transition: 16,
            })
            .collect();
        let sc = ScenarioConfig {
            subbands,
            f0_hz: 15e3,
            waveform: WaveformKind::CpOfdm,
            gap_hz: 0.0,
            f1_hz: None,
            n_symbols: 2,
            seed: 0,
            mod_order: 4,
        }
        .with_separation(m);
        let fs = sc.composite_rate().unwrap();
        for i in 0..sc.n_bands() {
            let u = sc.upsampling_factor(i);
            prop_assert!(u.is_power_of_two());
            prop_assert_eq!(sc.subbands[i].sample_rate() * u as f64, fs);
        }
        let f = sc.center_frequencies();
        prop_assert!(f.windows(2).all(|p| p[1] > p[0]));
        for i in 0..sc.n_bands().saturating_sub(1) {
            let (lo, hi) = sc.gap(i);
            prop_assert!((hi - lo - sc.gap_hz).abs() < 1e-6);
        }
        let spans: Vec<usize> = sc
            .symbols_per_band()
            .iter()
            .enumerate()
            .map(|(i, &n)| n * sc.subbands[i].stride() * sc.upsampling_factor(i))
            .collect();
        prop_assert!(spans.iter().all(|&s| s == spans[0]));
    }

    #[test]
    fn demapper_picks_nearest_point(order in prop_oneof![Just(4u32), Just(16), Just(64), Just(256)], re in -1.6f64..1.6, im in -1.6f64..1.6) {
        let map = ConstellationMap::new(order).unwrap();
        let p = Complex64::new(re, im);
        let got = map.decide(p);
        let best = map
            .points()
            .iter()
            .map(|q| (q - p).norm_sqr())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((map.points()[got] - p).norm_sqr() <= best + 1e-12);
    }

    #[test]
    fn point_error_probability_falls_with_noise(order in prop_oneof![Just(4u32), Just(16), Just(64), Just(256)], s in 0usize..256, sigma in 0.01f64..1.0) {
        let map = ConstellationMap::new(order).unwrap();
        let s = s % order as usize;
        let p = map.points()[s];
        let hi = map.bit_error_probability(p, s, sigma).unwrap();
        let lo = map.bit_error_probability(p, s, sigma * 0.8).unwrap();
        prop_assert!(lo <= hi + 1e-15);
        prop_assert!((0.0..=1.0).contains(&hi));
    }

    #[test]
    fn gray_qam_ber_is_monotone(order in prop_oneof![Just(4u32), Just(16), Just(64), Just(256)], a in -5.0f64..25.0, d in 0.01f64..5.0) {
        let f = |x: f64| modem::gray_qam_ber(order, 10f64.powf(x / 10.0));
        prop_assert!(f(a + d) <= f(a));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn welch_conserves_power(seed in any::<u64>(), amp in 0.1f64..10.0, tone in -0.4f64..0.4) {
        let bits = modem::random_bits(seed, 2 * 40_000);
        let noise = modem::qam_modulate(&bits, 4).unwrap();
        let x: Vec<Complex64> = noise
            .iter()
            .enumerate()
            .map(|(n, v)| v * amp + Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * tone * n as f64))
            .collect();
        let sig = ComplexSignal::new(x, 1.0e6).unwrap();
        let psd = metrics::welch_psd(&sig, &WelchConfig::default()).unwrap();
        let ratio = 10.0 * (psd.integrated_power() / sig.power()).log10();
        prop_assert!(ratio.abs() < 0.2, "{}", ratio);
    }
}
