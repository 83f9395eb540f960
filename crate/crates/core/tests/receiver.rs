use mixnum::config::{self, ScenarioConfig, WaveformKind};
use mixnum::link::{self, ChannelSpec, ReceiverCalibration};
use mixnum::metrics::{self, BandLink, SemiAnalytic};
use mixnum::modem::{self, ConstellationMap};
use mixnum::waveform::{self, BurstMeta};
use mixnum::ComplexSignal;
use num_complex::Complex64;

fn small_table1(kind: WaveformKind) -> ScenarioConfig {
    let mut sc = config::table1();
    sc.waveform = kind;
    sc.n_symbols = 20;
    sc
}

// Per-subcarrier output variance for white input of the given variance,
// accumulated over `trials` independent noise records.
#[allow(clippy::too_many_arguments)]
fn measured_noise(
    sc: &ScenarioConfig,
    band: usize,
    cal: &ReceiverCalibration,
    meta: &BurstMeta,
    len: usize,
    variance: f64,
    seed: u64,
    trials: u64,
) -> Vec<f64> {
    let nu = sc.subbands[band].n_used;
    let zero = ComplexSignal::new(
        vec![Complex64::new(0.0, 0.0); len],
        sc.composite_rate().unwrap(),
    )
    .unwrap();
    let mut acc = vec![0.0; nu];
    let mut count = 0usize;
    for t in 0..trials {
        let ch = ChannelSpec {
            noise_variance_per_sample: variance,
            seed: seed * 1000 + t,
        };
        let y = link::awgn(&zero, &ch);
        let rx = link::receive_subband(&y, sc, band, meta, cal).unwrap();
        for sym in rx.chunks(nu) {
            for (a, v) in acc.iter_mut().zip(sym) {
                *a += v.norm_sqr();
            }
            count += 1;
        }
    }
    acc.iter().map(|a| a / count as f64).collect()
}

#[test]
fn analytic_noise_gain_matches_measurement() {
    let map = ConstellationMap::new(4).unwrap();
    for kind in WaveformKind::ALL {
        let sc = small_table1(kind);
        let frame = link::transmit(&sc, &map, &mut modem::substream(2, 0)).unwrap();
        for band in 0..3 {
            let cal = link::calibrate(&sc, band).unwrap();
            let got = measured_noise(
                &sc,
                band,
                &cal,
                &frame.metas[band],
                frame.composite.len(),
                1.0,
                3,
                10,
            );
            let mean: f64 = got.iter().sum::<f64>() / got.len() as f64;
            let rel = mean / cal.mean_noise_gain() - 1.0;
            assert!(rel.abs() < 0.02, "{kind} band {band}: {rel}");
            for (g, m) in cal.noise_gain_per_subcarrier.chunks(30).zip(got.chunks(30)) {
                let a: f64 = g.iter().sum();
                let b: f64 = m.iter().sum();
                assert!((b / a - 1.0).abs() < 0.06, "{kind} band {band}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn noise_gain_is_linear_in_input_variance() {
    let sc = small_table1(WaveformKind::FOfdm);
    let map = ConstellationMap::new(4).unwrap();
    let frame = link::transmit(&sc, &map, &mut modem::substream(2, 0)).unwrap();
    let cal = link::calibrate(&sc, 2).unwrap();
    let len = frame.composite.len();
    let one = measured_noise(&sc, 2, &cal, &frame.metas[2], len, 1.0, 4, 6);
    let two = measured_noise(&sc, 2, &cal, &frame.metas[2], len, 2.0, 5, 6);
    let ratio = two.iter().sum::<f64>() / one.iter().sum::<f64>();
    assert!((ratio - 2.0).abs() < 0.06, "{ratio}");
}

#[test]
fn multirate_path_adds_only_interpolation_error() {
    let map = ConstellationMap::new(16).unwrap();
    for kind in WaveformKind::ALL {
        let sc = small_table1(kind);
        let frame = link::transmit(&sc, &map, &mut modem::substream(5, 0)).unwrap();
        for band in 0..3 {
            let nm = &sc.subbands[band];
            let pts: Vec<Complex64> = frame.symbols[band]
                .iter()
                .map(|&s| map.points()[s])
                .collect();
            let grid = waveform::map_to_subcarriers(&pts, nm).unwrap();
            let b = waveform::build_burst(kind, &grid, nm).unwrap();
            let cal = link::calibrate(&sc, band).unwrap();
            let y = waveform::compose_band(&b, &sc, band).unwrap();
            let multi = link::receive_subband(&y, &sc, band, &b.meta, &cal).unwrap();

            let mut alone = sc.clone();
            alone.subbands = vec![nm.clone()];
            let cal1 = link::calibrate(&alone, 0).unwrap();
            let y1 = waveform::compose_band(&b, &alone, 0).unwrap();
            let single = link::receive_subband(&y1, &alone, 0, &b.meta, &cal1).unwrap();
            let evm = metrics::evm_db(&multi, &single).unwrap();
            assert!(evm < -60.0, "{kind} band {band}: {evm}");
        }
    }
}

#[test]
fn timing_error_of_one_native_sample_is_gross() {
    let sc = small_table1(WaveformKind::CpOfdm);
    let map = ConstellationMap::new(16).unwrap();
    let frame = link::transmit(&sc, &map, &mut modem::substream(6, 0)).unwrap();
    for band in 0..3 {
        let cal = link::calibrate(&sc, band).unwrap();
        let u = sc.upsampling_factor(band);
        let mut late = vec![Complex64::new(0.0, 0.0); u];
        late.extend_from_slice(&frame.composite.samples);
        let y = ComplexSignal::new(late, frame.composite.rate_hz).unwrap();
        let rx = link::receive_subband(&y, &sc, band, &frame.metas[band], &cal).unwrap();
        let reference: Vec<Complex64> = frame.symbols[band]
            .iter()
            .map(|&s| map.points()[s])
            .collect();
        let evm = metrics::evm_db(&rx, &reference).unwrap();
        assert!(evm > -10.0, "band {band}: {evm}");
    }
}

const F_OFDM_BAND2_EVM_DB: f64 = -29.265;

#[test]
fn table1_f_ofdm_band2_evm_regression() {
    let mut sc = config::table1();
    sc.waveform = WaveformKind::FOfdm;
    let link = BandLink::new(sc, 1).unwrap();
    let evm = SemiAnalytic::prepare(&link, 4, 1).unwrap().evm_db();
    assert!((evm - F_OFDM_BAND2_EVM_DB).abs() < 0.01, "{evm}");
}

#[test]
fn cp_ofdm_band3_has_worst_evm() {
    let sc = config::table1();
    let evm: Vec<f64> = (0..3)
        .map(|b| {
            let link = BandLink::new(sc.clone(), b).unwrap();
            SemiAnalytic::prepare(&link, 4, 1).unwrap().evm_db()
        })
        .collect();
    assert!(evm[2] > evm[0] && evm[2] > evm[1], "{evm:?}");
}

#[test]
fn w_ofdm_without_transition_matches_cp_ofdm_windows() {
    let sc = config::bypass();
    let nm = sc.subbands[0].clone();
    let bits = modem::random_bits(8, nm.n_used * 4 * 10);
    let grid = waveform::map_to_subcarriers(&modem::qam_modulate(&bits, 16).unwrap(), &nm).unwrap();
    let cp = waveform::build_burst(WaveformKind::CpOfdm, &grid, &nm).unwrap();
    let mut wsc = sc.clone();
    wsc.waveform = WaveformKind::WOfdm;
    wsc.subbands[0].n_transition = 0;
    let w = waveform::build_burst(WaveformKind::WOfdm, &grid, &wsc.subbands[0]).unwrap();
    let a = link::receive_raw(
        &waveform::compose_band(&cp, &sc, 0).unwrap(),
        &sc,
        0,
        &cp.meta,
    )
    .unwrap();
    let b = link::receive_raw(
        &waveform::compose_band(&w, &wsc, 0).unwrap(),
        &wsc,
        0,
        &w.meta,
    )
    .unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn monte_carlo_ber_decreases_with_ebn0() {
    let link = BandLink::new(small_table1(WaveformKind::WOfdm), 0).unwrap();
    let stop = metrics::StopRule {
        min_errors: 300,
        max_bits: 20_000_000,
    };
    let bers: Vec<f64> = [0.0, 2.0, 4.0, 6.0]
        .iter()
        .map(|&d| metrics::monte_carlo_ber(&link, 4, d, stop, 9).unwrap().ber)
        .collect();
    assert!(bers.windows(2).all(|p| p[1] < p[0]), "{bers:?}");
}
