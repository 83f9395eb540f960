use mixnum::config::{self, WaveformKind};
use mixnum::metrics;

const IDEAL_QPSK_DB: f64 = 1.3128;

fn sweep(kind: WaveformKind, order: u32, m: &[usize]) -> Vec<f64> {
    let mut sc = config::table1();
    sc.waveform = kind;
    sc.n_symbols = 20;
    metrics::ebn0_at_target_ber(&sc, 2, order, 0.05, m, 3)
        .unwrap()
        .iter()
        .map(|p| p.ebn0_db.unwrap())
        .collect()
}

#[test]
fn more_separation_never_hurts() {
    for kind in WaveformKind::ALL {
        for order in [4, 256] {
            let v = sweep(kind, order, &[0, 1, 2, 3, 4]);
            assert!(
                v.windows(2).all(|p| p[1] <= p[0] + 0.1),
                "{kind} {order}: {v:?}"
            );
        }
    }
}

#[test]
fn wide_separation_approaches_single_numerology() {
    assert!((metrics::q_inverse(0.05) - 1.6449).abs() < 1e-4);
    for kind in WaveformKind::ALL {
        let v = sweep(kind, 4, &[8])[0];
        assert!(
            (IDEAL_QPSK_DB - 0.01..IDEAL_QPSK_DB + 0.05).contains(&v),
            "{kind}: {v}"
        );
    }
}

#[test]
fn unreachable_target_is_reported_per_point() {
    let mut sc = config::table1();
    sc.n_symbols = 20;
    let pts = metrics::ebn0_at_target_ber(&sc, 2, 256, 1e-12, &[0], 1).unwrap();
    assert!(pts[0].ebn0_db.is_none());
    assert!(pts[0].note.is_some());
    assert!(metrics::sweep_to_csv(&pts).ends_with(",nan\n"));
    assert!(metrics::ebn0_at_target_ber(&sc, 2, 4, 0.7, &[0], 1).is_err());
}
