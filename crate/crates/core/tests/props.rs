use proptest::prelude::*;
use spotvol::eig::{hoffman_wielandt_gap, spectrum_l1_distance, SymMatrix};
use spotvol::fourier2::increment_coeffs;
use spotvol::io::{read_path_csv, write_path_csv};
use spotvol::qv::{QvConfig, QvEstimator};
use spotvol::PathSample;
use std::f64::consts::TAU;

fn sym(d: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-10.0..10.0_f64, d * d)
        .prop_map(move |v| SymMatrix::from_upper_fn(d, |i, j| v[i * d + j]))
}

fn pair() -> impl Strategy<Value = (SymMatrix, SymMatrix)> {
    (1usize..7).prop_flat_map(|d| (sym(d), sym(d)))
}

fn path_with(horizon: f64, d: usize, n: usize) -> impl Strategy<Value = PathSample> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0_f64, n + 1), d)
        .prop_map(move |cols| PathSample::on_uniform_grid(horizon, cols).unwrap())
}

fn path(horizon: f64) -> impl Strategy<Value = PathSample> {
    (1usize..4, 8usize..60).prop_flat_map(move |(d, n)| path_with(horizon, d, n))
}

fn path_pair(horizon: f64) -> impl Strategy<Value = (PathSample, PathSample)> {
    (1usize..4, 8usize..60).prop_flat_map(move |(d, n)| (path_with(horizon, d, n), path_with(horizon, d, n)))
}

fn map_path(p: &PathSample, f: impl Fn(f64) -> f64) -> PathSample {
    let cols = p.columns().iter().map(|c| c.iter().map(|&x| f(x)).collect()).collect();
    PathSample::on_uniform_grid(p.horizon(), cols).unwrap()
}

fn close(a: &SymMatrix, b: &SymMatrix, rel: f64) -> bool {
    a.entrywise_l1_distance(b).unwrap() <= rel * (1.0 + b.frobenius_norm())
}

proptest! {
    #[test]
    fn hoffman_wielandt((a, b) in pair()) {
        let (sa, sb) = (a.spectrum().unwrap(), b.spectrum().unwrap());
        let lhs: f64 = sa.values().iter().zip(sb.values()).map(|(x, y)| (x - y).powi(2)).sum();
        let rhs = hoffman_wielandt_gap(&a, &b).unwrap().powi(2);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        prop_assert!(spectrum_l1_distance(&sa, &sb).unwrap() <= (a.dim() as f64).sqrt() * rhs.sqrt() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn spectrum_sum_is_trace(a in (1usize..7).prop_flat_map(sym)) {
        let s = a.spectrum().unwrap();
        prop_assert!((s.sum() - a.trace()).abs() <= 1e-10 * (1.0 + a.frobenius_norm()));
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn qv_shift_and_scale(p in path(1.0), shift in -100.0..100.0_f64, scale in 0.1..10.0_f64) {
        let cfg = QvConfig { bandwidth: 0.25, holder_alpha: 0.5 };
        let base = QvEstimator::new(&p, cfg).unwrap();
        let shifted_path = map_path(&p, |x| x + shift);
        let scaled_path = map_path(&p, |x| scale * x);
        let shifted = QvEstimator::new(&shifted_path, cfg).unwrap();
        let scaled = QvEstimator::new(&scaled_path, cfg).unwrap();
        for t in base.valid_times() {
            let m = base.estimate(t).unwrap();
            prop_assert!(close(&shifted.estimate(t).unwrap(), &m, 1e-10));
            let mut m2 = m.clone();
            m2.scale(scale * scale);
            prop_assert!(close(&scaled.estimate(t).unwrap(), &m2, 1e-12));
        }
    }

    #[test]
    fn increment_coeffs_are_linear((p, q) in path_pair(TAU), a in -3.0..3.0_f64, b in -3.0..3.0_f64) {
        let cols = p.columns().iter().zip(q.columns())
            .map(|(x, y)| x.iter().zip(y).map(|(u, v)| a * u + b * v).collect())
            .collect();
        let mixed = PathSample::on_uniform_grid(TAU, cols).unwrap();
        for j in 0..p.dim() {
            let (cp, cq, cm) = (
                increment_coeffs(&p, j, 10).unwrap(),
                increment_coeffs(&q, j, 10).unwrap(),
                increment_coeffs(&mixed, j, 10).unwrap(),
            );
            for k in 0..=10 {
                prop_assert!((cm.cosine[k] - a * cp.cosine[k] - b * cq.cosine[k]).abs() < 1e-9);
                prop_assert!((cm.sine[k] - a * cp.sine[k] - b * cq.sine[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(p in path(3.7)) {
        let mut buf = Vec::new();
        write_path_csv(&p, &mut buf).unwrap();
        let back = read_path_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.times(), p.times());
        prop_assert_eq!(back.columns(), p.columns());
        prop_assert_eq!(back.labels(), p.labels());
    }
}
