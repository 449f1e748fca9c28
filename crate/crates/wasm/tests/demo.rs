use std::f64::consts::PI;

use entangle_core::analysis::aligned_four_det_gamma;
use entangle_core::gaussian::coth;
use entangle_wasm::{resonance_run, state_view, threshold_curve};

#[test]
fn unsqueezed_plus_mode_reproduces_aligned_det_gamma() {
    for &beta in &[0.1, 1.0, 5.0] {
        for &r in &[0.0, 0.3, 0.8, 1.5] {
            let v = state_view(r, 0.0, beta, 5, 3.0).unwrap();
            let want = aligned_four_det_gamma(r, beta);
            assert!((v.four_det_gamma() - want).abs() < 1e-10 * want.abs().max(1.0), "β {beta} r {r}");
            assert_eq!(v.bound_satisfied(), want < 0.0);
            assert_eq!(v.e_n() > 0.0, want < 0.0);
        }
    }
}

#[test]
fn opposite_squeezing_at_low_temperature_is_epr() {
    let v = state_view(0.6, -0.6, 60.0, 5, 3.0).unwrap();
    assert_eq!(v.label(), "epr");
    assert!((v.e_n() - 1.2).abs() < 1e-9);
}

#[test]
fn wigner_grids_are_normalized() {
    let n = 121;
    let hw = 8.0;
    let v = state_view(0.5, 0.2, 1.0, n, hw).unwrap();
    let cell = (2.0 * hw / (n - 1) as f64).powi(2);
    for w in [v.wigner_plus(), v.wigner_minus()] {
        assert_eq!(w.len(), n * n);
        let total: f64 = w.iter().sum::<f64>() * cell;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}

#[test]
fn threshold_falls_with_beta() {
    let c = threshold_curve(0.05, 20.0, 30).unwrap();
    assert_eq!(c.len(), 60);
    for pair in c.chunks(2) {
        assert!((pair[1] - 0.5 * coth(pair[0]).acosh()).abs() < 1e-12);
    }
    assert!(c.chunks(2).zip(c.chunks(2).skip(1)).all(|(a, b)| b[1] < a[1]));
    assert!(threshold_curve(1.0, 0.5, 10).is_err());
}

#[test]
fn resonance_entangles_only_with_the_bath() {
    let t_f = 6.0 * PI;
    let run = resonance_run("symmetric", 0.1, 1.0, 0.5, t_f, 60).unwrap();
    assert_eq!(run.times().len(), 61);
    assert!((run.times()[60] - t_f).abs() < 1e-12);
    assert!(run.e_n()[60] > 0.1, "{:?}", run.e_n());
    let closed = resonance_run("symmetric", 0.0, 1.0, 0.5, t_f, 10).unwrap();
    assert!(closed.e_n().iter().all(|&e| e < 1e-9));
    assert!(resonance_run("sideways", 0.1, 1.0, 0.5, t_f, 10).is_err());
    assert!(resonance_run("symmetric", 0.1, 1.0, 0.5, 200.0, 10).is_err());
}
