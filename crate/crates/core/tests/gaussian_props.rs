use entangle_core::analysis::{
    aligned_four_det_gamma, det_gamma_decomposition, normal_mode_transform, squeezing_of, temperature_bound_check,
    to_normal_modes, NormalModeState, SqueezingParams,
};
use entangle_core::gaussian::{self, sample, two_mode_nu_oracle, CovarianceMatrix, SymplecticForm};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sampled_maps_are_symplectic(seed in any::<u64>()) {
        let s = sample::random_symplectic(&mut rng(seed), 1.0);
        let omega = SymplecticForm::new(2);
        let residual = (&s * omega.matrix() * s.transpose() - omega.matrix()).amax();
        prop_assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn symplectic_eigenvalues_are_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = sample::random_physical_state(&mut r, 4.0, 0.8);
        let s = sample::random_symplectic(&mut r, 0.8);
        let moved = sigma.congruence(&s).unwrap();
        let a = gaussian::symplectic_eigenvalues(&sigma).unwrap();
        let b = gaussian::symplectic_eigenvalues(&moved).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * x.max(1.0), "{a:?} vs {b:?}");
        }
        prop_assert!(a[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn log_negativity_is_locally_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sigma = sample::random_physical_state(&mut r, 3.0, 1.0);
        let local = sample::random_local_symplectic(&mut r, 1.0);
        let before = gaussian::neg_log_nu(&sigma).unwrap();
        let after = gaussian::neg_log_nu(&sigma.congruence(&local).unwrap()).unwrap();
        prop_assert!((before - after).abs() < 1e-8, "{before} vs {after}");
    }

    #[test]
    fn oracle_matches_eigen_path(seed in any::<u64>()) {
        let sigma = sample::random_physical_state(&mut rng(seed), 5.0, 1.0);
        let eigen = gaussian::min_pt_symplectic_eigenvalue(&sigma).unwrap();
        let oracle = two_mode_nu_oracle(&sigma).unwrap();
        prop_assert!((eigen - oracle).abs() < 1e-9 * eigen.max(1.0), "{eigen} vs {oracle}");
    }

    #[test]
    fn positive_det_gamma_means_separable(seed in any::<u64>()) {
        let sigma = sample::random_physical_state(&mut rng(seed), 3.0, 1.0);
        if gaussian::det_gamma(&sigma).unwrap() >= 0.0 {
            prop_assert_eq!(gaussian::log_negativity(&sigma).unwrap(), 0.0);
        }
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>()) {
        let sigma = sample::random_physical_state(&mut rng(seed), 3.0, 1.0);
        let twice = gaussian::partial_transpose(&gaussian::partial_transpose(&sigma, 1).unwrap(), 1).unwrap();
        prop_assert!((twice.entries() - sigma.entries()).amax() < 1e-15);
    }

    #[test]
    fn normal_modes_round_trip(seed in any::<u64>()) {
        let sigma = sample::random_physical_state(&mut rng(seed), 3.0, 1.0);
        let back = to_normal_modes(&sigma).unwrap().to_local();
        prop_assert!((back.entries() - sigma.entries()).amax() < 1e-12);
    }

    #[test]
    fn squeezing_parameters_reconstruct_the_block(seed in any::<u64>()) {
        let sigma = sample::random_physical_state(&mut rng(seed), 4.0, 1.2);
        let nm = to_normal_modes(&sigma).unwrap();
        for block in [nm.plus(), nm.minus()] {
            let p = squeezing_of(&block).unwrap();
            prop_assert!(p.r >= 0.0 && (0.0..std::f64::consts::PI).contains(&p.phi));
            let err = (p.reconstruct() - block).amax();
            prop_assert!(err < 1e-9 * block.amax().max(1.0), "{err}");
        }
    }

    #[test]
    fn squeezing_parameters_are_recovered(r in 0.01f64..2.0, phi in 0.0f64..3.14, a in 1.0f64..5.0) {
        let m = SqueezingParams { r, phi, a }.reconstruct();
        let p = squeezing_of(&m).unwrap();
        prop_assert!((p.r - r).abs() < 1e-9 && (p.a - a).abs() < 1e-9 && (p.phi - phi).abs() < 1e-7, "{p:?}");
    }

    #[test]
    fn det_gamma_identity_without_cross_block(
        rp in -1.5f64..1.5, rm in -1.5f64..1.5, ap in 1.0f64..4.0, am in 1.0f64..4.0, php in 0.0f64..3.14, phm in 0.0f64..3.14,
    ) {
        let plus = SqueezingParams { r: rp.abs(), phi: php, a: ap }.reconstruct();
        let minus = SqueezingParams { r: rm.abs(), phi: phm, a: am }.reconstruct();
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&plus);
        m.view_mut((2, 2), (2, 2)).copy_from(&minus);
        let nm = NormalModeState { sigma: CovarianceMatrix::new(m).unwrap(), transform: normal_mode_transform() };
        let local = nm.to_local();
        let d = det_gamma_decomposition(&to_normal_modes(&local).unwrap());
        prop_assert!(d.identity_holds);
        let direct = 4.0 * gaussian::det_gamma(&local).unwrap();
        prop_assert!((d.four_det_gamma - direct).abs() < 1e-9 * direct.abs().max(1.0), "{} vs {direct}", d.four_det_gamma);
    }
}

#[test]
fn two_mode_squeezed_vacuum_negativity_is_two_r() {
    for r in [0.1, 0.5, 1.0, 2.0] {
        let sigma = CovarianceMatrix::two_mode_squeezed_vacuum(r);
        let e = gaussian::log_negativity(&sigma).unwrap();
        assert!((e - 2.0 * r).abs() < 1e-9, "r = {r}: {e}");
        assert!((two_mode_nu_oracle(&sigma).unwrap() - (-2.0 * r).exp()).abs() < 1e-9);
    }
}

#[test]
fn product_states_are_separable() {
    let vac = CovarianceMatrix::vacuum(2);
    assert_eq!(gaussian::log_negativity(&vac).unwrap(), 0.0);
    let th = CovarianceMatrix::thermal(2, 0.3);
    assert_eq!(gaussian::log_negativity(&th).unwrap(), 0.0);
    let sq = vac.congruence(&sample::squeezer(2, 0, 1.3)).unwrap();
    assert!(gaussian::log_negativity(&sq).unwrap() < 1e-12);
}

#[test]
fn temperature_bound_matches_aligned_det_gamma_on_grid() {
    for beta in [0.1, 0.5, 1.0, 2.0, 10.0] {
        let threshold = 0.5 * gaussian::coth(beta).acosh();
        for i in 0..=10 {
            let r = 0.2 * i as f64;
            let bound = temperature_bound_check(r, beta).unwrap();
            let dg = aligned_four_det_gamma(r, beta);
            if (r - threshold).abs() > 1e-9 {
                assert_eq!(bound.satisfied, dg < 0.0, "beta {beta}, r {r}: margin {}, 4detγ {dg}", bound.margin);
            }
        }
        assert!(aligned_four_det_gamma(threshold, beta).abs() < 1e-9);
    }
}

#[test]
fn sorted_eigenvalues_of_thermal_state() {
    let th = CovarianceMatrix::thermal(2, 1.0);
    let nu = sorted(gaussian::symplectic_eigenvalues(&th).unwrap());
    let c = gaussian::coth(0.5);
    assert!(nu.iter().all(|v| (v - c).abs() < 1e-12), "{nu:?}");
}
