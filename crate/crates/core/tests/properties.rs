use std::f64::consts::TAU;

use cvsim::clifford::{beamsplitter, coherent_state, displacement, quadratic_phase, squeeze_one, squeeze_two};
use cvsim::detectors::{
    kerr_qnd_measure, photon_count_pvm, pointer_measure, undercount_probability, ClickTable, Outcome,
};
use cvsim::fit::fit_power_law;
use cvsim::fock::{apply, MultiModeState};
use cvsim::C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_state(amps: &[(f64, f64)]) -> MultiModeState {
    let v: Vec<C64> = amps.iter().map(|&(r, i)| C64::new(r, i)).collect();
    MultiModeState::new(vec![v.len()], v).unwrap().normalize().unwrap()
}

fn amplitudes(d: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d).prop_filter("nonzero", |v| {
        v.iter().map(|(r, i)| r * r + i * i).sum::<f64>() > 1e-3
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_mode_gates_are_unitary(re in -0.8..0.8f64, im in -0.8..0.8f64, c2 in -0.5..0.5f64, d in 4usize..20) {
        let alpha = C64::new(re, im);
        prop_assert!(displacement(alpha, d).unwrap().unitarity_error() < 1e-10);
        prop_assert!(squeeze_one(alpha, d).unwrap().unitarity_error() < 1e-10);
        prop_assert!(quadratic_phase(c2, re, im, d).unwrap().unitarity_error() < 1e-10);
    }

    #[test]
    fn two_mode_gates_are_unitary(eta in -0.6..0.6f64, theta in -3.2..3.2f64, d in 3usize..9) {
        prop_assert!(squeeze_two(C64::new(eta, 0.3 * eta), (d, d)).unwrap().unitarity_error() < 1e-10);
        prop_assert!(beamsplitter(theta, (d, d + 1)).unwrap().unitarity_error() < 1e-10);
    }

    #[test]
    fn gates_preserve_the_norm(amps in amplitudes(12), re in -0.5..0.5f64, im in -0.5..0.5f64) {
        let s = random_state(&amps);
        let out = apply(&s, &displacement(C64::new(re, im), 12).unwrap(), &[0]).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let out = apply(&out, &squeeze_one(C64::new(im, re), 12).unwrap(), &[0]).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counting_collapses_onto_the_outcome(amps in amplitudes(10), seed in any::<u64>()) {
        let s = random_state(&amps);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = photon_count_pvm(&s, 0, &mut rng).unwrap();
        let n = rec.outcome.count().unwrap() as usize;
        prop_assert!(rec.probability > 0.0 && rec.probability <= 1.0 + 1e-12);
        prop_assert!((rec.post_state.amplitude(&[n]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn click_table_rows_are_distributions(log_modes in 0u32..5, d in 1usize..10) {
        let table = ClickTable::new(1 << log_modes, d).unwrap();
        for n in 0..d {
            let row = table.row(n);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| p >= -1e-15));
            // never more clicks than photons
            prop_assert!(row.iter().enumerate().all(|(c, &p)| c <= n || p.abs() < 1e-15));
        }
    }

    #[test]
    fn undercount_never_exceeds_the_pair_bound(k in 1usize..40, extra in 0usize..200) {
        let n = k + extra;
        let u = undercount_probability(k, n).unwrap();
        prop_assert!(u.exact >= 0.0);
        prop_assert!(u.exact <= u.bound + 1e-14);
    }

    #[test]
    fn kerr_reads_counts_modulo_the_period(n in 0usize..30, period in 2usize..12, seed in any::<u64>()) {
        let chi_t = TAU / period as f64;
        let s = MultiModeState::number_state(n, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = kerr_qnd_measure(&s, 0, chi_t, 1e-3 * chi_t, &mut rng).unwrap();
        let matches_residue = matches!(rec.outcome, Outcome::Phase { inferred, .. } if inferred == n % period);
        prop_assert!(matches_residue);
    }

    #[test]
    fn pointer_never_aliases(n in 0usize..30, seed in any::<u64>()) {
        let s = MultiModeState::number_state(n, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = pointer_measure(&s, 0, 1.0, 0.05, &mut rng).unwrap();
        prop_assert_eq!(rec.outcome.count(), Some(n as i64));
    }

    #[test]
    fn power_law_fit_recovers_exact_exponents(slope in -3.0..3.0f64, scale in 0.1..10.0f64) {
        let x = [1.0, 2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| scale * v.powf(slope)).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-9);
    }

    #[test]
    fn coherent_states_are_normalized_below_cutoff(re in -1.5..1.5f64, im in -1.5..1.5f64) {
        let s = coherent_state(C64::new(re, im), 40).unwrap();
        prop_assert!(s.is_normalized());
        prop_assert!(s.leakage() < 1e-10);
    }
}
