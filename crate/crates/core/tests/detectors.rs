use std::f64::consts::TAU;

use approx::assert_abs_diff_eq;
use cvsim::clifford::{coherent_state, epr_pair, squeezed_vacuum};
use cvsim::detectors::{
    homodyne_measure, itd_pvm, kerr_count_uncertainty, kerr_qnd_measure, multiplexed_count, photon_count_pvm,
    pointer_measure, precision_check, undercount_probability, ClickTable, DetectorModel, Outcome, ThresholdOutcome,
};
use cvsim::fock::{expectation, quadrature_operators, MultiModeState};
use cvsim::{Error, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn pvm_frequencies_follow_poisson() {
    let s = coherent_state(C64::new(1.0, 0.0), 24).unwrap();
    let mut r = rng(1);
    let trials = 20_000;
    let mut counts = [0usize; 24];
    for _ in 0..trials {
        let rec = photon_count_pvm(&s, 0, &mut r).unwrap();
        let n = rec.outcome.count().unwrap() as usize;
        counts[n] += 1;
        assert_eq!(rec.post_state.amplitude(&[n]).norm(), 1.0);
    }
    let mut factorial = 1.0;
    for (n, &k) in counts.iter().enumerate().take(5) {
        if n > 0 {
            factorial *= n as f64;
        }
        let p = (-1f64).exp() / factorial;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((k as f64 / trials as f64 - p).abs() < 5.0 * se, "n = {n}");
    }
}

#[test]
fn threshold_detector_vacuum_probability() {
    let s = coherent_state(C64::new(0.8, 0.3), 30).unwrap();
    let mut r = rng(2);
    let rec = itd_pvm(&s, 0, &mut r).unwrap();
    let p0 = (-0.73f64).exp();
    match rec.outcome {
        Outcome::Threshold(ThresholdOutcome::Vacuum) => assert_abs_diff_eq!(rec.probability, p0, epsilon = 1e-12),
        Outcome::Threshold(ThresholdOutcome::Click) => {
            assert_abs_diff_eq!(rec.probability, 1.0 - p0, epsilon = 1e-12);
            assert!(rec.post_state.amplitude(&[0]).norm() < 1e-15);
        }
        other => panic!("unexpected outcome {other:?}"),
    }
}

#[test]
fn multiplexed_coherent_light_clicks_binomially() {
    // each of N detectors sees an independent coherent state alpha / sqrt(N)
    let (n_modes, d) = (4, 30);
    let mean: f64 = 1.5;
    let table = ClickTable::new(n_modes, d).unwrap();
    let photons = coherent_state(C64::new(mean.sqrt(), 0.0), d).unwrap().photon_distribution(0).unwrap();
    let p_click = 1.0 - (-mean / n_modes as f64).exp();
    for c in 0..=n_modes {
        let got: f64 = (0..d).map(|n| photons[n] * table.probability(n, c)).sum();
        let expected = binomial(n_modes, c) * p_click.powi(c as i32) * (1.0 - p_click).powi((n_modes - c) as i32);
        assert_abs_diff_eq!(got, expected, epsilon = 1e-10);
    }
}

#[test]
fn multiplexed_measurement_absorbs_the_signal() {
    let s = MultiModeState::number_state(3, 6).unwrap();
    let rec = multiplexed_count(&s, 0, 8, &mut rng(3)).unwrap();
    let clicks = rec.outcome.count().unwrap();
    assert!((1..=3).contains(&clicks));
    assert_abs_diff_eq!(rec.post_state.amplitude(&[0]).norm(), 1.0, epsilon = 1e-12);
}

#[test]
fn undercount_matches_distinct_bin_combinatorics() {
    for (k, n) in [(2, 4), (3, 8), (4, 16), (2, 2), (5, 7)] {
        let u = undercount_probability(k, n).unwrap();
        let distinct: f64 = (0..k).map(|i| (n - i) as f64 / n as f64).product();
        assert_abs_diff_eq!(u.exact, 1.0 - distinct, epsilon = 1e-12);
        assert_abs_diff_eq!(u.bound, (k * (k - 1)) as f64 / (2 * n) as f64, epsilon = 1e-15);
        assert!(u.exact <= u.bound + 1e-15);
    }
}

#[test]
fn kerr_probe_on_eleven_photons_reads_three_modulo_eight() {
    let s = MultiModeState::number_state(11, 16).unwrap();
    let chi_t = TAU / 8.0;
    let rec = kerr_qnd_measure(&s, 0, chi_t, 1e-4 * chi_t, &mut rng(4)).unwrap();
    assert!(matches!(rec.outcome, Outcome::Phase { inferred: 3, period: 8, .. }));
}

#[test]
fn pointer_on_eleven_photons_reads_eleven() {
    let s = MultiModeState::number_state(11, 16).unwrap();
    let rec = pointer_measure(&s, 0, 1.0, 0.1, &mut rng(5)).unwrap();
    assert_eq!(rec.outcome.count(), Some(11));
}

#[test]
fn half_period_noise_is_refused() {
    let chi_t = TAU / 8.0;
    let model = DetectorModel::Kerr {
        chi_t,
        delta_phi: chi_t / 2.0,
    };
    assert!(matches!(model.validate(), Err(Error::AmbiguousRounding { .. })));
    let s = MultiModeState::number_state(1, 4).unwrap();
    assert!(model.measure(&s, 0, &mut rng(6)).is_err());
}

#[test]
fn count_precision_example() {
    let delta_n = kerr_count_uncertainty(TAU / 64.0, 0.01);
    assert_abs_diff_eq!(delta_n, 0.64 / TAU, epsilon = 1e-15);
    assert!((delta_n - 0.102).abs() < 1e-3);
    let check = precision_check(delta_n, 1000, 0.1).unwrap();
    assert!(check.passed);
    assert!(!precision_check(delta_n, 1, 0.1).unwrap().passed);
}

#[test]
fn homodyne_samples_squeezed_variance() {
    let s = squeezed_vacuum(C64::new(0.4, 0.0), 40).unwrap();
    let mut r = rng(7);
    let trials = 4000;
    let xs: Vec<f64> = (0..trials)
        .map(|_| match homodyne_measure(&s, 0, &mut r, 0.05).unwrap().outcome {
            Outcome::Quadrature(x) => x,
            other => panic!("unexpected outcome {other:?}"),
        })
        .collect();
    let var = xs.iter().map(|x| x * x).sum::<f64>() / trials as f64;
    let expected = (-0.8f64).exp() / 2.0;
    // sample variance of a Gaussian has relative std sqrt(2 / trials)
    assert!((var / expected - 1.0).abs() < 4.0 * (2.0 / trials as f64).sqrt(), "var = {var}");
}

#[test]
fn homodyne_on_epr_steers_the_partner() {
    let (eta, d) = (0.5f64, 40);
    let s = epr_pair(eta, (d, d)).unwrap();
    let (q, _) = quadrature_operators(d).unwrap();
    let mut r = rng(8);
    for _ in 0..5 {
        let rec = homodyne_measure(&s, 0, &mut r, 0.01).unwrap();
        let a = match rec.outcome {
            Outcome::Quadrature(x) => x,
            other => panic!("unexpected outcome {other:?}"),
        };
        let rest = rec.remainder.unwrap();
        let mean = expectation(&rest, &q, &[0]).unwrap().re;
        let var = expectation(&rest, &q.powi(2).unwrap(), &[0]).unwrap().re - mean * mean;
        // Gaussian conditioning of the two-mode squeezed vacuum
        let c2 = (2.0 * eta).cosh();
        assert!((mean - a * (2.0 * eta).tanh()).abs() < 0.02, "a = {a}, mean = {mean}");
        assert!((var - 0.5 / c2).abs() < 0.01, "var = {var}");
    }
}
