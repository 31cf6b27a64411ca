use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::json;

use super::{trial_rng, ExperimentConfig, ExperimentReport, StreamTag, Table};
use crate::detectors::{measure_with_table, undercount_probability, ClickTable, Outcome};
use crate::error::{Error, Result};
use crate::fit::fit_power_law;
use crate::fock::MultiModeState;

/// Monte Carlo of `k` photons through an `N`-detector tree, checked
/// against the combinatorial collision probability and its bound.
pub fn run_undercount(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let c = &config.undercount;
    let mut report = ExperimentReport::new("undercount", config.seed, c);
    let mut table = Table::new(
        "undercount",
        &["k", "N", "exact", "bound", "tree_probability", "frequency", "std_error", "z"],
    );
    let mut bound_ok = true;
    let mut tree_ok = true;
    let mut mc_ok = true;
    let mut worst_z: f64 = 0.0;
    let mut collisions = Vec::new();
    let mut index = 0u16;
    for &k in &c.photons {
        for &n_modes in &c.modes {
            if k > n_modes {
                continue;
            }
            let oracle = undercount_probability(k, n_modes)?;
            bound_ok &= oracle.bound_holds_exactly() == Some(true);
            let tree = ClickTable::new(n_modes, k + 1)?;
            let tree_probability = tree.undercount(k);
            tree_ok &= (tree_probability - oracle.exact).abs() < 1e-12;

            let input = MultiModeState::number_state(k, k + 1)?;
            let hits = (0..c.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(config.seed, StreamTag::Undercount, index, t);
                    let record = measure_with_table(&input, 0, &tree, &mut rng)?;
                    Ok(matches!(record.outcome, Outcome::Clicks(clicks) if clicks < k))
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&h| h)
                .count();
            let freq = hits as f64 / c.trials as f64;
            let se = (oracle.exact * (1.0 - oracle.exact) / c.trials as f64).sqrt();
            let z = if se > 0.0 {
                (freq - oracle.exact).abs() / se
            } else if freq == oracle.exact {
                0.0
            } else {
                f64::INFINITY
            };
            mc_ok &= z <= c.sigma_tolerance;
            worst_z = worst_z.max(z);
            if k == 2 {
                collisions.push((n_modes, oracle.exact, z));
            }
            table.push(vec![
                json!(k),
                json!(n_modes),
                json!(oracle.exact),
                json!(oracle.bound),
                json!(tree_probability),
                json!(freq),
                json!(se),
                json!(z),
            ]);
            index += 1;
        }
    }
    if index == 0 {
        return Err(Error::Config("no (k, N) pair with k <= N in the undercount sweep".into()));
    }
    report.tables.push(table);
    report.check(
        "exact_within_bound",
        bound_ok,
        "1 - N!/(N^k (N-k)!) <= k(k-1)/2N in integer arithmetic for every pair".into(),
    );
    report.check(
        "tree_matches_combinatorics",
        tree_ok,
        "Fock-tree undercount probability equals the combinatorial value within 1e-12".into(),
    );
    report.check(
        "monte_carlo_within_tolerance",
        mc_ok,
        format!("largest |freq - exact| / se = {worst_z:.3} (limit {})", c.sigma_tolerance),
    );
    let pair_ok = !collisions.is_empty()
        && collisions
            .iter()
            .all(|&(n, exact, z)| exact == 1.0 / n as f64 && z <= c.sigma_tolerance);
    report.check(
        "two_photon_collisions",
        pair_ok,
        format!(
            "k = 2: {}",
            collisions
                .iter()
                .map(|(n, e, z)| format!("N={n} exact={e} z={z:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    Ok(report)
}

/// Smallest `N <= max_modes` whose collision probability for `k` photons is
/// at most `epsilon`.
pub fn minimal_modes(k: usize, epsilon: f64, max_modes: u64) -> Option<u64> {
    if !(epsilon > 0.0) {
        return None;
    }
    let collision = |n: u64| -> f64 {
        if (k as u64) > n {
            return 1.0;
        }
        1.0 - (0..k).map(|i| 1.0 - i as f64 / n as f64).product::<f64>()
    };
    let mut lo = 1u64;
    let mut hi = max_modes;
    if collision(hi) > epsilon {
        return None;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if collision(mid) <= epsilon {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// Detector-count and phase-resolution requirements as functions of the
/// largest photon number to be counted.
pub fn run_scaling(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let c = &config.scaling;
    if c.n_max.len() < 4 {
        return Err(Error::Config(format!(
            "scaling needs at least 4 n_max points, got {}",
            c.n_max.len()
        )));
    }
    let mut report = ExperimentReport::new("scaling", config.seed, c);
    let xs: Vec<f64> = c.n_max.iter().map(|&n| n as f64).collect();

    let mut table = Table::new("detectors", &["n_max", "epsilon", "modes", "exact", "bound"]);
    let mut modes = Vec::new();
    for &n in &c.n_max {
        match minimal_modes(n, c.epsilon, c.max_modes) {
            Some(m) => {
                let u = undercount_probability(n, m as usize)?;
                table.push(vec![json!(n), json!(c.epsilon), json!(m), json!(u.exact), json!(u.bound)]);
                modes.push(m as f64);
            }
            None => {
                table.push(vec![json!(n), json!(c.epsilon), json!(null), json!(null), json!(null)]);
            }
        }
    }
    report.tables.push(table);
    if modes.len() == xs.len() {
        let fit = fit_power_law(&xs, &modes)?;
        let ok = (fit.slope - c.slope_target).abs() <= c.slope_tolerance;
        report.check(
            "detector_slope",
            ok,
            format!(
                "slope {:.4} +- {:.4} (target {} +- {})",
                fit.slope, fit.slope_se, c.slope_target, c.slope_tolerance
            ),
        );
        report.fit("log_modes_vs_log_n_max", fit);
    } else {
        report.check(
            "detector_slope",
            false,
            format!("epsilon = {} unachievable within {} modes for some n_max", c.epsilon, c.max_modes),
        );
    }

    let mut sensitivity = Table::new("epsilon_sensitivity", &["epsilon", "slope", "slope_se"]);
    for &eps in &c.epsilon_sensitivity {
        let ms: Option<Vec<f64>> = c
            .n_max
            .iter()
            .map(|&n| minimal_modes(n, eps, c.max_modes).map(|m| m as f64))
            .collect();
        match ms.map(|ms| fit_power_law(&xs, &ms)) {
            Some(Ok(fit)) => sensitivity.push(vec![json!(eps), json!(fit.slope), json!(fit.slope_se)]),
            _ => sensitivity.push(vec![json!(eps), json!(null), json!(null)]),
        }
    }
    report.tables.push(sensitivity);

    // the Kerr period must exceed n_max: chi_t = 2 pi / (kappa n_max), and a
    // fixed count uncertainty needs delta_phi = chi_t delta_n
    let mut phase = Table::new("phase_resolution", &["n_max", "period", "chi_t", "delta_phi"]);
    let mut widths = Vec::new();
    for &n in &c.n_max {
        let period = c.period_factor * n as f64;
        let chi_t = TAU / period;
        let delta_phi = chi_t * c.delta_n;
        phase.push(vec![json!(n), json!(period), json!(chi_t), json!(delta_phi)]);
        widths.push(delta_phi);
    }
    report.tables.push(phase);
    let fit = fit_power_law(&xs, &widths)?;
    report.check(
        "phase_slope",
        (fit.slope + 1.0).abs() <= c.phase_slope_tolerance,
        format!("slope {:.15} (target -1, tolerance {:e})", fit.slope, c.phase_slope_tolerance),
    );
    report.fit("log_delta_phi_vs_log_n_max", fit);
    Ok(report)
}
