use std::f64::consts::TAU;

use rayon::prelude::*;
use serde_json::json;

use super::{trial_rng, ExperimentConfig, ExperimentReport, StreamTag, Table};
use crate::detectors::{
    kerr_count_uncertainty, kerr_qnd_measure, pointer_measure, precision_check, DetectorModel,
    Outcome,
};
use crate::error::{Error, Result};
use crate::fock::{fidelity, MultiModeState};
use crate::C64;

fn superposition(cutoff: usize, (a, b): (usize, usize)) -> Result<MultiModeState> {
    let one = C64::new(1.0, 0.0);
    MultiModeState::superposition(cutoff, &[(a, one), (b, one)])
}

/// Kerr QND counting: Fock inputs are identified modulo the period and a
/// superposition inside one residue class survives the measurement.
pub fn run_kerr(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let c = &config.kerr;
    let mut report = ExperimentReport::new("kerr", config.seed, c);
    let chi_t = TAU / c.period as f64;
    let delta_phi = c.width_fraction * chi_t;
    let d = c.cutoff;

    let mut table = Table::new("fock_inputs", &["n", "expected_residue", "correct", "trials"]);
    let mut all_correct = true;
    for n in 0..d {
        let input = MultiModeState::number_state(n, d)?;
        let correct = (0..c.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.seed, StreamTag::Kerr, n as u16, t);
                let r = kerr_qnd_measure(&input, 0, chi_t, delta_phi, &mut rng)?;
                Ok(matches!(r.outcome, Outcome::Phase { inferred, .. } if inferred == n % c.period))
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&ok| ok)
            .count();
        all_correct &= correct == c.trials as usize;
        table.push(vec![json!(n), json!(n % c.period), json!(correct), json!(c.trials)]);
    }
    report.tables.push(table);
    report.check(
        "residue_identification",
        all_correct,
        format!("every Fock input n < {d} inferred as n mod {} in every trial", c.period),
    );

    let sup = superposition(d, c.superposition)?;
    let index = d as u16;
    let outcomes = (0..c.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, StreamTag::Kerr, index, t);
            let r = kerr_qnd_measure(&sup, 0, chi_t, delta_phi, &mut rng)?;
            let inferred = match r.outcome {
                Outcome::Phase { inferred, .. } => inferred,
                _ => unreachable!(),
            };
            Ok((inferred, fidelity(&r.post_state, &sup)?))
        })
        .collect::<Result<Vec<(usize, f64)>>>()?;
    let min_fid = outcomes.iter().map(|o| o.1).fold(1.0, f64::min);
    let same_class = c.superposition.0 % c.period == c.superposition.1 % c.period;
    let mut sup_table = Table::new("superposition", &["components", "same_residue", "min_fidelity", "residues_seen"]);
    let mut residues: Vec<usize> = outcomes.iter().map(|o| o.0).collect();
    residues.sort_unstable();
    residues.dedup();
    sup_table.push(vec![
        json!(format!("{}+{}", c.superposition.0, c.superposition.1)),
        json!(same_class),
        json!(min_fid),
        json!(residues),
    ]);
    report.tables.push(sup_table);
    report.check(
        "residue_class_superposition_survives",
        same_class && min_fid >= c.min_fidelity,
        format!("minimum post-measurement fidelity {min_fid:.12} (limit {})", c.min_fidelity),
    );

    let p = &c.precision;
    let chi = TAU / p.period as f64;
    let delta_n = kerr_count_uncertainty(chi, p.delta_phi);
    let check = precision_check(delta_n, p.photons, p.strictness)?;
    let mut prec = Table::new("precision", &["delta_phi", "chi_t", "delta_n", "photons", "ratio", "passed"]);
    prec.push(vec![
        json!(p.delta_phi),
        json!(chi),
        json!(delta_n),
        json!(p.photons),
        json!(check.ratio),
        json!(check.passed),
    ]);
    report.tables.push(prec);
    report.check(
        "precision_requirement",
        check.passed,
        format!("delta_n = {delta_n:.6} vs {} n^(1/3) = {:.6}", p.strictness, p.strictness * (p.photons as f64).cbrt()),
    );
    let ambiguous = DetectorModel::Kerr {
        chi_t,
        delta_phi: chi_t / 2.0,
    };
    report.check(
        "ambiguous_rounding_rejected",
        matches!(ambiguous.validate(), Err(Error::AmbiguousRounding { .. })),
        "delta_phi = chi_t / 2 is refused before any trial".into(),
    );
    Ok(report)
}

/// Pointer counting: full photon number without aliasing, and collapse of
/// superpositions onto single Fock states.
pub fn run_pointer(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let c = &config.pointer;
    let mut report = ExperimentReport::new("pointer", config.seed, c);
    let d = c.cutoff;

    let mut table = Table::new("fock_inputs", &["n", "correct", "trials"]);
    let mut all_correct = true;
    for n in 0..d {
        let input = MultiModeState::number_state(n, d)?;
        let correct = (0..c.fock_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.seed, StreamTag::Pointer, n as u16, t);
                let r = pointer_measure(&input, 0, c.lambda_t, c.delta_p, &mut rng)?;
                Ok(r.outcome.count() == Some(n as i64))
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&ok| ok)
            .count();
        all_correct &= correct == c.fock_trials as usize;
        table.push(vec![json!(n), json!(correct), json!(c.fock_trials)]);
    }
    report.tables.push(table);
    report.check(
        "full_count_identification",
        all_correct,
        format!("every Fock input n < {d} inferred exactly"),
    );

    let (a, b) = c.superposition;
    let sup = superposition(d, (a, b))?;
    let index = d as u16;
    let outcomes = (0..c.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, StreamTag::Pointer, index, t);
            let r = pointer_measure(&sup, 0, c.lambda_t, c.delta_p, &mut rng)?;
            let probs = r.post_state.photon_distribution(0)?;
            let (peak, top) = probs
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
            let collapsed = top == 1.0 && r.outcome.count() == Some(peak as i64);
            Ok((peak, collapsed))
        })
        .collect::<Result<Vec<(usize, bool)>>>()?;
    let collapsed = outcomes.iter().filter(|o| o.1).count();
    let hits_a = outcomes.iter().filter(|o| o.0 == a).count();
    let freq = hits_a as f64 / c.trials as f64;
    let se = (0.25 / c.trials as f64).sqrt();
    let z = (freq - 0.5).abs() / se;
    let mut sup_table = Table::new("superposition", &["components", "collapsed", "trials", "frequency_first", "std_error", "z"]);
    sup_table.push(vec![
        json!(format!("{a}+{b}")),
        json!(collapsed),
        json!(c.trials),
        json!(freq),
        json!(se),
        json!(z),
    ]);
    report.tables.push(sup_table);
    report.check(
        "collapse_to_single_fock_state",
        collapsed == c.trials as usize,
        format!("{collapsed} of {} post-measurement states are single Fock states", c.trials),
    );
    report.check(
        "balanced_outcomes",
        z <= c.sigma_tolerance,
        format!("P({a}) = {freq:.4}, z = {z:.3} (limit {})", c.sigma_tolerance),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_kerr_and_pointer_runs_pass() {
        let mut c = ExperimentConfig::default();
        c.set_trials(20);
        c.pointer.fock_trials = 5;
        let k = run_kerr(&c).unwrap();
        assert!(k.passed, "{:#?}", k.checks);
        let p = run_pointer(&c).unwrap();
        assert!(p.check_named("collapse_to_single_fock_state").unwrap().passed);
        assert!(p.check_named("full_count_identification").unwrap().passed);
    }
}
