//! Cubic phase states and the measurement-driven cubic phase gate.
//!
//! The gate consumes an ancilla approximating `int dq exp(i g q^3) |q>`:
//! SUM^{-1} (input as control), a position measurement of the ancilla
//! with outcome `a`, and the quadratic feed-forward
//! `U(a) = exp(-i g (3 a q^2 + 3 a^2 q + a^3))` together give
//! `exp(i g q^3)` on the input for every outcome.

use log::warn;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{displacement, quadratic_phase, squeeze_two, sum_inverse, GateParam};
use crate::detectors::{homodyne_measure, photon_count_pvm, DEFAULT_HOMODYNE_RESOLUTION};
use crate::error::{Error, Result};
use crate::fit::{weighted_polyfit, PolyFit};
use crate::fock::{
    apply, fidelity, hermite_functions, hermitian_exponential, quadrature_operators, wavefunction,
    ModeOperator, MultiModeState, QuadratureGrid,
};

/// Leakage above which a protocol run is flagged.
pub const LEAKAGE_FLAG: f64 = 1e-6;

/// Leakage above which `|w, eta>` preparation is rejected.
pub const WETA_LEAKAGE_BUDGET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Heralded by `n` photons counted on the displaced arm of `|w, eta>`.
    Conditional { n: usize, w: f64, eta: f64 },
    /// Gaussian-enveloped ideal state.
    Regularized { gamma: f64, envelope_sigma: f64 },
}

/// Fit of the unwrapped phase `arg psi(q)` over the support window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    /// Ascending-power cubic coefficients.
    pub cubic: PolyFit,
    /// Best quadratic over the same window, for comparison.
    pub quadratic: PolyFit,
    pub window: (f64, f64),
}

impl PhaseFit {
    /// Quadratic-only residual over cubic residual.
    pub fn improvement(&self) -> f64 {
        self.quadratic.residual / self.cubic.residual
    }
}

/// Single-mode cubic phase resource.
#[derive(Debug, Clone)]
pub struct CubicAncilla {
    pub state: MultiModeState,
    /// Cubic coefficient the ancilla implements. Fitted for heralded
    /// states, exact for regularized ones (and then zero for `gamma = 0`).
    pub gamma_effective: f64,
    pub provenance: Provenance,
    pub phase_fit: Option<PhaseFit>,
    /// Fraction of the enveloped state's norm kept below the cutoff.
    pub captured_fraction: Option<f64>,
}

impl CubicAncilla {
    pub fn cutoff(&self) -> usize {
        self.state.cutoffs()[0]
    }

    /// `gamma_effective * sqrt(n)` for heralded states: constant if the
    /// cubic coefficient scales as `n^{-1/2}`.
    pub fn calibration(&self) -> Option<f64> {
        match self.provenance {
            Provenance::Conditional { n, .. } => Some(self.gamma_effective * (n as f64).sqrt()),
            Provenance::Regularized { .. } => None,
        }
    }
}

/// Two-mode resource `D_1(i w) S_12(eta) |00>`.
#[derive(Debug, Clone)]
pub struct WetaState {
    pub w: f64,
    pub eta: f64,
    pub state: MultiModeState,
}

pub fn prepare_weta(w: f64, eta: f64, cutoffs: (usize, usize)) -> Result<WetaState> {
    if !w.is_finite() || !eta.is_finite() {
        return Err(Error::InvalidParameter("w and eta must be finite".into()));
    }
    let mean = w * w + eta.sinh().powi(2);
    // the displaced arm must sit well inside its cutoff
    let budget = cutoffs.0 as f64 / 2.0;
    if mean > budget || eta.sinh().powi(2) > cutoffs.1 as f64 / 10.0 {
        return Err(Error::LeakageOverflow {
            leakage: mean / cutoffs.0 as f64,
            budget: 0.5,
        });
    }
    let vacuum = MultiModeState::vacuum(&[cutoffs.0, cutoffs.1])?;
    let squeezed = apply(&vacuum, &squeeze_two(C64::new(eta, 0.0), cutoffs)?, &[0, 1])?;
    let state = apply(&squeezed, &displacement(C64::new(0.0, w), cutoffs.0)?, &[0])?;
    let leakage = state.leakage();
    if leakage > WETA_LEAKAGE_BUDGET {
        return Err(Error::LeakageOverflow {
            leakage,
            budget: WETA_LEAKAGE_BUDGET,
        });
    }
    if leakage > LEAKAGE_FLAG {
        warn!("|w, eta> at ({w}, {eta}) leaks {leakage:e}");
    }
    Ok(WetaState { w, eta, state })
}

/// Counts photons on the displaced arm and keeps the heralded partner.
///
/// A zero-photon outcome leaves the cubic coefficient undefined and is
/// reported as [`Error::ZeroPhotonOutcome`]; callers retry.
pub fn conditional_cubic_state<R: Rng + ?Sized>(weta: &WetaState, rng: &mut R) -> Result<CubicAncilla> {
    let record = photon_count_pvm(&weta.state, 0, rng)?;
    let n = record.outcome.count().expect("counting outcome") as usize;
    if n == 0 {
        return Err(Error::ZeroPhotonOutcome);
    }
    let state = record.remainder.expect("two-mode input");
    let fit = fit_phase(&state)?;
    Ok(CubicAncilla {
        gamma_effective: fit.cubic.coefficients[3],
        provenance: Provenance::Conditional {
            n,
            w: weta.w,
            eta: weta.eta,
        },
        phase_fit: Some(fit),
        captured_fraction: None,
        state,
    })
}

/// Unwraps `arg psi(q)` over mean +- 2 std of `|psi|^2` and fits cubic and
/// quadratic polynomials weighted by `|psi|^2`.
pub fn fit_phase(state: &MultiModeState) -> Result<PhaseFit> {
    let grid = QuadratureGrid::for_cutoff(state.cutoffs()[0]);
    let psi = wavefunction(state, &grid)?;
    let density: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = density.iter().sum();
    let q = grid.points();
    let mean = q.iter().zip(&density).map(|(x, p)| x * p).sum::<f64>() / total;
    let var = q
        .iter()
        .zip(&density)
        .map(|(x, p)| (x - mean).powi(2) * p)
        .sum::<f64>()
        / total;
    let (lo, hi) = (mean - 2.0 * var.sqrt(), mean + 2.0 * var.sqrt());
    let idx: Vec<usize> = (0..q.len()).filter(|&i| q[i] >= lo && q[i] <= hi).collect();
    if idx.len() < 8 {
        return Err(Error::Fit(format!(
            "support window [{lo:.3}, {hi:.3}] holds only {} grid points",
            idx.len()
        )));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| q[i]).collect();
    let ws: Vec<f64> = idx.iter().map(|&i| density[i]).collect();
    let mut phase = Vec::with_capacity(idx.len());
    let mut prev = psi[idx[0]].arg();
    let mut offset = 0.0;
    for &i in &idx {
        let raw = psi[i].arg();
        let step = raw - prev;
        offset -= std::f64::consts::TAU * (step / std::f64::consts::TAU).round();
        phase.push(raw + offset);
        prev = raw;
    }
    Ok(PhaseFit {
        cubic: weighted_polyfit(&xs, &phase, &ws, 3)?,
        quadratic: weighted_polyfit(&xs, &phase, &ws, 2)?,
        window: (lo, hi),
    })
}

/// Largest relative amplitude change accepted between grid refinements.
const QUADRATURE_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 8;

/// Enveloped cubic phase state
/// `c_n ~ int dq exp(i gamma q^3) exp(-q^2 / (2 sigma^2)) phi_n(q)`,
/// truncated at `cutoff` and normalized.
pub fn regularized_cubic_state(gamma: f64, sigma: f64, cutoff: usize) -> Result<CubicAncilla> {
    if !gamma.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite gamma and positive sigma, got ({gamma}, {sigma})"
        )));
    }
    if cutoff == 0 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let turning = (2.0 * cutoff as f64 + 1.0).sqrt();
    let half_width = (9.0 * sigma).min(turning + 10.0);
    let k_max = 3.0 * gamma.abs() * half_width * half_width + turning;
    let mut spacing = std::f64::consts::PI / (8.0 * k_max);
    let mut amps = enveloped_amplitudes(gamma, sigma, cutoff, half_width, spacing);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        spacing /= 2.0;
        let finer = enveloped_amplitudes(gamma, sigma, cutoff, half_width, spacing);
        let scale = finer.iter().map(|c| c.norm()).fold(0.0, f64::max);
        change = amps
            .iter()
            .zip(&finer)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale;
        amps = finer;
        if change < QUADRATURE_TOLERANCE {
            break;
        }
    }
    if !(change < QUADRATURE_TOLERANCE) {
        return Err(Error::QuadratureNonConvergence {
            change,
            refinements: MAX_REFINEMENTS,
        });
    }
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let captured_fraction = kept / (sigma * std::f64::consts::PI.sqrt());
    if captured_fraction < 0.99 {
        warn!(
            "cubic ancilla (gamma {gamma}, sigma {sigma}) keeps {captured_fraction:.4} of its norm below cutoff {cutoff}"
        );
    }
    let state = MultiModeState::new(vec![cutoff], amps)?.normalize()?;
    Ok(CubicAncilla {
        state,
        gamma_effective: gamma,
        provenance: Provenance::Regularized {
            gamma,
            envelope_sigma: sigma,
        },
        phase_fit: None,
        captured_fraction: Some(captured_fraction),
    })
}

fn enveloped_amplitudes(gamma: f64, sigma: f64, cutoff: usize, half_width: f64, spacing: f64) -> Vec<C64> {
    let steps = (2.0 * half_width / spacing).ceil() as usize;
    let h = 2.0 * half_width / steps as f64;
    let mut out = vec![C64::new(0.0, 0.0); cutoff];
    for i in 0..=steps {
        let q = -half_width + h * i as f64;
        let end = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let f = C64::from_polar(end * h * (-q * q / (2.0 * sigma * sigma)).exp(), gamma * q * q * q);
        for (o, phi) in out.iter_mut().zip(hermite_functions(cutoff, q)) {
            *o += f * phi;
        }
    }
    out
}

/// `V_gamma = exp(i gamma q^3)` by spectral decomposition of the truncated
/// `q^3`.
pub fn direct_cubic(gamma: f64, cutoff: usize) -> Result<ModeOperator> {
    let (q, _) = quadrature_operators(cutoff)?;
    hermitian_exponential(&q.powi(3)?, gamma)
}

/// Feed-forward parameters for outcome `a`:
/// `exp(i gamma q^3 - i gamma (q + a)^3)` as a quadratic phase.
pub fn correction_param(a: f64, gamma: f64) -> GateParam {
    GateParam::QuadraticPhase {
        c2: -3.0 * gamma * a,
        c1: -3.0 * gamma * a * a,
        c0: -gamma * a * a * a,
    }
}

pub fn correction_u(a: f64, gamma: f64, cutoff: usize) -> Result<ModeOperator> {
    match correction_param(a, gamma) {
        GateParam::QuadraticPhase { c2, c1, c0 } => quadratic_phase(c2, c1, c0, cutoff),
        _ => unreachable!(),
    }
}

/// One run of the gate.
#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    pub measured_a: f64,
    pub correction_applied: GateParam,
    pub output: MultiModeState,
    /// `|<V_gamma psi | output>|^2`
    pub oracle_fidelity: f64,
    /// Leakage of the two-mode state after SUM^{-1}.
    pub leakage: f64,
}

impl ProtocolTrace {
    pub fn leakage_flagged(&self) -> bool {
        self.leakage > LEAKAGE_FLAG
    }
}

/// Reusable gate for a fixed `gamma` and cutoff: caches SUM^{-1} and the
/// oracle unitary.
#[derive(Debug, Clone)]
pub struct CubicPhaseGate {
    gamma: f64,
    cutoff: usize,
    resolution: f64,
    sum_inv: ModeOperator,
    oracle: ModeOperator,
}

impl CubicPhaseGate {
    pub fn new(gamma: f64, cutoff: usize, resolution: f64) -> Result<Self> {
        Ok(Self {
            gamma,
            cutoff,
            resolution,
            sum_inv: sum_inverse((cutoff, cutoff))?,
            oracle: direct_cubic(gamma, cutoff)?,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Ideal output `V_gamma |input>`.
    pub fn ideal_output(&self, input: &MultiModeState) -> Result<MultiModeState> {
        apply(input, &self.oracle, &[0])
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        input: &MultiModeState,
        ancilla: &CubicAncilla,
        rng: &mut R,
    ) -> Result<ProtocolTrace> {
        let ideal = self.ideal_output(input)?;
        self.run_against(input, ancilla, &ideal, rng)
    }

    /// As [`run`](Self::run) with a precomputed ideal output.
    pub fn run_against<R: Rng + ?Sized>(
        &self,
        input: &MultiModeState,
        ancilla: &CubicAncilla,
        ideal: &MultiModeState,
        rng: &mut R,
    ) -> Result<ProtocolTrace> {
        let d = self.cutoff;
        if input.cutoffs() != [d] || ancilla.state.cutoffs() != [d] {
            return Err(Error::DimensionMismatch {
                expected: vec![d, d],
                found: [input.cutoffs(), ancilla.state.cutoffs()].concat(),
            });
        }
        let joint = apply(&input.tensor(&ancilla.state), &self.sum_inv, &[0, 1])?;
        let leakage = joint.leakage();
        if leakage > LEAKAGE_FLAG {
            warn!("cubic gate intermediate state leaks {leakage:e} at cutoff {d}");
        }
        let record = homodyne_measure(&joint, 1, rng, self.resolution)?;
        let a = match record.outcome {
            crate::detectors::Outcome::Quadrature(a) => a,
            _ => unreachable!(),
        };
        let control = record.remainder.expect("two-mode input");
        let correction_applied = correction_param(a, self.gamma);
        let output = apply(&control, &correction_applied.operator(&[d])?, &[0])?;
        let oracle_fidelity = fidelity(&output, ideal)?.clamp(0.0, 1.0);
        Ok(ProtocolTrace {
            measured_a: a,
            correction_applied,
            output,
            oracle_fidelity,
            leakage,
        })
    }
}

/// Single-shot convenience wrapper; the ancilla's `gamma_effective` sets the
/// gate strength.
pub fn cubic_phase_gate<R: Rng + ?Sized>(
    input: &MultiModeState,
    ancilla: &CubicAncilla,
    rng: &mut R,
    homodyne_resolution: Option<f64>,
) -> Result<ProtocolTrace> {
    let gate = CubicPhaseGate::new(
        ancilla.gamma_effective,
        ancilla.cutoff(),
        homodyne_resolution.unwrap_or(DEFAULT_HOMODYNE_RESOLUTION),
    )?;
    gate.run(input, ancilla, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectation, ModeOperator};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weta_photon_number() {
        let vac = prepare_weta(0.0, 0.0, (8, 8)).unwrap();
        assert!((vac.state.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let s = prepare_weta(3.0, 1.0, (64, 40)).unwrap();
        let n = expectation(&s.state, &ModeOperator::number(64).unwrap(), &[0]).unwrap();
        assert!((n.re - 9.0 - 1f64.sinh().powi(2)).abs() < 1e-4, "{n}");
        assert!(matches!(prepare_weta(8.0, 0.0, (32, 8)), Err(Error::LeakageOverflow { .. })));
    }

    #[test]
    fn unentangled_partner_stays_vacuum() {
        let s = prepare_weta(3.0, 0.0, (48, 8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let anc = loop {
            match conditional_cubic_state(&s, &mut rng) {
                Ok(a) => break a,
                Err(Error::ZeroPhotonOutcome) => continue,
                Err(e) => panic!("{e}"),
            }
        };
        assert!((anc.state.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_cubic_basics() {
        let v = direct_cubic(0.1, 24).unwrap();
        assert!(v.unitarity_error() < 1e-10);
        let back = direct_cubic(-0.1, 24).unwrap();
        let id = ModeOperator::identity(&[24]).unwrap();
        assert!(v.compose(&back).unwrap().max_abs_diff(&id, 24).unwrap() < 1e-9);
        let (q, _) = quadrature_operators(24).unwrap();
        let comm = v.compose(&q).unwrap().add(&q.compose(&v).unwrap().scale(C64::new(-1.0, 0.0))).unwrap();
        assert!(comm.matrix().iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-9);
        assert!(direct_cubic(0.0, 12).unwrap().max_abs_diff(&ModeOperator::identity(&[12]).unwrap(), 12).unwrap() < 1e-12);
    }

    #[test]
    fn correction_at_zero_outcome_is_identity() {
        let u = correction_u(0.0, 0.1, 16).unwrap();
        assert!(u.max_abs_diff(&ModeOperator::identity(&[16]).unwrap(), 16).unwrap() < 1e-12);
    }

    #[test]
    fn regularized_zero_gamma_is_real_even_gaussian() {
        let anc = regularized_cubic_state(0.0, 2.0, 40).unwrap();
        let amps = anc.state.amplitudes();
        for (n, c) in amps.iter().enumerate() {
            assert!(c.im.abs() < 1e-12);
            if n % 2 == 1 {
                assert!(c.norm() < 1e-12);
            }
        }
        // amplitude envelope exp(-q^2 / 8): Var(q) = sigma^2 / 2 = 2
        let (q, _) = quadrature_operators(40).unwrap();
        let var = expectation(&anc.state, &q.powi(2).unwrap(), &[0]).unwrap().re;
        assert!((var - 2.0).abs() < 1e-6, "{var}");
        assert!(anc.captured_fraction.unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn regularized_cubic_breaks_parity() {
        let anc = regularized_cubic_state(0.1, 2.0, 48).unwrap();
        let (q, p) = quadrature_operators(48).unwrap();
        // <p> = 3 gamma <q^2> for exp(i gamma q^3) times a real envelope,
        // up to the truncation of the p matrix
        let mean_p = expectation(&anc.state, &p, &[0]).unwrap().re;
        let q2 = expectation(&anc.state, &q.powi(2).unwrap(), &[0]).unwrap().re;
        assert!((mean_p - 0.3 * q2).abs() < 1e-4, "{mean_p} vs {q2}");
        assert!(anc.state.amplitudes().iter().skip(1).step_by(2).any(|c| c.norm() > 1e-3));
    }

    #[test]
    fn zero_gamma_gate_on_squeezed_input() {
        let d = 64;
        let input = crate::clifford::squeezed_vacuum(C64::new(0.5, 0.0), d).unwrap();
        let anc = regularized_cubic_state(0.0, 4.0, d).unwrap();
        let gate = CubicPhaseGate::new(0.0, d, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 40;
        let mean = (0..trials)
            .map(|_| gate.run(&input, &anc, &mut rng).unwrap().oracle_fidelity)
            .sum::<f64>()
            / trials as f64;
        assert!(mean > 0.99, "{mean}");
    }
}
