//! Linear-optics (Clifford group) gates on truncated Fock spaces.
//!
//! Squeezing is called "linear" here in the Heisenberg-picture sense: the
//! quadratures transform affinely. Sign conventions are chosen so that a
//! positive real squeezing parameter reduces the position variance
//! (`q -> e^{-eta} q`) and two-mode squeezing correlates `q_1` with `q_2`.

use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    apply, hermitian_exponential, hermitian_product_exponential, quadrature_operators,
    ModeOperator, MultiModeState,
};

/// Default cap on `|eta|` for squeezers.
pub const DEFAULT_MAX_SQUEEZE: f64 = 3.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn ladder(cutoff: usize) -> Result<(ModeOperator, ModeOperator)> {
    let a = ModeOperator::annihilation(cutoff)?;
    let ad = a.adjoint();
    Ok((a, ad))
}

/// `D(alpha) = exp(alpha a^H - alpha^* a)`.
pub fn displacement(alpha: C64, cutoff: usize) -> Result<ModeOperator> {
    let (a, ad) = ladder(cutoff)?;
    if alpha.norm_sqr() > cutoff as f64 / 4.0 {
        warn!("displacement |alpha|^2 = {} exceeds cutoff/4 = {}", alpha.norm_sqr(), cutoff as f64 / 4.0);
    }
    // exp(i G) with G = -i (alpha a^H - alpha^* a)
    let generator = ad.scale(alpha).add(&a.scale(-alpha.conj()))?.scale(-I);
    hermitian_exponential(&generator, 1.0)
}

/// `S(eta) = exp((eta^* a^2 - eta a^H^2) / 2)`; positive real `eta`
/// squeezes the position quadrature, `Var(q) = e^{-2 eta} / 2` on vacuum.
pub fn squeeze_one(eta: C64, cutoff: usize) -> Result<ModeOperator> {
    squeeze_one_capped(eta, cutoff, DEFAULT_MAX_SQUEEZE)
}

pub fn squeeze_one_capped(eta: C64, cutoff: usize, max_squeeze: f64) -> Result<ModeOperator> {
    check_squeeze(eta, max_squeeze)?;
    let (a, ad) = ladder(cutoff)?;
    if eta.norm().sinh().powi(2) > cutoff as f64 / 10.0 {
        warn!("squeezing sinh^2|eta| = {} exceeds cutoff/10", eta.norm().sinh().powi(2));
    }
    let a2 = a.compose(&a)?;
    let ad2 = ad.compose(&ad)?;
    let generator = a2
        .scale(eta.conj())
        .add(&ad2.scale(-eta))?
        .scale(-I * 0.5);
    hermitian_exponential(&generator, 1.0)
}

fn check_squeeze(eta: C64, max_squeeze: f64) -> Result<()> {
    if !eta.re.is_finite() || !eta.im.is_finite() || eta.norm() > max_squeeze {
        return Err(Error::InvalidParameter(format!(
            "|eta| = {} exceeds the squeezing cap {max_squeeze}",
            eta.norm()
        )));
    }
    Ok(())
}

/// `S_12(eta) = exp(eta a_1^H a_2^H - eta^* a_1 a_2)`.
///
/// On vacuum with real `eta` this gives Schmidt coefficients proportional to
/// `tanh^n eta` and `Var(q_1 - q_2) = e^{-2 eta}`.
pub fn squeeze_two(eta: C64, cutoffs: (usize, usize)) -> Result<ModeOperator> {
    squeeze_two_capped(eta, cutoffs, DEFAULT_MAX_SQUEEZE)
}

pub fn squeeze_two_capped(
    eta: C64,
    cutoffs: (usize, usize),
    max_squeeze: f64,
) -> Result<ModeOperator> {
    check_squeeze(eta, max_squeeze)?;
    let (a1, ad1) = ladder(cutoffs.0)?;
    let (a2, ad2) = ladder(cutoffs.1)?;
    let limit = cutoffs.0.min(cutoffs.1) as f64 / 10.0;
    if eta.norm().sinh().powi(2) > limit {
        warn!("two-mode squeezing sinh^2|eta| = {} exceeds cutoff/10", eta.norm().sinh().powi(2));
    }
    let generator = ad1
        .kron(&ad2)?
        .scale(eta)
        .add(&a1.kron(&a2)?.scale(-eta.conj()))?
        .scale(-I);
    hermitian_exponential(&generator, 1.0)
}

/// `SUM_ij = exp(-i q_i p_j)`: `|q_i>|q_j> -> |q_i>|q_i + q_j>`.
pub fn sum_gate(cutoffs: (usize, usize)) -> Result<ModeOperator> {
    sum_power(cutoffs, -1.0)
}

/// `SUM_ij^{-1} = exp(+i q_i p_j)`.
pub fn sum_inverse(cutoffs: (usize, usize)) -> Result<ModeOperator> {
    sum_power(cutoffs, 1.0)
}

fn sum_power(cutoffs: (usize, usize), scale: f64) -> Result<ModeOperator> {
    let (q, _) = quadrature_operators(cutoffs.0)?;
    let (_, p) = quadrature_operators(cutoffs.1)?;
    hermitian_product_exponential(&q, &p, scale)
}

/// `exp(theta (a_i^H a_j - a_i a_j^H))`; conserves total photon number.
pub fn beamsplitter(theta: f64, cutoffs: (usize, usize)) -> Result<ModeOperator> {
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("beamsplitter angle {theta}")));
    }
    let (a1, ad1) = ladder(cutoffs.0)?;
    let (a2, ad2) = ladder(cutoffs.1)?;
    let generator = ad1
        .kron(&a2)?
        .add(&a1.kron(&ad2)?.scale(C64::new(-1.0, 0.0)))?
        .scale(-I * theta);
    hermitian_exponential(&generator, 1.0)
}

/// `exp(i (c2 q^2 + c1 q + c0))`, a function of the truncated position
/// operator.
pub fn quadratic_phase(c2: f64, c1: f64, c0: f64, cutoff: usize) -> Result<ModeOperator> {
    if ![c2, c1, c0].iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite quadratic phase coefficient".into()));
    }
    if c2.abs() > 1.0 {
        warn!("quadratic phase curvature |c2| = {} may leak past the cutoff", c2.abs());
    }
    let (q, _) = quadrature_operators(cutoff)?;
    let q2 = q.compose(&q)?;
    let generator = q2
        .scale(C64::new(c2, 0.0))
        .add(&q.scale(C64::new(c1, 0.0)))?
        .add(&ModeOperator::identity(&[cutoff])?.scale(C64::new(c0, 0.0)))?;
    hermitian_exponential(&generator, 1.0)
}

/// Coherent state `D(alpha)|0>`.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<MultiModeState> {
    apply(&MultiModeState::vacuum(&[cutoff])?, &displacement(alpha, cutoff)?, &[0])
}

/// Squeezed vacuum `S(eta)|0>`.
pub fn squeezed_vacuum(eta: C64, cutoff: usize) -> Result<MultiModeState> {
    apply(&MultiModeState::vacuum(&[cutoff])?, &squeeze_one(eta, cutoff)?, &[0])
}

/// Finitely squeezed approximation of the position eigenstate `|q>`:
/// `D(q / sqrt 2) S(eta) |0>`.
pub fn approximate_position_state(q: f64, eta: f64, cutoff: usize) -> Result<MultiModeState> {
    let squeezed = squeezed_vacuum(C64::new(eta, 0.0), cutoff)?;
    apply(&squeezed, &displacement(C64::new(q / 2f64.sqrt(), 0.0), cutoff)?, &[0])
}

/// Two-mode squeezed vacuum `S_12(eta)|00>`, the finite-`eta` stand-in for
/// the EPR state.
pub fn epr_pair(eta: f64, cutoffs: (usize, usize)) -> Result<MultiModeState> {
    let vacuum = MultiModeState::vacuum(&[cutoffs.0, cutoffs.1])?;
    let state = apply(&vacuum, &squeeze_two(C64::new(eta, 0.0), cutoffs)?, &[0, 1])?;
    let leakage = state.leakage();
    if leakage > 1e-6 {
        warn!("EPR pair at eta = {eta} has leakage {leakage:e}");
    }
    Ok(state)
}

/// Parameters of a single Clifford gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateParam {
    Displacement { alpha: C64 },
    Squeeze1 { eta: C64 },
    Squeeze2 { eta: C64 },
    Sum,
    SumInverse,
    Beamsplitter { theta: f64 },
    /// `exp(i (c2 q^2 + c1 q + c0))`
    QuadraticPhase { c2: f64, c1: f64, c0: f64 },
}

impl GateParam {
    pub fn arity(&self) -> usize {
        match self {
            Self::Squeeze2 { .. } | Self::Sum | Self::SumInverse | Self::Beamsplitter { .. } => 2,
            _ => 1,
        }
    }

    pub fn validate(&self, max_squeeze: f64) -> Result<()> {
        match *self {
            Self::Squeeze1 { eta } | Self::Squeeze2 { eta } => check_squeeze(eta, max_squeeze),
            _ => Ok(()),
        }
    }

    /// Parameters of the inverse gate.
    pub fn inverse(&self) -> Self {
        match *self {
            Self::Displacement { alpha } => Self::Displacement { alpha: -alpha },
            Self::Squeeze1 { eta } => Self::Squeeze1 { eta: -eta },
            Self::Squeeze2 { eta } => Self::Squeeze2 { eta: -eta },
            Self::Sum => Self::SumInverse,
            Self::SumInverse => Self::Sum,
            Self::Beamsplitter { theta } => Self::Beamsplitter { theta: -theta },
            Self::QuadraticPhase { c2, c1, c0 } => Self::QuadraticPhase {
                c2: -c2,
                c1: -c1,
                c0: -c0,
            },
        }
    }

    pub fn operator(&self, cutoffs: &[usize]) -> Result<ModeOperator> {
        if cutoffs.len() != self.arity() {
            return Err(Error::DimensionMismatch {
                expected: vec![self.arity()],
                found: vec![cutoffs.len()],
            });
        }
        match *self {
            Self::Displacement { alpha } => displacement(alpha, cutoffs[0]),
            Self::Squeeze1 { eta } => squeeze_one(eta, cutoffs[0]),
            Self::Squeeze2 { eta } => squeeze_two(eta, (cutoffs[0], cutoffs[1])),
            Self::Sum => sum_gate((cutoffs[0], cutoffs[1])),
            Self::SumInverse => sum_inverse((cutoffs[0], cutoffs[1])),
            Self::Beamsplitter { theta } => beamsplitter(theta, (cutoffs[0], cutoffs[1])),
            Self::QuadraticPhase { c2, c1, c0 } => quadratic_phase(c2, c1, c0, cutoffs[0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expectation, fidelity};
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn zero_parameters_give_identity() {
        let d = 12;
        let id = ModeOperator::identity(&[d]).unwrap();
        let id2 = ModeOperator::identity(&[d, d]).unwrap();
        assert!(displacement(c(0.0), d).unwrap().max_abs_diff(&id, d).unwrap() < 1e-12);
        assert!(squeeze_one(c(0.0), d).unwrap().max_abs_diff(&id, d).unwrap() < 1e-12);
        assert!(quadratic_phase(0.0, 0.0, 0.0, d).unwrap().max_abs_diff(&id, d).unwrap() < 1e-12);
        assert!(beamsplitter(0.0, (d, d)).unwrap().max_abs_diff(&id2, d * d).unwrap() < 1e-12);
        assert!(squeeze_two(c(0.0), (d, d)).unwrap().max_abs_diff(&id2, d * d).unwrap() < 1e-12);
    }

    #[test]
    fn squeezing_cap_is_enforced() {
        assert!(squeeze_one(c(3.5), 10).is_err());
        assert!(squeeze_one_capped(c(3.5), 10, 4.0).is_ok());
        assert!(GateParam::Squeeze2 { eta: c(-3.1) }.validate(3.0).is_err());
    }

    #[test]
    fn inverse_pairs_compose_to_identity() {
        let d = 10;
        let pairs = [
            GateParam::Displacement { alpha: C64::new(0.4, -0.3) },
            GateParam::Squeeze1 { eta: C64::new(0.3, 0.2) },
            GateParam::QuadraticPhase { c2: 0.2, c1: -0.5, c0: 1.0 },
        ];
        let id = ModeOperator::identity(&[d]).unwrap();
        for g in pairs {
            let u = g.operator(&[d]).unwrap();
            let v = g.inverse().operator(&[d]).unwrap();
            assert!(u.compose(&v).unwrap().max_abs_diff(&id, d).unwrap() < 1e-9, "{g:?}");
        }
        let id2 = ModeOperator::identity(&[6, 6]).unwrap();
        for g in [
            GateParam::Sum,
            GateParam::Beamsplitter { theta: 0.4 },
            GateParam::Squeeze2 { eta: c(0.3) },
        ] {
            let u = g.operator(&[6, 6]).unwrap();
            let v = g.inverse().operator(&[6, 6]).unwrap();
            assert!(u.compose(&v).unwrap().max_abs_diff(&id2, 36).unwrap() < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn linear_quadratic_phase_is_momentum_displacement() {
        let d = 14;
        let c1 = 0.6;
        let qp = quadratic_phase(0.0, c1, 0.0, d).unwrap();
        let disp = displacement(C64::new(0.0, c1 / 2f64.sqrt()), d).unwrap();
        assert!(qp.max_abs_diff_up_to_phase(&disp).unwrap() < 1e-10);
    }

    #[test]
    fn quadratic_phase_commutes_with_position() {
        let d = 20;
        let (q, _) = quadrature_operators(d).unwrap();
        let u = quadratic_phase(0.3, -0.7, 0.2, d).unwrap();
        let uq = u.compose(&q).unwrap();
        let qu = q.compose(&u).unwrap();
        assert!(uq.max_abs_diff(&qu, d).unwrap() < 1e-9);
    }

    #[test]
    fn two_photon_beamsplitter_splits_evenly() {
        let d = 4;
        let input = MultiModeState::fock(&[2, 0], &[d, d]).unwrap();
        let out = apply(&input, &beamsplitter(FRAC_PI_4, (d, d)).unwrap(), &[0, 1]).unwrap();
        assert!((out.amplitude(&[1, 1]).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((out.amplitude(&[2, 0]).norm_sqr() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn beamsplitter_conserves_photon_number() {
        let d = 8;
        let input = coherent_state(C64::new(0.8, 0.3), d)
            .unwrap()
            .tensor(&MultiModeState::number_state(2, d).unwrap());
        let out = apply(&input, &beamsplitter(0.37, (d, d)).unwrap(), &[0, 1]).unwrap();
        let n = ModeOperator::number(d).unwrap();
        let total = |s: &MultiModeState| {
            expectation(s, &n, &[0]).unwrap().re + expectation(s, &n, &[1]).unwrap().re
        };
        assert!((total(&input) - total(&out)).abs() < 1e-10);
    }

    #[test]
    fn hong_ou_mandel_state_has_antisymmetric_sign() {
        let d = 4;
        let input = MultiModeState::fock(&[1, 1], &[d, d]).unwrap();
        let out = apply(&input, &beamsplitter(FRAC_PI_4, (d, d)).unwrap(), &[0, 1]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitude(&[2, 0]) - c(s)).norm() < 1e-12);
        assert!((out.amplitude(&[0, 2]) - c(-s)).norm() < 1e-12);
    }

    #[test]
    fn sum_gate_is_unitary_at_small_cutoff() {
        let u = sum_gate((8, 8)).unwrap();
        assert!(u.unitarity_error() < 1e-10);
        // vacuum product: target mean stays zero
        let vac = MultiModeState::vacuum(&[16, 16]).unwrap();
        let out = apply(&vac, &sum_gate((16, 16)).unwrap(), &[0, 1]).unwrap();
        let (q, _) = quadrature_operators(16).unwrap();
        assert!(expectation(&out, &q, &[1]).unwrap().norm() < 1e-10);
        assert!(fidelity(&out, &vac).unwrap() < 1.0 - 1e-3);
    }
}
