//! Photon-measurement models.
//!
//! Five detectors act on one mode of a [`MultiModeState`]: the ideal
//! photon-counting PVM, the ideal threshold detector (ITD), a balanced
//! beamsplitter tree feeding `N` ITDs, a Kerr-probe QND counter that only
//! resolves photon number modulo its period, and an unbounded
//! position-pointer counter. Homodyne (position quadrature) measurement is
//! included for the cubic-phase-gate protocol.
//!
//! Every sampler takes an explicit RNG; identical seeds reproduce identical
//! outcome sequences.

mod multiplex;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use multiplex::{balanced_tree, sector_dimension, ClickTable, DEFAULT_SECTOR_BUDGET};

use crate::error::{Error, Result};
use crate::fock::{evaluate_amplitudes, hermite_functions, MultiModeState, QuadratureGrid};

/// Default bin width of the homodyne post-measurement projector.
pub const DEFAULT_HOMODYNE_RESOLUTION: f64 = 0.05;

/// Default strictness `eps` in `delta_n < eps * n^{1/3}`.
pub const DEFAULT_PRECISION_STRICTNESS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdOutcome {
    /// No photons.
    Vacuum,
    /// One or more photons.
    Click,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Count(usize),
    Threshold(ThresholdOutcome),
    Clicks(usize),
    /// Probe phase in `[0, 2 pi)` and the count it implies, modulo `period`.
    Phase { phi: f64, inferred: usize, period: usize },
    /// Pointer momentum and the count it implies.
    Pointer { p: f64, inferred: i64 },
    Quadrature(f64),
}

impl Outcome {
    /// Integer photon count carried by the outcome, if any.
    pub fn count(&self) -> Option<i64> {
        match *self {
            Self::Count(n) | Self::Clicks(n) => Some(n as i64),
            Self::Phase { inferred, .. } => Some(inferred as i64),
            Self::Pointer { inferred, .. } => Some(inferred),
            Self::Threshold(ThresholdOutcome::Vacuum) => Some(0),
            Self::Threshold(ThresholdOutcome::Click) | Self::Quadrature(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    Pvm,
    Itd,
    Multiplexed,
    Kerr,
    Pointer,
    Homodyne,
}

/// Outcome of one measurement.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: Outcome,
    /// Probability of a discrete outcome, or probability density of a
    /// continuous one.
    pub probability: f64,
    /// Normalized state of all modes after the measurement.
    pub post_state: MultiModeState,
    /// Normalized state of the unmeasured modes, when the measurement leaves
    /// them pure and disentangled from the measured mode.
    pub remainder: Option<MultiModeState>,
    pub model: ModelTag,
}

/// Measurement model with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DetectorModel {
    Pvm,
    Itd,
    Multiplexed { n_modes: usize },
    Kerr { chi_t: f64, delta_phi: f64 },
    Pointer { lambda_t: f64, delta_p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub model: DetectorModel,
    pub rng_seed: u64,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Pvm | Self::Itd => Ok(()),
            Self::Multiplexed { n_modes } => balanced_tree(n_modes).map(|_| ()),
            Self::Kerr { chi_t, delta_phi } => check_response(chi_t, delta_phi, "chi_t", "delta_phi"),
            Self::Pointer { lambda_t, delta_p } => {
                check_response(lambda_t, delta_p, "lambda_t", "delta_p")
            }
        }
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        state: &MultiModeState,
        mode: usize,
        rng: &mut R,
    ) -> Result<MeasurementRecord> {
        match *self {
            Self::Pvm => photon_count_pvm(state, mode, rng),
            Self::Itd => itd_pvm(state, mode, rng),
            Self::Multiplexed { n_modes } => multiplexed_count(state, mode, n_modes, rng),
            Self::Kerr { chi_t, delta_phi } => kerr_qnd_measure(state, mode, chi_t, delta_phi, rng),
            Self::Pointer { lambda_t, delta_p } => pointer_measure(state, mode, lambda_t, delta_p, rng),
        }
    }
}

fn check_response(scale: f64, width: f64, scale_name: &str, width_name: &str) -> Result<()> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!("{scale_name} must be positive, got {scale}")));
    }
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::InvalidParameter(format!("{width_name} must be positive, got {width}")));
    }
    if width >= scale / 2.0 {
        return Err(Error::AmbiguousRounding {
            width,
            half_spacing: scale / 2.0,
        });
    }
    Ok(())
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

/// Nearest integer with halves rounded up.
fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Amplitudes of the unmeasured modes after contracting `mode` against
/// `weights` (a rank-one projection); `None` for a single-mode state.
fn contract_rest(state: &MultiModeState, mode: usize, weights: &[C64]) -> Result<Option<MultiModeState>> {
    if state.num_modes() == 1 {
        return Ok(None);
    }
    let d = state.cutoffs()[mode];
    let (rest, mat) = state.split_mode(mode)?;
    let amps = mat
        .chunks(d)
        .map(|row| row.iter().zip(weights).map(|(c, w)| c * w).sum())
        .collect();
    Ok(Some(MultiModeState::new(rest, amps)?))
}

fn project_level(
    state: &MultiModeState,
    mode: usize,
    n: usize,
) -> Result<(MultiModeState, Option<MultiModeState>)> {
    let d = state.cutoffs()[mode];
    let weights: Vec<C64> = (0..d).map(|k| C64::new(f64::from(u8::from(k == n)), 0.0)).collect();
    let post = state.weight_mode(mode, &weights)?.normalize()?;
    let rest = contract_rest(state, mode, &weights)?
        .map(MultiModeState::normalize)
        .transpose()?;
    Ok((post, rest))
}

/// Ideal photon-counting PVM `{|n><n|}` on one mode.
pub fn photon_count_pvm<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    state.require_normalized()?;
    let probs = state.photon_distribution(mode)?;
    let n = sample_index(&probs, rng);
    let (post_state, remainder) = project_level(state, mode, n)?;
    Ok(MeasurementRecord {
        outcome: Outcome::Count(n),
        probability: probs[n],
        post_state,
        remainder,
        model: ModelTag::Pvm,
    })
}

/// Ideal threshold detector `{|0><0|, I - |0><0|}`. A click leaves the
/// relative amplitudes of all `n >= 1` levels untouched.
pub fn itd_pvm<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    state.require_normalized()?;
    let probs = state.photon_distribution(mode)?;
    let p0 = probs[0];
    let vacuum = rng.random::<f64>() < p0;
    let d = state.cutoffs()[mode];
    let weights: Vec<C64> = (0..d)
        .map(|k| C64::new(f64::from(u8::from((k == 0) == vacuum)), 0.0))
        .collect();
    let post_state = state.weight_mode(mode, &weights)?.normalize()?;
    let (outcome, probability) = if vacuum {
        (ThresholdOutcome::Vacuum, p0)
    } else {
        (ThresholdOutcome::Click, 1.0 - p0)
    };
    Ok(MeasurementRecord {
        outcome: Outcome::Threshold(outcome),
        probability,
        post_state,
        remainder: None,
        model: ModelTag::Itd,
    })
}

/// Fans `mode` out over `n_modes` vacuum ancillas through a balanced
/// beamsplitter tree and counts ITD clicks.
pub fn multiplexed_count<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    n_modes: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    state.check_mode(mode)?;
    let table = ClickTable::new(n_modes, state.cutoffs()[mode])?;
    measure_with_table(state, mode, &table, rng)
}

/// As [`multiplexed_count`] with a precomputed click table.
///
/// The detected photons are absorbed, so the measured mode is left in
/// vacuum. When the measured mode is entangled with the others in a way
/// that leaves them mixed, the call fails with
/// [`Error::MixedConditionalState`].
pub fn measure_with_table<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    table: &ClickTable,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    state.require_normalized()?;
    let d = state.cutoffs()[mode];
    if table.cutoff() != d {
        return Err(Error::DimensionMismatch {
            expected: vec![d],
            found: vec![table.cutoff()],
        });
    }
    let photons = state.photon_distribution(mode)?;
    let max_clicks = table.n_modes().min(d - 1);
    let clicks_dist: Vec<f64> = (0..=max_clicks)
        .map(|c| (0..d).map(|n| photons[n] * table.probability(n, c)).sum())
        .collect();
    let clicks = sample_index(&clicks_dist, rng);

    let absorbed = MultiModeState::vacuum(&[d])?;
    let remainder = if state.num_modes() == 1 {
        None
    } else {
        Some(conditional_on_clicks(state, mode, table, clicks)?)
    };
    let post_state = MultiModeState::product_at(remainder.as_ref(), mode, &absorbed)?;
    Ok(MeasurementRecord {
        outcome: Outcome::Clicks(clicks),
        probability: clicks_dist[clicks],
        post_state,
        remainder,
        model: ModelTag::Multiplexed,
    })
}

fn conditional_on_clicks(
    state: &MultiModeState,
    mode: usize,
    table: &ClickTable,
    clicks: usize,
) -> Result<MultiModeState> {
    let d = state.cutoffs()[mode];
    let (rest, mat) = state.split_mode(mode)?;
    let rows = mat.len() / d;
    let branch = |n: usize| -> Vec<C64> { (0..rows).map(|r| mat[r * d + n]).collect() };
    let weight = |n: usize| -> f64 {
        table.probability(n, clicks) * branch(n).iter().map(|c| c.norm_sqr()).sum::<f64>()
    };
    let weights: Vec<f64> = (0..d).map(weight).collect();
    let total: f64 = weights.iter().sum();
    let best = (0..d)
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
        .expect("nonempty");
    let reference = branch(best);
    let ref_norm: f64 = reference.iter().map(|c| c.norm_sqr()).sum();
    for (n, &w) in weights.iter().enumerate() {
        if w <= 1e-14 * total || n == best {
            continue;
        }
        let b = branch(n);
        let b_norm: f64 = b.iter().map(|c| c.norm_sqr()).sum();
        let overlap: C64 = reference.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        if overlap.norm_sqr() < (1.0 - 1e-9) * ref_norm * b_norm {
            return Err(Error::MixedConditionalState);
        }
    }
    MultiModeState::new(rest, reference)?.normalize()
}

/// Combinatorial undercount probability of `k` photons spread uniformly
/// over `N` threshold detectors, with the `k(k-1)/2N` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Undercount {
    pub photons: usize,
    pub modes: usize,
    /// `1 - N! / (N^k (N-k)!)`
    pub exact: f64,
    /// `k (k - 1) / (2 N)`
    pub bound: f64,
    /// `exact` as an integer ratio, when it fits in 128 bits.
    pub exact_ratio: Option<(u128, u128)>,
}

impl Undercount {
    /// `exact <= bound` decided in integer arithmetic, if representable.
    pub fn bound_holds_exactly(&self) -> Option<bool> {
        let (num, den) = self.exact_ratio?;
        let k = self.photons as u128;
        let lhs = num.checked_mul(2)?.checked_mul(self.modes as u128)?;
        let rhs = (k * k.saturating_sub(1)).checked_mul(den)?;
        Some(lhs <= rhs)
    }
}

pub fn undercount_probability(k: usize, n_modes: usize) -> Result<Undercount> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("need at least one detector".into()));
    }
    let bound = (k * k.saturating_sub(1)) as f64 / (2.0 * n_modes as f64);
    if k > n_modes {
        return Ok(Undercount {
            photons: k,
            modes: n_modes,
            exact: 1.0,
            bound,
            exact_ratio: Some((1, 1)),
        });
    }
    let no_collision: f64 = (0..k).map(|i| 1.0 - i as f64 / n_modes as f64).product();
    let exact_ratio = (|| {
        let n = n_modes as u128;
        let den = n.checked_pow(k as u32)?;
        let falling = (0..k as u128).try_fold(1u128, |acc, i| acc.checked_mul(n - i))?;
        Some((den - falling, den))
    })();
    Ok(Undercount {
        photons: k,
        modes: n_modes,
        exact: 1.0 - no_collision,
        bound,
        exact_ratio,
    })
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log density of a Gaussian of width `sigma` wrapped onto the circle.
fn log_wrapped_gaussian(x: f64, sigma: f64) -> f64 {
    let reduced = (x + PI).rem_euclid(TAU) - PI;
    let norm = -(sigma * (TAU).sqrt()).ln();
    norm + log_sum_exp((-3..=3).map(|k| {
        let y = reduced + TAU * k as f64;
        -y * y / (2.0 * sigma * sigma)
    }))
}

fn log_gaussian(x: f64, sigma: f64) -> f64 {
    -(sigma * TAU.sqrt()).ln() - x * x / (2.0 * sigma * sigma)
}

/// Applies the diagonal Kraus operator `sqrt(g(outcome - scale n))|n><n|`
/// given log-densities per level; returns (post state, outcome density).
fn diagonal_response(
    state: &MultiModeState,
    mode: usize,
    photons: &[f64],
    log_response: &[f64],
) -> Result<(MultiModeState, f64)> {
    let density: f64 = photons
        .iter()
        .zip(log_response)
        .map(|(p, lg)| p * lg.exp())
        .sum();
    let max = photons
        .iter()
        .zip(log_response)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, lg)| *lg)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<C64> = log_response
        .iter()
        .map(|lg| C64::new((0.5 * (lg - max)).exp(), 0.0))
        .collect();
    let post = state.weight_mode(mode, &weights)?.normalize()?;
    Ok((post, density))
}

/// Photon-number period `round(2 pi / chi_t)` of the Kerr probe.
pub fn kerr_period(chi_t: f64) -> usize {
    ((TAU / chi_t).round() as usize).max(1)
}

/// Kerr cross-phase QND counter, modeled at the signal level.
///
/// The probe phase is `chi_t n + noise` folded into `[0, 2 pi)`, with
/// Gaussian noise of width `delta_phi`. The count `round(phi / chi_t)` is
/// only defined modulo the period, and the signal is projected (with a
/// Gaussian response) onto the number states consistent with `phi`.
pub fn kerr_qnd_measure<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    chi_t: f64,
    delta_phi: f64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    check_response(chi_t, delta_phi, "chi_t", "delta_phi")?;
    state.require_normalized()?;
    let photons = state.photon_distribution(mode)?;
    let n_true = sample_index(&photons, rng);
    let noise: f64 = rng.sample(StandardNormal);
    let phi = (chi_t * n_true as f64 + delta_phi * noise).rem_euclid(TAU);
    let period = kerr_period(chi_t);
    let inferred = round_half_up(phi / chi_t).rem_euclid(period as i64) as usize;
    let log_response: Vec<f64> = (0..photons.len())
        .map(|n| log_wrapped_gaussian(phi - chi_t * n as f64, delta_phi))
        .collect();
    let (post_state, density) = diagonal_response(state, mode, &photons, &log_response)?;
    Ok(MeasurementRecord {
        outcome: Outcome::Phase {
            phi,
            inferred,
            period,
        },
        probability: density,
        post_state,
        remainder: None,
        model: ModelTag::Kerr,
    })
}

/// Radiation-pressure style pointer: momentum `lambda_t n + noise` on an
/// unbounded pointer, so distinct photon numbers never alias.
pub fn pointer_measure<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    lambda_t: f64,
    delta_p: f64,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    check_response(lambda_t, delta_p, "lambda_t", "delta_p")?;
    state.require_normalized()?;
    let photons = state.photon_distribution(mode)?;
    let n_true = sample_index(&photons, rng);
    let noise: f64 = rng.sample(StandardNormal);
    let p = lambda_t * n_true as f64 + delta_p * noise;
    let inferred = round_half_up(p / lambda_t);
    let log_response: Vec<f64> = (0..photons.len())
        .map(|n| log_gaussian(p - lambda_t * n as f64, delta_p))
        .collect();
    let (post_state, density) = diagonal_response(state, mode, &photons, &log_response)?;
    Ok(MeasurementRecord {
        outcome: Outcome::Pointer { p, inferred },
        probability: density,
        post_state,
        remainder: None,
        model: ModelTag::Pointer,
    })
}

/// Marginal position density of `mode` on `grid`.
pub fn quadrature_density(state: &MultiModeState, mode: usize, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let d = state.cutoffs()[mode];
    let (_, mat) = state.split_mode(mode)?;
    let mut density = vec![0.0; grid.len()];
    for (j, &q) in grid.points().iter().enumerate() {
        let phi = hermite_functions(d, q);
        density[j] = mat
            .chunks(d)
            .map(|row| {
                row.iter()
                    .zip(&phi)
                    .map(|(c, f)| c * f)
                    .sum::<C64>()
                    .norm_sqr()
            })
            .sum();
    }
    Ok(density)
}

/// Normalized Gaussian position bin of width `resolution` at `center`,
/// expanded in the Fock basis: `<n|bin>` by local quadrature.
pub fn position_bin_overlaps(center: f64, resolution: f64, cutoff: usize) -> Vec<f64> {
    const HALF_POINTS: usize = 120;
    let half_width = 8.0 * resolution;
    let step = half_width / HALF_POINTS as f64;
    let norm = (TAU * resolution * resolution).powf(-0.25);
    let mut out = vec![0.0; cutoff];
    for i in 0..=2 * HALF_POINTS {
        let x = -half_width + step * i as f64;
        let weight = if i == 0 || i == 2 * HALF_POINTS { 0.5 } else { 1.0 };
        let g = norm * (-x * x / (4.0 * resolution * resolution)).exp() * weight * step;
        for (o, phi) in out.iter_mut().zip(hermite_functions(cutoff, center + x)) {
            *o += g * phi;
        }
    }
    out
}

/// Position-quadrature homodyne measurement of one mode.
///
/// The outcome is sampled from the exact marginal `|psi(q)|^2`; the
/// measured mode is left in a Gaussian bin of width `resolution` centred on
/// the outcome (projected onto the truncated space), and the other modes
/// are conditioned on that bin.
pub fn homodyne_measure<R: Rng + ?Sized>(
    state: &MultiModeState,
    mode: usize,
    rng: &mut R,
    resolution: f64,
) -> Result<MeasurementRecord> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "homodyne resolution must be positive, got {resolution}"
        )));
    }
    state.require_normalized()?;
    state.check_mode(mode)?;
    let d = state.cutoffs()[mode];
    let grid = QuadratureGrid::for_cutoff(d);
    let density = quadrature_density(state, mode, &grid)?;
    let h = grid.spacing();
    let mut cdf = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in density.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * h;
        cdf.push(acc);
    }
    if (acc - 1.0).abs() > 1e-6 {
        return Err(Error::GridNormalization {
            integral: acc,
            diagnostic: format!("homodyne grid for cutoff {d} with {} points", grid.len()),
        });
    }
    let u = rng.random::<f64>() * acc;
    let cell = cdf.partition_point(|&c| c <= u).clamp(1, cdf.len() - 1);
    let (c0, c1) = (cdf[cell - 1], cdf[cell]);
    let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
    let outcome = grid.points()[cell - 1] + frac * h;

    let bin = position_bin_overlaps(outcome, resolution, d);
    let weights: Vec<C64> = bin.iter().map(|&b| C64::new(b, 0.0)).collect();
    let bin_state = MultiModeState::new(vec![d], weights.clone())?.normalize()?;
    let remainder = contract_rest(state, mode, &weights)?
        .map(MultiModeState::normalize)
        .transpose()?;
    let post_state = MultiModeState::product_at(remainder.as_ref(), mode, &bin_state)?;
    let probability = if state.num_modes() == 1 {
        evaluate_amplitudes(state.amplitudes(), outcome).norm_sqr()
    } else {
        let phi = hermite_functions(d, outcome);
        let (_, mat) = state.split_mode(mode)?;
        mat.chunks(d)
            .map(|row| row.iter().zip(&phi).map(|(c, f)| c * f).sum::<C64>().norm_sqr())
            .sum()
    };
    Ok(MeasurementRecord {
        outcome: Outcome::Quadrature(outcome),
        probability,
        post_state,
        remainder,
        model: ModelTag::Homodyne,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCheck {
    pub passed: bool,
    /// `delta_n / n^{1/3}`
    pub ratio: f64,
}

/// Count-precision requirement `delta_n < strictness * n^{1/3}` for a
/// working cubic phase gate.
pub fn precision_check(delta_n: f64, n: usize, strictness: f64) -> Result<PrecisionCheck> {
    if n == 0 {
        return Err(Error::InvalidParameter("precision check needs n >= 1".into()));
    }
    let ratio = delta_n / (n as f64).cbrt();
    Ok(PrecisionCheck {
        passed: ratio < strictness,
        ratio,
    })
}

/// `delta_n = delta_phi / chi_t`.
pub fn kerr_count_uncertainty(chi_t: f64, delta_phi: f64) -> f64 {
    delta_phi / chi_t
}

/// `delta_n = delta_p / lambda_t`.
pub fn pointer_count_uncertainty(lambda_t: f64, delta_p: f64) -> f64 {
    delta_p / lambda_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn pvm_on_fock_and_superposition() {
        let s = MultiModeState::number_state(3, 8).unwrap();
        let r = photon_count_pvm(&s, 0, &mut rng()).unwrap();
        assert_eq!(r.outcome, Outcome::Count(3));
        assert_eq!(r.probability, 1.0);
        let s = MultiModeState::superposition(4, &[(0, c(1.0)), (1, c(1.0))]).unwrap();
        let r = photon_count_pvm(&s, 0, &mut rng()).unwrap();
        assert!((r.probability - 0.5).abs() < 1e-15);
        let again = photon_count_pvm(&r.post_state, 0, &mut rng()).unwrap();
        assert_eq!(again.outcome, r.outcome);
        assert_eq!(again.probability, 1.0);
    }

    #[test]
    fn pvm_rejects_unnormalized_state() {
        let s = MultiModeState::new(vec![3], vec![c(1.0), c(1.0), c(0.0)]).unwrap();
        assert!(matches!(
            photon_count_pvm(&s, 0, &mut rng()),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn itd_saturates() {
        let vac = MultiModeState::vacuum(&[6]).unwrap();
        let r = itd_pvm(&vac, 0, &mut rng()).unwrap();
        assert_eq!(r.outcome, Outcome::Threshold(ThresholdOutcome::Vacuum));
        assert_eq!(r.probability, 1.0);
        let five = MultiModeState::number_state(5, 6).unwrap();
        let r = itd_pvm(&five, 0, &mut rng()).unwrap();
        assert_eq!(r.outcome, Outcome::Threshold(ThresholdOutcome::Click));
        assert_eq!(r.post_state, five);
        // click keeps relative amplitudes of n >= 1
        let s = MultiModeState::superposition(6, &[(0, c(1.0)), (2, c(1.0)), (4, C64::new(0.0, 2.0))])
            .unwrap();
        let mut g = rng();
        let r = loop {
            let r = itd_pvm(&s, 0, &mut g).unwrap();
            if r.outcome == Outcome::Threshold(ThresholdOutcome::Click) {
                break r;
            }
        };
        let a = r.post_state.amplitudes();
        assert!((a[4] / a[2] - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert_eq!(a[0], c(0.0));
    }

    #[test]
    fn multiplexed_single_photon_always_clicks_once() {
        for n_modes in [1, 2, 8] {
            let s = MultiModeState::number_state(1, 4).unwrap();
            let r = multiplexed_count(&s, 0, n_modes, &mut rng()).unwrap();
            assert_eq!(r.outcome, Outcome::Clicks(1));
            assert_eq!(r.post_state, MultiModeState::vacuum(&[4]).unwrap());
        }
        let vac = MultiModeState::vacuum(&[4]).unwrap();
        assert_eq!(multiplexed_count(&vac, 0, 4, &mut rng()).unwrap().outcome, Outcome::Clicks(0));
        assert!(multiplexed_count(&vac, 0, 3, &mut rng()).is_err());
    }

    #[test]
    fn multiplexed_keeps_product_partner_and_rejects_mixing() {
        let partner = MultiModeState::superposition(3, &[(0, c(0.6)), (2, c(0.8))]).unwrap();
        let s = MultiModeState::number_state(2, 4).unwrap().tensor(&partner);
        let r = multiplexed_count(&s, 0, 2, &mut rng()).unwrap();
        assert!((r.remainder.unwrap().inner(&partner).unwrap().norm() - 1.0).abs() < 1e-12);
        // |0,0> + |1,1>: any click count leaves the partner pure (clicks = photons
        // for n <= 1), but |1,0> + |2,1> with clicks = 1 mixes the partner
        let mut amps = vec![c(0.0); 4 * 2];
        amps[2] = c(1.0); // |1,0>
        amps[2 * 2 + 1] = c(1.0); // |2,1>
        let s = MultiModeState::new(vec![4, 2], amps).unwrap().normalize().unwrap();
        let mut g = rng();
        let mut saw_mixed = false;
        for _ in 0..50 {
            match multiplexed_count(&s, 0, 2, &mut g) {
                Err(Error::MixedConditionalState) => saw_mixed = true,
                Ok(r) => assert!(r.remainder.is_some()),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(saw_mixed);
    }

    #[test]
    fn undercount_values() {
        let u = undercount_probability(1, 7).unwrap();
        assert_eq!((u.exact, u.bound), (0.0, 0.0));
        let u = undercount_probability(2, 2).unwrap();
        assert_eq!((u.exact, u.bound), (0.5, 0.5));
        let u = undercount_probability(2, 4).unwrap();
        assert_eq!((u.exact, u.bound), (0.25, 0.25));
        let u = undercount_probability(3, 8).unwrap();
        assert_eq!(u.exact_ratio, Some((176, 512)));
        assert!((u.exact - 0.34375).abs() < 1e-15);
        assert_eq!(u.bound, 0.375);
        assert_eq!(u.bound_holds_exactly(), Some(true));
        assert_eq!(undercount_probability(5, 4).unwrap().exact, 1.0);
        assert!(undercount_probability(1, 0).is_err());
    }

    #[test]
    fn kerr_aliases_modulo_period() {
        let chi_t = TAU / 8.0;
        let tiny = 1e-4 * chi_t;
        let s = MultiModeState::number_state(3, 16).unwrap();
        let r = kerr_qnd_measure(&s, 0, chi_t, tiny, &mut rng()).unwrap();
        assert!(matches!(r.outcome, Outcome::Phase { inferred: 3, period: 8, .. }));
        let s = MultiModeState::number_state(11, 16).unwrap();
        let r = kerr_qnd_measure(&s, 0, chi_t, tiny, &mut rng()).unwrap();
        assert!(matches!(r.outcome, Outcome::Phase { inferred: 3, .. }));
        let sup = MultiModeState::superposition(16, &[(2, c(1.0)), (10, c(1.0))]).unwrap();
        let r = kerr_qnd_measure(&sup, 0, chi_t, tiny, &mut rng()).unwrap();
        assert!(matches!(r.outcome, Outcome::Phase { inferred: 2, .. }));
        assert!(crate::fock::fidelity(&r.post_state, &sup).unwrap() > 1.0 - 1e-9);
        assert!(matches!(
            kerr_qnd_measure(&sup, 0, chi_t, chi_t / 2.0, &mut rng()),
            Err(Error::AmbiguousRounding { .. })
        ));
    }

    #[test]
    fn pointer_resolves_full_count() {
        let s = MultiModeState::number_state(4, 16).unwrap();
        let r = pointer_measure(&s, 0, 1.0, 1e-4, &mut rng()).unwrap();
        assert_eq!(r.outcome.count(), Some(4));
        let vac = MultiModeState::vacuum(&[16]).unwrap();
        assert_eq!(pointer_measure(&vac, 0, 1.0, 1e-4, &mut rng()).unwrap().outcome.count(), Some(0));
        let sup = MultiModeState::superposition(16, &[(2, c(1.0)), (10, c(1.0))]).unwrap();
        let r = pointer_measure(&sup, 0, 1.0, 1e-4, &mut rng()).unwrap();
        let n = r.outcome.count().unwrap() as usize;
        assert!(n == 2 || n == 10);
        assert!((r.post_state.amplitudes()[n].norm() - 1.0).abs() < 1e-12);
        assert!(pointer_measure(&sup, 0, 1.0, 0.6, &mut rng()).is_err());
    }

    #[test]
    fn precision_examples() {
        let p = precision_check(0.01, 1000, DEFAULT_PRECISION_STRICTNESS).unwrap();
        assert!(p.passed);
        assert!((p.ratio - 0.001).abs() < 1e-15);
        let p = precision_check(5.0, 8, DEFAULT_PRECISION_STRICTNESS).unwrap();
        assert!(!p.passed);
        assert!((p.ratio - 2.5).abs() < 1e-15);
        assert!(precision_check(1.0, 0, 0.1).is_err());
        let dn = kerr_count_uncertainty(TAU / 64.0, 0.01);
        assert!((dn - 0.64 / TAU).abs() < 1e-15);
    }

    #[test]
    fn homodyne_on_vacuum_has_vacuum_statistics() {
        let vac = MultiModeState::vacuum(&[12]).unwrap();
        let mut g = rng();
        let samples: Vec<f64> = (0..4000)
            .map(|_| match homodyne_measure(&vac, 0, &mut g, 0.05).unwrap().outcome {
                Outcome::Quadrature(q) => q,
                _ => unreachable!(),
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        // standard errors: sqrt(0.5/4000) = 0.011, var se ~ 0.5*sqrt(2/4000) = 0.011
        assert!(mean.abs() < 0.045, "mean {mean}");
        assert!((var - 0.5).abs() < 0.045, "var {var}");
    }

    #[test]
    fn position_bin_is_normalized_gaussian() {
        // a wide bin near the origin is almost entirely inside a modest cutoff
        let bin = position_bin_overlaps(0.3, 0.5, 40);
        let norm: f64 = bin.iter().map(|b| b * b).sum();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    }
}
