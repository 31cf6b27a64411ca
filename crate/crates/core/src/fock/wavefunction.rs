use num_complex::Complex64 as C64;

use super::state::MultiModeState;
use crate::error::{Error, Result};

/// Tolerance of the grid normalization check.
pub const GRID_NORM_TOLERANCE: f64 = 1e-6;

/// Uniformly spaced position grid (hbar = 1 units).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    points: Vec<f64>,
    spacing: f64,
}

impl QuadratureGrid {
    /// `len` points from `start` to `stop` inclusive.
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs start < stop and at least 2 points (got {start}..{stop}, {len})"
            )));
        }
        let spacing = (stop - start) / (len - 1) as f64;
        let points = (0..len).map(|i| start + spacing * i as f64).collect();
        Ok(Self { points, spacing })
    }

    /// Grid over `[-half_width, half_width]` with spacing at most `max_spacing`.
    pub fn symmetric(half_width: f64, max_spacing: f64) -> Result<Self> {
        if !(max_spacing > 0.0) {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        let intervals = (2.0 * half_width / max_spacing).ceil().max(1.0) as usize;
        Self::new(-half_width, half_width, intervals + 1)
    }

    /// Grid that resolves every Hermite function below `cutoff`: spans
    /// `+-4 sqrt(cutoff)` and samples the fastest oscillation at least
    /// eight times per period.
    pub fn for_cutoff(cutoff: usize) -> Self {
        let half_width = 4.0 * (cutoff as f64).sqrt() + 4.0;
        let k_max = (2.0 * cutoff as f64 + 1.0).sqrt();
        Self::symmetric(half_width, std::f64::consts::PI / (4.0 * k_max))
            .expect("valid grid parameters")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Hermite functions `phi_0(q) .. phi_{count-1}(q)` by the three-term
/// recurrence `phi_{n+1} = sqrt(2/(n+1)) q phi_n - sqrt(n/(n+1)) phi_{n-1}`.
pub fn hermite_functions(count: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
    out.push(phi0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * q * phi0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Row-major `cutoff x grid.len()` table of Hermite functions.
pub fn hermite_table(cutoff: usize, grid: &QuadratureGrid) -> Vec<Vec<f64>> {
    let mut table = vec![Vec::with_capacity(grid.len()); cutoff];
    for &q in grid.points() {
        for (row, v) in table.iter_mut().zip(hermite_functions(cutoff, q)) {
            row.push(v);
        }
    }
    table
}

/// Evaluates `sum_n c_n phi_n(q)` for raw amplitudes at a single point.
pub fn evaluate_amplitudes(amplitudes: &[C64], q: f64) -> C64 {
    amplitudes
        .iter()
        .zip(hermite_functions(amplitudes.len(), q))
        .map(|(c, phi)| c * phi)
        .sum()
}

/// Position-space wavefunction of a single-mode state sampled on `grid`.
///
/// For a normalized state the grid must capture the full norm; otherwise
/// the call fails with a diagnostic describing the grid.
pub fn wavefunction(state: &MultiModeState, grid: &QuadratureGrid) -> Result<Vec<C64>> {
    if state.num_modes() != 1 {
        return Err(Error::InvalidParameter(format!(
            "wavefunction needs a single-mode state, got {} modes",
            state.num_modes()
        )));
    }
    let amps = state.amplitudes();
    let psi: Vec<C64> = grid
        .points()
        .iter()
        .map(|&q| evaluate_amplitudes(amps, q))
        .collect();
    if state.is_normalized() {
        let integral: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.spacing();
        if (integral - 1.0).abs() > GRID_NORM_TOLERANCE {
            let cutoff = state.cutoffs()[0];
            return Err(Error::GridNormalization {
                integral,
                diagnostic: format!(
                    "grid [{:.3}, {:.3}] step {:.4}; cutoff {} needs half-width >= {:.3} and step <= {:.4}",
                    grid.points()[0],
                    grid.points()[grid.len() - 1],
                    grid.spacing(),
                    cutoff,
                    4.0 * (cutoff as f64).sqrt(),
                    std::f64::consts::PI / (2.0 * (2.0 * cutoff as f64 + 1.0).sqrt()),
                ),
            });
        }
    }
    Ok(psi)
}
