use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Norm tolerance used for the `is_normalized` flag.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Pure state of `n` bosonic modes, each truncated to a finite Fock space.
///
/// Amplitudes are stored row-major: the last mode varies fastest. A mode with
/// cutoff `d` holds at most `d - 1` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiModeState {
    amplitudes: Vec<C64>,
    cutoffs: Vec<usize>,
    normalized: bool,
}

pub(crate) fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    Ok(())
}

pub(crate) fn strides(cutoffs: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cutoffs.len()];
    for i in (0..cutoffs.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cutoffs[i + 1];
    }
    strides
}

impl MultiModeState {
    pub fn new(cutoffs: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidParameter("state needs at least one mode".into()));
        }
        for &d in &cutoffs {
            check_cutoff(d)?;
        }
        let dim: usize = cutoffs.iter().product();
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: vec![dim],
                found: vec![amplitudes.len()],
            });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        Ok(Self {
            amplitudes,
            cutoffs,
            normalized: (norm_sqr - 1.0).abs() <= NORM_TOLERANCE,
        })
    }

    pub fn vacuum(cutoffs: &[usize]) -> Result<Self> {
        Self::fock(&vec![0; cutoffs.len()], cutoffs)
    }

    /// Single-mode Fock state `|n>`.
    pub fn number_state(n: usize, cutoff: usize) -> Result<Self> {
        Self::fock(&[n], &[cutoff])
    }

    /// Product Fock state `|n_1, n_2, ...>`.
    pub fn fock(occupations: &[usize], cutoffs: &[usize]) -> Result<Self> {
        if occupations.len() != cutoffs.len() {
            return Err(Error::DimensionMismatch {
                expected: vec![cutoffs.len()],
                found: vec![occupations.len()],
            });
        }
        for (&n, &d) in occupations.iter().zip(cutoffs) {
            check_cutoff(d)?;
            if n >= d {
                return Err(Error::Truncation { n, cutoff: d });
            }
        }
        let dim: usize = cutoffs.iter().product();
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        let idx: usize = occupations
            .iter()
            .zip(strides(cutoffs))
            .map(|(n, s)| n * s)
            .sum();
        amplitudes[idx] = C64::new(1.0, 0.0);
        Self::new(cutoffs.to_vec(), amplitudes)
    }

    /// Normalized single-mode superposition `sum_k c_k |n_k>`.
    pub fn superposition(cutoff: usize, terms: &[(usize, C64)]) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); cutoff];
        for &(n, c) in terms {
            if n >= cutoff {
                return Err(Error::Truncation { n, cutoff });
            }
            amplitudes[n] += c;
        }
        Self::new(vec![cutoff], amplitudes)?.normalize()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        let idx: usize = occupations
            .iter()
            .zip(strides(&self.cutoffs))
            .map(|(n, s)| n * s)
            .sum();
        self.amplitudes[idx]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if !self.normalized {
            return Err(Error::NotNormalized {
                norm_sqr: self.norm_sqr(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            return Err(Error::InvalidMode {
                mode,
                num_modes: self.num_modes(),
            });
        }
        Ok(())
    }

    pub fn normalize(self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let amplitudes = self.amplitudes.into_iter().map(|c| c / norm).collect();
        Self::new(self.cutoffs, amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.cutoffs != other.cutoffs {
            return Err(Error::DimensionMismatch {
                expected: self.cutoffs.clone(),
                found: other.cutoffs.clone(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product, `self` occupying the leading modes.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        let norm_sqr: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        Self {
            amplitudes,
            cutoffs,
            normalized: (norm_sqr - 1.0).abs() <= NORM_TOLERANCE,
        }
    }

    /// Photon-number probabilities of one mode, marginalized over the rest.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let d = self.cutoffs[mode];
        let stride = strides(&self.cutoffs)[mode];
        let mut probs = vec![0.0; d];
        for (i, c) in self.amplitudes.iter().enumerate() {
            probs[(i / stride) % d] += c.norm_sqr();
        }
        Ok(probs)
    }

    /// Largest probability mass found in the top 10% of Fock levels of any
    /// mode. This is the truncation error proxy reported after each gate.
    pub fn leakage(&self) -> f64 {
        let total = self.norm_sqr();
        if total == 0.0 {
            return 0.0;
        }
        (0..self.num_modes())
            .map(|m| {
                let d = self.cutoffs[m];
                let top = d.div_ceil(10);
                let probs = self.photon_distribution(m).expect("valid mode");
                probs[d - top..].iter().sum::<f64>() / total
            })
            .fold(0.0, f64::max)
    }

    /// Zero-pads the state into larger per-mode cutoffs.
    pub fn embed(&self, cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.len() != self.num_modes()
            || cutoffs.iter().zip(&self.cutoffs).any(|(new, old)| new < old)
        {
            return Err(Error::DimensionMismatch {
                expected: self.cutoffs.clone(),
                found: cutoffs.to_vec(),
            });
        }
        let dim: usize = cutoffs.iter().product();
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        let new_strides = strides(cutoffs);
        for (i, occ) in self.indices().enumerate() {
            let j: usize = occ.iter().zip(&new_strides).map(|(n, s)| n * s).sum();
            amplitudes[j] = self.amplitudes[i];
        }
        Self::new(cutoffs.to_vec(), amplitudes)
    }

    /// Iterates the occupation tuples in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let cutoffs = self.cutoffs.clone();
        let dim = self.dim();
        let strides = strides(&cutoffs);
        (0..dim).map(move |i| {
            cutoffs
                .iter()
                .zip(&strides)
                .map(|(d, s)| (i / s) % d)
                .collect()
        })
    }

    /// Amplitudes arranged as a `rest x d_mode` matrix (row-major, flattened),
    /// together with the cutoffs of the remaining modes.
    pub fn split_mode(&self, mode: usize) -> Result<(Vec<usize>, Vec<C64>)> {
        self.check_mode(mode)?;
        let d = self.cutoffs[mode];
        let stride = strides(&self.cutoffs)[mode];
        let rest_dim = self.dim() / d;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (i, c) in self.amplitudes.iter().enumerate() {
            let n = (i / stride) % d;
            let high = i / (stride * d);
            let low = i % stride;
            let r = high * stride + low;
            out[r * d + n] = *c;
        }
        debug_assert_eq!(rest_dim * d, out.len());
        let mut rest = self.cutoffs.clone();
        rest.remove(mode);
        Ok((rest, out))
    }

    /// Inverse of [`split_mode`](Self::split_mode) for a product of a
    /// rest-state and a single-mode state inserted at position `mode`.
    pub fn product_at(
        rest: Option<&MultiModeState>,
        mode: usize,
        single: &MultiModeState,
    ) -> Result<Self> {
        if single.num_modes() != 1 {
            return Err(Error::InvalidParameter("expected a single-mode state".into()));
        }
        let Some(rest) = rest else {
            return Ok(single.clone());
        };
        if mode > rest.num_modes() {
            return Err(Error::InvalidMode {
                mode,
                num_modes: rest.num_modes() + 1,
            });
        }
        let mut cutoffs = rest.cutoffs.clone();
        cutoffs.insert(mode, single.cutoffs[0]);
        let d = single.cutoffs[0];
        let stride: usize = cutoffs[mode + 1..].iter().product();
        let mut amplitudes = vec![C64::new(0.0, 0.0); rest.dim() * d];
        for (r, a) in rest.amplitudes.iter().enumerate() {
            let high = r / stride;
            let low = r % stride;
            for (n, b) in single.amplitudes.iter().enumerate() {
                amplitudes[(high * d + n) * stride + low] = a * b;
            }
        }
        Self::new(cutoffs, amplitudes)
    }

    /// Multiplies every amplitude by `weights[n]`, where `n` is the
    /// occupation of `mode`. No renormalization.
    pub fn weight_mode(&self, mode: usize, weights: &[C64]) -> Result<Self> {
        self.check_mode(mode)?;
        let d = self.cutoffs[mode];
        if weights.len() != d {
            return Err(Error::DimensionMismatch {
                expected: vec![d],
                found: vec![weights.len()],
            });
        }
        let stride = strides(&self.cutoffs)[mode];
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, c)| c * weights[(i / stride) % d])
            .collect();
        Self::new(self.cutoffs.clone(), amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_state_bounds() {
        let s = MultiModeState::number_state(0, 8).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let s = MultiModeState::number_state(3, 8).unwrap();
        assert_eq!(s.amplitudes()[3], C64::new(1.0, 0.0));
        assert!(s.is_normalized());
        assert_eq!(
            MultiModeState::number_state(8, 8),
            Err(Error::Truncation { n: 8, cutoff: 8 })
        );
        assert_eq!(
            MultiModeState::number_state(0, 1),
            Err(Error::InvalidCutoff(1))
        );
    }

    #[test]
    fn split_and_product_roundtrip() {
        let a = MultiModeState::superposition(3, &[(0, C64::new(1.0, 0.0)), (2, C64::new(0.0, 1.0))])
            .unwrap();
        let b = MultiModeState::superposition(4, &[(1, C64::new(1.0, 0.0)), (3, C64::new(2.0, 0.0))])
            .unwrap();
        let c = MultiModeState::number_state(1, 2).unwrap();
        let abc = a.tensor(&b).tensor(&c);
        let ac = a.tensor(&c);
        let rebuilt = MultiModeState::product_at(Some(&ac), 1, &b).unwrap();
        assert_eq!(rebuilt.cutoffs(), abc.cutoffs());
        for (x, y) in rebuilt.amplitudes().iter().zip(abc.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
        let (rest, mat) = abc.split_mode(1).unwrap();
        assert_eq!(rest, vec![3, 2]);
        // row (n_a=2, n_c=1) -> r = 2*2+1 = 5, column n_b = 3
        assert!((mat[5 * 4 + 3] - abc.amplitude(&[2, 3, 1])).norm() < 1e-15);
    }

    #[test]
    fn leakage_counts_top_levels() {
        let s = MultiModeState::fock(&[9, 0], &[10, 10]).unwrap();
        assert_eq!(s.leakage(), 1.0);
        let s = MultiModeState::fock(&[8, 0], &[10, 10]).unwrap();
        assert_eq!(s.leakage(), 0.0);
    }

    #[test]
    fn photon_distribution_marginalizes() {
        let s = MultiModeState::fock(&[1, 2], &[3, 4]).unwrap();
        assert_eq!(s.photon_distribution(0).unwrap(), vec![0.0, 1.0, 0.0]);
        assert_eq!(s.photon_distribution(1).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(s.photon_distribution(2).is_err());
    }
}
