//! Beamsplitter-tree multiplexing of one mode onto `N` threshold detectors.
//!
//! The tree is simulated in the Fock basis, one total-photon-number sector
//! at a time: an `n`-photon input only populates occupation patterns of `N`
//! modes summing to `n`, which keeps the state small even for `N = 16`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;

use crate::clifford::beamsplitter;
use crate::error::{Error, Result};

/// Largest number of occupation patterns simulated for a single sector.
pub const DEFAULT_SECTOR_BUDGET: usize = 1 << 20;

/// Number of occupation patterns of `modes` modes holding `photons` photons.
pub fn sector_dimension(modes: usize, photons: usize) -> usize {
    // C(modes + photons - 1, photons), saturating
    let mut acc: u128 = 1;
    for i in 0..photons as u128 {
        acc = acc * (modes as u128 + i) / (i + 1);
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Balanced tree of 50:50 beamsplitters: stage `s` couples port `i` to port
/// `i + 2^s` for every already-populated port `i`.
pub fn balanced_tree(n_modes: usize) -> Result<Vec<(usize, usize)>> {
    if n_modes == 0 || !n_modes.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "multiplexing needs a power-of-two mode count, got {n_modes}"
        )));
    }
    let mut pairs = Vec::new();
    let mut span = 1;
    while span < n_modes {
        for i in 0..span {
            pairs.push((i, i + span));
        }
        span *= 2;
    }
    Ok(pairs)
}

/// Click-count distribution of an `N`-detector tree for each input photon
/// number below `cutoff`.
#[derive(Debug, Clone)]
pub struct ClickTable {
    n_modes: usize,
    /// `rows[n][c]` = P(c clicks | n photons)
    rows: Vec<Vec<f64>>,
}

impl ClickTable {
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::with_budget(n_modes, cutoff, DEFAULT_SECTOR_BUDGET)
    }

    pub fn with_budget(n_modes: usize, cutoff: usize, budget: usize) -> Result<Self> {
        let tree = balanced_tree(n_modes)?;
        let top = cutoff.saturating_sub(1);
        let dimension = sector_dimension(n_modes, top);
        if dimension > budget {
            return Err(Error::AncillaBudget { dimension, budget });
        }
        // one beamsplitter matrix large enough for every sector
        let side = (top + 1).max(2);
        let bs = beamsplitter(FRAC_PI_4, (side, side))?;
        let rows = (0..cutoff)
            .map(|n| click_distribution(n_modes, n, &tree, |r, c| bs.element(r, c), side))
            .collect();
        Ok(Self { n_modes, rows })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.rows.len()
    }

    /// P(clicks | photons).
    pub fn probability(&self, photons: usize, clicks: usize) -> f64 {
        self.rows
            .get(photons)
            .and_then(|r| r.get(clicks))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn row(&self, photons: usize) -> &[f64] {
        &self.rows[photons]
    }

    /// Probability that `photons` are undercounted (fewer clicks than photons).
    pub fn undercount(&self, photons: usize) -> f64 {
        self.rows[photons][..photons.min(self.rows[photons].len())]
            .iter()
            .sum()
    }
}

fn click_distribution<F>(
    n_modes: usize,
    photons: usize,
    tree: &[(usize, usize)],
    element: F,
    bs_dim: usize,
) -> Vec<f64>
where
    F: Fn(usize, usize) -> C64,
{
    let mut start = vec![0u16; n_modes];
    start[0] = photons as u16;
    let mut state: BTreeMap<Vec<u16>, C64> = BTreeMap::new();
    state.insert(start, C64::new(1.0, 0.0));
    for &(i, j) in tree {
        let mut next: BTreeMap<Vec<u16>, C64> = BTreeMap::new();
        for (occ, amp) in &state {
            let (ni, nj) = (occ[i] as usize, occ[j] as usize);
            let total = ni + nj;
            let col = ni * bs_dim + nj;
            for mi in 0..=total {
                let value = element(mi * bs_dim + (total - mi), col);
                if value.norm_sqr() == 0.0 {
                    continue;
                }
                let mut out = occ.clone();
                out[i] = mi as u16;
                out[j] = (total - mi) as u16;
                *next.entry(out).or_insert(C64::new(0.0, 0.0)) += value * amp;
            }
        }
        state = next;
    }
    let mut probs = vec![0.0; n_modes.min(photons) + 1];
    for (occ, amp) in &state {
        let clicks = occ.iter().filter(|&&n| n > 0).count();
        probs[clicks] += amp.norm_sqr();
    }
    probs
}
