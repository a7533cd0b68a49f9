//! Spectral diagnostics of transfer-optimized chains: the scaled gap ladder,
//! distance to the nearest odd integer, eigenvector localization weights and
//! the partially-ordered-spectrum report.
//!
//! Near-perfect transfer at arrival time T requires successive eigenvalues to
//! differ by odd multiples of π/T (constructive interference at t = T), with
//! the participating eigenvectors localized at the chain ends.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::SpectralDecomposition;
use crate::{Error, Result};

/// Successive eigenvalue gaps Δ_i = E_{i+1} - E_i scaled by π/T, their
/// nearest odd integers q_i and the distances d_i = |Δ_i/(π/T) - q_i|.
/// Entry `i` (0-based) describes the gap between eigenvalues i+1 and i+2.
#[derive(Debug, Clone)]
pub struct GapLadder {
    arrival_time: f64,
    scaled_gaps: Vec<f64>,
    odd_targets: Vec<u64>,
    odd_distances: Vec<f64>,
}

impl GapLadder {
    pub fn arrival_time(&self) -> f64 {
        self.arrival_time
    }

    pub fn scaled_gaps(&self) -> &[f64] {
        &self.scaled_gaps
    }

    pub fn odd_targets(&self) -> &[u64] {
        &self.odd_targets
    }

    pub fn odd_distances(&self) -> &[f64] {
        &self.odd_distances
    }

    pub fn len(&self) -> usize {
        self.scaled_gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_gaps.is_empty()
    }

    /// CSV with header `i,scaled_gap,q,d`; gap indices are 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,scaled_gap,q,d")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:.16e},{},{:.16e}",
                i + 1,
                self.scaled_gaps[i],
                self.odd_targets[i],
                self.odd_distances[i]
            )?;
        }
        Ok(())
    }
}

/// Localization weights w_i = |⟨v_i|𝟏⟩|² of every eigenvector against the
/// first-site excitation state; they sum to 1 by completeness.
#[derive(Debug, Clone)]
pub struct LocalizationProfile {
    weights: Vec<f64>,
}

impl LocalizationProfile {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// CSV with header `i,weight`; eigenvector indices are 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,weight")?;
        for (i, weight) in self.weights.iter().enumerate() {
            writeln!(w, "{},{:.16e}", i + 1, weight)?;
        }
        Ok(())
    }
}

/// Nearest odd natural number >= 1; ties at even integers break toward the
/// smaller odd.
fn nearest_odd(x: f64) -> u64 {
    if x <= 1.0 {
        return 1;
    }
    let lower = 2 * (((x - 1.0) / 2.0).floor() as u64) + 1;
    let upper = lower + 2;
    if x - lower as f64 <= upper as f64 - x {
        lower
    } else {
        upper
    }
}

/// Scaled gap ladder of a decomposition for the given arrival time.
pub fn gap_ladder(sd: &SpectralDecomposition, arrival_time: f64) -> Result<GapLadder> {
    if !(arrival_time > 0.0) || !arrival_time.is_finite() {
        return Err(Error::invalid(format!(
            "arrival time must be positive, got {arrival_time}"
        )));
    }
    let energies = sd.energies();
    if energies.len() < 2 {
        return Err(Error::invalid("gap ladder needs at least two eigenvalues"));
    }
    let unit = std::f64::consts::PI / arrival_time;
    let scaled_gaps: Vec<f64> = energies.windows(2).map(|w| (w[1] - w[0]) / unit).collect();
    let odd_targets: Vec<u64> = scaled_gaps.iter().map(|&g| nearest_odd(g)).collect();
    let odd_distances: Vec<f64> = scaled_gaps
        .iter()
        .zip(&odd_targets)
        .map(|(&g, &q)| (g - q as f64).abs())
        .collect();
    Ok(GapLadder { arrival_time, scaled_gaps, odd_targets, odd_distances })
}

/// Localization weights against site 1.
pub fn localization_profile(sd: &SpectralDecomposition) -> LocalizationProfile {
    localization_profile_at(sd, 1)
}

/// Localization weights against an arbitrary 1-based site.
pub fn localization_profile_at(sd: &SpectralDecomposition, site: usize) -> LocalizationProfile {
    let weights = (0..sd.n())
        .map(|i| {
            let c = sd.component(i, site);
            c * c
        })
        .collect();
    LocalizationProfile { weights }
}

/// Summary of how ordered a spectrum is: which gaps sit within `gap_tol` of
/// an odd integer, how many there are, and how much localization weight the
/// eigenvectors bounding those gaps carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    /// 1-based indices of gaps with d_i <= gap_tol.
    pub ordered_indices: Vec<usize>,
    pub ordered_count: usize,
    /// Total weight w_i over eigenvectors adjacent to at least one ordered gap.
    pub ordered_weight: f64,
    pub gap_tol: f64,
    pub weight_floor: f64,
}

/// Classify the gaps of `ladder` against `gap_tol` and accumulate the
/// localization weight of the participating eigenvectors. An eigenvector
/// participates when it bounds at least one ordered gap; `weight_floor`
/// (the extended-state level, typically ~2/N) is recorded alongside so a
/// report is interpretable on its own.
pub fn order_report(
    ladder: &GapLadder,
    profile: &LocalizationProfile,
    gap_tol: f64,
    weight_floor: f64,
) -> Result<OrderReport> {
    if !(gap_tol > 0.0) {
        return Err(Error::invalid(format!("gap_tol must be positive, got {gap_tol}")));
    }
    if !(weight_floor > 0.0 && weight_floor < 1.0) {
        return Err(Error::invalid(format!(
            "weight_floor must lie in (0, 1), got {weight_floor}"
        )));
    }
    if profile.weights().len() != ladder.len() + 1 {
        return Err(Error::invalid(format!(
            "profile covers {} eigenvectors but the ladder has {} gaps",
            profile.weights().len(),
            ladder.len()
        )));
    }

    let mut ordered_indices = Vec::new();
    let mut participating = vec![false; profile.weights().len()];
    for (i, &d) in ladder.odd_distances().iter().enumerate() {
        if d <= gap_tol {
            ordered_indices.push(i + 1);
            participating[i] = true;
            participating[i + 1] = true;
        }
    }
    let ordered_weight = profile
        .weights()
        .iter()
        .zip(&participating)
        .filter(|(_, &p)| p)
        .map(|(w, _)| w)
        .sum();

    Ok(OrderReport {
        ordered_count: ordered_indices.len(),
        ordered_indices,
        ordered_weight,
        gap_tol,
        weight_floor,
    })
}
