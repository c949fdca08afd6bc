//! The compared formation schemes and their rate evaluations.

use serde::Serialize;
use swarm_mimo::metrics::{channel_matrix, sic_sum_capacity, tin_sum_rate, SwarmFormation, UavPlacement};
use swarm_mimo::{ArrayGeometry, OptimizationTrace, RateObjective};

use crate::config::ScenarioConfig;
use crate::error::Result;

/// Row tag for every emitted result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Terminals dropped at random; scored with linear receivers, the
    /// weakest link of the comparison chain.
    RandomSwarm,
    /// Formation optimized for sum capacity under successive cancellation.
    ProposedSic,
    /// Formation optimized for sum rate under linear receivers.
    ProposedTin,
    /// Interference-free ceiling `K log2(1 + rho M)`.
    CapacityUb,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::RandomSwarm => "random_swarm",
            Scheme::ProposedSic => "proposed_sic",
            Scheme::ProposedTin => "proposed_tin",
            Scheme::CapacityUb => "capacity_ub",
        }
    }
}

/// Sum rate of a formation under linear receivers.
pub fn tin_rate(g: &ArrayGeometry, placements: &[UavPlacement], p_bar: f64, r0: f64) -> Result<f64> {
    let f = SwarmFormation::uniform_snr(placements.to_vec(), p_bar)?;
    let h = channel_matrix(g, &f, r0)?;
    Ok(tin_sum_rate(&h, f.ref_snrs())?)
}

/// Sum capacity of a formation under successive cancellation.
pub fn sic_rate(g: &ArrayGeometry, placements: &[UavPlacement], p_bar: f64, r0: f64) -> Result<f64> {
    let f = SwarmFormation::uniform_snr(placements.to_vec(), p_bar)?;
    let h = channel_matrix(g, &f, r0)?;
    Ok(sic_sum_capacity(&h, f.ref_snrs())?)
}

/// Interference-free rate ceiling for `k` terminals at the near range edge.
/// Within the direction budget this is the exact optimum; past it the value
/// stays a valid, though loose, upper bound.
pub fn capacity_ceiling(cfg: &ScenarioConfig, k: usize) -> Result<f64> {
    let m = cfg.geometry()?.elements() as f64;
    Ok(k as f64 * (1.0 + cfg.rho() * m).log2())
}

/// Runs the alternating formation refinement for one objective and returns
/// the final formation with its round-by-round trace.
pub fn proposed(
    cfg: &ScenarioConfig,
    objective: RateObjective,
    users: usize,
) -> Result<(SwarmFormation, OptimizationTrace)> {
    let g = cfg.geometry()?;
    let sector = cfg.sector()?;
    let limits = cfg.limits()?;
    let settings = cfg.bcd_settings(objective);
    Ok(swarm_mimo::optimize_formation(
        &g,
        &sector,
        users,
        &limits,
        cfg.p_bar(),
        cfg.r0,
        &settings,
    )?)
}

/// Normalized cross-interference map of a formation: entry `(i, j)` is the
/// squared steering coherence between terminals `i` and `j` scaled by the
/// squared element count, so the diagonal is exactly one.
pub fn interference_map(g: &ArrayGeometry, placements: &[UavPlacement]) -> Vec<Vec<f64>> {
    let m = g.elements() as f64;
    let k = placements.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let c = g.beam_pattern(placements[i].direction(), placements[j].direction());
            out[i][j] = (c / m) * (c / m);
        }
    }
    out
}

/// All pairwise terminal separations `(i, j, meters)` with `j < i`.
pub fn separations(placements: &[UavPlacement]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..placements.len() {
        for j in 0..i {
            let a = placements[i].position();
            let b = placements[j].position();
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            out.push((i, j, d));
        }
    }
    out
}
