//! Uncoordinated-swarm baseline: terminals drop into the scenario volume at
//! random, standing in for systems that cannot steer terminal positions.

use rand::Rng;
use swarm_mimo::metrics::UavPlacement;
use swarm_mimo::orthogonal::AngularSector;
use swarm_mimo::sca::FormationConstraints;
use swarm_mimo::Direction;

use crate::error::{HarnessError, Result};

/// Rejection-sampling budget per terminal before the scenario is declared
/// infeasible.
const MAX_ATTEMPTS: usize = 10_000;

/// Draws a random formation inside the sector and range window.
///
/// Without spacing constraints every terminal sits at the near range edge,
/// where all rate objectives are maximized, with angles drawn independently
/// and uniformly over the sector. With spacing constraints the terminals are
/// placed sequentially, each drawn uniformly over the full window and
/// redrawn until it clears every already-placed terminal, up to a fixed
/// attempt budget.
pub fn random_swarm<R: Rng>(
    sector: &AngularSector,
    limits: &FormationConstraints,
    users: usize,
    rng: &mut R,
) -> Result<Vec<UavPlacement>> {
    if users == 0 {
        return Err(HarnessError::Config("at least one terminal is required".to_string()));
    }
    let spaced = limits.has_min_spacing() || limits.has_max_spacing();
    let mut placed: Vec<UavPlacement> = Vec::with_capacity(users);
    for k in 0..users {
        let mut attempts = 0usize;
        loop {
            let range = if spaced {
                rng.gen_range(limits.r_min()..=limits.r_max())
            } else {
                limits.r_min()
            };
            let theta = rng.gen_range(-sector.theta_max()..=sector.theta_max());
            let phi = rng.gen_range(-sector.phi_max()..=sector.phi_max());
            let candidate = UavPlacement::new(range, Direction::new(theta, phi)?)?;
            if clears_all(&candidate, &placed, limits) {
                placed.push(candidate);
                break;
            }
            attempts += 1;
            if attempts >= MAX_ATTEMPTS {
                return Err(HarnessError::Infeasible(format!(
                    "no position for terminal {k} cleared the spacing window after \
                     {MAX_ATTEMPTS} draws"
                )));
            }
        }
    }
    Ok(placed)
}

fn clears_all(candidate: &UavPlacement, placed: &[UavPlacement], limits: &FormationConstraints) -> bool {
    let p = candidate.position();
    placed.iter().all(|q| {
        let qp = q.position();
        let d = ((p[0] - qp[0]).powi(2) + (p[1] - qp[1]).powi(2) + (p[2] - qp[2]).powi(2)).sqrt();
        d >= limits.d_min() && (!limits.has_max_spacing() || d <= limits.d_max())
    })
}
