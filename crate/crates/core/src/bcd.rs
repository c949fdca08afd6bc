//! Alternating refinement of a swarm formation: directions, then ranges,
//! round after round.
//!
//! Each round reruns the greedy direction sweep at the incumbent ranges and
//! the convex range refinement at the incumbent directions, keeping a
//! proposal only when it passes the full constraint check and improves the
//! true objective. That makes the round trace nondecreasing by
//! construction, and a solver hiccup inside one step degrades to "no
//! improvement" instead of aborting the run. The interference-as-noise
//! objective substitutes the optimal linear receive filters in closed form,
//! so beamformers are never free variables here.

use crate::array::{ArrayGeometry, Direction};
use crate::error::{Error, Result};
use crate::greedy::{greedy_directions_sic, greedy_directions_tin, DirectionCodebook};
use crate::metrics::{
    channel_matrix, lmmse_beamformer, sic_sum_capacity, tin_sum_rate, SwarmFormation,
    UavPlacement,
};
use crate::orthogonal::AngularSector;
use crate::sca::{
    interference_coefficients, FormationConstraints, RangeSubproblemSic, RangeSubproblemTin,
    ScaSettings,
};

/// Slack below which a constraint family counts as violated.
const VALIDATION_TOL: f64 = 1e-9;

/// Which rate the refinement maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateObjective {
    /// Sum capacity with successive interference cancellation.
    Sic,
    /// Sum rate with linear receivers treating interference as noise.
    Tin,
}

/// Knobs of the alternating refinement.
#[derive(Debug, Clone)]
pub struct BcdSettings {
    pub objective: RateObjective,
    /// Cap on direction/range rounds.
    pub max_rounds: usize,
    /// A round improving the objective by less than this relative amount
    /// ends the run.
    pub rel_tol: f64,
    /// Codebook density handed to the direction sweep.
    pub oversampling: usize,
    /// Settings of the convex range refinement.
    pub sca: ScaSettings,
}

impl BcdSettings {
    pub fn new(objective: RateObjective) -> Self {
        Self {
            objective,
            max_rounds: 20,
            rel_tol: 1e-4,
            oversampling: 4,
            sca: ScaSettings::default(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument("at least one round is required".into()));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "relative tolerance = {} must be positive",
                self.rel_tol
            )));
        }
        if self.oversampling == 0 {
            return Err(Error::InvalidArgument(
                "codebook oversampling must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for BcdSettings {
    fn default() -> Self {
        Self::new(RateObjective::Sic)
    }
}

/// Why a refinement run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The last round's relative gain fell under the tolerance.
    Converged,
    /// The round cap was reached while still improving.
    RoundLimit,
}

/// Round-by-round record of a refinement run. The first entry of both
/// sequences describes the seed; one more entry follows per executed round.
/// The objective sequence is nondecreasing.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub objectives: Vec<f64>,
    pub snapshots: Vec<SwarmFormation>,
    pub termination: StopReason,
}

impl OptimizationTrace {
    /// Number of direction/range rounds actually executed.
    pub fn rounds(&self) -> usize {
        self.objectives.len().saturating_sub(1)
    }
}

/// Outcome of checking one constraint family over a formation.
#[derive(Debug, Clone, Copy)]
pub struct SlackCheck {
    pub pass: bool,
    /// Most binding margin of the family; negative when violated. Distances
    /// are in meters, sector margins in sine units. Families with nothing
    /// to check (one user, unbounded limit) report infinity.
    pub worst_slack: f64,
}

impl SlackCheck {
    fn from_slack(worst_slack: f64) -> Self {
        Self {
            pass: worst_slack >= -VALIDATION_TOL,
            worst_slack,
        }
    }
}

/// Per-family feasibility report of a formation: the range box, the two
/// sector limits, and the pairwise distance floor and ceiling, all assessed
/// on Cartesian geometry.
#[derive(Debug, Clone)]
pub struct FormationReport {
    pub range_box: SlackCheck,
    pub elevation: SlackCheck,
    pub azimuth: SlackCheck,
    pub collision: SlackCheck,
    pub cohesion: SlackCheck,
}

impl FormationReport {
    pub fn pass(&self) -> bool {
        self.range_box.pass
            && self.elevation.pass
            && self.azimuth.pass
            && self.collision.pass
            && self.cohesion.pass
    }

    /// The family with the most negative margin.
    pub fn worst_family(&self) -> (&'static str, f64) {
        let families = [
            ("range box", self.range_box.worst_slack),
            ("elevation sector", self.elevation.worst_slack),
            ("azimuth sector", self.azimuth.worst_slack),
            ("collision avoidance", self.collision.worst_slack),
            ("swarm cohesion", self.cohesion.worst_slack),
        ];
        families
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("family list is nonempty")
    }
}

/// Checks every constraint family of a formation and reports the most
/// binding margin per family. Pairwise distances are evaluated between
/// Cartesian positions.
pub fn validate_formation(
    f: &SwarmFormation,
    sector: &AngularSector,
    limits: &FormationConstraints,
) -> FormationReport {
    validate_placements(f.placements(), sector, limits)
}

fn validate_placements(
    placements: &[UavPlacement],
    sector: &AngularSector,
    limits: &FormationConstraints,
) -> FormationReport {
    let mut range_box = f64::INFINITY;
    let mut elevation = f64::INFINITY;
    let mut azimuth = f64::INFINITY;
    for p in placements {
        range_box = range_box
            .min(p.range() - limits.r_min())
            .min(limits.r_max() - p.range());
        elevation = elevation.min(sector.theta_bar() - p.direction().sin_theta().abs());
        azimuth = azimuth.min(sector.phi_bar() - p.direction().sin_phi().abs());
    }
    let mut collision = f64::INFINITY;
    let mut cohesion = f64::INFINITY;
    for i in 0..placements.len() {
        for j in 0..i {
            let pi = placements[i].position();
            let pj = placements[j].position();
            let dist = ((pi[0] - pj[0]).powi(2)
                + (pi[1] - pj[1]).powi(2)
                + (pi[2] - pj[2]).powi(2))
            .sqrt();
            collision = collision.min(dist - limits.d_min());
            if limits.has_max_spacing() {
                cohesion = cohesion.min(limits.d_max() - dist);
            }
        }
    }
    FormationReport {
        range_box: SlackCheck::from_slack(range_box),
        elevation: SlackCheck::from_slack(elevation),
        azimuth: SlackCheck::from_slack(azimuth),
        collision: SlackCheck::from_slack(collision),
        cohesion: SlackCheck::from_slack(cohesion),
    }
}

/// Builds a feasible seed and alternates direction and range refinement
/// until the objective stalls or the round cap is hit.
///
/// The seed staggers ranges from the lower box edge in steps of the
/// collision floor (at least one meter) and seats directions with the
/// greedy sweep; if even that fails, the constraint set is reported
/// infeasible with the violated family named.
pub fn optimize_formation(
    g: &ArrayGeometry,
    sector: &AngularSector,
    users: usize,
    limits: &FormationConstraints,
    p_bar: f64,
    r0: f64,
    settings: &BcdSettings,
) -> Result<(SwarmFormation, OptimizationTrace)> {
    settings.check()?;
    check_scenario(users, p_bar, r0)?;
    let cb = DirectionCodebook::build(g, sector, settings.oversampling)?;
    let seed = seed_placements(g, &cb, users, limits, p_bar, r0, settings.objective)?;
    refine(g, sector, &cb, &seed, limits, p_bar, r0, settings)
}

/// Runs the alternating refinement from a caller-supplied start formation
/// instead of the staggered seed. Reference SNRs are taken from `p_bar`,
/// uniformly across users.
pub fn refine_formation(
    g: &ArrayGeometry,
    sector: &AngularSector,
    seed: &[UavPlacement],
    limits: &FormationConstraints,
    p_bar: f64,
    r0: f64,
    settings: &BcdSettings,
) -> Result<(SwarmFormation, OptimizationTrace)> {
    settings.check()?;
    check_scenario(seed.len(), p_bar, r0)?;
    let cb = DirectionCodebook::build(g, sector, settings.oversampling)?;
    refine(g, sector, &cb, seed, limits, p_bar, r0, settings)
}

fn check_scenario(users: usize, p_bar: f64, r0: f64) -> Result<()> {
    if users == 0 {
        return Err(Error::InvalidArgument("at least one user is required".into()));
    }
    if !(p_bar.is_finite() && p_bar > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference SNR = {p_bar} must be positive"
        )));
    }
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference distance = {r0} must be positive"
        )));
    }
    Ok(())
}

fn seed_placements(
    g: &ArrayGeometry,
    cb: &DirectionCodebook,
    users: usize,
    limits: &FormationConstraints,
    p_bar: f64,
    r0: f64,
    objective: RateObjective,
) -> Result<Vec<UavPlacement>> {
    let stride = limits.d_min().max(1.0);
    let ranges: Vec<f64> = (0..users)
        .map(|i| (limits.r_min() + i as f64 * stride).min(limits.r_max()))
        .collect();
    let snrs: Vec<f64> = ranges.iter().map(|r| p_bar * (r0 / r) * (r0 / r)).collect();
    let sweep = match objective {
        RateObjective::Sic => {
            greedy_directions_sic(g, cb, &ranges, &snrs, limits.d_min(), limits.d_max())
        }
        RateObjective::Tin => {
            greedy_directions_tin(g, cb, &ranges, &snrs, limits.d_min(), limits.d_max())
        }
    };
    let assign = sweep.map_err(|e| match e {
        Error::SearchExhausted { detail, .. } => Error::Infeasible {
            constraint: "pairwise separation".into(),
            detail,
        },
        other => other,
    })?;
    assign
        .directions
        .iter()
        .zip(&ranges)
        .map(|(d, &r)| UavPlacement::new(r, *d))
        .collect()
}

fn true_objective(
    g: &ArrayGeometry,
    placements: &[UavPlacement],
    p_bar: f64,
    r0: f64,
    objective: RateObjective,
) -> Result<f64> {
    let f = SwarmFormation::uniform_snr(placements.to_vec(), p_bar)?;
    let h = channel_matrix(g, &f, r0)?;
    match objective {
        RateObjective::Sic => sic_sum_capacity(&h, f.ref_snrs()),
        RateObjective::Tin => tin_sum_rate(&h, f.ref_snrs()),
    }
}

/// Separates "this step found nothing usable" from a genuine usage error:
/// solver and feasibility failures inside a round degrade to a skipped
/// step, anything else propagates.
fn step_outcome<T>(step: Result<T>) -> Result<Option<T>> {
    match step {
        Ok(v) => Ok(Some(v)),
        Err(Error::KernelDiverged { .. })
        | Err(Error::SearchExhausted { .. })
        | Err(Error::Infeasible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn refine(
    g: &ArrayGeometry,
    sector: &AngularSector,
    cb: &DirectionCodebook,
    seed: &[UavPlacement],
    limits: &FormationConstraints,
    p_bar: f64,
    r0: f64,
    settings: &BcdSettings,
) -> Result<(SwarmFormation, OptimizationTrace)> {
    let report = validate_placements(seed, sector, limits);
    if !report.pass() {
        let (family, slack) = report.worst_family();
        return Err(Error::Infeasible {
            constraint: family.into(),
            detail: format!("start formation violates {family} by {:.3e}", -slack),
        });
    }
    let users = seed.len();
    let mut best = seed.to_vec();
    let mut best_obj = true_objective(g, &best, p_bar, r0, settings.objective)?;
    let mut objectives = vec![best_obj];
    let mut snapshots = vec![SwarmFormation::uniform_snr(best.clone(), p_bar)?];
    let mut termination = StopReason::RoundLimit;

    for _ in 0..settings.max_rounds {
        let before = best_obj;

        // Direction step at the incumbent ranges.
        let ranges: Vec<f64> = best.iter().map(|p| p.range()).collect();
        let snrs: Vec<f64> = ranges.iter().map(|r| p_bar * (r0 / r) * (r0 / r)).collect();
        let sweep = match settings.objective {
            RateObjective::Sic => {
                greedy_directions_sic(g, cb, &ranges, &snrs, limits.d_min(), limits.d_max())
            }
            RateObjective::Tin => {
                greedy_directions_tin(g, cb, &ranges, &snrs, limits.d_min(), limits.d_max())
            }
        };
        if let Some(assign) = step_outcome(sweep)? {
            let cand: Result<Vec<UavPlacement>> = assign
                .directions
                .iter()
                .zip(&ranges)
                .map(|(d, &r)| UavPlacement::new(r, *d))
                .collect();
            accept_if_better(
                g, sector, limits, p_bar, r0, settings.objective, cand?, &mut best, &mut best_obj,
            )?;
        }

        // Range step at the incumbent directions.
        let dirs: Vec<Direction> = best.iter().map(|p| *p.direction()).collect();
        let ranges: Vec<f64> = best.iter().map(|p| p.range()).collect();
        let proposal = match settings.objective {
            RateObjective::Sic => step_outcome(
                RangeSubproblemSic::new(g, &dirs, &vec![p_bar; users], r0, *limits, &ranges)
                    .and_then(|sub| sub.solve(&settings.sca))
                    .map(|sol| sol.ranges),
            )?,
            RateObjective::Tin => {
                let f = SwarmFormation::uniform_snr(best.clone(), p_bar)?;
                let h = channel_matrix(g, &f, r0)?;
                let beamformers: Result<Vec<_>> = (0..users)
                    .map(|k| lmmse_beamformer(&h, f.ref_snrs(), k))
                    .collect();
                let coeffs = interference_coefficients(g, &dirs, &beamformers?, f.ref_snrs(), r0)?;
                step_outcome(
                    RangeSubproblemTin::new(&coeffs, &dirs, *limits, &ranges)
                        .and_then(|sub| sub.solve(&settings.sca))
                        .map(|sol| sol.ranges),
                )?
            }
        };
        if let Some(new_ranges) = proposal {
            let cand: Result<Vec<UavPlacement>> = dirs
                .iter()
                .zip(&new_ranges)
                .map(|(d, &r)| UavPlacement::new(r, *d))
                .collect();
            accept_if_better(
                g, sector, limits, p_bar, r0, settings.objective, cand?, &mut best, &mut best_obj,
            )?;
        }

        objectives.push(best_obj);
        snapshots.push(SwarmFormation::uniform_snr(best.clone(), p_bar)?);
        if best_obj - before < settings.rel_tol * before.abs().max(1.0) {
            termination = StopReason::Converged;
            break;
        }
    }

    Ok((
        SwarmFormation::uniform_snr(best, p_bar)?,
        OptimizationTrace {
            objectives,
            snapshots,
            termination,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn accept_if_better(
    g: &ArrayGeometry,
    sector: &AngularSector,
    limits: &FormationConstraints,
    p_bar: f64,
    r0: f64,
    objective: RateObjective,
    cand: Vec<UavPlacement>,
    best: &mut Vec<UavPlacement>,
    best_obj: &mut f64,
) -> Result<()> {
    if !validate_placements(&cand, sector, limits).pass() {
        return Ok(());
    }
    let value = true_objective(g, &cand, p_bar, r0, objective)?;
    if value > *best_obj {
        *best = cand;
        *best_obj = value;
    }
    Ok(())
}
