//! Greedy direction assignment over a discretized sine-space codebook.
//!
//! With ranges held fixed, both rate objectives reward directions whose
//! steering vectors are as close to mutually orthogonal as the sector
//! allows. This module seats users one at a time on a finite codebook:
//! strongest user first, each step picking the candidate direction that
//! maximizes the objective given everyone already seated. The Hermitian
//! inverse that all scores depend on is maintained by rank-one updates, so
//! a sweep never inverts a matrix from scratch outside of debug audits.
//!
//! The codebook oversamples the sine-space resolution of the array and
//! always includes the mutually non-interfering direction set of the
//! geometry, so whenever enough of those slots pass the pairwise distance
//! windows the sweep recovers the closed-form optimum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{ArrayGeometry, ArrayKind, Direction};
use crate::error::{Error, Result};
use crate::metrics::UavPlacement;
use crate::orthogonal::{ula_orthogonal_set, upa_orthogonal_set, AngularSector, FloorMode};

/// Sine-space tolerance under which two codebook entries collapse into one.
const DEDUP_TOL: f64 = 1e-12;

/// Relative slack for treating two candidate scores as tied; the lower
/// codebook index wins a tie.
const TIE_REL_TOL: f64 = 1e-9;

/// Cohesion relaxation factor applied when a step has no feasible candidate.
const RELAX_FACTOR: f64 = 1.05;

/// Number of cohesion relaxations attempted before giving up.
const MAX_RELAX: usize = 3;

/// Finite menu of candidate directions, sorted by elevation sine then
/// azimuth sine, deduplicated in sine space.
#[derive(Debug, Clone)]
pub struct DirectionCodebook {
    entries: Vec<Direction>,
    oversampling: usize,
}

impl DirectionCodebook {
    /// Uniform sine-space grid over the sector, unioned with the mutually
    /// non-interfering direction set of the geometry.
    ///
    /// The grid steps are `2 / (oversampling * m_z)` in the elevation sine
    /// and `2 / (oversampling * m_y)` in the cone coordinate
    /// `cos(theta) * sin(phi)`, both symmetric around broadside; a linear
    /// array contributes a single elevation row. Rows at grazing elevation
    /// collapse to one column. The non-interfering set is always included,
    /// so the closed-form optimum stays reachable at any oversampling.
    pub fn build(
        g: &ArrayGeometry,
        sector: &AngularSector,
        oversampling: usize,
    ) -> Result<Self> {
        if oversampling == 0 {
            return Err(Error::InvalidArgument(
                "codebook oversampling must be at least 1".into(),
            ));
        }
        let mut sines: Vec<(f64, f64)> = Vec::new();
        match g.kind() {
            ArrayKind::Ula => {
                let step = 2.0 / (oversampling * g.m_y()) as f64;
                let n = half_count(sector.phi_bar(), step);
                for i in -n..=n {
                    sines.push((0.0, (i as f64 * step).clamp(-1.0, 1.0)));
                }
            }
            ArrayKind::Upa => {
                let step_z = 2.0 / (oversampling * g.m_z()) as f64;
                let step_y = 2.0 / (oversampling * g.m_y()) as f64;
                let n_z = half_count(sector.theta_bar(), step_z);
                for l in -n_z..=n_z {
                    let tb = (l as f64 * step_z).clamp(-1.0, 1.0);
                    let ct = (1.0 - tb * tb).max(0.0).sqrt();
                    if ct <= f64::EPSILON {
                        sines.push((tb, 0.0));
                        continue;
                    }
                    let n_y = half_count(sector.phi_bar() * ct, step_y);
                    for p in -n_y..=n_y {
                        sines.push((tb, (p as f64 * step_y / ct).clamp(-1.0, 1.0)));
                    }
                }
            }
        }
        let ortho = match g.kind() {
            ArrayKind::Ula => ula_orthogonal_set(g.m_y(), sector, FloorMode::Strict)?,
            ArrayKind::Upa => upa_orthogonal_set(g, sector, FloorMode::Strict)?,
        };
        for d in ortho.directions() {
            sines.push((d.sin_theta(), d.sin_phi()));
        }
        Ok(Self {
            entries: finish_entries(sines)?,
            oversampling,
        })
    }

    /// Codebook from an explicit direction list; sorted and deduplicated
    /// the same way as a built grid. Reports an oversampling of zero.
    pub fn from_directions(directions: Vec<Direction>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument(
                "codebook needs at least one direction".into(),
            ));
        }
        let sines = directions
            .iter()
            .map(|d| (d.sin_theta(), d.sin_phi()))
            .collect();
        Ok(Self {
            entries: finish_entries(sines)?,
            oversampling: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.entries
    }

    /// Grid density relative to the array resolution; zero for codebooks
    /// assembled from an explicit list.
    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// Indices of the entries whose direction cosine against every placed
    /// user falls inside the window implied by the distance bounds.
    ///
    /// For users at ranges `r_k` and `r_j`, a separation inside
    /// `[d_min, d_max]` is equivalent to
    /// `(r_k^2 + r_j^2 - d_max^2) / (2 r_k r_j) <= cos <= (r_k^2 + r_j^2 - d_min^2) / (2 r_k r_j)`,
    /// with both endpoints included. An unbounded `d_max` disables the
    /// lower endpoint. The result preserves codebook order; it is empty
    /// when the windows are incompatible, which callers treat as the signal
    /// to relax.
    pub fn feasible_indices(
        &self,
        placed: &[UavPlacement],
        range: f64,
        d_min: f64,
        d_max: f64,
    ) -> Vec<usize> {
        let windows: Vec<(f64, f64, &Direction)> = placed
            .iter()
            .map(|p| {
                let (lo, hi) = cosine_window(range, p.range(), d_min, d_max);
                (lo, hi, p.direction())
            })
            .collect();
        let mut out = Vec::new();
        'candidates: for (i, d) in self.entries.iter().enumerate() {
            for (lo, hi, placed_dir) in &windows {
                let cos = d.dot(placed_dir);
                if cos < *lo || cos > *hi {
                    continue 'candidates;
                }
            }
            out.push(i);
        }
        out
    }

    /// The sub-codebook surviving [`Self::feasible_indices`].
    pub fn feasible_subset(
        &self,
        placed: &[UavPlacement],
        range: f64,
        d_min: f64,
        d_max: f64,
    ) -> DirectionCodebook {
        let keep = self.feasible_indices(placed, range, d_min, d_max);
        DirectionCodebook {
            entries: keep.into_iter().map(|i| self.entries[i]).collect(),
            oversampling: self.oversampling,
        }
    }
}

/// Largest grid index on one side of broadside, with a small tolerance so
/// spans that are exact multiples of the step keep their endpoint.
fn half_count(span: f64, step: f64) -> i64 {
    (span / step + 1e-9).floor() as i64
}

fn cosine_window(r_k: f64, r_j: f64, d_min: f64, d_max: f64) -> (f64, f64) {
    let lo = (r_k * r_k + r_j * r_j - d_max * d_max) / (2.0 * r_k * r_j);
    let hi = (r_k * r_k + r_j * r_j - d_min * d_min) / (2.0 * r_k * r_j);
    (lo, hi)
}

fn finish_entries(mut sines: Vec<(f64, f64)>) -> Result<Vec<Direction>> {
    sines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sines.dedup_by(|later, kept| {
        (later.0 - kept.0).abs() <= DEDUP_TOL && (later.1 - kept.1).abs() <= DEDUP_TOL
    });
    sines
        .into_iter()
        .map(|(tb, pb)| Direction::from_sines(tb, pb))
        .collect()
}

/// Running state of a greedy sweep: the users seated so far and the
/// whitened inverse `J = (I + sum_k b_k a_k a_k^H)^{-1}`, maintained by
/// rank-one updates instead of fresh inversions.
#[derive(Debug, Clone)]
pub struct GreedyState {
    j: DMatrix<Complex64>,
    seated: Vec<Seated>,
}

#[derive(Debug, Clone)]
struct Seated {
    steer: DVector<Complex64>,
    snr: f64,
}

impl GreedyState {
    /// Empty state over an `m`-element array: `J` starts as the identity.
    pub fn new(m: usize) -> Self {
        Self {
            j: DMatrix::identity(m, m),
            seated: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    /// Number of users seated so far.
    pub fn seated(&self) -> usize {
        self.seated.len()
    }

    /// The maintained inverse `J`.
    pub fn whitened_inverse(&self) -> &DMatrix<Complex64> {
        &self.j
    }

    /// `J a`.
    pub fn apply(&self, a: &DVector<Complex64>) -> DVector<Complex64> {
        &self.j * a
    }

    /// `a^H J a`, the candidate score of the capacity sweep.
    pub fn quad_form(&self, a: &DVector<Complex64>) -> f64 {
        a.dotc(&self.apply(a)).re
    }

    /// Seats one more user: `J <- J - b (Ja)(Ja)^H / (1 + b a^H J a)`.
    pub fn seat(&mut self, steer: DVector<Complex64>, snr: f64) {
        let v = self.apply(&steer);
        let q = steer.dotc(&v).re;
        let scale = snr / (1.0 + snr * q);
        let m = self.j.nrows();
        for r in 0..m {
            for c in 0..m {
                self.j[(r, c)] -= scale * v[r] * v[c].conj();
            }
        }
        self.seated.push(Seated { steer, snr });
    }

    /// The inverse with seated user `idx` excluded,
    /// `J_without = J + b (Ja)(Ja)^H / (1 - b a^H J a)`,
    /// without touching the other contributions.
    pub fn downdated(&self, idx: usize) -> DMatrix<Complex64> {
        let user = &self.seated[idx];
        let v = self.apply(&user.steer);
        let s = user.steer.dotc(&v).re;
        let scale = user.snr / (1.0 - user.snr * s);
        let m = self.j.nrows();
        let mut out = self.j.clone();
        for r in 0..m {
            for c in 0..m {
                out[(r, c)] += scale * v[r] * v[c].conj();
            }
        }
        out
    }

    /// `max |J (I + S) - I|` with `I + S` rebuilt from the seated users;
    /// measures how far the recursion has drifted from a true inverse.
    pub fn audit_defect(&self) -> f64 {
        let m = self.j.nrows();
        let mut load = DMatrix::<Complex64>::identity(m, m);
        for user in &self.seated {
            for r in 0..m {
                for c in 0..m {
                    load[(r, c)] += user.snr * user.steer[r] * user.steer[c].conj();
                }
            }
        }
        let product = &self.j * load;
        let mut worst = 0.0f64;
        for r in 0..m {
            for c in 0..m {
                let target = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                worst = worst.max((product[(r, c)] - target).norm());
            }
        }
        worst
    }
}

/// Rate loss a candidate inflicts on an already-seated user: with `J` the
/// whitened inverse excluding that user, the user's SINR drops by
/// `b_j b_k |a_j^H J a|^2 / (1 + b_k a^H J a)` when the candidate joins.
/// Zero when the candidate is orthogonal to the user under `J`.
pub fn sinr_reduction(
    j_without: &DMatrix<Complex64>,
    a_j: &DVector<Complex64>,
    a_candidate: &DVector<Complex64>,
    b_j: f64,
    b_k: f64,
) -> f64 {
    let w = j_without * a_candidate;
    let cross = a_j.dotc(&w).norm_sqr();
    let gain = a_candidate.dotc(&w).re;
    b_j * b_k * cross / (1.0 + b_k * gain)
}

/// Outcome of one greedy sweep.
#[derive(Debug, Clone)]
pub struct GreedyAssignment {
    /// Chosen direction per user, in the caller's user order.
    pub directions: Vec<Direction>,
    /// Final objective: sum capacity for the cancellation sweep, sum rate
    /// for the interference-as-noise sweep.
    pub objective: f64,
    /// Objective after each placement, in processing order.
    pub progress: Vec<f64>,
    /// Processing order as original user indices, strongest SNR first.
    pub order: Vec<usize>,
    /// Cohesion bound actually enforced: the input `d_max`, times the
    /// relaxation factor for each step that found no feasible candidate.
    pub effective_d_max: f64,
}

/// Sequential direction selection for the cancellation objective.
///
/// Users are processed strongest first. Each step scores every feasible
/// codebook entry with `a^H J a`, seats the best (ties go to the lowest
/// codebook index), and accounts `log2(1 + b a^H J a)` of capacity. The
/// final objective matches the from-scratch sum capacity of the produced
/// formation to within accumulation noise.
pub fn greedy_directions_sic(
    g: &ArrayGeometry,
    cb: &DirectionCodebook,
    ranges: &[f64],
    snrs: &[f64],
    d_min: f64,
    d_max: f64,
) -> Result<GreedyAssignment> {
    check_inputs(cb, ranges, snrs, d_min, d_max)?;
    let steer = steering_table(g, cb);
    let order = processing_order(snrs);
    let total_users = ranges.len();
    let mut state = GreedyState::new(g.elements());
    let mut placed: Vec<UavPlacement> = Vec::with_capacity(total_users);
    let mut directions = vec![Direction::broadside(); total_users];
    let mut progress = Vec::with_capacity(total_users);
    let mut objective = 0.0;
    let mut eff_d_max = d_max;
    for &user in &order {
        let r_k = ranges[user];
        let b_k = snrs[user];
        let feas = feasible_or_relax(cb, &placed, r_k, d_min, &mut eff_d_max, total_users)?;
        let scores: Vec<f64> = feas.iter().map(|&i| state.quad_form(&steer[i])).collect();
        let (best, gain) = pick_lowest_tied(&feas, &scores);
        objective += (1.0 + b_k * gain).log2();
        state.seat(steer[best].clone(), b_k);
        let dir = cb.directions()[best];
        placed.push(UavPlacement::new(r_k, dir)?);
        directions[user] = dir;
        progress.push(objective);
        debug_assert!(
            state.audit_defect() <= 1e-8,
            "whitened inverse drifted past audit tolerance"
        );
    }
    Ok(GreedyAssignment {
        directions,
        objective,
        progress,
        order,
        effective_d_max: eff_d_max,
    })
}

/// Sequential direction selection for the interference-as-noise objective.
///
/// Each step scores a candidate by the rate it would earn plus the updated
/// rates of everyone already seated, using per-user exclusions of the
/// whitened inverse evaluated in closed form; no matrices are rebuilt
/// inside the scan. The final objective matches the from-scratch sum rate
/// of the produced formation.
pub fn greedy_directions_tin(
    g: &ArrayGeometry,
    cb: &DirectionCodebook,
    ranges: &[f64],
    snrs: &[f64],
    d_min: f64,
    d_max: f64,
) -> Result<GreedyAssignment> {
    check_inputs(cb, ranges, snrs, d_min, d_max)?;
    let steer = steering_table(g, cb);
    let order = processing_order(snrs);
    let total_users = ranges.len();
    let mut state = GreedyState::new(g.elements());
    let mut placed: Vec<UavPlacement> = Vec::with_capacity(total_users);
    let mut incumbents: Vec<(usize, f64)> = Vec::with_capacity(total_users);
    let mut directions = vec![Direction::broadside(); total_users];
    let mut progress = Vec::with_capacity(total_users);
    let mut objective = 0.0;
    let mut eff_d_max = d_max;
    for &user in &order {
        let r_k = ranges[user];
        let b_k = snrs[user];
        let feas = feasible_or_relax(cb, &placed, r_k, d_min, &mut eff_d_max, total_users)?;

        // Per incumbent: v = J a_j, the excluded-self score
        // s~ = a_j^H J_without a_j, and the denominator 1 - b_j a_j^H J a_j
        // shared by every candidate evaluation below.
        let prior = incumbents.len();
        let mut v = Vec::with_capacity(prior);
        let mut b_prior = Vec::with_capacity(prior);
        let mut denom = Vec::with_capacity(prior);
        let mut tilde = Vec::with_capacity(prior);
        for &(si, bj) in &incumbents {
            let vj = state.apply(&steer[si]);
            let sj = steer[si].dotc(&vj).re;
            let dj = 1.0 - bj * sj;
            debug_assert!(dj > 0.0, "excluded-user denominator must stay positive");
            v.push(vj);
            b_prior.push(bj);
            denom.push(dj);
            tilde.push(sj / dj);
        }

        let scores: Vec<f64> = feas
            .iter()
            .map(|&i| {
                let a = &steer[i];
                let w = state.apply(a);
                let q = a.dotc(&w).re;
                let mut rate = (1.0 + b_k * q).log2();
                for j in 0..prior {
                    let y2 = v[j].dotc(a).norm_sqr();
                    let t = q + b_prior[j] * y2 / denom[j];
                    let loss = b_k * y2 / (denom[j] * denom[j] * (1.0 + b_k * t));
                    rate += (1.0 + b_prior[j] * (tilde[j] - loss)).log2();
                }
                rate
            })
            .collect();
        let (best, new_total) = pick_lowest_tied(&feas, &scores);
        objective = new_total;
        state.seat(steer[best].clone(), b_k);
        incumbents.push((best, b_k));
        let dir = cb.directions()[best];
        placed.push(UavPlacement::new(r_k, dir)?);
        directions[user] = dir;
        progress.push(objective);
        debug_assert!(
            state.audit_defect() <= 1e-8,
            "whitened inverse drifted past audit tolerance"
        );
    }
    Ok(GreedyAssignment {
        directions,
        objective,
        progress,
        order,
        effective_d_max: eff_d_max,
    })
}

fn check_inputs(
    cb: &DirectionCodebook,
    ranges: &[f64],
    snrs: &[f64],
    d_min: f64,
    d_max: f64,
) -> Result<()> {
    if cb.is_empty() {
        return Err(Error::InvalidArgument("codebook is empty".into()));
    }
    if ranges.is_empty() {
        return Err(Error::InvalidArgument("at least one user is required".into()));
    }
    if ranges.len() != snrs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} ranges but {} SNRs",
            ranges.len(),
            snrs.len()
        )));
    }
    if let Some(r) = ranges.iter().find(|r| !r.is_finite() || **r <= 0.0) {
        return Err(Error::InvalidArgument(format!("range = {r} must be positive")));
    }
    if let Some(b) = snrs.iter().find(|b| !b.is_finite() || **b < 0.0) {
        return Err(Error::InvalidArgument(format!("SNR = {b} must be >= 0")));
    }
    if !d_min.is_finite() || d_min < 0.0 {
        return Err(Error::InvalidArgument(format!("d_min = {d_min} must be >= 0")));
    }
    if !(d_max > 0.0) {
        return Err(Error::InvalidArgument(format!("d_max = {d_max} must be positive")));
    }
    if d_min > d_max {
        return Err(Error::InvalidArgument(format!(
            "d_min = {d_min} exceeds d_max = {d_max}"
        )));
    }
    Ok(())
}

fn steering_table(g: &ArrayGeometry, cb: &DirectionCodebook) -> Vec<DVector<Complex64>> {
    cb.directions()
        .iter()
        .map(|d| g.steering(d).into_entries())
        .collect()
}

/// Original user indices sorted by descending SNR, index ascending on ties,
/// so the strongest users claim the cleanest directions first.
fn processing_order(snrs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..snrs.len()).collect();
    order.sort_by(|&a, &b| snrs[b].total_cmp(&snrs[a]).then(a.cmp(&b)));
    order
}

fn feasible_or_relax(
    cb: &DirectionCodebook,
    placed: &[UavPlacement],
    range: f64,
    d_min: f64,
    eff_d_max: &mut f64,
    total_users: usize,
) -> Result<Vec<usize>> {
    let mut relaxed = 0;
    loop {
        let feas = cb.feasible_indices(placed, range, d_min, *eff_d_max);
        if !feas.is_empty() {
            return Ok(feas);
        }
        if relaxed == MAX_RELAX {
            return Err(Error::SearchExhausted {
                placed: placed.len(),
                total: total_users,
                detail: format!(
                    "no codebook direction fits the pairwise windows at range {range} m \
                     with cohesion relaxed to {eff_d_max} m"
                ),
            });
        }
        *eff_d_max *= RELAX_FACTOR;
        relaxed += 1;
    }
}

/// Highest score wins; scores within a relative tolerance of the best count
/// as tied and the earliest candidate (lowest codebook index) is taken.
fn pick_lowest_tied(indices: &[usize], scores: &[f64]) -> (usize, f64) {
    let best = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s));
    let threshold = best - TIE_REL_TOL * best.abs().max(1.0);
    let pos = scores
        .iter()
        .position(|&s| s >= threshold)
        .expect("candidate set is nonempty");
    (indices[pos], scores[pos])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{channel_matrix, sic_sum_capacity, tin_sum_rate, SwarmFormation};

    fn ula_sector(phi_deg: f64) -> AngularSector {
        AngularSector::azimuth_span(phi_deg.to_radians()).unwrap()
    }

    fn sine_codebook(sines: &[f64]) -> DirectionCodebook {
        let dirs = sines
            .iter()
            .map(|&s| Direction::from_sines(0.0, s).unwrap())
            .collect();
        DirectionCodebook::from_directions(dirs).unwrap()
    }

    fn contains_sines(cb: &DirectionCodebook, tb: f64, pb: f64) -> bool {
        cb.directions()
            .iter()
            .any(|d| (d.sin_theta() - tb).abs() <= 1e-12 && (d.sin_phi() - pb).abs() <= 1e-12)
    }

    /// Formation whose effective SNRs reproduce the given `b` values when
    /// everyone sits at the reference distance.
    fn formation_at_ref(dirs: &[Direction], ranges: &[f64], b: &[f64], r0: f64) -> SwarmFormation {
        let placements = dirs
            .iter()
            .zip(ranges)
            .map(|(d, &r)| UavPlacement::new(r, *d).unwrap())
            .collect();
        let p_bar = b
            .iter()
            .zip(ranges)
            .map(|(&bk, &r)| bk * r * r / (r0 * r0))
            .collect();
        SwarmFormation::new(placements, p_bar).unwrap()
    }

    #[test]
    fn full_span_ula_codebook_has_grid_plus_nested_orthogonal() {
        let g = ArrayGeometry::ula(16).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 4).unwrap();
        assert_eq!(cb.len(), 65);
        for l in -7..=8 {
            assert!(contains_sines(&cb, 0.0, l as f64 / 8.0));
        }
        let sines: Vec<f64> = cb.directions().iter().map(|d| d.sin_phi()).collect();
        for w in sines.windows(2) {
            assert!(w[1] > w[0] + DEDUP_TOL);
        }
        assert!((sines[0] + 1.0).abs() <= 1e-12);
        assert!((sines[64] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sector_ula_codebook_keeps_count_and_orthogonal_members() {
        let g = ArrayGeometry::ula(16).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(60.0), 4).unwrap();
        assert_eq!(cb.len(), 55);
        for l in -6..=6 {
            assert!(contains_sines(&cb, 0.0, l as f64 / 8.0));
        }
    }

    #[test]
    fn degenerate_sector_collapses_to_broadside() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(0.0), 4).unwrap();
        assert_eq!(cb.len(), 1);
        assert!(cb.directions()[0].sin_phi().abs() <= 1e-15);
        assert!(cb.directions()[0].sin_theta().abs() <= 1e-15);
    }

    #[test]
    fn tiny_upa_codebook_enumerates_expected_grid() {
        let g = ArrayGeometry::upa(2, 2).unwrap();
        let sector = AngularSector::new(90f64.to_radians(), 90f64.to_radians()).unwrap();
        let cb = DirectionCodebook::build(&g, &sector, 1).unwrap();
        let expected = [(-1.0, 0.0), (0.0, -1.0), (0.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
        assert_eq!(cb.len(), expected.len());
        for (d, (tb, pb)) in cb.directions().iter().zip(expected) {
            assert!((d.sin_theta() - tb).abs() <= 1e-12);
            assert!((d.sin_phi() - pb).abs() <= 1e-12);
        }
    }

    #[test]
    fn upa_codebook_nests_orthogonal_set_and_stays_in_sector() {
        let g = ArrayGeometry::upa(4, 4).unwrap();
        let sector = AngularSector::new(60f64.to_radians(), 60f64.to_radians()).unwrap();
        let cb = DirectionCodebook::build(&g, &sector, 2).unwrap();
        let ortho = upa_orthogonal_set(&g, &sector, FloorMode::Strict).unwrap();
        for d in ortho.directions() {
            assert!(contains_sines(&cb, d.sin_theta(), d.sin_phi()));
        }
        for d in cb.directions() {
            assert!(sector.contains(d, 1e-9));
        }
        for w in cb.directions().windows(2) {
            let same_row = (w[1].sin_theta() - w[0].sin_theta()).abs() <= DEDUP_TOL;
            assert!(!same_row || w[1].sin_phi() > w[0].sin_phi() + DEDUP_TOL);
        }
    }

    #[test]
    fn cosine_windows_filter_codebook() {
        let cb = sine_codebook(&[0.0, 0.1, 0.3]);
        let broadside = UavPlacement::new(50.0, Direction::broadside()).unwrap();

        // Equal ranges of 50 m with a 10 m floor demand cos <= 0.98.
        let keep = cb.feasible_indices(&[broadside], 50.0, 10.0, f64::INFINITY);
        assert_eq!(keep, vec![2]);

        // An 80 m ceiling at equal ranges demands cos >= -0.28.
        let keep = cb.feasible_indices(&[broadside], 50.0, 0.0, 80.0);
        assert_eq!(keep, vec![0, 1, 2]);

        // Cohesion shorter than the range gap leaves nothing.
        let far = UavPlacement::new(200.0, Direction::broadside()).unwrap();
        let keep = cb.feasible_indices(&[far], 50.0, 0.0, 100.0);
        assert!(keep.is_empty());

        // No constraints pass everything through.
        let keep = cb.feasible_indices(&[broadside], 50.0, 0.0, f64::INFINITY);
        assert_eq!(keep, vec![0, 1, 2]);
    }

    #[test]
    fn state_tracks_direct_inverse_and_downdates() {
        let g = ArrayGeometry::ula(6).unwrap();
        let sines = [-0.7, -0.2, 0.15, 0.6];
        let snrs = [12.0, 3.0, 40.0, 0.5];
        let steer: Vec<DVector<Complex64>> = sines
            .iter()
            .map(|&s| g.steering(&Direction::from_sines(0.0, s).unwrap()).into_entries())
            .collect();
        let mut state = GreedyState::new(6);
        for (a, &b) in steer.iter().zip(&snrs) {
            state.seat(a.clone(), b);
        }
        assert!(state.audit_defect() <= 1e-10);

        let mut load = DMatrix::<Complex64>::identity(6, 6);
        for (a, &b) in steer.iter().zip(&snrs) {
            for r in 0..6 {
                for c in 0..6 {
                    load[(r, c)] += b * a[r] * a[c].conj();
                }
            }
        }
        let direct = load.clone().cholesky().unwrap().inverse();
        let worst = (state.whitened_inverse() - &direct)
            .iter()
            .fold(0.0f64, |m, e| m.max(e.norm()));
        assert!(worst <= 1e-10, "update drift {worst:.3e}");

        for drop in 0..sines.len() {
            let mut reduced = DMatrix::<Complex64>::identity(6, 6);
            for (j, (a, &b)) in steer.iter().zip(&snrs).enumerate() {
                if j == drop {
                    continue;
                }
                for r in 0..6 {
                    for c in 0..6 {
                        reduced[(r, c)] += b * a[r] * a[c].conj();
                    }
                }
            }
            let direct = reduced.cholesky().unwrap().inverse();
            let worst = (state.downdated(drop) - &direct)
                .iter()
                .fold(0.0f64, |m, e| m.max(e.norm()));
            assert!(worst <= 1e-10, "downdate drift {worst:.3e}");
        }
    }

    #[test]
    fn sinr_reduction_limit_cases() {
        let g = ArrayGeometry::ula(4).unwrap();
        let a_j = g
            .steering(&Direction::broadside())
            .into_entries();
        let a_orth = g
            .steering(&Direction::from_sines(0.0, 0.5).unwrap())
            .into_entries();
        let eye = DMatrix::<Complex64>::identity(4, 4);

        assert!(sinr_reduction(&eye, &a_j, &a_orth, 7.0, 3.0) <= 1e-28);
        let same = sinr_reduction(&eye, &a_j, &a_j, 7.0, 3.0);
        assert!((same - 7.0 * 3.0 * 16.0 / 13.0).abs() <= 1e-12);
        assert_eq!(sinr_reduction(&eye, &a_j, &a_orth, 7.0, 0.0), 0.0);
    }

    #[test]
    fn single_user_takes_first_column_under_both_objectives() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 1).unwrap();
        let sic = greedy_directions_sic(&g, &cb, &[120.0], &[6.0], 0.0, f64::INFINITY).unwrap();
        let tin = greedy_directions_tin(&g, &cb, &[120.0], &[6.0], 0.0, f64::INFINITY).unwrap();
        let expected = (1.0f64 + 6.0 * 8.0).log2();
        assert!((sic.objective - expected).abs() <= 1e-12);
        assert!((tin.objective - expected).abs() <= 1e-12);
        assert_eq!(sic.directions[0], cb.directions()[0]);
        assert_eq!(tin.directions[0], cb.directions()[0]);
        assert_eq!(sic.order, vec![0]);
    }

    #[test]
    fn unconstrained_equal_users_seat_orthogonally() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 2).unwrap();
        let ranges = [100.0; 3];
        let b = [5.0; 3];
        let out = greedy_directions_sic(&g, &cb, &ranges, &b, 0.0, f64::INFINITY).unwrap();
        let expected = 3.0 * (1.0f64 + 5.0 * 8.0).log2();
        assert!((out.objective - expected).abs() <= 1e-9);
        for i in 0..3 {
            for j in 0..i {
                assert!(g.beam_pattern(&out.directions[i], &out.directions[j]) <= 1e-6);
            }
        }

        let f = formation_at_ref(&out.directions, &ranges, &b, 100.0);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let direct = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
        assert!((out.objective - direct).abs() <= 1e-9);

        // Every prefix of the sweep reports the from-scratch capacity of
        // the partial formation.
        for k in 1..=3 {
            let users: Vec<usize> = out.order[..k].to_vec();
            let dirs: Vec<Direction> = users.iter().map(|&u| out.directions[u]).collect();
            let rs: Vec<f64> = users.iter().map(|&u| ranges[u]).collect();
            let bs: Vec<f64> = users.iter().map(|&u| b[u]).collect();
            let f = formation_at_ref(&dirs, &rs, &bs, 100.0);
            let h = channel_matrix(&g, &f, 100.0).unwrap();
            let direct = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
            assert!((out.progress[k - 1] - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn tin_sweep_matches_direct_rate_without_interference() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 2).unwrap();
        let ranges = [100.0; 3];
        let b = [5.0; 3];
        let out = greedy_directions_tin(&g, &cb, &ranges, &b, 0.0, f64::INFINITY).unwrap();
        let expected = 3.0 * (1.0f64 + 5.0 * 8.0).log2();
        assert!((out.objective - expected).abs() <= 1e-9);

        let f = formation_at_ref(&out.directions, &ranges, &b, 100.0);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let direct = tin_sum_rate(&h, f.ref_snrs()).unwrap();
        assert!((out.objective - direct).abs() <= 1e-9);
    }

    #[test]
    fn crowded_sector_sweeps_stay_consistent_with_direct_metrics() {
        // A sector holding a single interference-free direction forces the
        // three users to overlap, so every score path is exercised.
        let g = ArrayGeometry::ula(4).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(20.0), 4).unwrap();
        assert_eq!(cb.len(), 5);
        let ranges = [100.0; 3];
        let b = [8.0, 3.0, 1.0];

        let sic = greedy_directions_sic(&g, &cb, &ranges, &b, 0.0, f64::INFINITY).unwrap();
        let f = formation_at_ref(&sic.directions, &ranges, &b, 100.0);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let direct = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
        assert!((sic.objective - direct).abs() <= 1e-9);
        for w in sic.progress.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }

        let tin = greedy_directions_tin(&g, &cb, &ranges, &b, 0.0, f64::INFINITY).unwrap();
        let f = formation_at_ref(&tin.directions, &ranges, &b, 100.0);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        let direct = tin_sum_rate(&h, f.ref_snrs()).unwrap();
        assert!((tin.objective - direct).abs() <= 1e-9);

        // Treating interference as noise can never beat cancellation on the
        // same formation.
        let sic_there = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
        assert!(tin.objective <= sic_there + 1e-9);
    }

    #[test]
    fn strong_users_claim_directions_first() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 1).unwrap();
        let out =
            greedy_directions_sic(&g, &cb, &[100.0, 100.0], &[1.0, 400.0], 0.0, f64::INFINITY)
                .unwrap();
        assert_eq!(out.order, vec![1, 0]);
        assert!((out.directions[1].sin_phi() + 1.0).abs() <= 1e-12);
        assert!((out.directions[0].sin_phi() + 0.75).abs() <= 1e-12);
    }

    #[test]
    fn common_snr_scaling_keeps_the_first_seat() {
        let g = ArrayGeometry::ula(4).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(20.0), 4).unwrap();
        let ranges = [100.0, 140.0];
        let base = greedy_directions_sic(&g, &cb, &ranges, &[7.0, 2.0], 0.0, f64::INFINITY)
            .unwrap();
        let scaled =
            greedy_directions_sic(&g, &cb, &ranges, &[7.0 * 13.0, 2.0 * 13.0], 0.0, f64::INFINITY)
                .unwrap();
        assert_eq!(base.order, scaled.order);
        assert_eq!(base.directions[base.order[0]], scaled.directions[scaled.order[0]]);
    }

    #[test]
    fn exhausted_cohesion_relaxes_then_recovers() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 1).unwrap();
        // 150 m of range gap against a 145 m ceiling: one relaxation makes
        // the co-directional column reachable again.
        let out = greedy_directions_sic(&g, &cb, &[50.0, 200.0], &[5.0, 5.0], 0.0, 145.0).unwrap();
        assert!((out.effective_d_max - 145.0 * RELAX_FACTOR).abs() <= 1e-9);
        assert!((out.directions[0].sin_phi() + 1.0).abs() <= 1e-12);
        assert!((out.directions[1].sin_phi() + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exhausted_cohesion_eventually_fails_with_partial_count() {
        let g = ArrayGeometry::ula(8).unwrap();
        let cb = DirectionCodebook::build(&g, &ula_sector(90.0), 1).unwrap();
        let err = greedy_directions_sic(&g, &cb, &[50.0, 200.0], &[5.0, 5.0], 0.0, 100.0)
            .unwrap_err();
        match err {
            Error::SearchExhausted { placed, total, .. } => {
                assert_eq!(placed, 1);
                assert_eq!(total, 2);
            }
            other => panic!("expected SearchExhausted, got {other:?}"),
        }
    }
}
