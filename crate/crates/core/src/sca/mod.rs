//! Range optimization for a swarm with fixed directions.
//!
//! With directions pinned, the remaining degrees of freedom are the user
//! ranges. Both rate objectives are handled by successive convex
//! approximation: every nonconvex piece of the problem is replaced by a
//! tangent bound that is tight at the current iterate and valid everywhere on
//! the feasible region, the resulting convex program is solved by a log
//! barrier kernel, and the expansion point moves to the new solution. Steps
//! are kept only when they improve the true objective, which makes the outer
//! iteration monotone by construction.
//!
//! The cancellation-based objective works directly in range coordinates with
//! one auxiliary effective-SNR variable per user. The interference-limited
//! objective is concave in inverse-square ranges, so its solver substitutes
//! `x = 1/r^2` and maps back afterwards.

mod barrier;

pub use barrier::BarrierSettings;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::LN_2;

use crate::array::{ArrayGeometry, Direction};
use crate::error::{Error, Result};
use barrier::{ConcaveObjective, ConstraintExpr};

/// Distance-level slack accepted when checking feasibility of start points
/// and returned solutions.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Relative gap left below an upper bound when seeding an auxiliary variable,
/// so the barrier kernel starts strictly inside the feasible region.
const START_GAP: f64 = 1e-6;

/// Geometric limits on a formation: a range window per user and an optional
/// pairwise spacing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationConstraints {
    r_min: f64,
    r_max: f64,
    d_min: f64,
    d_max: f64,
}

impl FormationConstraints {
    /// `d_max` may be `f64::INFINITY` for an unbounded swarm radius, and
    /// `d_min = 0` disables the collision-avoidance constraint.
    pub fn new(r_min: f64, r_max: f64, d_min: f64, d_max: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "minimum range {r_min} must be positive and finite"
            )));
        }
        if !(r_max.is_finite() && r_max >= r_min) {
            return Err(Error::InvalidArgument(format!(
                "maximum range {r_max} must be finite and at least {r_min}"
            )));
        }
        if !(d_min.is_finite() && d_min >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "minimum spacing {d_min} must be nonnegative and finite"
            )));
        }
        if !(d_max >= d_min && d_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "maximum spacing {d_max} must be positive and at least {d_min}"
            )));
        }
        Ok(FormationConstraints { r_min, r_max, d_min, d_max })
    }

    /// Range window only, with no spacing constraints.
    pub fn range_only(r_min: f64, r_max: f64) -> Result<Self> {
        FormationConstraints::new(r_min, r_max, 0.0, f64::INFINITY)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn has_min_spacing(&self) -> bool {
        self.d_min > 0.0
    }

    pub fn has_max_spacing(&self) -> bool {
        self.d_max.is_finite()
    }
}

/// Affine lower bound on the effective SNR `p r0^2 / r^2` as a function of
/// range, expanded around `r_exp`. The bound is tight at the expansion point
/// and valid for every positive range because the bounded map is convex.
#[derive(Debug, Clone, Copy)]
pub struct SnrFloor {
    intercept: f64,
    slope: f64,
}

impl SnrFloor {
    pub fn at(p_bar: f64, r0: f64, r_exp: f64) -> Result<Self> {
        if !(p_bar.is_finite() && p_bar >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference SNR {p_bar} must be nonnegative"
            )));
        }
        if !(r0.is_finite() && r0 > 0.0) || !(r_exp.is_finite() && r_exp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference distance {r0} and expansion range {r_exp} must be positive"
            )));
        }
        let base = p_bar * r0 * r0 / (r_exp * r_exp);
        Ok(SnrFloor {
            intercept: 3.0 * base,
            slope: -2.0 * base / r_exp,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.intercept + self.slope * r
    }
}

/// Affine lower bound on the squared distance between two users at ranges
/// `(r_k, r_j)` whose direction unit vectors have inner product `dir_dot`,
/// expanded around `(r_k_exp, r_j_exp)`. The squared distance is jointly
/// convex in the two ranges, so the tangent plane bounds it from below
/// everywhere.
#[derive(Debug, Clone, Copy)]
pub struct SeparationFloor {
    constant: f64,
    coef_k: f64,
    coef_j: f64,
}

impl SeparationFloor {
    pub fn at(r_k_exp: f64, r_j_exp: f64, dir_dot: f64) -> Result<Self> {
        if !(r_k_exp.is_finite() && r_k_exp > 0.0 && r_j_exp.is_finite() && r_j_exp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "expansion ranges ({r_k_exp}, {r_j_exp}) must be positive"
            )));
        }
        if !(dir_dot.is_finite() && dir_dot.abs() <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "direction inner product {dir_dot} must lie in [-1, 1]"
            )));
        }
        let c = dir_dot.clamp(-1.0, 1.0);
        let at_exp = r_k_exp * r_k_exp + r_j_exp * r_j_exp - 2.0 * r_k_exp * r_j_exp * c;
        Ok(SeparationFloor {
            constant: -at_exp,
            coef_k: 2.0 * (r_k_exp - r_j_exp * c),
            coef_j: 2.0 * (r_j_exp - r_k_exp * c),
        })
    }

    pub fn eval(&self, r_k: f64, r_j: f64) -> f64 {
        self.constant + self.coef_k * r_k + self.coef_j * r_j
    }
}

/// Affine lower bound on `1/x` around `x_exp > 0`, valid for all `x > 0`.
#[derive(Debug, Clone, Copy)]
pub struct InverseFloor {
    constant: f64,
    coef: f64,
}

impl InverseFloor {
    pub fn at(x_exp: f64) -> Result<Self> {
        if !(x_exp.is_finite() && x_exp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "expansion point {x_exp} must be positive"
            )));
        }
        Ok(InverseFloor {
            constant: 2.0 / x_exp,
            coef: -1.0 / (x_exp * x_exp),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.constant + self.coef * x
    }
}

/// Affine lower bound on `1/sqrt(x_k x_j)` around a positive expansion point,
/// valid on the positive orthant where that map is jointly convex.
#[derive(Debug, Clone, Copy)]
pub struct InverseSqrtFloor {
    constant: f64,
    coef_k: f64,
    coef_j: f64,
}

impl InverseSqrtFloor {
    pub fn at(x_k_exp: f64, x_j_exp: f64) -> Result<Self> {
        if !(x_k_exp.is_finite() && x_k_exp > 0.0 && x_j_exp.is_finite() && x_j_exp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "expansion point ({x_k_exp}, {x_j_exp}) must be positive"
            )));
        }
        let root = (x_k_exp * x_j_exp).sqrt();
        Ok(InverseSqrtFloor {
            constant: 2.0 / root,
            coef_k: -0.5 / (root * x_k_exp),
            coef_j: -0.5 / (root * x_j_exp),
        })
    }

    pub fn eval(&self, x_k: f64, x_j: f64) -> f64 {
        self.constant + self.coef_k * x_k + self.coef_j * x_j
    }
}

/// Affine upper bound on `log2(1 + c . x)` with nonnegative weights `c`,
/// expanded around `x_exp`. Concavity of the bounded map makes the tangent
/// plane an upper bound everywhere on the nonnegative orthant.
#[derive(Debug, Clone)]
pub struct InterferenceCeiling {
    constant: f64,
    coefs: Vec<f64>,
}

impl InterferenceCeiling {
    pub fn at(weights: &[f64], x_exp: &[f64]) -> Result<Self> {
        if weights.len() != x_exp.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights but {} expansion coordinates",
                weights.len(),
                x_exp.len()
            )));
        }
        if weights.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument("weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().zip(x_exp).map(|(c, x)| c * x).sum();
        let denom = (1.0 + s) * LN_2;
        let coefs: Vec<f64> = weights.iter().map(|c| c / denom).collect();
        let lin_at_exp: f64 = coefs.iter().zip(x_exp).map(|(c, x)| c * x).sum();
        Ok(InterferenceCeiling {
            constant: (1.0 + s).log2() - lin_at_exp,
            coefs,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coefs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Settings for the successive convex range solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaSettings {
    /// Cap on outer convexification rounds.
    pub max_outer: usize,
    /// Outer loop stops once the relative objective gain drops below this.
    pub objective_rel_tol: f64,
    /// Interior-point kernel settings.
    pub barrier: BarrierSettings,
}

impl Default for ScaSettings {
    fn default() -> Self {
        ScaSettings {
            max_outer: 30,
            objective_rel_tol: 1e-5,
            barrier: BarrierSettings::default(),
        }
    }
}

/// Result of a cancellation-objective range optimization.
#[derive(Debug, Clone)]
pub struct SicRangeSolution {
    /// Optimized range per user, in the caller's user order.
    pub ranges: Vec<f64>,
    /// Attained effective SNR `p r0^2 / r^2` per user.
    pub effective_snr: Vec<f64>,
    /// Sum capacity at the returned ranges.
    pub objective: f64,
    /// True objective after each accepted outer round, starting from the
    /// value at the start point. Nondecreasing.
    pub trace: Vec<f64>,
}

/// Result of an interference-limited range optimization.
#[derive(Debug, Clone)]
pub struct TinRangeSolution {
    pub ranges: Vec<f64>,
    /// Sum rate under the fixed receive beamformers encoded in the
    /// subproblem's coupling coefficients.
    pub objective: f64,
    /// True objective after each accepted outer round. Nondecreasing.
    pub trace: Vec<f64>,
}

fn check_lengths(users: usize, what: &str, len: usize) -> Result<()> {
    if len != users {
        return Err(Error::InvalidArgument(format!(
            "{users} users but {len} {what}"
        )));
    }
    Ok(())
}

fn pair_distance(r_i: f64, r_j: f64, dot: f64) -> f64 {
    (r_i * r_i + r_j * r_j - 2.0 * r_i * r_j * dot).max(0.0).sqrt()
}

/// Validates ranges against the box and spacing windows with distance-level
/// slack `FEASIBILITY_TOL`.
fn check_feasible(ranges: &[f64], dots: &DMatrix<f64>, limits: &FormationConstraints) -> Result<()> {
    for (i, r) in ranges.iter().enumerate() {
        if !r.is_finite() || *r < limits.r_min - FEASIBILITY_TOL || *r > limits.r_max + FEASIBILITY_TOL
        {
            return Err(Error::Infeasible {
                constraint: "range window".into(),
                detail: format!(
                    "range {r} of user {i} outside [{}, {}]",
                    limits.r_min, limits.r_max
                ),
            });
        }
    }
    for i in 0..ranges.len() {
        for j in (i + 1)..ranges.len() {
            let d = pair_distance(ranges[i], ranges[j], dots[(i, j)]);
            if d < limits.d_min - FEASIBILITY_TOL {
                return Err(Error::Infeasible {
                    constraint: "minimum spacing".into(),
                    detail: format!("users {i} and {j} are {d} apart, need {}", limits.d_min),
                });
            }
            if d > limits.d_max + FEASIBILITY_TOL {
                return Err(Error::Infeasible {
                    constraint: "maximum spacing".into(),
                    detail: format!("users {i} and {j} are {d} apart, limit {}", limits.d_max),
                });
            }
        }
    }
    Ok(())
}

/// Pulls a kernel proposal that drifted a hair past a true constraint back
/// along the segment toward the feasible expansion point.
///
/// Kernel iterates hug the surrogate boundary, and the slack granted to a
/// boundary-tight start can leave the returned point a few nanometers on the
/// wrong side of an exact spacing window. Shrinking the step geometrically
/// instead of rejecting it keeps the outer loop moving; the ladder ends at
/// the expansion itself, which is feasible by construction.
fn restore_toward<F: Fn(&[f64]) -> bool>(
    expansion: &[f64],
    proposal: Vec<f64>,
    feasible: F,
) -> Option<Vec<f64>> {
    if feasible(&proposal) {
        return Some(proposal);
    }
    let mut lambda = 1e-9;
    loop {
        let blended: Vec<f64> = proposal
            .iter()
            .zip(expansion)
            .map(|(p, e)| p + lambda * (e - p))
            .collect();
        if feasible(&blended) {
            return Some(blended);
        }
        if lambda >= 1.0 {
            return None;
        }
        lambda = (lambda * 4.0).min(1.0);
    }
}

fn direction_dots(directions: &[Direction]) -> DMatrix<f64> {
    let k = directions.len();
    DMatrix::from_fn(k, k, |i, j| directions[i].dot(&directions[j]))
}

/// Surrogate constraint keeping a pair at least `d_min` apart, affine in the
/// two ranges.
fn sic_min_distance_constraint(
    i: usize,
    j: usize,
    r_i_exp: f64,
    r_j_exp: f64,
    dot: f64,
    d_min: f64,
) -> ConstraintExpr {
    let floor = SeparationFloor::at(r_i_exp, r_j_exp, dot)
        .expect("expansion ranges are validated before constraint assembly");
    ConstraintExpr::AffinePair {
        i,
        j,
        a: -floor.coef_k,
        b: -floor.coef_j,
        c0: d_min * d_min - floor.constant,
    }
}

/// Surrogate constraint keeping a pair at least `d_min` apart in
/// inverse-square coordinates. Which term is linearized depends on the sign
/// of the direction inner product, so that the kept terms are convex and the
/// surrogate region stays inside the true one.
fn tin_min_distance_constraint(
    i: usize,
    j: usize,
    x_i_exp: f64,
    x_j_exp: f64,
    dot: f64,
    d_min: f64,
) -> ConstraintExpr {
    let inv_i = InverseFloor::at(x_i_exp).expect("validated expansion point");
    let inv_j = InverseFloor::at(x_j_exp).expect("validated expansion point");
    let c0_base = d_min * d_min - inv_i.constant - inv_j.constant;
    if dot > 0.0 {
        // d^2 >= 1/x_i + 1/x_j - 2 dot / sqrt(x_i x_j); the coupling term is
        // convex here, so it stays exact and only the inverses are floored.
        ConstraintExpr::RecipPair {
            i,
            j,
            a: -inv_i.coef,
            b: -inv_j.coef,
            alpha: 0.0,
            beta: 0.0,
            gamma: 2.0 * dot,
            c0: c0_base,
        }
    } else {
        // The coupling term now enters with a positive sign times 1/sqrt, a
        // concave contribution, so the inverse square root is floored too and
        // the whole surrogate is affine.
        let cross = InverseSqrtFloor::at(x_i_exp, x_j_exp).expect("validated expansion point");
        let w = -2.0 * dot;
        ConstraintExpr::AffinePair {
            i,
            j,
            a: -inv_i.coef - w * cross.coef_k,
            b: -inv_j.coef - w * cross.coef_j,
            c0: c0_base - w * cross.constant,
        }
    }
}

/// Surrogate constraint keeping a pair at most `d_max` apart in
/// inverse-square coordinates, with the same sign dispatch as the minimum
/// spacing surrogate but mirrored.
fn tin_max_distance_constraint(
    i: usize,
    j: usize,
    x_i_exp: f64,
    x_j_exp: f64,
    dot: f64,
    d_max: f64,
) -> ConstraintExpr {
    if dot > 0.0 {
        let cross = InverseSqrtFloor::at(x_i_exp, x_j_exp).expect("validated expansion point");
        let w = 2.0 * dot;
        ConstraintExpr::RecipPair {
            i,
            j,
            a: -w * cross.coef_k,
            b: -w * cross.coef_j,
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            c0: -d_max * d_max - w * cross.constant,
        }
    } else {
        ConstraintExpr::RecipPair {
            i,
            j,
            a: 0.0,
            b: 0.0,
            alpha: 1.0,
            beta: 1.0,
            gamma: -2.0 * dot,
            c0: -d_max * d_max,
        }
    }
}

/// Sum-capacity objective over `z = [ranges, effective SNRs]`; only the SNR
/// block carries curvature. The capacity is concave and increasing in each
/// effective SNR.
struct SicObjective<'a> {
    columns: &'a DMatrix<Complex64>,
    users: usize,
    elements: usize,
}

impl SicObjective<'_> {
    fn covariance(&self, b: &[f64]) -> DMatrix<Complex64> {
        let m = self.elements;
        let mut x = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
        for (j, col) in self.columns.column_iter().enumerate() {
            let w = Complex64::new(b[j], 0.0);
            for r in 0..m {
                let wr = w * col[r];
                for c in 0..m {
                    x[(r, c)] += wr * col[c].conj();
                }
            }
        }
        for d in 0..m {
            x[(d, d)] += Complex64::new(1.0, 0.0);
        }
        x
    }
}

fn log2_det_cholesky(x: DMatrix<Complex64>) -> (nalgebra::linalg::Cholesky<Complex64, nalgebra::Dyn>, f64) {
    let chol = nalgebra::linalg::Cholesky::new(x)
        .expect("identity plus a positive weighted Gram sum is positive definite");
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    (chol, 2.0 * acc / LN_2)
}

impl ConcaveObjective for SicObjective<'_> {
    fn eval(&self, z: &[f64], grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> f64 {
        let k = self.users;
        let (chol, value) = log2_det_cholesky(self.covariance(&z[k..]));
        let solved = chol.solve(self.columns);
        let g = self.columns.adjoint() * solved;
        for i in 0..k {
            grad[k + i] = g[(i, i)].re / LN_2;
            for j in 0..k {
                hess[(k + i, k + j)] = -g[(i, j)].norm_sqr() / LN_2;
            }
        }
        value
    }

    fn value(&self, z: &[f64]) -> f64 {
        log2_det_cholesky(self.covariance(&z[self.users..])).1
    }
}

/// Range subproblem under the cancellation objective: maximize the sum
/// capacity over ranges inside the window, subject to pairwise spacing
/// limits, with directions held fixed.
#[derive(Debug, Clone)]
pub struct RangeSubproblemSic {
    columns: DMatrix<Complex64>,
    dots: DMatrix<f64>,
    power: Vec<f64>,
    r0: f64,
    limits: FormationConstraints,
    start: Vec<f64>,
    elements: usize,
}

impl RangeSubproblemSic {
    pub fn new(
        geometry: &ArrayGeometry,
        directions: &[Direction],
        p_bar: &[f64],
        r0: f64,
        limits: FormationConstraints,
        start_ranges: &[f64],
    ) -> Result<Self> {
        let k = directions.len();
        if k == 0 {
            return Err(Error::InvalidArgument("at least one user is required".into()));
        }
        check_lengths(k, "reference SNRs", p_bar.len())?;
        check_lengths(k, "start ranges", start_ranges.len())?;
        if let Some(p) = p_bar.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference SNR {p} must be positive for range optimization"
            )));
        }
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reference distance {r0} must be positive"
            )));
        }
        let m = geometry.elements();
        let mut columns = DMatrix::from_element(m, k, Complex64::new(0.0, 0.0));
        for (j, d) in directions.iter().enumerate() {
            columns.set_column(j, &geometry.steering(d).into_entries());
        }
        let dots = direction_dots(directions);
        check_feasible(start_ranges, &dots, &limits)?;
        let start = start_ranges
            .iter()
            .map(|r| r.clamp(limits.r_min, limits.r_max))
            .collect();
        Ok(RangeSubproblemSic {
            columns,
            dots,
            power: p_bar.to_vec(),
            r0,
            limits,
            start,
            elements: m,
        })
    }

    fn users(&self) -> usize {
        self.power.len()
    }

    fn effective_snr(&self, ranges: &[f64]) -> Vec<f64> {
        ranges
            .iter()
            .zip(&self.power)
            .map(|(r, p)| p * self.r0 * self.r0 / (r * r))
            .collect()
    }

    /// Sum capacity at the given ranges with effective SNRs on their exact
    /// curve.
    pub fn capacity_at(&self, ranges: &[f64]) -> f64 {
        let obj = SicObjective {
            columns: &self.columns,
            users: self.users(),
            elements: self.elements,
        };
        log2_det_cholesky(obj.covariance(&self.effective_snr(ranges))).1
    }

    fn surrogate_constraints(&self, expansion: &[f64]) -> Vec<ConstraintExpr> {
        let k = self.users();
        let mut cons = Vec::new();
        for i in 0..k {
            cons.push(ConstraintExpr::Bound { i, a: -1.0, c0: self.limits.r_min });
            cons.push(ConstraintExpr::Bound { i, a: 1.0, c0: -self.limits.r_max });
            cons.push(ConstraintExpr::Bound { i: k + i, a: -1.0, c0: 0.0 });
            let floor = SnrFloor::at(self.power[i], self.r0, expansion[i])
                .expect("power and expansion are validated");
            cons.push(ConstraintExpr::AffinePair {
                i,
                j: k + i,
                a: -floor.slope,
                b: 1.0,
                c0: -floor.intercept,
            });
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if self.limits.has_min_spacing() {
                    cons.push(sic_min_distance_constraint(
                        i,
                        j,
                        expansion[i],
                        expansion[j],
                        self.dots[(i, j)],
                        self.limits.d_min,
                    ));
                }
                if self.limits.has_max_spacing() {
                    cons.push(ConstraintExpr::QuadPair {
                        i,
                        j,
                        cross: self.dots[(i, j)],
                        limit: self.limits.d_max * self.limits.d_max,
                    });
                }
            }
        }
        cons
    }

    /// Runs the outer convexification loop from the stored start ranges.
    pub fn solve(&self, settings: &ScaSettings) -> Result<SicRangeSolution> {
        let k = self.users();
        let mut current = self.start.clone();
        let mut best = self.capacity_at(&current);
        let mut trace = vec![best];
        for _ in 0..settings.max_outer {
            let mut cons = self.surrogate_constraints(&current);
            let mut z0 = Vec::with_capacity(2 * k);
            z0.extend_from_slice(&current);
            z0.extend(self.effective_snr(&current).iter().map(|b| b * (1.0 - START_GAP)));
            let objective = SicObjective {
                columns: &self.columns,
                users: k,
                elements: self.elements,
            };
            let (z, _) = barrier::maximize(&objective, &mut cons, &z0, &settings.barrier)?;
            // The kernel may hug a boundary from outside by the slack it
            // grants boundary-active start points; clamping into the box and
            // blending back toward the expansion keeps accepted iterates
            // exactly feasible without discarding the step.
            let clamped: Vec<f64> = z[..k]
                .iter()
                .map(|r| r.clamp(self.limits.r_min, self.limits.r_max))
                .collect();
            let proposal = match restore_toward(&current, clamped, |r| {
                check_feasible(r, &self.dots, &self.limits).is_ok()
            }) {
                Some(p) => p,
                None => break,
            };
            // The capacity is increasing in every effective SNR, so lifting
            // the auxiliary block back onto its exact curve before scoring
            // never loses rate.
            let value = self.capacity_at(&proposal);
            if value <= best {
                break;
            }
            let gain = value - best;
            best = value;
            current = proposal;
            trace.push(best);
            if gain <= settings.objective_rel_tol * best.abs().max(1.0) {
                break;
            }
        }
        check_feasible(&current, &self.dots, &self.limits).map_err(|e| Error::KernelDiverged {
            detail: format!("optimized ranges failed validation: {e}"),
            trace: trace.clone(),
        })?;
        let effective_snr = self.effective_snr(&current);
        Ok(SicRangeSolution { ranges: current, effective_snr, objective: best, trace })
    }
}

/// Sum-rate objective for fixed receive beamformers, over normalized
/// inverse-square ranges. The interference part has been replaced by an
/// affine ceiling, so what remains is concave.
struct TinObjective<'a> {
    coeffs: &'a DMatrix<f64>,
    lin: &'a [f64],
    constant: f64,
}

impl ConcaveObjective for TinObjective<'_> {
    fn eval(&self, z: &[f64], grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> f64 {
        let k = self.coeffs.nrows();
        let mut value = -self.constant;
        for (j, lj) in self.lin.iter().enumerate() {
            value -= lj * z[j];
            grad[j] -= lj;
        }
        for row in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += self.coeffs[(row, j)] * z[j];
            }
            value += (1.0 + s).ln() / LN_2;
            let gscale = 1.0 / ((1.0 + s) * LN_2);
            let hscale = gscale / (1.0 + s);
            for i in 0..k {
                let ci = self.coeffs[(row, i)];
                if ci == 0.0 {
                    continue;
                }
                grad[i] += ci * gscale;
                for j in 0..k {
                    hess[(i, j)] -= ci * self.coeffs[(row, j)] * hscale;
                }
            }
        }
        value
    }

    fn value(&self, z: &[f64]) -> f64 {
        let k = self.coeffs.nrows();
        let mut value = -self.constant;
        for (j, lj) in self.lin.iter().enumerate() {
            value -= lj * z[j];
        }
        for row in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += self.coeffs[(row, j)] * z[j];
            }
            value += (1.0 + s).ln() / LN_2;
        }
        value
    }
}

/// Range subproblem under the interference-limited objective with fixed
/// receive beamformers, captured by coupling coefficients `c[k][j]` such that
/// user `k` sees SINR `c[k][k] x_k / (1 + sum_{j != k} c[k][j] x_j)` at
/// inverse-square ranges `x`.
#[derive(Debug, Clone)]
pub struct RangeSubproblemTin {
    /// Coupling coefficients rescaled to normalized coordinates.
    coeffs_n: DMatrix<f64>,
    dots: DMatrix<f64>,
    limits: FormationConstraints,
    /// Start point in normalized inverse-square coordinates `(r_min/r)^2`.
    start_xn: Vec<f64>,
}

impl RangeSubproblemTin {
    pub fn new(
        coeffs: &DMatrix<f64>,
        directions: &[Direction],
        limits: FormationConstraints,
        start_ranges: &[f64],
    ) -> Result<Self> {
        let k = directions.len();
        if k == 0 {
            return Err(Error::InvalidArgument("at least one user is required".into()));
        }
        if coeffs.nrows() != k || coeffs.ncols() != k {
            return Err(Error::InvalidArgument(format!(
                "coupling matrix is {}x{}, expected {k}x{k}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        check_lengths(k, "start ranges", start_ranges.len())?;
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument(
                "coupling coefficients must be nonnegative and finite".into(),
            ));
        }
        let dots = direction_dots(directions);
        check_feasible(start_ranges, &dots, &limits)?;
        // Working in units of r_min keeps the inverse-square coordinates in
        // [ (r_min/r_max)^2, 1 ] and the kernel well conditioned.
        let scale = limits.r_min * limits.r_min;
        let coeffs_n = coeffs.map(|c| c / scale);
        let start_xn = start_ranges
            .iter()
            .map(|r| {
                let rc = r.clamp(limits.r_min, limits.r_max);
                scale / (rc * rc)
            })
            .collect();
        Ok(RangeSubproblemTin { coeffs_n, dots, limits, start_xn })
    }

    fn users(&self) -> usize {
        self.coeffs_n.nrows()
    }

    /// True sum rate at normalized inverse-square coordinates.
    fn rate_at(&self, xn: &[f64]) -> f64 {
        let k = self.users();
        let mut acc = 0.0;
        for row in 0..k {
            let mut full = 0.0;
            for j in 0..k {
                full += self.coeffs_n[(row, j)] * xn[j];
            }
            let interference = full - self.coeffs_n[(row, row)] * xn[row];
            acc += (1.0 + full).log2() - (1.0 + interference).log2();
        }
        acc
    }

    fn ranges_from(&self, xn: &[f64]) -> Vec<f64> {
        xn.iter().map(|x| self.limits.r_min / x.sqrt()).collect()
    }

    fn surrogate_constraints(&self, expansion: &[f64]) -> Vec<ConstraintExpr> {
        let k = self.users();
        let lo = (self.limits.r_min / self.limits.r_max).powi(2);
        let d_min_n = self.limits.d_min / self.limits.r_min;
        let d_max_n = self.limits.d_max / self.limits.r_min;
        let mut cons = Vec::new();
        for i in 0..k {
            cons.push(ConstraintExpr::Bound { i, a: -1.0, c0: lo });
            cons.push(ConstraintExpr::Bound { i, a: 1.0, c0: -1.0 });
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let dot = self.dots[(i, j)];
                if self.limits.has_min_spacing() {
                    cons.push(tin_min_distance_constraint(
                        i, j, expansion[i], expansion[j], dot, d_min_n,
                    ));
                }
                if self.limits.has_max_spacing() {
                    cons.push(tin_max_distance_constraint(
                        i, j, expansion[i], expansion[j], dot, d_max_n,
                    ));
                }
            }
        }
        cons
    }

    /// Affine ceiling on the total interference rate term at the expansion
    /// point: returns `(constant, gradient)` of the summed per-user ceilings.
    fn interference_ceiling(&self, expansion: &[f64]) -> (f64, Vec<f64>) {
        let k = self.users();
        let mut constant = 0.0;
        let mut lin = vec![0.0; k];
        let mut weights = vec![0.0; k];
        for row in 0..k {
            for j in 0..k {
                weights[j] = if j == row { 0.0 } else { self.coeffs_n[(row, j)] };
            }
            let ceiling = InterferenceCeiling::at(&weights, expansion)
                .expect("coupling coefficients are validated nonnegative");
            constant += ceiling.constant;
            for (l, c) in lin.iter_mut().zip(&ceiling.coefs) {
                *l += c;
            }
        }
        (constant, lin)
    }

    /// Runs the outer convexification loop from the stored start ranges.
    pub fn solve(&self, settings: &ScaSettings) -> Result<TinRangeSolution> {
        let mut current = self.start_xn.clone();
        let mut best = self.rate_at(&current);
        let mut trace = vec![best];
        for _ in 0..settings.max_outer {
            let mut cons = self.surrogate_constraints(&current);
            let (constant, lin) = self.interference_ceiling(&current);
            let objective = TinObjective { coeffs: &self.coeffs_n, lin: &lin, constant };
            let (z, _) = barrier::maximize(&objective, &mut cons, &current, &settings.barrier)?;
            // Same boundary hygiene as the cancellation solver: clamp into
            // the box, then blend back toward the expansion until the exact
            // windows accept the iterate.
            let lo = (self.limits.r_min / self.limits.r_max).powi(2);
            let clamped: Vec<f64> = z.iter().map(|x| x.clamp(lo, 1.0)).collect();
            let proposal = match restore_toward(&current, clamped, |xn| {
                check_feasible(&self.ranges_from(xn), &self.dots, &self.limits).is_ok()
            }) {
                Some(p) => p,
                None => break,
            };
            let value = self.rate_at(&proposal);
            if value <= best {
                break;
            }
            let gain = value - best;
            best = value;
            current = proposal;
            trace.push(best);
            if gain <= settings.objective_rel_tol * best.abs().max(1.0) {
                break;
            }
        }
        let ranges = self.ranges_from(&current);
        check_feasible(&ranges, &self.dots, &self.limits).map_err(|e| Error::KernelDiverged {
            detail: format!("optimized ranges failed validation: {e}"),
            trace: trace.clone(),
        })?;
        Ok(TinRangeSolution { ranges, objective: best, trace })
    }
}

/// Coupling coefficients for fixed receive beamformers: entry `(k, j)` is
/// `p_j r0^2 |w_k^H a_j|^2 / ||w_k||^2`, so that user `k` at inverse-square
/// range `x` sees signal power `c[k][k] x_k` against noise 1 and interference
/// `sum_{j != k} c[k][j] x_j`.
pub fn interference_coefficients(
    geometry: &ArrayGeometry,
    directions: &[Direction],
    beamformers: &[DVector<Complex64>],
    p_bar: &[f64],
    r0: f64,
) -> Result<DMatrix<f64>> {
    let k = directions.len();
    check_lengths(k, "beamformers", beamformers.len())?;
    check_lengths(k, "reference SNRs", p_bar.len())?;
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reference distance {r0} must be positive"
        )));
    }
    let m = geometry.elements();
    let mut coeffs = DMatrix::zeros(k, k);
    let columns: Vec<DVector<Complex64>> = directions
        .iter()
        .map(|d| geometry.steering(d).into_entries())
        .collect();
    for (row, w) in beamformers.iter().enumerate() {
        if w.len() != m {
            return Err(Error::InvalidArgument(format!(
                "beamformer {row} has {} entries, expected {m}",
                w.len()
            )));
        }
        let norm2 = w.norm_squared();
        if !(norm2.is_finite() && norm2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beamformer {row} must be nonzero"
            )));
        }
        for (j, a) in columns.iter().enumerate() {
            let gain = w.dotc(a).norm_sqr();
            coeffs[(row, j)] = p_bar[j] * r0 * r0 * gain / norm2;
        }
    }
    Ok(coeffs)
}

/// Sum rate attained by fixed beamformers with coupling matrix `coeffs` when
/// the users sit at the given ranges.
pub fn fixed_beamformer_sum_rate(coeffs: &DMatrix<f64>, ranges: &[f64]) -> Result<f64> {
    let k = coeffs.nrows();
    if coeffs.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "coupling matrix is {}x{}, expected square",
            coeffs.nrows(),
            coeffs.ncols()
        )));
    }
    check_lengths(k, "ranges", ranges.len())?;
    if let Some(r) = ranges.iter().find(|r| !r.is_finite() || **r <= 0.0) {
        return Err(Error::InvalidArgument(format!("range {r} must be positive")));
    }
    let x: Vec<f64> = ranges.iter().map(|r| 1.0 / (r * r)).collect();
    let mut acc = 0.0;
    for row in 0..k {
        let mut full = 0.0;
        for j in 0..k {
            full += coeffs[(row, j)] * x[j];
        }
        let interference = full - coeffs[(row, row)] * x[row];
        acc += (1.0 + full).log2() - (1.0 + interference).log2();
    }
    Ok(acc)
}
