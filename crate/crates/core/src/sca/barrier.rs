//! Log-barrier interior-point kernel for the small dense convex programs that
//! arise as range-update subproblems.
//!
//! The kernel maximizes a smooth concave objective subject to a list of
//! convex inequality constraints `g_i(z) <= 0`, each touching at most two
//! coordinates. Problems here are tiny (a few hundred variables at most), so
//! a dense damped-Newton path-following method is both simple and fast.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// One convex inequality constraint `g(z) <= 0` over at most two coordinates.
///
/// Every constraint produced by the range subproblems fits one of these
/// shapes. `RecipPair` requires `alpha, beta, gamma >= 0` and strictly
/// positive coordinates, which makes it convex on the feasible region.
#[derive(Debug, Clone)]
pub(crate) enum ConstraintExpr {
    /// `c0 + a * z[i] <= 0`
    Bound { i: usize, a: f64, c0: f64 },
    /// `c0 + a * z[i] + b * z[j] <= 0`
    AffinePair {
        i: usize,
        j: usize,
        a: f64,
        b: f64,
        c0: f64,
    },
    /// `z[i]^2 + z[j]^2 - 2 * cross * z[i] * z[j] - limit <= 0`, `|cross| <= 1`
    QuadPair {
        i: usize,
        j: usize,
        cross: f64,
        limit: f64,
    },
    /// `c0 + a * z[i] + b * z[j] + alpha / z[i] + beta / z[j]
    ///     + gamma / sqrt(z[i] * z[j]) <= 0`
    RecipPair {
        i: usize,
        j: usize,
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        c0: f64,
    },
}

/// Gradient and Hessian of one constraint, restricted to its support.
struct LocalDerivs {
    len: usize,
    idx: [usize; 2],
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

impl ConstraintExpr {
    pub(crate) fn value(&self, z: &[f64]) -> f64 {
        match *self {
            ConstraintExpr::Bound { i, a, c0 } => c0 + a * z[i],
            ConstraintExpr::AffinePair { i, j, a, b, c0 } => c0 + a * z[i] + b * z[j],
            ConstraintExpr::QuadPair { i, j, cross, limit } => {
                z[i] * z[i] + z[j] * z[j] - 2.0 * cross * z[i] * z[j] - limit
            }
            ConstraintExpr::RecipPair {
                i,
                j,
                a,
                b,
                alpha,
                beta,
                gamma,
                c0,
            } => {
                let (zi, zj) = (z[i], z[j]);
                c0 + a * zi + b * zj + alpha / zi + beta / zj + gamma / (zi * zj).sqrt()
            }
        }
    }

    /// Shifts the constraint bound by `delta`, replacing `g <= 0` with
    /// `g - delta <= 0`; a negative `delta` tightens.
    fn relax(&mut self, delta: f64) {
        match self {
            ConstraintExpr::Bound { c0, .. }
            | ConstraintExpr::AffinePair { c0, .. }
            | ConstraintExpr::RecipPair { c0, .. } => *c0 -= delta,
            ConstraintExpr::QuadPair { limit, .. } => *limit += delta,
        }
    }

    fn local_derivs(&self, z: &[f64]) -> LocalDerivs {
        match *self {
            ConstraintExpr::Bound { i, a, .. } => LocalDerivs {
                len: 1,
                idx: [i, 0],
                grad: [a, 0.0],
                hess: [[0.0; 2]; 2],
            },
            ConstraintExpr::AffinePair { i, j, a, b, .. } => LocalDerivs {
                len: 2,
                idx: [i, j],
                grad: [a, b],
                hess: [[0.0; 2]; 2],
            },
            ConstraintExpr::QuadPair { i, j, cross, .. } => LocalDerivs {
                len: 2,
                idx: [i, j],
                grad: [
                    2.0 * (z[i] - cross * z[j]),
                    2.0 * (z[j] - cross * z[i]),
                ],
                hess: [[2.0, -2.0 * cross], [-2.0 * cross, 2.0]],
            },
            ConstraintExpr::RecipPair {
                i,
                j,
                a,
                b,
                alpha,
                beta,
                gamma,
                ..
            } => {
                let (zi, zj) = (z[i], z[j]);
                let si = zi.sqrt();
                let sj = zj.sqrt();
                let gi = a - alpha / (zi * zi) - 0.5 * gamma / (zi * si * sj);
                let gj = b - beta / (zj * zj) - 0.5 * gamma / (zj * sj * si);
                let hii = 2.0 * alpha / (zi * zi * zi) + 0.75 * gamma / (zi * zi * si * sj);
                let hjj = 2.0 * beta / (zj * zj * zj) + 0.75 * gamma / (zj * zj * sj * si);
                let hij = 0.25 * gamma / (zi * si * zj * sj);
                LocalDerivs {
                    len: 2,
                    idx: [i, j],
                    grad: [gi, gj],
                    hess: [[hii, hij], [hij, hjj]],
                }
            }
        }
    }
}

/// A smooth concave objective to maximize.
///
/// `eval` returns the value and accumulates gradient and Hessian (of the
/// concave objective itself, not its negation) into the provided buffers,
/// which arrive zeroed. `value` is a cheaper value-only path used during
/// line search.
pub(crate) trait ConcaveObjective {
    fn eval(&self, z: &[f64], grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> f64;
    fn value(&self, z: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSettings {
    /// Initial barrier weight.
    pub t_init: f64,
    /// Multiplicative barrier-weight increase per centering stage.
    pub mu: f64,
    /// Path terminates once the duality-gap bound `m / t` falls below
    /// `gap_tol * (1 + |objective|)`.
    pub gap_tol: f64,
    /// Newton decrement threshold (`lambda^2 / 2`) for declaring a stage
    /// centered.
    pub newton_tol: f64,
    /// Newton iteration cap per centering stage.
    pub max_newton: usize,
}

impl Default for BarrierSettings {
    fn default() -> Self {
        BarrierSettings {
            t_init: 1.0,
            mu: 20.0,
            gap_tol: 1e-9,
            newton_tol: 1e-10,
            max_newton: 60,
        }
    }
}

/// Slack granted to constraints that are active (or violated within noise) at
/// the start point, so the barrier sees a strictly feasible interior point.
/// Chosen so that a squared-distance constraint relaxed by this much moves the
/// implied distance by well under a nanometer.
const START_SLACK: f64 = 1e-10;

/// Start-point violations beyond this are treated as genuine infeasibility
/// rather than floating-point noise.
const START_VIOLATION_CAP: f64 = 1e-6;

/// Pre-centering stops once every constraint keeps this much slack, relative
/// to the largest constraint magnitude seen at the start point.
const CENTER_GOAL_REL: f64 = 1e-6;

/// Iteration cap for the pre-centering phase.
const MAX_CENTER_STEPS: usize = 80;

/// Damped Newton descent on the pure barrier potential `-sum ln(-g_i(z))`,
/// run before path-following when the start hugs a constraint.
///
/// A warm start taken from a previous solve sits on its active constraints
/// to within the duality gap. There the mixed potential is so stiff that
/// every trial step of the path phase fails its line search and the kernel
/// hands the start straight back, even when large objective gains are one
/// re-expansion away. Walking toward the analytic center is objective-blind,
/// but it restores workable slack in a few damped steps and the path phase
/// re-optimizes from there, so nothing is lost.
fn recenter(constraints: &[ConstraintExpr], z: &mut [f64]) {
    let n = z.len();
    let magnitude = constraints.iter().map(|c| c.value(z).abs()).fold(0.0, f64::max);
    let goal = CENTER_GOAL_REL * (1.0 + magnitude);
    let min_slack =
        |z: &[f64]| constraints.iter().map(|c| -c.value(z)).fold(f64::INFINITY, f64::min);
    if min_slack(z) >= goal {
        return;
    }
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for _ in 0..MAX_CENTER_STEPS {
        grad.fill(0.0);
        hess.fill(0.0);
        let mut phi = 0.0;
        for c in constraints {
            let v = c.value(z);
            debug_assert!(v < 0.0, "centering iterate left the feasible region");
            phi -= (-v).ln();
            let inv_s = -1.0 / v;
            let loc = c.local_derivs(z);
            for p in 0..loc.len {
                let ip = loc.idx[p];
                grad[ip] += loc.grad[p] * inv_s;
                for q in 0..loc.len {
                    let iq = loc.idx[q];
                    hess[(ip, iq)] +=
                        loc.grad[p] * loc.grad[q] * inv_s * inv_s + loc.hess[p][q] * inv_s;
                }
            }
        }
        let step = match solve_newton_system(&hess, &grad) {
            Some(step) => step,
            None => return,
        };
        let decrement = -grad.dot(&step);
        if decrement * 0.5 <= 1e-12 {
            return;
        }
        let mut scale = 1.0;
        let mut moved = false;
        while scale >= 1e-14 {
            let trial: Vec<f64> =
                z.iter().zip(step.iter()).map(|(zi, si)| zi + scale * si).collect();
            let mut phi_trial = 0.0;
            let mut interior = true;
            for c in constraints {
                let v = c.value(&trial);
                if v >= 0.0 {
                    interior = false;
                    break;
                }
                phi_trial -= (-v).ln();
            }
            if interior && phi_trial <= phi - 0.25 * scale * decrement {
                z.copy_from_slice(&trial);
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved || min_slack(z) >= goal {
            return;
        }
    }
}

/// Barrier potential `-t f(z) - sum ln(-g_i(z))`, or `None` outside the
/// strictly feasible region.
fn potential(
    t: f64,
    objective_value: f64,
    constraints: &[ConstraintExpr],
    z: &[f64],
) -> Option<f64> {
    let mut acc = -t * objective_value;
    for c in constraints {
        let v = c.value(z);
        if v >= 0.0 {
            return None;
        }
        acc -= (-v).ln();
    }
    Some(acc)
}

fn solve_newton_system(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let n = hess.nrows();
    let trace = hess.trace();
    let mut ridge = 0.0;
    loop {
        let mut h = hess.clone();
        if ridge > 0.0 {
            for d in 0..n {
                h[(d, d)] += ridge;
            }
        }
        if let Some(ch) = Cholesky::new(h) {
            return Some(ch.solve(&(-grad)));
        }
        ridge = if ridge == 0.0 {
            1e-12 * (1.0 + trace.abs() / n as f64)
        } else {
            ridge * 100.0
        };
        if ridge > 1e8 * (1.0 + trace.abs()) {
            return None;
        }
    }
}

/// Maximizes `objective` over `{ z : g_i(z) <= 0 }` starting from `z0`, which
/// must be feasible up to floating-point noise. Returns the solution and its
/// objective value.
pub(crate) fn maximize(
    objective: &dyn ConcaveObjective,
    constraints: &mut [ConstraintExpr],
    z0: &[f64],
    settings: &BarrierSettings,
) -> Result<(Vec<f64>, f64)> {
    let n = z0.len();
    let mut granted = vec![0.0; constraints.len()];
    for (c, grant) in constraints.iter_mut().zip(granted.iter_mut()) {
        let v = c.value(z0);
        if v > START_VIOLATION_CAP {
            return Err(Error::Infeasible {
                constraint: "barrier start".into(),
                detail: format!("start point violates a constraint by {v:.3e}"),
            });
        }
        if v > -START_SLACK {
            *grant = v + START_SLACK;
            c.relax(*grant);
        }
    }

    let m = constraints.len() as f64;
    let mut t = settings.t_init;
    let mut z = z0.to_vec();
    recenter(constraints, &mut z);

    // Revoke the start-up slack now that centering has pulled the iterate off
    // the walls. Path-following on the widened set would settle marginally
    // outside the true bounds and the caller would reject the whole step; on
    // the original set the answer is feasible outright. Where centering could
    // not buy room (a degenerate sliver of a feasible set), the grant stays.
    for (c, grant) in constraints.iter_mut().zip(granted.iter_mut()) {
        if *grant > 0.0 {
            c.relax(-*grant);
            let v = c.value(&z);
            if v > -START_SLACK {
                c.relax(v + START_SLACK);
            }
        }
    }
    let mut grad_obj = DVector::zeros(n);
    let mut hess_obj = DMatrix::zeros(n, n);
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);

    loop {
        for _ in 0..settings.max_newton {
            grad_obj.fill(0.0);
            hess_obj.fill(0.0);
            let f = objective.eval(&z, &mut grad_obj, &mut hess_obj);
            grad.copy_from(&grad_obj);
            grad *= -t;
            hess.copy_from(&hess_obj);
            hess *= -t;
            for c in constraints.iter() {
                let v = c.value(&z);
                debug_assert!(v < 0.0, "interior point left the feasible region");
                let inv_s = -1.0 / v;
                let loc = c.local_derivs(&z);
                for p in 0..loc.len {
                    let ip = loc.idx[p];
                    grad[ip] += loc.grad[p] * inv_s;
                    for q in 0..loc.len {
                        let iq = loc.idx[q];
                        hess[(ip, iq)] += loc.grad[p] * loc.grad[q] * inv_s * inv_s
                            + loc.hess[p][q] * inv_s;
                    }
                }
            }

            let step = match solve_newton_system(&hess, &grad) {
                Some(step) => step,
                None => break,
            };
            let decrement = -grad.dot(&step);
            if decrement * 0.5 <= settings.newton_tol {
                break;
            }

            let phi_cur = potential(t, f, constraints, &z)
                .expect("current iterate must stay strictly feasible");
            let mut scale = 1.0;
            let mut moved = false;
            while scale >= 1e-14 {
                let trial: Vec<f64> =
                    z.iter().zip(step.iter()).map(|(zi, si)| zi + scale * si).collect();
                let f_trial = objective.value(&trial);
                if let Some(phi_trial) = potential(t, f_trial, constraints, &trial) {
                    if phi_trial <= phi_cur - 0.25 * scale * decrement {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !moved {
                break;
            }
        }

        let f = objective.value(&z);
        if m / t <= settings.gap_tol * (1.0 + f.abs()) || t > 1e18 {
            return Ok((z, f));
        }
        t *= settings.mu;
    }
}
