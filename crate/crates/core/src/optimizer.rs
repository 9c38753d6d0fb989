//! Constrained maximization of the stereo baseline over the six design
//! parameters: an augmented-Lagrangian outer loop around a box-projected
//! quasi-Newton inner solver with central-difference gradients, multistart,
//! and a feasibility polish so the returned point satisfies every inequality
//! to tight tolerance.

use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::size_mass_with_intervals;
use crate::projection::RigGeometry;
use crate::rig::{DesignVector, RigSpec};

pub const CONSTRAINT_NAMES: [&str; 9] = [
    "g1_virtual_camera_below_f2",
    "g2_reflex_below_f1",
    "g3_curvature_ratio",
    "g4_payload",
    "g5_height",
    "g6_vertex_clearance",
    "g7_theta1_max",
    "g8_theta1_min",
    "g9_theta2_min",
];

/// Per-axis scale bringing all violation units (mm, deg, g, ratio) to O(1)
/// inside the solver. Reported violations stay in native units.
const CONSTRAINT_SCALES: [f64; 9] = [
    1.0 / 50.0,
    1.0 / 50.0,
    2.0,
    1.0 / 100.0,
    1.0 / 10.0,
    1.0 / 5.0,
    1.0 / 5.0,
    1.0 / 5.0,
    1.0 / 5.0,
];

/// Rectangular search region for the design vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundBox {
    pub lo: [f64; 6],
    pub hi: [f64; 6],
}

impl Default for BoundBox {
    fn default() -> Self {
        BoundBox {
            lo: [20.0, 20.0, 2.1, 2.1, 20.0, 10.0],
            hi: [400.0, 400.0, 40.0, 40.0, 400.0, 80.0],
        }
    }
}

impl BoundBox {
    pub fn contains(&self, theta: &DesignVector) -> bool {
        theta
            .to_array()
            .iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    fn center(&self) -> [f64; 6] {
        std::array::from_fn(|i| 0.5 * (self.lo[i] + self.hi[i]))
    }
}

/// Constraint constants and rig-level fixed parameters for one design study.
#[derive(Debug, Clone, Serialize)]
pub struct ConstraintSet {
    /// Template carrying the camera hole radius, materials and intrinsics;
    /// its design vector is replaced during the search.
    pub template: RigSpec,
    pub payload_g: f64,
    pub h_sys_max_mm: f64,
    /// Upper bound on mirror 1's top elevation (deg).
    pub theta1_max_deg: f64,
    /// Lower bound on mirror 1's bottom elevation (deg).
    pub theta1_min_deg: f64,
    /// Lower bound on mirror 2's bottom elevation (deg).
    pub theta2_min_deg: f64,
    /// Minimum gap between mirror 2's vertex and the camera pinhole (mm).
    pub vertex_clearance_mm: f64,
    /// Lower bound on k2/k1.
    pub curvature_ratio_min: f64,
    pub bounds: BoundBox,
}

impl ConstraintSet {
    /// The constants used for the 37 mm design study.
    pub fn big_rig_study() -> Self {
        ConstraintSet {
            template: RigSpec::big_rig(),
            payload_g: 650.0,
            h_sys_max_mm: 150.0,
            theta1_max_deg: 14.0,
            theta1_min_deg: -25.0,
            theta2_min_deg: -14.0,
            vertex_clearance_mm: 5.0,
            curvature_ratio_min: 5.0 / 3.0,
            bounds: BoundBox::default(),
        }
    }

    pub fn with_limits(template: RigSpec, h_sys_max_mm: f64, payload_g: f64) -> Self {
        ConstraintSet {
            template,
            payload_g,
            h_sys_max_mm,
            ..ConstraintSet::big_rig_study()
        }
    }
}

/// Signed constraint values: an entry is the violation magnitude when
/// positive and the slack (negated) when satisfied.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstraintReport {
    pub values: [f64; 9],
    /// Residual of the shared-radius equality, enforced structurally by the
    /// parameterization and asserted here.
    pub h1_residual: f64,
    pub geometry_valid: bool,
}

impl ConstraintReport {
    pub fn max_violation(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.geometry_valid && self.values.iter().all(|&g| g <= tol)
    }
}

/// Objective: the stereo baseline `c1 + c2 - d`.
pub fn baseline(theta: &DesignVector) -> f64 {
    theta.baseline()
}

/// Evaluates all nine inequalities in native units (mm, deg, g, ratio).
/// Geometry-derivation failures surface as infinite violations on the
/// affected entries so a search can keep going.
pub fn evaluate_constraints(cs: &ConstraintSet, theta: &DesignVector) -> ConstraintReport {
    evaluate_constraints_with_intervals(cs, theta, crate::analysis::VOLUME_QUADRATURE_INTERVALS)
}

fn evaluate_constraints_with_intervals(
    cs: &ConstraintSet,
    theta: &DesignVector,
    mass_intervals: usize,
) -> ConstraintReport {
    let mut g = [f64::INFINITY; 9];
    g[0] = theta.d - theta.c2;
    g[1] = theta.d / 2.0 - theta.c1;
    g[2] = cs.curvature_ratio_min - theta.k2 / theta.k1;

    let mut spec = cs.template.with_design(*theta);
    spec.design = *theta;
    if spec.validate().is_err() {
        return ConstraintReport { values: g, h1_residual: f64::INFINITY, geometry_valid: false };
    }
    let Ok(geom) = RigGeometry::new(&spec) else {
        return ConstraintReport { values: g, h1_residual: f64::INFINITY, geometry_valid: false };
    };

    let mass = size_mass_with_intervals(&geom, mass_intervals);
    g[3] = mass.m_sys - cs.payload_g;
    g[4] = mass.h_sys - cs.h_sys_max_mm;

    let s2 = geom.surface(crate::rig::Mirror::Two);
    g[5] = cs.vertex_clearance_mm - (s2.z0 - s2.a);

    let s1 = geom.surface(crate::rig::Mirror::One);
    g[6] = s1.theta_max.to_degrees() - cs.theta1_max_deg;
    g[7] = cs.theta1_min_deg - s1.theta_min.to_degrees();
    g[8] = cs.theta2_min_deg - s2.theta_min.to_degrees();

    // Both truncations share r_sys by construction; the residual is the
    // round trip through the profile functions.
    let h1 = {
        let z1 = s1.height_unbounded(theta.r_sys);
        let z2 = s2.height_unbounded(theta.r_sys);
        let r1 = s1.radius_at_height(z1).unwrap_or(f64::NAN);
        let r2 = s2.radius_at_height(z2).unwrap_or(f64::NAN);
        (r1 - r2).abs()
    };
    ConstraintReport { values: g, h1_residual: h1, geometry_valid: true }
}

/// Penalty distance to the region where the surfaces derive at all; zero
/// once the reflex plane cuts mirror 1 inside the system radius.
fn geometry_surrogate(theta: &DesignVector) -> f64 {
    let vertex1 = theta.c1 / 2.0 * (1.0 + ((theta.k1 - 2.0) / theta.k1).sqrt());
    let gap = vertex1 + 0.5 - theta.d / 2.0;
    if gap > 0.0 {
        return gap + 10.0;
    }
    // Reflex rim must stay inside the rig radius.
    let a = theta.c1 / 2.0 * ((theta.k1 - 2.0) / theta.k1).sqrt();
    let b = theta.c1 / 2.0 * (2.0 / theta.k1).sqrt();
    let t = (theta.d / 2.0 - theta.c1 / 2.0) / a;
    let r_ref = b * (t * t - 1.0).max(0.0).sqrt();
    (r_ref - (theta.r_sys - 0.5)).max(0.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub outer: usize,
    pub baseline_mm: f64,
    pub max_violation: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

/// Result of one optimization run (one start).
#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutcome {
    pub status: SolveStatus,
    pub theta: DesignVector,
    pub baseline_mm: f64,
    pub violations: [f64; 9],
    pub max_violation: f64,
    pub h1_residual: f64,
    /// Augmented-Lagrangian multiplier estimates, native units.
    pub multipliers: [f64; 9],
    /// Incumbent trace: max violation never rises after restoration.
    pub iterations: Vec<IterationRecord>,
    pub start: DesignVector,
    pub n_evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOptions {
    pub seeds: usize,
    pub seed: u64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Simpson intervals for the mass constraint inside the search; the
    /// final report re-evaluates with the full default.
    pub mass_intervals: usize,
    /// Feasibility tolerance on native violations.
    pub tolerance: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            seeds: 16,
            seed: 0,
            max_outer: 24,
            max_inner: 160,
            mass_intervals: 256,
            tolerance: 1e-6,
        }
    }
}

/// Full multistart report.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub best: OptimizeOutcome,
    pub runs: Vec<OptimizeOutcome>,
    pub seed: u64,
    /// Indices (0-based into [`CONSTRAINT_NAMES`]) of constraints active at
    /// the winner, |value| within 0.5 native units.
    pub active_constraints: Vec<usize>,
}

struct Evaluator<'a> {
    cs: &'a ConstraintSet,
    mass_intervals: usize,
    tolerance: f64,
    n_evals: std::cell::Cell<usize>,
    best_feasible: std::cell::RefCell<Option<(DesignVector, f64)>>,
}

impl<'a> Evaluator<'a> {
    fn new(cs: &'a ConstraintSet, mass_intervals: usize, tolerance: f64) -> Self {
        Evaluator {
            cs,
            mass_intervals,
            tolerance,
            n_evals: std::cell::Cell::new(0),
            best_feasible: std::cell::RefCell::new(None),
        }
    }

    fn theta_of(&self, y: &[f64; 6]) -> DesignVector {
        let b = &self.cs.bounds;
        DesignVector::from_array(std::array::from_fn(|i| {
            b.lo[i] + y[i].clamp(0.0, 1.0) * (b.hi[i] - b.lo[i])
        }))
    }

    fn y_of(&self, theta: &DesignVector) -> [f64; 6] {
        let b = &self.cs.bounds;
        let t = theta.to_array();
        std::array::from_fn(|i| ((t[i] - b.lo[i]) / (b.hi[i] - b.lo[i])).clamp(0.0, 1.0))
    }

    /// Scaled constraint values, or `None` outside the derivable region.
    fn scaled_constraints(&self, theta: &DesignVector) -> Option<[f64; 9]> {
        self.n_evals.set(self.n_evals.get() + 1);
        let report = evaluate_constraints_with_intervals(self.cs, theta, self.mass_intervals);
        if !report.geometry_valid {
            return None;
        }
        if report.feasible(self.tolerance) {
            let b = theta.baseline();
            let mut best = self.best_feasible.borrow_mut();
            let better = match best.as_ref() {
                None => true,
                Some((_, best_b)) => b > *best_b,
            };
            if better {
                *best = Some((*theta, b));
            }
        }
        Some(std::array::from_fn(|j| report.values[j] * CONSTRAINT_SCALES[j]))
    }

    /// Augmented-Lagrangian value; invalid geometry maps to a huge penalty
    /// shaped by the surrogate so descent leads back to the valid region.
    fn augmented(&self, y: &[f64; 6], mu: &[f64; 9], rho: f64) -> f64 {
        let theta = self.theta_of(y);
        match self.scaled_constraints(&theta) {
            None => 1e12 * (1.0 + geometry_surrogate(&theta)),
            Some(g) => {
                let mut val = -theta.baseline() / 100.0;
                for j in 0..9 {
                    let shifted = (g[j] + mu[j] / rho).max(0.0);
                    val += 0.5 * rho * shifted * shifted - 0.5 * mu[j] * mu[j] / rho;
                }
                val
            }
        }
    }

    /// Squared-hinge infeasibility with a floor on the achieved baseline;
    /// used by restoration and the final polish.
    fn feasibility_merit(&self, y: &[f64; 6], baseline_floor: Option<f64>) -> f64 {
        let theta = self.theta_of(y);
        match self.scaled_constraints(&theta) {
            None => 1e12 * (1.0 + geometry_surrogate(&theta)),
            Some(g) => {
                let margin = 1e-9;
                let mut val = 0.0;
                for gj in g {
                    let v = (gj + margin).max(0.0);
                    val += v * v;
                }
                if let Some(floor) = baseline_floor {
                    let v = ((floor - theta.baseline()) / 10.0).max(0.0);
                    val += v * v;
                }
                val
            }
        }
    }
}

fn fd_gradient(f: &mut impl FnMut(&[f64; 6]) -> f64, y: &[f64; 6]) -> [f64; 6] {
    let mut grad = [0.0; 6];
    for i in 0..6 {
        let h = 1e-6 * (1.0 + y[i].abs());
        let mut ya = *y;
        let mut yb = *y;
        ya[i] = (y[i] - h).max(0.0);
        yb[i] = (y[i] + h).min(1.0);
        let span = yb[i] - ya[i];
        grad[i] = if span > 0.0 { (f(&yb) - f(&ya)) / span } else { 0.0 };
    }
    grad
}

/// Box-projected BFGS with Armijo backtracking.
fn minimize_box(
    f: &mut impl FnMut(&[f64; 6]) -> f64,
    y0: [f64; 6],
    max_iter: usize,
    grad_tol: f64,
) -> ([f64; 6], f64) {
    let mut y = y0.map(|v| v.clamp(0.0, 1.0));
    let mut fy = f(&y);
    let mut h_inv = Matrix6::<f64>::identity();
    let mut grad = fd_gradient(f, &y);

    for _ in 0..max_iter {
        // Projected gradient for the stopping test.
        let pg: f64 = (0..6)
            .map(|i| {
                let step = (y[i] - grad[i]).clamp(0.0, 1.0) - y[i];
                step.abs()
            })
            .fold(0.0, f64::max);
        if pg < grad_tol {
            break;
        }
        let g_vec = Vector6::from_row_slice(&grad);
        let dir = -(h_inv * g_vec);
        // Fall back to steepest descent when the model direction is uphill.
        let mut dir = if dir.dot(&g_vec) > -1e-14 { -g_vec } else { dir };
        // Cap the step so the line search can actually resolve it inside the
        // unit box (penalty cliffs produce astronomically large gradients).
        let dir_max = dir.amax();
        if dir_max > 0.5 {
            dir *= 0.5 / dir_max;
        }

        let mut alpha = 1.0;
        let mut improved = false;
        let mut y_new = y;
        let mut f_new = fy;
        for _ in 0..40 {
            let cand: [f64; 6] = std::array::from_fn(|i| (y[i] + alpha * dir[i]).clamp(0.0, 1.0));
            if cand == y {
                break;
            }
            let fc = f(&cand);
            if fc < fy - 1e-12 * alpha {
                y_new = cand;
                f_new = fc;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
        let grad_new = fd_gradient(f, &y_new);
        let s = Vector6::from_row_slice(&std::array::from_fn::<f64, 6, _>(|i| y_new[i] - y[i]));
        let dg = Vector6::from_row_slice(&std::array::from_fn::<f64, 6, _>(|i| {
            grad_new[i] - grad[i]
        }));
        let sy = s.dot(&dg);
        if sy > 1e-12 {
            // Standard inverse-Hessian BFGS update.
            let rho = 1.0 / sy;
            let i6 = Matrix6::<f64>::identity();
            let left = i6 - rho * s * dg.transpose();
            h_inv = left * h_inv * left.transpose() + rho * s * s.transpose();
        } else {
            h_inv = Matrix6::identity();
        }
        y = y_new;
        fy = f_new;
        grad = grad_new;
    }
    (y, fy)
}

fn solve_from(cs: &ConstraintSet, start: &DesignVector, opts: &OptimizeOptions) -> OptimizeOutcome {
    let eval = Evaluator::new(cs, opts.mass_intervals, opts.tolerance);
    let mut y = eval.y_of(start);

    // Restoration: walk into the derivable region first if needed.
    if eval.scaled_constraints(&eval.theta_of(&y)).is_none() {
        let mut f = |y: &[f64; 6]| eval.feasibility_merit(y, None);
        (y, _) = minimize_box(&mut f, y, opts.max_inner, 1e-10);
    }

    let mut mu = [0.0; 9];
    let mut rho = 10.0;
    let mut iterations = Vec::new();
    let mut incumbent: Option<(DesignVector, f64, f64)> = None; // theta, b, maxviol
    let mut prev_viol = f64::INFINITY;

    for outer in 0..opts.max_outer {
        let mut f = |yy: &[f64; 6]| eval.augmented(yy, &mu, rho);
        let (y_new, _) = minimize_box(&mut f, y, opts.max_inner, 1e-9);
        y = y_new;
        let theta = eval.theta_of(&y);
        let report = evaluate_constraints_with_intervals(cs, &theta, opts.mass_intervals);
        let viol = if report.geometry_valid { report.max_violation() } else { f64::INFINITY };

        let candidate_feasible = viol <= opts.tolerance;
        let replace = match &incumbent {
            None => true,
            Some((_, inc_b, inc_viol)) => {
                if *inc_viol <= opts.tolerance {
                    candidate_feasible && theta.baseline() > *inc_b
                } else {
                    candidate_feasible || viol < *inc_viol
                }
            }
        };
        if replace {
            incumbent = Some((theta, theta.baseline(), viol.max(0.0)));
        }
        let (inc_theta, inc_b, inc_viol) = incumbent.as_ref().unwrap();
        iterations.push(IterationRecord {
            outer,
            baseline_mm: *inc_b,
            max_violation: *inc_viol,
            penalty: rho,
        });
        let _ = inc_theta;

        if report.geometry_valid {
            let scaled: [f64; 9] =
                std::array::from_fn(|j| report.values[j] * CONSTRAINT_SCALES[j]);
            for j in 0..9 {
                mu[j] = (mu[j] + rho * scaled[j]).max(0.0);
            }
            let scaled_viol = scaled.iter().cloned().fold(0.0, f64::max);
            if scaled_viol > 0.25 * prev_viol {
                rho = (rho * 10.0).min(1e9);
            }
            prev_viol = scaled_viol;
            if scaled_viol <= 1e-10 && outer >= 3 {
                break;
            }
        } else {
            rho = (rho * 10.0).min(1e9);
        }
    }

    // Polish: push strictly inside the feasible set without giving up more
    // than a hair of baseline.
    let al_theta = eval.theta_of(&y);
    let al_report = evaluate_constraints_with_intervals(cs, &al_theta, opts.mass_intervals);
    if al_report.geometry_valid {
        let floor = al_theta.baseline() - 0.05;
        let mut f = |yy: &[f64; 6]| eval.feasibility_merit(yy, Some(floor));
        let (y_pol, merit) = minimize_box(&mut f, y, opts.max_inner, 1e-12);
        if merit < 1e-20 {
            let theta = eval.theta_of(&y_pol);
            // Evaluation through scaled_constraints records it if feasible.
            let _ = eval.scaled_constraints(&theta);
        }
    }

    // Report the best strictly feasible point seen anywhere in this run,
    // re-checked at full quadrature.
    let best = *eval.best_feasible.borrow();
    let n_evaluations = eval.n_evals.get();
    let multipliers: [f64; 9] = std::array::from_fn(|j| mu[j] * CONSTRAINT_SCALES[j]);
    match best {
        Some((theta, b)) => {
            let report = evaluate_constraints(cs, &theta);
            let status = if report.feasible(opts.tolerance) {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIterations
            };
            OptimizeOutcome {
                status,
                theta,
                baseline_mm: b,
                violations: report.values,
                max_violation: report.max_violation(),
                h1_residual: report.h1_residual,
                multipliers,
                iterations,
                start: *start,
                n_evaluations,
            }
        }
        None => {
            let theta = eval.theta_of(&y);
            let report = evaluate_constraints(cs, &theta);
            OptimizeOutcome {
                status: SolveStatus::Infeasible,
                theta,
                baseline_mm: theta.baseline(),
                violations: report.values,
                max_violation: if report.geometry_valid {
                    report.max_violation()
                } else {
                    f64::INFINITY
                },
                h1_residual: report.h1_residual,
                multipliers,
                iterations,
                start: *start,
                n_evaluations,
            }
        }
    }
}

/// Single-start optimization from `start` (must lie in the bound box).
pub fn optimize(
    cs: &ConstraintSet,
    start: &DesignVector,
    opts: &OptimizeOptions,
) -> OptimizeOutcome {
    solve_from(cs, start, opts)
}

/// Deterministic multistart: the box center plus seeded uniform draws. Runs
/// execute in parallel; the merge is by fixed index order, so reports are
/// bitwise reproducible for a given seed and option set.
pub fn optimize_multistart(cs: &ConstraintSet, opts: &OptimizeOptions) -> OptimizeReport {
    let mut starts = Vec::with_capacity(opts.seeds.max(1));
    starts.push(DesignVector::from_array(cs.bounds.center()));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.seeds.max(1) {
        let draw: [f64; 6] = std::array::from_fn(|i| {
            cs.bounds.lo[i] + rng.random::<f64>() * (cs.bounds.hi[i] - cs.bounds.lo[i])
        });
        starts.push(DesignVector::from_array(draw));
    }

    let runs: Vec<OptimizeOutcome> = starts
        .par_iter()
        .map(|start| solve_from(cs, start, opts))
        .collect();

    let mut best_idx = 0;
    for i in 1..runs.len() {
        if outcome_better(cs, &runs[i], &runs[best_idx], opts.tolerance) {
            best_idx = i;
        }
    }
    let best = runs[best_idx].clone();
    let active_constraints = (0..9)
        .filter(|&j| best.violations[j].abs() <= 0.5 && best.status != SolveStatus::Infeasible)
        .collect();
    OptimizeReport { best, runs, seed: opts.seed, active_constraints }
}

/// Feasible beats infeasible; larger baseline wins; ties break to smaller
/// system height, then lexicographically smaller parameters.
fn outcome_better(cs: &ConstraintSet, a: &OptimizeOutcome, b: &OptimizeOutcome, tol: f64) -> bool {
    let fa = a.status != SolveStatus::Infeasible && a.max_violation <= tol;
    let fb = b.status != SolveStatus::Infeasible && b.max_violation <= tol;
    if fa != fb {
        return fa;
    }
    if !fa {
        return a.max_violation < b.max_violation;
    }
    if (a.baseline_mm - b.baseline_mm).abs() > 1e-9 {
        return a.baseline_mm > b.baseline_mm;
    }
    let height = |o: &OptimizeOutcome| {
        RigGeometry::new(&cs.template.with_design(o.theta))
            .map(|g| size_mass_with_intervals(&g, 64).h_sys)
            .unwrap_or(f64::INFINITY)
    };
    let (ha, hb) = (height(a), height(b));
    if (ha - hb).abs() > 1e-9 {
        return ha < hb;
    }
    a.theta.to_array() < b.theta.to_array()
}
