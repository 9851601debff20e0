//! Limited-memory BFGS with adaptive neighbor maintenance.
//!
//! The optimizer keeps a neighbor index built from the sphere centers of the
//! variable vector and hands it to the objective on every evaluation. After
//! each accepted step a deferring counter is bumped; once it reaches the
//! current deferring length the index is rebuilt and compared with the one in
//! use. A changed structure resets the length, an unchanged one multiplies it,
//! so stable phases of the descent pay for exponentially fewer rebuilds.

use std::collections::VecDeque;

use crate::error::{PessError, Result};
use crate::neighbor::{NeighborIndex, DEFAULT_CUTOFF};
use crate::objective::Objective;

const WOLFE_C1: f64 = 1e-4;
const WOLFE_C2: f64 = 0.9;
const MAX_BRACKET_STEPS: usize = 40;
const MAX_ZOOM_STEPS: usize = 40;
const CURVATURE_EPS: f64 = 1e-12;
const FALLBACK_MAX_STEP: f64 = 0.1;
const FALLBACK_HALVINGS: usize = 60;

/// How the neighbor index is maintained during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Maintenance {
    /// Deferred rebuilds with a growing deferring length.
    Adaptive,
    /// Rebuild after every iteration. Every rebuild is adopted and counted,
    /// which makes this the brute-force baseline.
    EveryIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub max_iter: usize,
    /// Stop once `‖g‖₂` is at or below this.
    pub grad_tol: f64,
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Neighbor cutoff distance.
    pub cutoff: f64,
    /// Deferring length after a structure change.
    pub len_reset: usize,
    /// Growth factor of the deferring length while the structure is stable.
    pub len_factor: f64,
    pub maintenance: Maintenance,
    /// Keep a per-check log in the report.
    pub record_maintenance: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            grad_tol: 1e-12,
            memory: 7,
            cutoff: DEFAULT_CUTOFF,
            len_reset: 1,
            len_factor: 2.0,
            maintenance: Maintenance::Adaptive,
            record_maintenance: false,
        }
    }
}

impl OptimizerSettings {
    /// The same settings with neighbor rebuilds on every iteration.
    pub fn rebuild_every_iteration(&self) -> Self {
        Self { maintenance: Maintenance::EveryIteration, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PessError::InvalidArgument(m.to_owned()));
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if self.memory == 0 {
            return bad("memory must be at least 1");
        }
        if !(self.cutoff > 0.0) {
            return bad("neighbor cutoff must be positive");
        }
        if self.len_reset == 0 {
            return bad("len_reset must be at least 1");
        }
        if !(self.len_factor > 1.0) {
            return bad("len_factor must exceed 1");
        }
        Ok(())
    }
}

/// Deferring counter and deferring length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnmState {
    cnt: usize,
    len: usize,
    len_reset: usize,
    len_factor: f64,
}

impl AnmState {
    pub fn new(len_reset: usize, len_factor: f64) -> Self {
        Self { cnt: 0, len: len_reset, len_reset, len_factor }
    }

    pub fn cnt(&self) -> usize {
        self.cnt
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    /// Counts one iteration; true when a maintenance check is due.
    pub fn tick(&mut self) -> bool {
        self.cnt += 1;
        self.cnt >= self.len
    }

    /// Applies the result of a maintenance check.
    pub fn on_check(&mut self, structure_changed: bool) {
        self.cnt = 0;
        self.len =
            if structure_changed { self.len_reset } else { ((self.len as f64) * self.len_factor).ceil() as usize };
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaintenanceEvent {
    /// 1-based iteration after which the check ran.
    pub iteration: usize,
    /// Deferring length in force when the check fired.
    pub len: usize,
    pub changed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizeReport {
    pub iterations: usize,
    /// Rebuilds that replaced the neighbor structure.
    pub rebuilds: usize,
    pub maintenance_checks: usize,
    pub evaluations: usize,
    pub final_value: f64,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub line_search_failures: usize,
    /// Largest center displacement from an index that has gone at least two
    /// steps without a check. A single step is stale under any policy.
    pub max_stale_drift: f64,
    /// Iterations where that displacement exceeded `(cutoff - 2) / 2`, the
    /// point past which an overlapping pair may be missing from the lists.
    pub drift_exceedances: usize,
    pub maintenance_log: Vec<MaintenanceEvent>,
}

impl OptimizeReport {
    /// `1 - rebuilds / iterations`; 1 when no iteration ran.
    pub fn deferring_ratio(&self) -> f64 {
        if self.iterations == 0 {
            1.0
        } else {
            1.0 - self.rebuilds as f64 / self.iterations as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub report: OptimizeReport,
}

/// Correction pairs `(s, y, 1/sᵀy)`, newest last.
#[derive(Debug, Clone)]
pub struct LbfgsHistory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl LbfgsHistory {
    pub fn new(capacity: usize) -> Self {
        Self { pairs: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores a pair unless it violates `sᵀy > ε‖s‖‖y‖`. Returns whether it
    /// was kept.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > CURVATURE_EPS * norm(&s) * norm(&y)) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }
}

/// Returns `-H g` for the implicit inverse-Hessian approximation held in
/// `history`, with initial scaling `sᵀy / yᵀy` from the newest pair.
pub fn two_loop_recursion(history: &LbfgsHistory, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.pairs.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(-a, y, &mut q);
        alphas.push(a);
    }
    let gamma = match history.pairs.back() {
        Some((s, y, _)) => dot(s, y) / dot(y, y),
        None => 1.0,
    };
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y, rho), a) in history.pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// A trial point of the line search.
#[derive(Debug, Clone)]
pub struct Trial {
    pub alpha: f64,
    pub value: f64,
    pub slope: f64,
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub trial: Trial,
    /// Both strong Wolfe conditions hold at `trial`.
    pub wolfe: bool,
    pub evaluations: usize,
}

struct Probe<'a, F: Objective + ?Sized> {
    f: &'a F,
    idx: &'a NeighborIndex,
    x: &'a [f64],
    d: &'a [f64],
    evaluations: usize,
}

impl<F: Objective + ?Sized> Probe<'_, F> {
    fn at(&mut self, alpha: f64) -> Result<Trial> {
        let x: Vec<f64> = self.x.iter().zip(self.d).map(|(xi, di)| xi + alpha * di).collect();
        let mut grad = vec![0.0; x.len()];
        let value = self.f.evaluate(&x, self.idx, &mut grad);
        self.evaluations += 1;
        let slope = dot(&grad, self.d);
        if !value.is_finite() || !slope.is_finite() {
            return Err(PessError::NonFinite { iteration: 0, value, grad_norm: norm(&grad) });
        }
        Ok(Trial { alpha, value, slope, x, grad })
    }
}

/// Strong Wolfe line search (`c₁ = 1e-4`, `c₂ = 0.9`) with bracketing and a
/// cubic-interpolation zoom.
///
/// `d` must be a descent direction at `x`. When no step satisfying both
/// conditions is found within the iteration bounds, the lowest point seen is
/// returned with `wolfe == false` (its `alpha` is 0 when nothing improved).
pub fn line_search<F: Objective + ?Sized>(
    f: &F,
    idx: &NeighborIndex,
    x: &[f64],
    value: f64,
    g: &[f64],
    d: &[f64],
    alpha0: f64,
) -> Result<LineSearchOutcome> {
    let slope0 = dot(g, d);
    debug_assert!(slope0 < 0.0, "line search needs a descent direction");
    let mut probe = Probe { f, idx, x, d, evaluations: 0 };
    let origin = Trial { alpha: 0.0, value, slope: slope0, x: x.to_vec(), grad: g.to_vec() };
    let armijo = |t: &Trial| t.value <= value + WOLFE_C1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -WOLFE_C2 * slope0;
    let alpha_max = 1e10 / norm_inf(d).max(1e-300);

    let mut prev = origin;
    let mut alpha = alpha0.min(alpha_max);
    for i in 0..MAX_BRACKET_STEPS {
        let t = probe.at(alpha)?;
        if !armijo(&t) || (i > 0 && t.value >= prev.value) {
            return zoom(&mut probe, prev, t, value, slope0);
        }
        if curvature(&t) {
            let evaluations = probe.evaluations;
            return Ok(LineSearchOutcome { trial: t, wolfe: true, evaluations });
        }
        if t.slope >= 0.0 {
            return zoom(&mut probe, t, prev, value, slope0);
        }
        if alpha >= alpha_max {
            let evaluations = probe.evaluations;
            return Ok(LineSearchOutcome { trial: t, wolfe: false, evaluations });
        }
        prev = t;
        alpha = (alpha * 4.0).min(alpha_max);
    }
    let evaluations = probe.evaluations;
    Ok(LineSearchOutcome { trial: prev, wolfe: false, evaluations })
}

fn zoom<F: Objective + ?Sized>(
    probe: &mut Probe<'_, F>,
    mut lo: Trial,
    mut hi: Trial,
    value0: f64,
    slope0: f64,
) -> Result<LineSearchOutcome> {
    for _ in 0..MAX_ZOOM_STEPS {
        let width = (hi.alpha - lo.alpha).abs();
        if width <= f64::EPSILON * lo.alpha.max(hi.alpha) {
            break;
        }
        let alpha = interpolate(&lo, &hi);
        let t = probe.at(alpha)?;
        if t.value > value0 + WOLFE_C1 * alpha * slope0 || t.value >= lo.value {
            hi = t;
        } else {
            if t.slope.abs() <= -WOLFE_C2 * slope0 {
                let evaluations = probe.evaluations;
                return Ok(LineSearchOutcome { trial: t, wolfe: true, evaluations });
            }
            if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    let evaluations = probe.evaluations;
    Ok(LineSearchOutcome { trial: lo, wolfe: false, evaluations })
}

/// Minimizer of the cubic through both endpoints, kept inside the middle 80%
/// of the interval; falls back to bisection.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let c = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    let (left, right) = (a.min(b), a.max(b));
    let margin = 0.1 * (right - left);
    if c.is_finite() && c >= left + margin && c <= right - margin {
        c
    } else {
        mid
    }
}

/// Minimizes `f` from `x0`.
///
/// Per iteration: two-loop direction, line search, update, deferring-counter
/// bump and (when due) a neighbor check, then the gradient-norm test. A failed
/// line search falls back to a short steepest-descent step with the memory
/// cleared; if that cannot decrease the objective either, the run stops
/// without declaring convergence.
pub fn minimize<F: Objective + ?Sized>(f: &F, x0: &[f64], settings: &OptimizerSettings) -> Result<Minimum> {
    settings.validate()?;
    let dim = f.dim();
    if x0.len() != dim {
        return Err(PessError::InvalidArgument(format!(
            "start vector has {} components, objective expects {dim}",
            x0.len()
        )));
    }
    let n3 = 3 * f.sphere_count();
    let stale_bound = (settings.cutoff - 2.0) / 2.0;

    let mut x = x0.to_vec();
    f.constrain(&mut x);
    let mut idx = NeighborIndex::build(&x[..n3], settings.cutoff);
    let mut g = vec![0.0; dim];
    let mut fx = f.evaluate(&x, &idx, &mut g);
    let mut report = OptimizeReport { evaluations: 1, ..Default::default() };
    check_finite(fx, &g, 0)?;

    let mut history = LbfgsHistory::new(settings.memory);
    let (len_reset, len_factor) = match settings.maintenance {
        Maintenance::Adaptive => (settings.len_reset, settings.len_factor),
        Maintenance::EveryIteration => (1, 1.0),
    };
    let mut anm = AnmState::new(len_reset, len_factor);
    let mut steps_since_build = 0usize;

    let mut gnorm = norm(&g);
    if gnorm <= settings.grad_tol {
        report.converged = true;
    }

    while !report.converged && report.iterations < settings.max_iter {
        let iteration = report.iterations + 1;
        let mut d = two_loop_recursion(&history, &g);
        if !(dot(&g, &d) < 0.0) {
            history.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if history.is_empty() { (1.0 / norm(&d)).min(1.0) } else { 1.0 };
        let outcome = line_search(f, &idx, &x, fx, &g, &d, alpha0).map_err(|e| at_iteration(e, iteration))?;
        report.evaluations += outcome.evaluations;

        let accepted = if outcome.wolfe {
            Some(outcome.trial)
        } else {
            report.line_search_failures += 1;
            history.clear();
            if outcome.trial.alpha > 0.0 && outcome.trial.value < fx {
                Some(outcome.trial)
            } else {
                let (trial, evals) = steepest_fallback(f, &idx, &x, fx, &g).map_err(|e| at_iteration(e, iteration))?;
                report.evaluations += evals;
                trial
            }
        };
        let Some(step) = accepted else {
            break;
        };

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        if outcome.wolfe {
            history.push(s, y);
        }
        x = step.x;
        fx = step.value;
        g = step.grad;
        if f.constrain(&mut x) {
            history.clear();
            fx = f.evaluate(&x, &idx, &mut g);
            report.evaluations += 1;
        }
        report.iterations = iteration;

        steps_since_build += 1;
        if steps_since_build >= 2 {
            let drift = idx.max_drift(&x[..n3]);
            report.max_stale_drift = report.max_stale_drift.max(drift);
            if drift > stale_bound {
                report.drift_exceedances += 1;
                log::debug!("iteration {iteration}: centers drifted {drift:.3} since the last neighbor build");
            }
        }

        if anm.tick() {
            report.maintenance_checks += 1;
            let fresh = NeighborIndex::build(&x[..n3], settings.cutoff);
            let differs = !idx.same_structure(&fresh)?;
            let adopted = differs || settings.maintenance == Maintenance::EveryIteration;
            if settings.record_maintenance {
                report.maintenance_log.push(MaintenanceEvent { iteration, len: anm.len(), changed: adopted });
            }
            anm.on_check(adopted);
            if adopted {
                report.rebuilds += 1;
            }
            // An unchanged structure is swapped in as well so drift is measured
            // from the latest snapshot.
            idx = fresh;
            steps_since_build = 0;
            if differs {
                fx = f.evaluate(&x, &idx, &mut g);
                report.evaluations += 1;
            }
        }

        check_finite(fx, &g, iteration)?;
        gnorm = norm(&g);
        if gnorm <= settings.grad_tol {
            report.converged = true;
        }
    }

    report.final_value = fx;
    report.final_grad_norm = gnorm;
    Ok(Minimum { x, value: fx, report })
}

/// Backtracking along `-g` with the largest coordinate move capped.
fn steepest_fallback<F: Objective + ?Sized>(
    f: &F,
    idx: &NeighborIndex,
    x: &[f64],
    fx: f64,
    g: &[f64],
) -> Result<(Option<Trial>, usize)> {
    let d: Vec<f64> = g.iter().map(|v| -v).collect();
    let scale = norm_inf(&d);
    if scale == 0.0 {
        return Ok((None, 0));
    }
    let slope = dot(g, &d);
    let mut probe = Probe { f, idx, x, d: &d, evaluations: 0 };
    let mut alpha = (FALLBACK_MAX_STEP / scale).min(1.0);
    for _ in 0..FALLBACK_HALVINGS {
        let t = probe.at(alpha)?;
        if t.value < fx && t.value <= fx + WOLFE_C1 * alpha * slope {
            return Ok((Some(t), probe.evaluations));
        }
        alpha *= 0.5;
    }
    Ok((None, probe.evaluations))
}

fn check_finite(value: f64, g: &[f64], iteration: usize) -> Result<()> {
    if value.is_finite() && g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PessError::NonFinite { iteration, value, grad_norm: norm(g) })
    }
}

fn at_iteration(e: PessError, iteration: usize) -> PessError {
    match e {
        PessError::NonFinite { value, grad_norm, .. } => PessError::NonFinite { iteration, value, grad_norm },
        other => other,
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{energy, Layout, Solution};
    use crate::objective::ElasticEnergy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `½ Σ w_k (x_k - t_k)²` with no spheres attached.
    struct Quadratic {
        weights: Vec<f64>,
        target: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.weights.len()
        }
        fn sphere_count(&self) -> usize {
            0
        }
        fn evaluate(&self, x: &[f64], _: &NeighborIndex, grad: &mut [f64]) -> f64 {
            let mut v = 0.0;
            for k in 0..x.len() {
                let r = x[k] - self.target[k];
                grad[k] = self.weights[k] * r;
                v += 0.5 * self.weights[k] * r * r;
            }
            v
        }
    }

    struct Poisoned;

    impl Objective for Poisoned {
        fn dim(&self) -> usize {
            1
        }
        fn sphere_count(&self) -> usize {
            0
        }
        fn evaluate(&self, x: &[f64], _: &NeighborIndex, grad: &mut [f64]) -> f64 {
            grad[0] = 2.0 * x[0];
            if x[0].abs() < 0.5 {
                f64::NAN
            } else {
                x[0] * x[0]
            }
        }
    }

    fn empty_index() -> NeighborIndex {
        NeighborIndex::build(&[], 4.0)
    }

    #[test]
    fn anm_state_transitions() {
        let mut s = AnmState::new(1, 2.0);
        assert_eq!((s.cnt(), s.len()), (0, 1));
        assert!(s.tick());
        s.on_check(false);
        assert_eq!((s.cnt(), s.len()), (0, 2));
        assert!(!s.tick());
        assert!(s.tick());
        s.on_check(false);
        assert_eq!(s.len(), 4);
        s.on_check(true);
        assert_eq!((s.cnt(), s.len()), (0, 1));

        let mut always = AnmState::new(1, 2.0);
        for _ in 0..20 {
            assert!(always.tick());
            always.on_check(true);
            assert_eq!(always.len(), 1);
        }

        let mut tuned = AnmState::new(10, 3.0);
        tuned.on_check(false);
        assert_eq!(tuned.len(), 30);
    }

    #[test]
    fn two_loop_empty_history_is_steepest_descent() {
        let h = LbfgsHistory::new(5);
        assert_eq!(two_loop_recursion(&h, &[1.0, 0.0, 0.0]), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn two_loop_with_identity_pair() {
        let mut h = LbfgsHistory::new(5);
        assert!(h.push(vec![1.0, 2.0, -1.0], vec![1.0, 2.0, -1.0]));
        let g = [0.3, -0.7, 2.0];
        let d = two_loop_recursion(&h, &g);
        for (a, b) in d.iter().zip(&g) {
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_loop_reproduces_inverse_hessian_of_quadratic() {
        // Secant pairs of a diagonal quadratic recover H⁻¹ on their span.
        let w = [1.0, 4.0];
        let mut h = LbfgsHistory::new(5);
        h.push(vec![1.0, 0.0], vec![w[0], 0.0]);
        h.push(vec![0.0, 1.0], vec![0.0, w[1]]);
        let d = two_loop_recursion(&h, &[2.0, 8.0]);
        assert!((d[0] + 2.0).abs() < 1e-12 && (d[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn history_rejects_bad_curvature() {
        let mut h = LbfgsHistory::new(2);
        assert!(!h.push(vec![1.0, 0.0], vec![-1.0, 0.0]));
        assert!(!h.push(vec![1.0, 0.0], vec![0.0, 1.0]));
        assert!(h.is_empty());
        h.push(vec![1.0], vec![1.0]);
        h.push(vec![2.0], vec![1.0]);
        h.push(vec![3.0], vec![1.0]);
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn line_search_on_parabola() {
        let f = Quadratic { weights: vec![2.0], target: vec![0.0] }; // f = x²
        let out = line_search(&f, &empty_index(), &[1.0], 1.0, &[2.0], &[-1.0], 1.0).unwrap();
        assert!(out.wolfe);
        assert_eq!(out.trial.alpha, 1.0);
        assert_eq!(out.trial.value, 0.0);
    }

    #[test]
    fn line_search_decreases_elastic_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10;
        let x: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f = ElasticEnergy::new(n, 3.0);
        let idx = NeighborIndex::build(&x, 4.0);
        let mut g = vec![0.0; 3 * n];
        let fx = f.evaluate(&x, &idx, &mut g);
        assert!(fx > 0.0);
        let d: Vec<f64> = g.iter().map(|v| -v).collect();
        let out = line_search(&f, &idx, &x, fx, &g, &d, 1.0 / norm(&d)).unwrap();
        assert!(out.trial.alpha > 0.0);
        assert!(out.trial.value < fx);
    }

    #[test]
    fn minimizes_isotropic_quadratic() {
        let f = Quadratic { weights: vec![1.0; 6], target: vec![0.0; 6] };
        let m = minimize(&f, &[3.0, -1.0, 0.5, 2.0, -7.0, 1.0], &OptimizerSettings::default()).unwrap();
        assert!(m.report.converged);
        assert!(norm(&m.x) <= 1e-10);
        assert!(m.report.iterations <= 5);
    }

    #[test]
    fn minimizes_ill_conditioned_quadratic() {
        let weights: Vec<f64> = (0..20).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
        let target: Vec<f64> = (0..20).map(|k| (k as f64).sin()).collect();
        let f = Quadratic { weights, target: target.clone() };
        let m = minimize(&f, &[0.0; 20], &OptimizerSettings::default()).unwrap();
        assert!(m.report.converged, "{:?}", m.report);
        for (a, b) in m.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn separates_nearly_coincident_pair() {
        let f = ElasticEnergy::new(2, 2.0);
        let x0 = [0.0, 0.0, 0.0, 1e-3, 0.0, 0.0];
        let m = minimize(&f, &x0, &OptimizerSettings::default()).unwrap();
        let s = Solution::new(Layout::from_flat(m.x.clone()).unwrap(), 2.0).unwrap();
        let e = energy(&s).total;
        assert!(e <= 1e-25, "energy {e}");
        let d: f64 = (0..3).map(|k| (m.x[k] - m.x[3 + k]).powi(2)).sum::<f64>().sqrt();
        assert!((d - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_start_returns_immediately() {
        let f = ElasticEnergy::new(2, 2.0);
        let m = minimize(&f, &[-1.0, 0.0, 0.0, 1.0, 0.0, 0.0], &OptimizerSettings::default()).unwrap();
        assert!(m.report.converged);
        assert_eq!(m.report.iterations, 0);
        assert_eq!(m.report.maintenance_checks, 0);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let err = minimize(&Poisoned, &[3.0], &OptimizerSettings::default()).unwrap_err();
        assert!(matches!(err, PessError::NonFinite { .. }));
    }

    #[test]
    fn settings_validation() {
        let ok = OptimizerSettings::default();
        assert!(ok.validate().is_ok());
        assert!(OptimizerSettings { grad_tol: 0.0, ..ok.clone() }.validate().is_err());
        assert!(OptimizerSettings { memory: 0, ..ok.clone() }.validate().is_err());
        assert!(OptimizerSettings { len_factor: 1.0, ..ok.clone() }.validate().is_err());
        assert!(OptimizerSettings { cutoff: -1.0, ..ok }.validate().is_err());
    }

    #[test]
    fn rebuild_every_iteration_never_defers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let x0: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let f = ElasticEnergy::new(n, 2.6);
        let settings = OptimizerSettings { record_maintenance: true, ..Default::default() }.rebuild_every_iteration();
        let m = minimize(&f, &x0, &settings).unwrap();
        assert!(m.report.iterations > 0);
        assert_eq!(m.report.maintenance_checks, m.report.iterations);
        assert_eq!(m.report.rebuilds, m.report.iterations);
        assert_eq!(m.report.deferring_ratio(), 0.0);
        assert!(m.report.maintenance_log.iter().all(|e| e.len == 1));
    }
}
