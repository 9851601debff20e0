//! Container adjustment by penalty continuation.
//!
//! The radius joins the variables, `z = [x_1, y_1, z_1, ..., R]`, and the
//! objective becomes `U_λ(z) = E(x, R) + λR²`. Early rounds with a larger `λ`
//! squeeze the container; as `λ` is halved round after round the overlap terms
//! dominate and the container settles at a locally minimal feasible radius.

use crate::error::{PessError, Result};
use crate::geometry::{self, check_feasible, EnergyReport, FeasibilityReport, Layout, Solution};
use crate::lbfgs::{minimize, OptimizerSettings};
use crate::neighbor::NeighborIndex;
use crate::objective::Objective;

/// Geometric slack allowed on the output of [`adjust_container`].
pub const ADJUST_GEOM_TOL: f64 = 1e-7;

/// Radius substituted when a step drives the container radius non-positive.
pub const MIN_RADIUS: f64 = 1e-6;

/// Centers followed by the container radius.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedVariable {
    z: Vec<f64>,
}

impl AugmentedVariable {
    pub fn from_solution(s: &Solution) -> Self {
        let mut z = Vec::with_capacity(3 * s.n() + 1);
        z.extend_from_slice(s.layout.as_slice());
        z.push(s.radius());
        Self { z }
    }

    pub fn from_vec(z: Vec<f64>) -> Result<Self> {
        if z.len() < 4 || z.len() % 3 != 1 {
            return Err(PessError::InvalidArgument(format!("augmented vector of length {} is not 3n + 1", z.len())));
        }
        Ok(Self { z })
    }

    pub fn n(&self) -> usize {
        (self.z.len() - 1) / 3
    }

    pub fn radius(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn centers(&self) -> &[f64] {
        &self.z[..self.z.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn into_solution(self) -> Result<Solution> {
        let radius = self.radius();
        let mut z = self.z;
        z.pop();
        Solution::new(Layout::from_flat(z)?, radius)
    }
}

/// Geometric schedule `λ_k = lambda0 · factor^k`, `k = 0 .. rounds - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySchedule {
    pub lambda0: f64,
    pub factor: f64,
    pub rounds: usize,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self { lambda0: 1e-4, factor: 0.5, rounds: 35 }
    }
}

impl PenaltySchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || !(self.factor > 0.0 && self.factor < 1.0) || self.rounds == 0 {
            return Err(PessError::InvalidArgument(format!("invalid penalty schedule {self:?}")));
        }
        Ok(())
    }

    /// The penalty coefficients used, one per round.
    pub fn lambdas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rounds);
        let mut lambda = self.lambda0;
        for _ in 0..self.rounds {
            out.push(lambda);
            lambda *= self.factor;
        }
        out
    }

    /// The coefficient after the last round's update.
    pub fn final_lambda(&self) -> f64 {
        self.lambdas().last().map_or(self.lambda0, |l| l * self.factor)
    }
}

/// `U_λ` as an optimizer objective over `3n + 1` variables.
#[derive(Debug, Clone, Copy)]
pub struct PenalizedEnergy {
    pub n: usize,
    pub lambda: f64,
}

impl Objective for PenalizedEnergy {
    fn dim(&self) -> usize {
        3 * self.n + 1
    }

    fn sphere_count(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64], neighbors: &NeighborIndex, grad: &mut [f64]) -> f64 {
        let n3 = 3 * self.n;
        let radius = x[n3];
        grad.fill(0.0);
        let mut report = EnergyReport::default();
        neighbors.pair_terms(&x[..n3], &mut report, Some(&mut grad[..n3]));
        let wall = geometry::container_terms(&x[..n3], radius, &mut report, Some(&mut grad[..n3]));
        grad[n3] = -2.0 * wall + 2.0 * self.lambda * radius;
        report.total + self.lambda * radius * radius
    }

    fn constrain(&self, x: &mut [f64]) -> bool {
        let r = &mut x[3 * self.n];
        if *r <= 0.0 {
            *r = MIN_RADIUS;
            true
        } else {
            false
        }
    }
}

/// `U_λ(z)` and its gradient by full pair enumeration.
pub fn penalized_energy(z: &AugmentedVariable, lambda: f64) -> (f64, Vec<f64>) {
    let n3 = 3 * z.n();
    let radius = z.radius();
    let mut grad = vec![0.0; n3 + 1];
    let mut report = EnergyReport::default();
    geometry::pair_terms_all(z.centers(), &mut report, Some(&mut grad[..n3]));
    let wall = geometry::container_terms(z.centers(), radius, &mut report, Some(&mut grad[..n3]));
    grad[n3] = -2.0 * wall + 2.0 * lambda * radius;
    (report.total + lambda * radius * radius, grad)
}

#[derive(Debug, Clone)]
pub struct AdjustOutcome {
    pub solution: Solution,
    /// Whether the result passes the geometric check at [`ADJUST_GEOM_TOL`].
    pub feasible: bool,
    pub feasibility: FeasibilityReport,
    pub lambdas: Vec<f64>,
    /// Container radius at the end of each round.
    pub round_radii: Vec<f64>,
    pub iterations: usize,
}

/// Minimizes `U_λ` for each `λ` of the schedule, warm-starting every round
/// from the previous one, and splits the result back into a solution.
///
/// An output that fails the geometric check is returned with
/// `feasible == false` rather than as an error.
pub fn adjust_container(s: &Solution, schedule: &PenaltySchedule, opt: &OptimizerSettings) -> Result<AdjustOutcome> {
    schedule.validate()?;
    let n = s.n();
    let lambdas = schedule.lambdas();
    let mut z = AugmentedVariable::from_solution(s).z;
    let mut round_radii = Vec::with_capacity(lambdas.len());
    let mut iterations = 0;
    for &lambda in &lambdas {
        let m = minimize(&PenalizedEnergy { n, lambda }, &z, opt)?;
        iterations += m.report.iterations;
        z = m.x;
        round_radii.push(z[3 * n]);
    }
    let solution = AugmentedVariable { z }.into_solution()?;
    let feasibility = check_feasible(&solution, ADJUST_GEOM_TOL);
    if !feasibility.feasible {
        log::debug!("container adjustment left overlaps: {feasibility}");
    }
    Ok(AdjustOutcome { feasible: feasibility.feasible, solution, feasibility, lambdas, round_radii, iterations })
}
