//! Initialization and the top-level solve loop.

use std::time::{Duration, Instant};

use crate::adjust::{adjust_container, PenaltySchedule};
use crate::error::{PessError, Result};
use crate::geometry::Solution;
use crate::lbfgs::OptimizerSettings;
use crate::rng::{run_seed, seeded, SolverRng};
use crate::sed::{sed, SedSettings};

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub n: usize,
    pub t_cut: Duration,
    pub sed: SedSettings,
    pub schedule: PenaltySchedule,
    pub opt: OptimizerSettings,
    pub seed: u64,
    /// Packing density used to guess the starting radius.
    pub init_density: f64,
    /// Outer passes search at `R*·(1 − step)` instead of `R*`.
    pub radius_shrink_step: f64,
    /// Optional cap on outer passes. With a cap and a budget that is never
    /// reached, a run is fully reproducible from its seed.
    pub max_rounds: Option<usize>,
}

impl SolveConfig {
    pub fn new(n: usize, t_cut: Duration, seed: u64) -> Self {
        Self {
            n,
            t_cut,
            sed: SedSettings::default(),
            schedule: PenaltySchedule::default(),
            opt: OptimizerSettings::default(),
            seed,
            init_density: 0.6,
            radius_shrink_step: 0.0,
            max_rounds: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(PessError::InvalidArgument("n must be at least 1".into()));
        }
        if self.t_cut.is_zero() {
            return Err(PessError::InvalidArgument("time budget must be positive".into()));
        }
        if !(self.init_density > 0.0 && self.init_density < 1.0) {
            return Err(PessError::InvalidArgument(format!("init density {} not in (0, 1)", self.init_density)));
        }
        if !(0.0..1.0).contains(&self.radius_shrink_step) {
            return Err(PessError::InvalidArgument(format!(
                "radius shrink step {} not in [0, 1)",
                self.radius_shrink_step
            )));
        }
        self.sed.validate()?;
        self.schedule.validate()?;
        self.opt.validate()
    }

    /// `(n / ρ)^(1/3)`.
    pub fn initial_radius(&self) -> f64 {
        (self.n as f64 / self.init_density).cbrt()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub best: Solution,
    pub best_radius: f64,
    /// Outer passes completed after initialization.
    pub iterations: usize,
    pub elapsed: Duration,
    pub time_to_best: Duration,
    pub seed: u64,
    pub feasible: bool,
    /// Radius after initialization followed by every improvement.
    pub radius_history: Vec<f64>,
}

/// Searches at the guessed radius and adjusts the container around the result.
///
/// An infeasible adjustment is retried once from a reseeded generator; the
/// generator that produced the accepted solution is returned so the caller can
/// keep drawing from it.
pub fn initialize(config: &SolveConfig, deadline: Option<Instant>) -> Result<(Solution, SolverRng)> {
    config.validate()?;
    let radius = config.initial_radius();
    let mut last = None;
    for attempt in 0..2 {
        let mut rng = seeded(run_seed(config.seed, attempt));
        let out = sed(config.n, radius, &config.sed, &config.opt, &mut rng, deadline)?;
        let adjusted = adjust_container(&Solution::new(out.layout, radius)?, &config.schedule, &config.opt)?;
        if adjusted.feasible {
            return Ok((adjusted.solution, rng));
        }
        log::warn!("initialization attempt {attempt} infeasible: {}", adjusted.feasibility);
        last = Some(adjusted.feasibility);
    }
    let report = last.expect("at least one attempt");
    Err(PessError::Infeasible {
        max_pair: report.max_pair_violation(),
        max_container: report.max_container_violation(),
    })
}

/// Alternates fixed-radius search and container adjustment until the budget
/// runs out, keeping the smallest feasible container found.
pub fn solve(config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let deadline = start + config.t_cut;
    let (mut best, mut rng) = initialize(config, Some(deadline))?;
    let mut time_to_best = start.elapsed();
    let mut radius_history = vec![best.radius()];
    let mut iterations = 0;
    log::info!("n={} initial radius {:.12}", config.n, best.radius());

    while Instant::now() < deadline && config.max_rounds.is_none_or(|m| iterations < m) {
        iterations += 1;
        let radius = best.radius() * (1.0 - config.radius_shrink_step);
        let out = sed(config.n, radius, &config.sed, &config.opt, &mut rng, Some(deadline))?;
        let candidate = Solution::new(out.layout, radius)?;
        let adjusted = adjust_container(&candidate, &config.schedule, &config.opt)?;
        if adjusted.feasible && adjusted.solution.radius() < best.radius() {
            best = adjusted.solution;
            time_to_best = start.elapsed();
            radius_history.push(best.radius());
            log::info!("n={} pass {iterations}: radius {:.12}", config.n, best.radius());
        }
    }

    Ok(SolveResult {
        best_radius: best.radius(),
        best,
        iterations,
        elapsed: start.elapsed(),
        time_to_best,
        seed: config.seed,
        feasible: true,
        radius_history,
    })
}
