//! Fixed-radius exploring-descent search.
//!
//! Starting from a minimized random layout, each round perturbs the current
//! layout `m` times, minimizes every perturbed copy and picks the next current
//! layout from those candidates. The round size `m` grows as the current
//! energy falls, `m = max(1, ⌈-c log₂ E⌉)`, so more effort is spent around
//! layouts that are already close to feasible. The search stops as soon as
//! the best energy reaches the feasibility threshold.

use std::time::Instant;

use rand::Rng;

use crate::error::{PessError, Result};
use crate::geometry::{Layout, Solution};
use crate::lbfgs::{minimize, OptimizerSettings};
use crate::neighbor::exact_energy;
use crate::objective::ElasticEnergy;

#[derive(Debug, Clone, PartialEq)]
pub struct SedSettings {
    /// Maximum number of exploration rounds.
    pub s_iter: usize,
    /// Coefficient of the exploration count.
    pub c: f64,
    /// Half-width of the uniform coordinate perturbation.
    pub theta: f64,
    /// Energy at or below which a layout counts as feasible.
    pub feasible_energy: f64,
    /// Upper bound on candidates per round.
    pub max_exploration: usize,
}

impl Default for SedSettings {
    fn default() -> Self {
        Self { s_iter: 700, c: 7.0, theta: 0.8, feasible_energy: 1e-25, max_exploration: 600 }
    }
}

impl SedSettings {
    pub fn validate(&self) -> Result<()> {
        if self.s_iter == 0
            || !(self.c > 0.0)
            || !(self.theta > 0.0)
            || !(self.feasible_energy > 0.0)
            || self.max_exploration == 0
        {
            return Err(PessError::InvalidArgument(format!("invalid search settings {self:?}")));
        }
        Ok(())
    }
}

/// `⌈-c log₂ e⌉`; infinite for `e <= 0`.
pub fn quality(e: f64, c: f64) -> f64 {
    if e > 0.0 {
        (-c * e.log2()).ceil()
    } else {
        f64::INFINITY
    }
}

/// Number of candidates explored around a layout of energy `e`:
/// `max(1, ⌈-c log₂ e⌉)`, clamped to `cap`. Non-positive energies map to `cap`.
pub fn exploration_count(e: f64, c: f64, cap: usize) -> usize {
    let j = quality(e, c);
    if j.is_nan() || j >= cap as f64 {
        cap
    } else if j < 1.0 {
        1
    } else {
        j as usize
    }
}

/// Shifts every coordinate by an independent draw from `U(-theta, theta)`.
pub fn perturb<R: Rng + ?Sized>(layout: &Layout, theta: f64, rng: &mut R) -> Layout {
    let coords = layout.as_slice().iter().map(|v| v + rng.gen_range(-theta..=theta)).collect();
    Layout::from_flat(coords).expect("perturbation keeps coordinates finite")
}

/// `n` centers uniform in the ball of radius `max(R - 1, 0)` around the
/// origin, by rejection from the enclosing cube.
pub fn random_layout<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Layout {
    assert!(n >= 1, "need at least one sphere");
    let r = (radius - 1.0).max(0.0);
    let mut coords = Vec::with_capacity(3 * n);
    for _ in 0..n {
        if r == 0.0 {
            coords.extend_from_slice(&[0.0; 3]);
            continue;
        }
        loop {
            let p: [f64; 3] = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
            if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
                coords.extend(p.iter().map(|v| v * r));
                break;
            }
        }
    }
    Layout::from_flat(coords).expect("sampled coordinates are finite")
}

/// Selection probabilities `exp(J_k) / Σ exp(J_j)` over candidate energies,
/// computed with the maximum `J` subtracted. Infinite `J` values (zero
/// energy) are clamped to `cap`.
pub fn softmax_probabilities(energies: &[f64], c: f64, cap: usize) -> Vec<f64> {
    let js: Vec<f64> = energies.iter().map(|&e| quality(e, c).min(cap as f64)).collect();
    let top = js.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = js.iter().map(|j| (j - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Picks the next current layout among candidate energies.
///
/// If some candidate beats `current`, the lowest one wins (first on ties).
/// Otherwise a candidate is sampled with softmax probabilities over `J`.
pub fn select<R: Rng + ?Sized>(current: f64, candidates: &[f64], c: f64, cap: usize, rng: &mut R) -> usize {
    assert!(!candidates.is_empty(), "select needs at least one candidate");
    let (best, best_e) =
        candidates
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, e)| if e < acc.1 { (k, e) } else { acc });
    if best_e < current {
        return best;
    }
    let probs = softmax_probabilities(candidates, c, cap);
    let mut u: f64 = rng.gen();
    for (k, p) in probs.iter().enumerate() {
        if u < *p {
            return k;
        }
        u -= p;
    }
    candidates.len() - 1
}

/// One exploration round of [`sed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SedStep {
    pub iteration: usize,
    /// Energy of the layout the round perturbed.
    pub current_energy: f64,
    /// Candidates the round asked for.
    pub exploration: usize,
    /// Candidates actually produced (fewer only when the deadline hit).
    pub generated: usize,
    /// Best energy after the round.
    pub best_energy: f64,
}

#[derive(Debug, Clone)]
pub struct SedOutcome {
    pub layout: Layout,
    pub energy: f64,
    pub initial_energy: f64,
    pub trace: Vec<SedStep>,
    pub minimizations: usize,
    pub interrupted: bool,
}

impl SedOutcome {
    pub fn feasible(&self, settings: &SedSettings) -> bool {
        self.energy <= settings.feasible_energy
    }
}

/// Runs the search from a random layout.
pub fn sed<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    settings: &SedSettings,
    opt: &OptimizerSettings,
    rng: &mut R,
    deadline: Option<Instant>,
) -> Result<SedOutcome> {
    let start = random_layout(n, radius, rng);
    sed_from(start, radius, settings, opt, rng, deadline)
}

/// Runs the search from a given starting layout.
pub fn sed_from<R: Rng + ?Sized>(
    start: Layout,
    radius: f64,
    settings: &SedSettings,
    opt: &OptimizerSettings,
    rng: &mut R,
    deadline: Option<Instant>,
) -> Result<SedOutcome> {
    settings.validate()?;
    let objective = ElasticEnergy::new(start.len(), radius);
    let descend = |layout: Layout| -> Result<(Layout, f64)> {
        let m = minimize(&objective, layout.as_slice(), opt)?;
        let layout = Layout::from_flat(m.x)?;
        let e = exact_energy(&Solution::new(layout.clone(), radius)?).total;
        Ok((layout, e))
    };
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);

    let (mut current, mut current_e) = descend(start)?;
    let mut best = current.clone();
    let mut best_e = current_e;
    let initial_energy = current_e;
    let mut trace = Vec::new();
    let mut minimizations = 1;
    let mut interrupted = false;

    for iteration in 1..=settings.s_iter {
        if best_e <= settings.feasible_energy {
            break;
        }
        let round_energy = current_e;
        let m = exploration_count(round_energy, settings.c, settings.max_exploration);
        let mut layouts = Vec::with_capacity(m);
        let mut energies = Vec::with_capacity(m);
        for _ in 0..m {
            if expired() {
                interrupted = true;
                break;
            }
            let (layout, e) = descend(perturb(&current, settings.theta, rng))?;
            minimizations += 1;
            layouts.push(layout);
            energies.push(e);
        }
        if interrupted && layouts.is_empty() {
            break;
        }
        if !interrupted {
            let k = select(current_e, &energies, settings.c, settings.max_exploration, rng);
            current_e = energies[k];
            current = layouts.swap_remove(k);
        } else if let Some((k, &e)) = energies.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
            // A cut-short round only contributes its best candidate, and only
            // if that improves on the incumbent below.
            if e < best_e {
                current_e = e;
                current = layouts.swap_remove(k);
            }
        }
        if current_e < best_e {
            best_e = current_e;
            best = current.clone();
        }
        trace.push(SedStep {
            iteration,
            current_energy: round_energy,
            exploration: m,
            generated: energies.len(),
            best_energy: best_e,
        });
        if interrupted {
            break;
        }
    }

    Ok(SedOutcome { layout: best, energy: best_e, initial_energy, trace, minimizations, interrupted })
}
