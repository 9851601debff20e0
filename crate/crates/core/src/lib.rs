//! Packing equal unit spheres into the smallest sphere.
//!
//! The solver works on an elastic relaxation: overlaps are allowed and
//! penalized by the sum of squared overlap depths. A fixed-radius search
//! ([`sed`]) drives that energy to zero with perturb-minimize-select rounds,
//! and a penalty continuation ([`adjust`]) then treats the radius as a
//! variable and shrinks or grows the container to a tight feasible packing.
//! [`pipeline::solve`] alternates the two under a wall-clock budget.
//!
//! Local minimization is L-BFGS ([`lbfgs`]) over neighbor lists
//! ([`neighbor`]) whose rebuilds are deferred adaptively.

// Negated float comparisons are used so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod lbfgs;
pub mod neighbor;
pub mod objective;
pub mod pipeline;
pub mod rng;
pub mod sed;

pub use adjust::{adjust_container, penalized_energy, AdjustOutcome, PenaltySchedule};
pub use error::{PessError, Result};
pub use geometry::{
    check_feasible, container_overlap, density, energy, energy_gradient, pair_overlap, EnergyReport, FeasibilityReport,
    Layout, Point3, Solution,
};
pub use lbfgs::{minimize, AnmState, Maintenance, Minimum, OptimizeReport, OptimizerSettings};
pub use neighbor::{energy_with_neighbors, gradient_with_neighbors, NeighborIndex};
pub use objective::{ElasticEnergy, Objective};
pub use pipeline::{initialize, solve, SolveConfig, SolveResult};
pub use sed::{exploration_count, perturb, random_layout, sed, select, SedOutcome, SedSettings};
