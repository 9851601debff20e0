use crate::geometry::{self, EnergyReport};
use crate::neighbor::NeighborIndex;

/// A smooth objective minimized by [`crate::lbfgs::minimize`].
///
/// The first `3 * sphere_count()` components of the variable vector are
/// sphere centers; the optimizer builds neighbor lists from that prefix only.
/// Any trailing components (the container radius, for instance) are opaque to
/// the neighbor machinery.
pub trait Objective {
    fn dim(&self) -> usize;

    fn sphere_count(&self) -> usize;

    /// Writes the gradient into `grad` (overwriting it) and returns the value.
    fn evaluate(&self, x: &[f64], neighbors: &NeighborIndex, grad: &mut [f64]) -> f64;

    /// Pulls `x` back into the admissible region after an accepted step.
    /// Returns true when `x` was modified.
    fn constrain(&self, _x: &mut [f64]) -> bool {
        false
    }
}

/// Elastic energy of `n` spheres in a container of fixed radius.
#[derive(Debug, Clone, Copy)]
pub struct ElasticEnergy {
    pub n: usize,
    pub radius: f64,
}

impl ElasticEnergy {
    pub fn new(n: usize, radius: f64) -> Self {
        Self { n, radius }
    }
}

impl Objective for ElasticEnergy {
    fn dim(&self) -> usize {
        3 * self.n
    }

    fn sphere_count(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64], neighbors: &NeighborIndex, grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let mut report = EnergyReport::default();
        neighbors.pair_terms(x, &mut report, Some(grad));
        geometry::container_terms(x, self.radius, &mut report, Some(grad));
        report.total
    }
}
