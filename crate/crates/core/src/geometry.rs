//! Exact overlap, energy, gradient, density and feasibility for a packing of
//! unit spheres inside a spherical container centered at the origin.
//!
//! Lengths are measured in units of the packed-sphere radius, so two spheres
//! touch at center distance 2 and a sphere touches the wall when
//! `|c| + 1 = R`.
//!
//! The functions here enumerate every pair and serve as the reference that the
//! neighbor-list fast path in [`crate::neighbor`] is checked against.
//!
//! Gradient convention: [`energy_gradient`] returns `∇E`, so a descent step is
//! `x - α ∇E`.

use std::fmt;

use crate::error::{PessError, Result};

pub type Point3 = [f64; 3];

/// Below this separation a coincident pair is pushed apart along `+x`, and a
/// center this close to the origin gets no container gradient.
pub const SINGULAR_DISTANCE: f64 = 1e-12;

/// Default slack used when reporting geometric feasibility.
pub const DEFAULT_GEOM_TOL: f64 = 1e-9;

/// Sphere centers, stored as the flat vector `[x_1, y_1, z_1, ..., x_n, y_n, z_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    coords: Vec<f64>,
}

impl Layout {
    pub fn new(centers: &[Point3]) -> Result<Self> {
        Self::from_flat(centers.iter().flatten().copied().collect())
    }

    pub fn from_flat(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(3) {
            return Err(PessError::InvalidArgument(format!(
                "layout needs 3n coordinates with n >= 1, got {}",
                coords.len()
            )));
        }
        if let Some(k) = coords.iter().position(|v| !v.is_finite()) {
            return Err(PessError::InvalidArgument(format!("coordinate {k} is not finite")));
        }
        Ok(Self { coords })
    }

    /// Number of spheres.
    pub fn len(&self) -> usize {
        self.coords.len() / 3
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn center(&self, i: usize) -> Point3 {
        let c = &self.coords[3 * i..3 * i + 3];
        [c[0], c[1], c[2]]
    }

    pub fn centers(&self) -> impl Iterator<Item = Point3> + '_ {
        self.coords.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }
}

/// A layout together with its container radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub layout: Layout,
    radius: f64,
}

impl Solution {
    pub fn new(layout: Layout, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(PessError::InvalidArgument(format!(
                "container radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { layout, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.layout.len()
    }
}

/// Total elastic energy and the largest individual overlaps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub total: f64,
    pub max_pair_overlap: f64,
    pub max_container_overlap: f64,
}

impl EnergyReport {
    pub(crate) fn add_pair(&mut self, overlap: f64) {
        self.total += overlap * overlap;
        self.max_pair_overlap = self.max_pair_overlap.max(overlap);
    }

    pub(crate) fn add_container(&mut self, overlap: f64) {
        self.total += overlap * overlap;
        self.max_container_overlap = self.max_container_overlap.max(overlap);
    }
}

#[inline]
fn norm(v: Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Overlap depth of two unit spheres: `max(0, 2 - |a - b|)`.
pub fn pair_overlap(a: Point3, b: Point3) -> f64 {
    (2.0 - norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])).max(0.0)
}

/// How far a unit sphere at `a` pokes through a container of the given radius.
pub fn container_overlap(a: Point3, radius: f64) -> f64 {
    (norm(a) + 1.0 - radius).max(0.0)
}

/// Overlap of spheres `i` and `j` in a flat coordinate slice, with the unit
/// vector pointing from `j` to `i` when the overlap is positive.
#[inline]
pub(crate) fn pair_kernel(coords: &[f64], i: usize, j: usize) -> Option<(f64, Point3)> {
    let (a, b) = (&coords[3 * i..3 * i + 3], &coords[3 * j..3 * j + 3]);
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let dist2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if dist2 >= 4.0 {
        return None;
    }
    let dist = dist2.sqrt();
    let overlap = 2.0 - dist;
    if dist < SINGULAR_DISTANCE {
        Some((overlap, [1.0, 0.0, 0.0]))
    } else {
        Some((overlap, [d[0] / dist, d[1] / dist, d[2] / dist]))
    }
}

/// Container overlap of sphere `i` with the outward radial unit vector.
#[inline]
pub(crate) fn container_kernel(coords: &[f64], i: usize, radius: f64) -> Option<(f64, Point3)> {
    let c = &coords[3 * i..3 * i + 3];
    let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let overlap = r + 1.0 - radius;
    if overlap <= 0.0 {
        return None;
    }
    if r < SINGULAR_DISTANCE {
        // The origin minimizes |c|; use the zero subgradient there.
        Some((overlap, [0.0; 3]))
    } else {
        Some((overlap, [c[0] / r, c[1] / r, c[2] / r]))
    }
}

/// Adds `d(O_ij^2)` for one overlapping pair into `grad`.
#[inline]
pub(crate) fn scatter_pair(grad: &mut [f64], i: usize, j: usize, overlap: f64, unit: Point3) {
    let s = 2.0 * overlap;
    for k in 0..3 {
        grad[3 * i + k] -= s * unit[k];
        grad[3 * j + k] += s * unit[k];
    }
}

/// Adds every container term of `coords` into `report` and, when given, into
/// `grad`. Returns `Σ O_i0`, which the radius derivative needs.
pub(crate) fn container_terms(
    coords: &[f64],
    radius: f64,
    report: &mut EnergyReport,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..coords.len() / 3 {
        if let Some((overlap, unit)) = container_kernel(coords, i, radius) {
            report.add_container(overlap);
            sum += overlap;
            if let Some(g) = grad.as_deref_mut() {
                let s = 2.0 * overlap;
                for k in 0..3 {
                    g[3 * i + k] += s * unit[k];
                }
            }
        }
    }
    sum
}

/// Brute-force pair enumeration over a flat coordinate slice.
pub(crate) fn pair_terms_all(coords: &[f64], report: &mut EnergyReport, mut grad: Option<&mut [f64]>) {
    let n = coords.len() / 3;
    for i in 0..n {
        for j in i + 1..n {
            if let Some((overlap, unit)) = pair_kernel(coords, i, j) {
                report.add_pair(overlap);
                if let Some(g) = grad.as_deref_mut() {
                    scatter_pair(g, i, j, overlap, unit);
                }
            }
        }
    }
}

/// Elastic energy `Σ_{i<j} O_ij² + Σ_i O_i0²` by full pair enumeration.
pub fn energy(s: &Solution) -> EnergyReport {
    let mut report = EnergyReport::default();
    pair_terms_all(s.layout.as_slice(), &mut report, None);
    container_terms(s.layout.as_slice(), s.radius, &mut report, None);
    report
}

/// Analytic gradient of [`energy`] with respect to the 3n center coordinates.
pub fn energy_gradient(s: &Solution) -> Vec<f64> {
    let coords = s.layout.as_slice();
    let mut grad = vec![0.0; coords.len()];
    let mut report = EnergyReport::default();
    pair_terms_all(coords, &mut report, Some(&mut grad));
    container_terms(coords, s.radius, &mut report, Some(&mut grad));
    grad
}

/// Volume fraction `n / R³` occupied by the unit spheres.
pub fn density(s: &Solution) -> f64 {
    s.n() as f64 / s.radius.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairViolation {
    pub i: usize,
    pub j: usize,
    /// `2 - |c_i - c_j|`.
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainerViolation {
    pub i: usize,
    /// `|c_i| + 1 - R`.
    pub violation: f64,
}

/// Outcome of a geometric feasibility check. Sphere indices are zero-based.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub pair_violations: Vec<PairViolation>,
    pub container_violations: Vec<ContainerViolation>,
}

impl FeasibilityReport {
    pub fn max_pair_violation(&self) -> f64 {
        self.pair_violations.iter().map(|v| v.violation).fold(0.0, f64::max)
    }

    pub fn max_container_violation(&self) -> f64 {
        self.container_violations.iter().map(|v| v.violation).fold(0.0, f64::max)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feasible {
            return write!(f, "feasible");
        }
        writeln!(
            f,
            "infeasible: {} pair violation(s), {} container violation(s)",
            self.pair_violations.len(),
            self.container_violations.len()
        )?;
        for v in &self.pair_violations {
            writeln!(f, "  pair ({}, {}): overlap {:.6e}", v.i + 1, v.j + 1, v.violation)?;
        }
        for v in &self.container_violations {
            writeln!(f, "  sphere {}: outside container by {:.6e}", v.i + 1, v.violation)?;
        }
        Ok(())
    }
}

/// Checks the hard constraints: pair distances `>= 2 - tol` and
/// `|c_i| + 1 <= R + tol`. Every violation is listed.
pub fn check_feasible(s: &Solution, geom_tol: f64) -> FeasibilityReport {
    let mut report = FeasibilityReport::default();
    let n = s.n();
    let centers: Vec<Point3> = s.layout.centers().collect();
    for i in 0..n {
        for j in i + 1..n {
            let a = centers[i];
            let b = centers[j];
            let dist = norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
            if dist < 2.0 - geom_tol {
                report.pair_violations.push(PairViolation { i, j, violation: 2.0 - dist });
            }
        }
        let excess = norm(centers[i]) + 1.0 - s.radius;
        if excess > geom_tol {
            report.container_violations.push(ContainerViolation { i, violation: excess });
        }
    }
    report.feasible = report.pair_violations.is_empty() && report.container_violations.is_empty();
    report
}
