//! Neighbor lists `Γ(i) = { j ≠ i : |c_i - c_j| < cutoff }` and the energy and
//! gradient evaluated over them.
//!
//! With a cutoff of at least 2 every overlapping pair appears in the lists
//! right after a build, and the neighbor-restricted sums equal the brute-force
//! ones in [`crate::geometry`]. Pairs are visited in ascending `(i, j)` order,
//! the same order the brute-force enumeration uses, so the results agree to
//! the last bit while no overlapping pair is missing.

use crate::error::{PessError, Result};
use crate::geometry::{self, EnergyReport, Solution};

pub const DEFAULT_CUTOFF: f64 = 4.0;

/// Immutable neighbor structure built from one snapshot of sphere centers.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    lists: Vec<Vec<usize>>,
    cutoff: f64,
    /// Centers the lists were built from, kept to measure drift.
    anchor: Vec<f64>,
}

impl NeighborIndex {
    /// Builds the lists by sweeping the spheres in order of their `x`
    /// coordinate and only testing pairs whose `x` gap is below the cutoff.
    ///
    /// `centers` is a flat `[x_1, y_1, z_1, ...]` slice; a trailing partial
    /// triple is not allowed.
    pub fn build(centers: &[f64], cutoff: f64) -> Self {
        assert!(cutoff > 0.0, "neighbor cutoff must be positive");
        assert_eq!(centers.len() % 3, 0, "centers must come in triples");
        let n = centers.len() / 3;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| centers[3 * a].total_cmp(&centers[3 * b]));

        let cut2 = cutoff * cutoff;
        let mut lists = vec![Vec::new(); n];
        for (pos, &i) in order.iter().enumerate() {
            let ci = &centers[3 * i..3 * i + 3];
            for &j in &order[pos + 1..] {
                let cj = &centers[3 * j..3 * j + 3];
                let dx = cj[0] - ci[0];
                if dx >= cutoff {
                    break;
                }
                let dy = cj[1] - ci[1];
                let dz = cj[2] - ci[2];
                if dx * dx + dy * dy + dz * dz < cut2 {
                    lists[i].push(j);
                    lists[j].push(i);
                }
            }
        }
        for list in &mut lists {
            list.sort_unstable();
        }
        Self { lists, cutoff, anchor: centers.to_vec() }
    }

    /// Builds from the centers of a layout.
    pub fn for_layout(layout: &geometry::Layout, cutoff: f64) -> Self {
        Self::build(layout.as_slice(), cutoff)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Sorted neighbors of sphere `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn pair_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Largest distance any sphere in `centers` has moved away from the
    /// snapshot this index was built from.
    pub fn max_drift(&self, centers: &[f64]) -> f64 {
        self.anchor
            .chunks_exact(3)
            .zip(centers.chunks_exact(3))
            .map(|(a, c)| {
                let d = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// True when every list of `self` equals the corresponding list of
    /// `other`. Indices built for different sphere counts are rejected.
    pub fn same_structure(&self, other: &NeighborIndex) -> Result<bool> {
        if self.len() != other.len() {
            return Err(PessError::IndexMismatch { left: self.len(), right: other.len() });
        }
        Ok(self.lists == other.lists)
    }

    /// Pair terms over the lists (each pair once, `i < j`), accumulated into
    /// `report` and optionally `grad`.
    pub(crate) fn pair_terms(&self, centers: &[f64], report: &mut EnergyReport, mut grad: Option<&mut [f64]>) {
        for (i, list) in self.lists.iter().enumerate() {
            let start = list.partition_point(|&j| j <= i);
            for &j in &list[start..] {
                if let Some((overlap, unit)) = geometry::pair_kernel(centers, i, j) {
                    report.add_pair(overlap);
                    if let Some(g) = grad.as_deref_mut() {
                        geometry::scatter_pair(g, i, j, overlap, unit);
                    }
                }
            }
        }
    }
}

impl PartialEq for NeighborIndex {
    fn eq(&self, other: &Self) -> bool {
        self.lists == other.lists
    }
}

/// Elastic energy using only the pairs listed in `idx`.
///
/// Understates the energy when an overlapping pair is missing from the lists;
/// keeping the lists fresh enough is the caller's job.
pub fn energy_with_neighbors(s: &Solution, idx: &NeighborIndex) -> EnergyReport {
    let mut report = EnergyReport::default();
    let coords = s.layout.as_slice();
    idx.pair_terms(coords, &mut report, None);
    geometry::container_terms(coords, s.radius(), &mut report, None);
    report
}

/// Gradient counterpart of [`energy_with_neighbors`].
pub fn gradient_with_neighbors(s: &Solution, idx: &NeighborIndex) -> Vec<f64> {
    let coords = s.layout.as_slice();
    let mut grad = vec![0.0; coords.len()];
    let mut report = EnergyReport::default();
    idx.pair_terms(coords, &mut report, Some(&mut grad));
    geometry::container_terms(coords, s.radius(), &mut report, Some(&mut grad));
    grad
}

/// Exact energy of a layout via a fresh neighbor build.
pub fn exact_energy(s: &Solution) -> EnergyReport {
    let idx = NeighborIndex::build(s.layout.as_slice(), 2.0 + 1e-9);
    energy_with_neighbors(s, &idx)
}
