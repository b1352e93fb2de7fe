//! Fixed partitions of the predictor space.
//!
//! Prototypes are picked greedily by the farthest-point rule starting from the
//! sample medoid; every observation then joins the cell of its nearest
//! prototype. Cells smaller than a configured minimum are dissolved by
//! dropping their prototype and reassigning everything among the survivors,
//! so the result is always a genuine nearest-prototype (Voronoi) partition.
//!
//! All ties are broken towards the smallest index, which makes every step a
//! deterministic function of the input order.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FccError, Result};
use crate::metric::{MetricObject, PointCloud, Space};

/// A partition of `n` observations into `M` non-empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Indices (into the predictor sample) of the prototype of each cell.
    /// Empty for partitions built directly from assignments.
    pub prototype_indices: Vec<usize>,
    /// Cell index of each observation.
    pub assignments: Vec<usize>,
    pub cell_sizes: Vec<usize>,
    pub cell_fractions: Vec<f64>,
}

impl Partition {
    /// Builds a partition from explicit cell labels in `0..num_cells`.
    /// Every cell must be non-empty.
    pub fn from_assignments(assignments: Vec<usize>, num_cells: usize) -> Result<Self> {
        Self::with_prototypes(Vec::new(), assignments, num_cells)
    }

    fn with_prototypes(
        prototype_indices: Vec<usize>,
        assignments: Vec<usize>,
        num_cells: usize,
    ) -> Result<Self> {
        if assignments.is_empty() {
            return Err(FccError::InvalidPartition("no observations".into()));
        }
        let mut cell_sizes = vec![0usize; num_cells];
        for &a in &assignments {
            if a >= num_cells {
                return Err(FccError::InvalidPartition(format!(
                    "cell label {a} out of range for {num_cells} cells"
                )));
            }
            cell_sizes[a] += 1;
        }
        if let Some(m) = cell_sizes.iter().position(|&s| s == 0) {
            return Err(FccError::InvalidPartition(format!("cell {m} is empty")));
        }
        let n = assignments.len() as f64;
        let cell_fractions = cell_sizes.iter().map(|&s| s as f64 / n).collect();
        Ok(Partition { prototype_indices, assignments, cell_sizes, cell_fractions })
    }

    pub fn num_cells(&self) -> usize {
        self.cell_sizes.len()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn min_cell_size(&self) -> usize {
        self.cell_sizes.iter().copied().min().unwrap_or(0)
    }

    /// Observation indices of each cell, in increasing order.
    pub fn cell_members(&self) -> Vec<Vec<usize>> {
        let mut members: Vec<Vec<usize>> =
            self.cell_sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (i, &a) in self.assignments.iter().enumerate() {
            members[a].push(i);
        }
        members
    }

    /// CSV export: a comment header with the construction parameters, then
    /// `obs_index,cell_index` rows.
    pub fn to_csv(&self, h: usize, min_size: usize) -> String {
        let mut out = format!("# H={h} min_size={min_size} M={}\nobs_index,cell_index\n", self.num_cells());
        for (i, a) in self.assignments.iter().enumerate() {
            let _ = writeln!(out, "{i},{a}");
        }
        out
    }
}

fn medoid(cloud: &PointCloud, candidates: &[usize]) -> usize {
    let sums: Vec<f64> = candidates
        .par_iter()
        .map(|&i| candidates.iter().map(|&j| cloud.distance(i, j)).sum())
        .collect();
    let mut best = 0;
    for k in 1..sums.len() {
        if sums[k] < sums[best] {
            best = k;
        }
    }
    candidates[best]
}

/// Farthest-point prototype selection restricted to `candidates`.
pub(crate) fn farthest_point_in(cloud: &PointCloud, candidates: &[usize], h: usize) -> Vec<usize> {
    if candidates.is_empty() || h == 0 {
        return Vec::new();
    }
    let first = medoid(cloud, candidates);
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = candidates.iter().map(|&j| cloud.distance(first, j)).collect();
    while chosen.len() < h {
        let mut best = 0;
        for k in 1..nearest.len() {
            if nearest[k] > nearest[best] {
                best = k;
            }
        }
        if nearest[best] <= 0.0 {
            // Every remaining point duplicates a prototype.
            break;
        }
        let next = candidates[best];
        chosen.push(next);
        for (k, &j) in candidates.iter().enumerate() {
            let d = cloud.distance(next, j);
            if d < nearest[k] {
                nearest[k] = d;
            }
        }
    }
    chosen
}

/// Selects up to `h` prototype indices by the farthest-point rule seeded at
/// the sample medoid. Fewer than `h` are returned when the sample has fewer
/// than `h` distinct points.
pub fn farthest_point_prototypes(xs: &[MetricObject], space: &Space, h: usize) -> Result<Vec<usize>> {
    if xs.is_empty() {
        return Err(FccError::invalid("farthest-point selection needs at least one point"));
    }
    if h == 0 || h > xs.len() {
        return Err(FccError::invalid(format!(
            "number of prototypes must be in 1..={} (got {h})",
            xs.len()
        )));
    }
    let cloud = PointCloud::new(space, xs)?;
    let all: Vec<usize> = (0..xs.len()).collect();
    Ok(farthest_point_in(&cloud, &all, h))
}

pub(crate) fn assign_in(cloud: &PointCloud, prototypes: &[usize]) -> Result<Partition> {
    if prototypes.is_empty() {
        return Err(FccError::invalid("at least one prototype is required"));
    }
    if let Some(&bad) = prototypes.iter().find(|&&p| p >= cloud.len()) {
        return Err(FccError::invalid(format!("prototype index {bad} out of range")));
    }
    let assignments: Vec<usize> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0;
            let mut best_d = cloud.distance(i, prototypes[0]);
            for (m, &p) in prototypes.iter().enumerate().skip(1) {
                let d = cloud.distance(i, p);
                if d < best_d {
                    best = m;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    // A prototype always lies in its own cell unless it duplicates an earlier
    // one; drop cells that end up empty for that reason.
    let mut sizes = vec![0usize; prototypes.len()];
    for &a in &assignments {
        sizes[a] += 1;
    }
    if sizes.iter().all(|&s| s > 0) {
        return Partition::with_prototypes(prototypes.to_vec(), assignments, prototypes.len());
    }
    let kept: Vec<usize> =
        prototypes.iter().zip(&sizes).filter(|(_, &s)| s > 0).map(|(&p, _)| p).collect();
    assign_in(cloud, &kept)
}

/// Nearest-prototype assignment; ties go to the prototype listed first.
pub fn assign_cells(xs: &[MetricObject], space: &Space, prototypes: &[usize]) -> Result<Partition> {
    let cloud = PointCloud::new(space, xs)?;
    assign_in(&cloud, prototypes)
}

pub(crate) fn enforce_in(cloud: &PointCloud, partition: Partition, min_size: usize) -> Result<Partition> {
    let mut current = partition;
    loop {
        if current.num_cells() <= 1 {
            return Ok(current);
        }
        let mut worst: Option<usize> = None;
        for (m, &s) in current.cell_sizes.iter().enumerate() {
            if s < min_size && worst.is_none_or(|w| s < current.cell_sizes[w]) {
                worst = Some(m);
            }
        }
        let Some(drop) = worst else {
            return Ok(current);
        };
        if current.prototype_indices.len() != current.num_cells() {
            return Err(FccError::InvalidPartition(
                "minimum cell size enforcement needs prototype indices".into(),
            ));
        }
        let mut survivors = current.prototype_indices.clone();
        survivors.remove(drop);
        current = assign_in(cloud, &survivors)?;
    }
}

/// Dissolves undersized cells until every cell has at least `min_size`
/// members or a single cell remains.
pub fn enforce_min_cell_size(
    partition: Partition,
    xs: &[MetricObject],
    space: &Space,
    min_size: usize,
) -> Result<Partition> {
    if xs.len() != partition.len() {
        return Err(FccError::invalid("partition and sample sizes differ"));
    }
    let cloud = PointCloud::new(space, xs)?;
    enforce_in(&cloud, partition, min_size)
}

/// Farthest-point partition parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// Number of prototypes requested.
    pub h: usize,
    /// Minimum cell size.
    pub min_cell: usize,
    /// When set, prototypes are chosen among these indices only; every
    /// observation is still assigned.
    pub prototype_subset: Option<Vec<usize>>,
}

impl PartitionConfig {
    pub fn new(h: usize, min_cell: usize) -> Self {
        PartitionConfig { h, min_cell, prototype_subset: None }
    }

    /// Prototype selection, assignment, and minimum-size enforcement in one go.
    /// `h` larger than the sample is capped at the sample size.
    pub fn build(&self, xs: &[MetricObject], space: &Space) -> Result<Partition> {
        if xs.is_empty() {
            return Err(FccError::invalid("cannot partition an empty sample"));
        }
        if self.h == 0 {
            return Err(FccError::invalid("H must be positive"));
        }
        let cloud = PointCloud::new(space, xs)?;
        let candidates: Vec<usize> = match &self.prototype_subset {
            Some(s) => {
                if s.is_empty() || s.iter().any(|&i| i >= xs.len()) {
                    return Err(FccError::invalid("prototype subset must be non-empty and in range"));
                }
                s.clone()
            }
            None => (0..xs.len()).collect(),
        };
        let h = self.h.min(candidates.len());
        let protos = farthest_point_in(&cloud, &candidates, h);
        let p = assign_in(&cloud, &protos)?;
        enforce_in(&cloud, p, self.min_cell)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<MetricObject> {
        xs.iter().map(|&x| MetricObject::Euclidean(vec![x])).collect()
    }

    #[test]
    fn single_prototype_is_medoid() {
        let xs = line(&[0.0, 1.0, 10.0, 2.0]);
        let s = Space::euclidean(1);
        assert_eq!(farthest_point_prototypes(&xs, &s, 1).unwrap(), vec![1]);
    }

    #[test]
    fn greedy_rule_on_three_points() {
        // Summed distances: 0 -> 11, 1 -> 10, 10 -> 19; medoid is 1, then 10.
        let xs = line(&[0.0, 1.0, 10.0]);
        let s = Space::euclidean(1);
        assert_eq!(farthest_point_prototypes(&xs, &s, 2).unwrap(), vec![1, 2]);
        let mut all = farthest_point_prototypes(&xs, &s, 3).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn too_many_prototypes() {
        let xs = line(&[0.0, 1.0]);
        let s = Space::euclidean(1);
        assert!(farthest_point_prototypes(&xs, &s, 3).is_err());
        let dup = line(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(farthest_point_prototypes(&dup, &s, 4).unwrap().len(), 2);
    }

    #[test]
    fn nearest_prototype_assignment() {
        let xs = line(&[0.0, 0.4, 1.0]);
        let p = assign_cells(&xs, &Space::euclidean(1), &[0, 2]).unwrap();
        assert_eq!(p.assignments, vec![0, 0, 1]);
        assert_eq!(p.cell_sizes, vec![2, 1]);
    }

    #[test]
    fn single_prototype_takes_everything() {
        let xs = line(&[0.0, 0.4, 1.0, 7.0]);
        let p = assign_cells(&xs, &Space::euclidean(1), &[3]).unwrap();
        assert_eq!(p.assignments, vec![0; 4]);
        assert_eq!(p.cell_sizes, vec![4]);
    }

    #[test]
    fn ties_go_to_smallest_prototype_index() {
        // Observation 3 at 1.0 is equidistant from prototypes at 0.0 and 2.0.
        let xs = line(&[5.0, 9.0, 0.0, 1.0, 7.0, 2.0]);
        let p = assign_cells(&xs, &Space::euclidean(1), &[0, 1, 2, 5]).unwrap();
        assert_eq!(p.assignments[3], 2);
    }

    #[test]
    fn enforcement_absorbs_singleton() {
        // Prototypes at 0, 5 and 20; the point 20 is alone.
        let xs = line(&[0.0, 0.1, 0.2, 0.3, 0.4, 5.0, 5.1, 5.2, 5.3, 20.0]);
        let s = Space::euclidean(1);
        let p = assign_cells(&xs, &s, &[0, 5, 9]).unwrap();
        assert_eq!(p.cell_sizes, vec![5, 4, 1]);
        let q = enforce_min_cell_size(p, &xs, &s, 2).unwrap();
        assert_eq!(q.prototype_indices, vec![0, 5]);
        // Brute force: 20 is nearest to 5.0 among the survivors.
        assert_eq!(q.assignments[9], 1);
        assert_eq!(q.cell_sizes, vec![5, 5]);
    }

    #[test]
    fn enforcement_noop_and_collapse() {
        let xs = line(&[0.0, 0.1, 5.0, 5.1]);
        let s = Space::euclidean(1);
        let p = assign_cells(&xs, &s, &[0, 2]).unwrap();
        assert_eq!(enforce_min_cell_size(p.clone(), &xs, &s, 2).unwrap(), p);
        let one = enforce_min_cell_size(p, &xs, &s, 4).unwrap();
        assert_eq!(one.num_cells(), 1);
        assert_eq!(one.cell_sizes, vec![4]);
    }

    #[test]
    fn from_assignments_rejects_empty_cells() {
        assert!(Partition::from_assignments(vec![0, 0, 2], 3).is_err());
        assert!(Partition::from_assignments(vec![0, 5], 2).is_err());
        let p = Partition::from_assignments(vec![1, 0, 1], 2).unwrap();
        assert_eq!(p.cell_sizes, vec![1, 2]);
    }

    #[test]
    fn config_with_subset() {
        let xs = line(&[0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 13.0]);
        let cfg = PartitionConfig { h: 2, min_cell: 1, prototype_subset: Some(vec![0, 1, 2, 3]) };
        let p = cfg.build(&xs, &Space::euclidean(1)).unwrap();
        assert!(p.prototype_indices.iter().all(|&i| i < 4));
        assert_eq!(p.len(), 8);
    }

    #[test]
    fn csv_header() {
        let p = Partition::from_assignments(vec![0, 1, 0], 2).unwrap();
        let csv = p.to_csv(15, 5);
        assert!(csv.starts_with("# H=15 min_size=5 M=2\nobs_index,cell_index\n0,0\n"));
    }
}
