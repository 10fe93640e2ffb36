//! Classical observational entropy on weighted sample spaces.
//!
//! A sample space carries a measure weight per point (cardinality for
//! countable sets, `dgamma` cell measure for discretized continua) and a
//! density normalized so that `sum_gamma rho_gamma w_gamma = 1`. Classical
//! coarse-grainings always commute, so a list of them is evaluated through
//! the single partition formed by intersecting their cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Label;

const NORMALIZATION_TOL: f64 = 1e-10;

fn ones() -> Vec<f64> {
    Vec::new()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalSpace {
    points: Vec<Label>,
    #[serde(default = "ones")]
    weights: Vec<f64>,
    density: Vec<f64>,
}

impl ClassicalSpace {
    /// Empty `weights` means unit weight per point.
    pub fn new(points: Vec<Label>, weights: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let space = ClassicalSpace {
            points,
            weights,
            density,
        };
        space.validated()
    }

    fn validated(mut self) -> Result<Self> {
        let n = self.points.len();
        if n == 0 {
            return Err(Error::NotADensity("space has no points".into()));
        }
        if self.weights.is_empty() {
            self.weights = vec![1.0; n];
        }
        if self.weights.len() != n || self.density.len() != n {
            return Err(Error::NotADensity(format!(
                "{n} points, {} weights, {} density values",
                self.weights.len(),
                self.density.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::NotADensity(format!("weight {w} is not positive")));
        }
        if let Some(r) = self
            .density
            .iter()
            .find(|r| !(**r >= 0.0) || !r.is_finite())
        {
            return Err(Error::NotADensity(format!("density value {r} is negative")));
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotADensity(format!("total probability {mass}")));
        }
        Ok(self)
    }

    /// Unit-weight space with the given point probabilities.
    pub fn from_probabilities(probabilities: &[f64]) -> Result<Self> {
        Self::new(
            (0..probabilities.len()).map(Label::index).collect(),
            vec![1.0; probabilities.len()],
            probabilities.to_vec(),
        )
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Label] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `sum_gamma w_gamma`.
    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn mass(&self) -> f64 {
        self.density
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| r * w)
            .sum()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: ClassicalSpace = serde_json::from_str(&fs::read_to_string(path)?)?;
        raw.validated()
    }
}

/// A partition of a sample space into labeled cells of point indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalCoarseGraining {
    cells: Vec<Vec<usize>>,
    #[serde(default)]
    labels: Vec<Label>,
}

impl ClassicalCoarseGraining {
    pub fn new(cells: Vec<Vec<usize>>, labels: Vec<Label>) -> Self {
        let labels = if labels.is_empty() {
            (0..cells.len()).map(Label::index).collect()
        } else {
            labels
        };
        ClassicalCoarseGraining { cells, labels }
    }

    /// Cells of consecutive points with the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Self {
        let mut start = 0;
        let cells = sizes
            .iter()
            .map(|&s| {
                let cell = (start..start + s).collect();
                start += s;
                cell
            })
            .collect();
        Self::new(cells, Vec::new())
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Cell index of every point; errors unless the cells are disjoint and
    /// cover `0..n_points`.
    pub fn assignment(&self, n_points: usize) -> Result<Vec<usize>> {
        if !self.labels.is_empty() && self.labels.len() != self.cells.len() {
            return Err(Error::PartitionMismatch(format!(
                "{} labels for {} cells",
                self.labels.len(),
                self.cells.len()
            )));
        }
        let mut owner = vec![usize::MAX; n_points];
        for (c, cell) in self.cells.iter().enumerate() {
            for &p in cell {
                if p >= n_points {
                    return Err(Error::PartitionMismatch(format!(
                        "cell {c} references unknown point {p}"
                    )));
                }
                if owner[p] != usize::MAX {
                    return Err(Error::PartitionMismatch(format!(
                        "point {p} lies in cells {} and {c}",
                        owner[p]
                    )));
                }
                owner[p] = c;
            }
        }
        if let Some(p) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::PartitionMismatch(format!("point {p} is in no cell")));
        }
        Ok(owner)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw: ClassicalCoarseGraining = serde_json::from_str(&fs::read_to_string(path)?)?;
        Ok(Self::new(raw.cells, raw.labels))
    }
}

/// One cell of the intersection partition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalRecord {
    pub cells: Vec<usize>,
    pub probability: f64,
    pub volume: f64,
}

/// Intersection partition of all `cgs`, keyed by the tuple of cell indices
/// (sorted, so the summation order is fixed).
pub fn classical_distribution(
    space: &ClassicalSpace,
    cgs: &[ClassicalCoarseGraining],
) -> Result<Vec<ClassicalRecord>> {
    let owners = cgs
        .iter()
        .map(|cg| cg.assignment(space.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut cells: BTreeMap<Vec<usize>, (f64, f64)> = BTreeMap::new();
    for gamma in 0..space.len() {
        let key: Vec<usize> = owners.iter().map(|o| o[gamma]).collect();
        let entry = cells.entry(key).or_insert((0.0, 0.0));
        entry.0 += space.density[gamma] * space.weights[gamma];
        entry.1 += space.weights[gamma];
    }
    Ok(cells
        .into_iter()
        .map(|(cells, (probability, volume))| ClassicalRecord {
            cells,
            probability,
            volume,
        })
        .collect())
}

/// `-sum_i p_i ln(p_i / V_i)` over the intersection of all `cgs`. An empty
/// list is the trivial coarse-graining.
pub fn classical_observational_entropy(
    space: &ClassicalSpace,
    cgs: &[ClassicalCoarseGraining],
) -> Result<f64> {
    Ok(-classical_distribution(space, cgs)?
        .iter()
        .filter(|r| r.probability > 0.0)
        .map(|r| r.probability * (r.probability / r.volume).ln())
        .sum::<f64>())
}

/// `-sum_gamma rho_gamma ln(rho_gamma) w_gamma`.
pub fn gibbs_entropy(space: &ClassicalSpace) -> Result<f64> {
    let mass = space.mass();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotADensity(format!("total probability {mass}")));
    }
    Ok(-space
        .density
        .iter()
        .zip(&space.weights)
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, w)| r * r.ln() * w)
        .sum::<f64>())
}

/// One phase-space axis split into equal bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub bins: usize,
}

impl Axis {
    pub fn width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }

    fn center(&self, k: usize) -> f64 {
        self.min + (k as f64 + 0.5) * self.width()
    }
}

/// Regular grid on the phase space of `particle_count` particles. Each cell
/// has measure `(prod of bin widths) / h^(3N)`, so a cell of volume `h^(3N)`
/// counts as one microstate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub particle_count: usize,
    pub axes: Vec<Axis>,
    #[serde(default = "unit_planck")]
    pub planck_constant: f64,
}

fn unit_planck() -> f64 {
    1.0
}

impl PhaseSpaceGrid {
    pub fn new(particle_count: usize, axes: Vec<Axis>) -> Self {
        PhaseSpaceGrid {
            particle_count,
            axes,
            planck_constant: 1.0,
        }
    }

    pub fn with_planck(mut self, h: f64) -> Self {
        self.planck_constant = h;
        self
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn cell_weight(&self) -> f64 {
        let raw: f64 = self.axes.iter().map(Axis::width).product();
        raw / self.planck_constant.powi(3 * self.particle_count as i32)
    }

    fn validate(&self) -> Result<()> {
        if self.particle_count == 0 || self.axes.is_empty() {
            return Err(Error::Config(
                "grid needs at least one particle and one axis".into(),
            ));
        }
        if !(self.planck_constant > 0.0) {
            return Err(Error::Config("Planck constant must be positive".into()));
        }
        for a in &self.axes {
            if a.bins == 0 || !(a.max > a.min) {
                return Err(Error::Config(format!("degenerate axis {a:?}")));
            }
        }
        Ok(())
    }
}

/// Discretizes a phase-space density: one point per grid cell (labeled by
/// its center), weight equal to the normalized cell measure, and the sampled
/// density rescaled so that `sum rho w = 1`.
pub fn build_phase_space<F>(grid: &PhaseSpaceGrid, density_sampler: F) -> Result<ClassicalSpace>
where
    F: Fn(&[f64]) -> f64,
{
    grid.validate()?;
    let weight = grid.cell_weight();
    let n = grid.cell_count();
    let mut points = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    let mut digits = vec![0usize; grid.axes.len()];
    for _ in 0..n {
        let center: Vec<f64> = digits
            .iter()
            .zip(&grid.axes)
            .map(|(&k, a)| a.center(k))
            .collect();
        let value = density_sampler(&center);
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NotADensity(format!(
                "sampler returned {value} at {center:?}"
            )));
        }
        raw.push(value);
        points.push(Label::Tuple(
            center.into_iter().map(Label::Number).collect(),
        ));
        for axis in (0..digits.len()).rev() {
            digits[axis] += 1;
            if digits[axis] < grid.axes[axis].bins {
                break;
            }
            digits[axis] = 0;
        }
    }
    let mass: f64 = raw.iter().sum::<f64>() * weight;
    if mass <= 0.0 {
        return Err(Error::ZeroDensity);
    }
    let density = raw.into_iter().map(|v| v / mass).collect();
    ClassicalSpace::new(points, vec![weight; n], density)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_saturates() {
        let space = ClassicalSpace::from_probabilities(&[0.125; 8]).unwrap();
        let cg = ClassicalCoarseGraining::contiguous(&[2, 6]);
        let s = classical_observational_entropy(&space, &[cg]).unwrap();
        assert!((s - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn point_mass_gives_log_volume() {
        let mut p = vec![0.0; 6];
        p[4] = 1.0;
        let space = ClassicalSpace::from_probabilities(&p).unwrap();
        let cg = ClassicalCoarseGraining::contiguous(&[3, 3]);
        let s = classical_observational_entropy(&space, &[cg]).unwrap();
        assert!((s - 3f64.ln()).abs() < 1e-14);
        assert_eq!(gibbs_entropy(&space).unwrap(), 0.0);
    }

    #[test]
    fn gibbs_of_uniform_measure() {
        let w = vec![0.5, 1.5, 2.0];
        let total: f64 = w.iter().sum();
        let density = vec![1.0 / total; 3];
        let space = ClassicalSpace::new((0..3).map(Label::index).collect(), w, density).unwrap();
        assert!((gibbs_entropy(&space).unwrap() - total.ln()).abs() < 1e-14);
    }

    #[test]
    fn partition_errors() {
        let space = ClassicalSpace::from_probabilities(&[0.5, 0.5]).unwrap();
        let overlap = ClassicalCoarseGraining::new(vec![vec![0, 1], vec![1]], Vec::new());
        assert!(matches!(
            classical_observational_entropy(&space, &[overlap]),
            Err(Error::PartitionMismatch(_))
        ));
        let unknown = ClassicalCoarseGraining::new(vec![vec![0, 1, 2]], Vec::new());
        assert!(classical_observational_entropy(&space, &[unknown]).is_err());
        let gap = ClassicalCoarseGraining::new(vec![vec![0]], Vec::new());
        assert!(classical_observational_entropy(&space, &[gap]).is_err());
    }

    #[test]
    fn bad_densities() {
        assert!(ClassicalSpace::from_probabilities(&[0.5, 0.4]).is_err());
        assert!(ClassicalSpace::from_probabilities(&[1.5, -0.5]).is_err());
        assert!(ClassicalSpace::new(vec![Label::index(0)], vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn single_cell_of_planck_volume() {
        let h = 2.0;
        let grid = PhaseSpaceGrid::new(
            1,
            vec![Axis {
                min: 0.0,
                max: 8.0,
                bins: 1,
            }],
        )
        .with_planck(h);
        let space = build_phase_space(&grid, |_| 1.0).unwrap();
        assert_eq!(space.len(), 1);
        assert!((space.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_one_dimensional_grid() {
        let grid = PhaseSpaceGrid::new(
            1,
            vec![Axis {
                min: 0.0,
                max: 4.0,
                bins: 4,
            }],
        );
        let space = build_phase_space(&grid, |_| 3.0).unwrap();
        assert_eq!(space.weights(), &[1.0; 4]);
        assert!(space.density().iter().all(|&r| (r - 0.25).abs() < 1e-15));
    }

    #[test]
    fn doubling_planck_divides_by_eight() {
        let axes = vec![
            Axis {
                min: -1.0,
                max: 1.0,
                bins: 3,
            },
            Axis {
                min: 0.0,
                max: 2.0,
                bins: 2,
            },
        ];
        let a = build_phase_space(&PhaseSpaceGrid::new(1, axes.clone()), |x| x[0].abs()).unwrap();
        let b = build_phase_space(&PhaseSpaceGrid::new(1, axes).with_planck(2.0), |x| {
            x[0].abs()
        })
        .unwrap();
        for (wa, wb) in a.weights().iter().zip(b.weights()) {
            assert!((wa / wb - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_density_rejected() {
        let grid = PhaseSpaceGrid::new(
            1,
            vec![Axis {
                min: 0.0,
                max: 1.0,
                bins: 2,
            }],
        );
        assert!(matches!(
            build_phase_space(&grid, |_| 0.0),
            Err(Error::ZeroDensity)
        ));
    }

    #[test]
    fn file_format_defaults_weights() {
        let raw = r#"{"points": [0, 1], "density": [0.25, 0.75]}"#;
        let space: ClassicalSpace = serde_json::from_str(raw).unwrap();
        let space = space.validated().unwrap();
        assert_eq!(space.weights(), &[1.0, 1.0]);
        let cg: ClassicalCoarseGraining = serde_json::from_str(r#"{"cells": [[0], [1]]}"#).unwrap();
        assert!(cg.assignment(2).is_ok());
    }
}
