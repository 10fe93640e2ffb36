use super::{CMatrix, CoarseGraining, Label, Projector, QuantumState, C64};
use crate::error::{Error, Result};

/// Tensor-product structure `H_A (x) H_B (x) ... (x) H_C`.
///
/// Composite indices follow the Kronecker convention: the first subsystem is
/// the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpace {
    subsystem_dims: Vec<usize>,
    total_dim: usize,
}

impl TensorSpace {
    pub fn new(subsystem_dims: Vec<usize>) -> Result<Self> {
        if subsystem_dims.is_empty() || subsystem_dims.contains(&0) {
            return Err(Error::Config(format!(
                "subsystem dimensions must be positive and nonempty, got {subsystem_dims:?}"
            )));
        }
        let total_dim = subsystem_dims.iter().product();
        Ok(TensorSpace {
            subsystem_dims,
            total_dim,
        })
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn parties(&self) -> usize {
        self.subsystem_dims.len()
    }

    /// Splits a composite index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.parties()];
        for k in (0..self.parties()).rev() {
            out[k] = index % self.subsystem_dims[k];
            index /= self.subsystem_dims[k];
        }
        out
    }

    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.subsystem_dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// Reduced state of subsystem `party`.
    pub fn reduced_state(&self, state: &QuantumState, party: usize) -> Result<QuantumState> {
        if state.dim() != self.total_dim {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim,
                found: state.dim(),
            });
        }
        if party >= self.parties() {
            return Err(Error::Config(format!("no subsystem {party}")));
        }
        let d = self.subsystem_dims[party];
        let rho = state.density_matrix();
        let mut reduced = CMatrix::zeros(d, d);
        for i in 0..self.total_dim {
            let di = self.digits(i);
            for a in 0..d {
                let mut dj = di.clone();
                dj[party] = a;
                let j = self.compose(&dj);
                reduced[(di[party], a)] += rho[(i, j)];
            }
        }
        Ok(QuantumState::mixed_unchecked(reduced))
    }
}

/// Product coarse-graining `{P_l^A (x) P_m^B (x) ... (x) P_n^C}` with tuple
/// labels `(l, m, ..., n)` and volumes `V_l V_m ... V_n`.
pub fn tensor_product_coarse_graining(
    parts: &[CoarseGraining],
    space: &TensorSpace,
) -> Result<CoarseGraining> {
    if parts.len() != space.parties() {
        return Err(Error::DimensionMismatch {
            expected: space.parties(),
            found: parts.len(),
        });
    }
    for (cg, &d) in parts.iter().zip(space.subsystem_dims()) {
        if cg.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cg.dim(),
            });
        }
    }
    let mut elements = vec![CMatrix::from_element(1, 1, C64::new(1.0, 0.0))];
    let mut labels: Vec<Vec<Label>> = vec![Vec::new()];
    for cg in parts {
        let mut next_elements = Vec::with_capacity(elements.len() * cg.len());
        let mut next_labels = Vec::with_capacity(elements.len() * cg.len());
        for (basis, label) in elements.iter().zip(&labels) {
            for (p, l) in cg.elements().iter().zip(cg.labels()) {
                next_elements.push(basis.kronecker(p.basis()));
                let mut composite = label.clone();
                composite.push(l.clone());
                next_labels.push(composite);
            }
        }
        elements = next_elements;
        labels = next_labels;
    }
    let projectors = elements
        .into_iter()
        .map(Projector::from_basis_unchecked)
        .collect();
    CoarseGraining::new(projectors, labels.into_iter().map(Label::Tuple).collect())
}
