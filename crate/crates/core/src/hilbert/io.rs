//! JSON file formats for matrices and coarse-grainings.
//!
//! A matrix is `{"dim": n, "re": [[...]], "im": [[...]]}` with row-major
//! `n x n` arrays. A coarse-graining is `{"dim": n, "elements": [matrix, ...],
//! "labels": [...]}`, with an optional `"kind": "kraus"` for generalized
//! measurements. Every loader runs the invariant checks of the target type.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CMatrix, CoarseGraining, KrausCoarseGraining, Label, Observable, QuantumState, C64};
use crate::entropy::Step;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let re = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].im).collect())
            .collect();
        MatrixFile {
            dim: n,
            re,
            im: Some(im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("matrix dimension must be positive".into()));
        }
        check_square("re", &self.re, n)?;
        if let Some(im) = &self.im {
            check_square("im", im, n)?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }
}

fn check_square(name: &str, rows: &[Vec<f64>], n: usize) -> Result<()> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("\"{name}\" is not a {n}x{n} array")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    #[default]
    Projector,
    Kraus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoarseGrainingFile {
    pub dim: usize,
    pub elements: Vec<MatrixFile>,
    #[serde(default)]
    pub labels: Vec<Label>,
    #[serde(default)]
    pub kind: ElementKind,
}

impl CoarseGrainingFile {
    pub fn from_coarse_graining(cg: &CoarseGraining) -> Self {
        CoarseGrainingFile {
            dim: cg.dim(),
            elements: cg
                .elements()
                .iter()
                .map(|p| MatrixFile::from_matrix(&p.matrix()))
                .collect(),
            labels: cg.labels().to_vec(),
            kind: ElementKind::Projector,
        }
    }

    pub fn matrices(&self) -> Result<Vec<CMatrix>> {
        let mats = self
            .elements
            .iter()
            .map(MatrixFile::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        if let Some(m) = mats.iter().find(|m| m.nrows() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        Ok(mats)
    }

    fn labels_or_indices(&self) -> Vec<Label> {
        if self.labels.is_empty() {
            (0..self.elements.len()).map(Label::index).collect()
        } else {
            self.labels.clone()
        }
    }

    /// Validates and converts to a measurement step.
    pub fn to_step(&self) -> Result<Step> {
        let mats = self.matrices()?;
        let labels = self.labels_or_indices();
        Ok(match self.kind {
            ElementKind::Projector => {
                Step::Projective(CoarseGraining::from_matrices(&mats, labels)?)
            }
            ElementKind::Kraus => Step::Kraus(KrausCoarseGraining::new(mats, labels)?),
        })
    }

    pub fn to_coarse_graining(&self) -> Result<CoarseGraining> {
        match self.to_step()? {
            Step::Projective(cg) => Ok(cg),
            Step::Kraus(_) => Err(Error::InvalidCoarseGraining(
                "expected projective elements, found Kraus operators".into(),
            )),
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    read_json::<MatrixFile>(path)?.to_matrix()
}

pub fn load_state(path: &Path) -> Result<QuantumState> {
    QuantumState::from_density_matrix(load_matrix(path)?)
}

pub fn load_observable(path: &Path) -> Result<Observable> {
    Observable::new(load_matrix(path)?)
}

pub fn load_step(path: &Path) -> Result<Step> {
    read_json::<CoarseGrainingFile>(path)?.to_step()
}

pub fn load_coarse_graining(path: &Path) -> Result<CoarseGraining> {
    read_json::<CoarseGrainingFile>(path)?.to_coarse_graining()
}

/// Serializes with shortest round-trip float formatting, so reloading is
/// bit-identical.
pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&MatrixFile::from_matrix(m)).expect("matrix serializes")
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    fs::write(path, matrix_to_json(m))?;
    Ok(())
}

pub fn write_coarse_graining(path: &Path, cg: &CoarseGraining) -> Result<()> {
    let text = serde_json::to_string_pretty(&CoarseGrainingFile::from_coarse_graining(cg))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrix_json_roundtrip_is_bit_identical(
            entries in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 9)
        ) {
            let m = CMatrix::from_fn(3, 3, |i, j| {
                let (re, im) = entries[3 * i + j];
                C64::new(re, im)
            });
            let text = matrix_to_json(&m);
            let back: MatrixFile = serde_json::from_str(&text).unwrap();
            let m2 = back.to_matrix().unwrap();
            for (a, b) in m.iter().zip(m2.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn missing_imaginary_part_is_zero() {
        let f: MatrixFile = serde_json::from_str(r#"{"dim":2,"re":[[1,0],[0,0]]}"#).unwrap();
        let m = f.to_matrix().unwrap();
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn ragged_rows_rejected() {
        let f: MatrixFile = serde_json::from_str(r#"{"dim":2,"re":[[1,0],[0]]}"#).unwrap();
        assert!(matches!(f.to_matrix(), Err(Error::Parse(_))));
    }

    #[test]
    fn coarse_graining_file_roundtrip() {
        let cg = CoarseGraining::computational(3);
        let file = CoarseGrainingFile::from_coarse_graining(&cg);
        let text = serde_json::to_string(&file).unwrap();
        let back: CoarseGrainingFile = serde_json::from_str(&text).unwrap();
        let cg2 = back.to_coarse_graining().unwrap();
        assert_eq!(cg2.volumes(), vec![1.0; 3]);
        assert_eq!(cg2.labels(), cg.labels());
    }
}
