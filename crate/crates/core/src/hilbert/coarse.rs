use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    adjoint_matmul, commutator_residual, hermitian_eigen, hermiticity_residual, identity_residual,
    matmul, max_abs, trace, CMatrix, Check, Observable, Report, DEFAULT_DEGENERACY_TOL, TOL,
};
use crate::error::{Error, Result};

/// Opaque macrostate label: an eigenvalue, a bin edge, a particle count, a
/// name, or a tuple of labels for product and joint coarse-grainings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Number(f64),
    Text(String),
    Tuple(Vec<Label>),
}

impl Label {
    pub fn index(k: usize) -> Self {
        Label::Number(k as f64)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Number(x) => write!(f, "{x}"),
            Label::Text(s) => write!(f, "{s}"),
            Label::Tuple(items) => {
                write!(f, "(")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Orthogonal projector, stored as an orthonormal basis of its range.
#[derive(Clone, Debug)]
pub struct Projector {
    basis: CMatrix,
}

impl Projector {
    /// `basis` must have orthonormal columns within `1e-10`.
    pub fn from_basis(basis: CMatrix) -> Result<Self> {
        if basis.ncols() == 0 {
            return Err(Error::InvalidProjector("zero-rank projector".into()));
        }
        let residual = identity_residual(&(basis.adjoint() * &basis));
        if residual > TOL {
            return Err(Error::InvalidProjector(format!(
                "basis columns not orthonormal (residual {residual:.3e})"
            )));
        }
        Ok(Projector { basis })
    }

    pub(crate) fn from_basis_unchecked(basis: CMatrix) -> Self {
        Projector { basis }
    }

    /// Checks `P^2 = P = P^dag` and integral trace, then extracts the range.
    pub fn from_matrix(matrix: &CMatrix) -> Result<Self> {
        let report = Self::matrix_report(matrix);
        if let Some(failure) = report.first_failure() {
            return Err(Error::InvalidProjector(format!(
                "{} check failed (residual {:.3e})",
                failure.name, failure.residual
            )));
        }
        let (values, vectors) = hermitian_eigen(matrix);
        let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.5).collect();
        let basis = CMatrix::from_fn(matrix.nrows(), keep.len(), |i, j| vectors[(i, keep[j])]);
        Self::from_basis(basis)
    }

    pub fn matrix_report(matrix: &CMatrix) -> Report {
        let mut r = Report::default();
        if matrix.nrows() != matrix.ncols() {
            r.push(Check::within("square", f64::INFINITY, 0.0));
            return r;
        }
        r.push(Check::within(
            "hermitian",
            hermiticity_residual(matrix),
            TOL,
        ));
        r.push(Check::within(
            "idempotent",
            max_abs(&(matrix * matrix - matrix)),
            TOL,
        ));
        let tr = trace(matrix).re;
        r.push(Check::within(
            "integral volume",
            (tr - tr.round()).abs(),
            1e-8,
        ));
        r.push(Check::within(
            "nonzero volume",
            if tr.round() >= 1.0 { 0.0 } else { 1.0 },
            0.0,
        ));
        r
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// `V = tr P`.
    pub fn volume(&self) -> f64 {
        self.basis.ncols() as f64
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn matrix(&self) -> CMatrix {
        matmul(&self.basis, &self.basis.adjoint())
    }
}

/// A complete set of mutually orthogonal projectors.
#[derive(Clone, Debug)]
pub struct CoarseGraining {
    dim: usize,
    elements: Vec<Projector>,
    labels: Vec<Label>,
}

impl CoarseGraining {
    /// Validates orthogonality and completeness within `1e-10`.
    pub fn new(elements: Vec<Projector>, labels: Vec<Label>) -> Result<Self> {
        let cg = Self::assemble(elements, labels)?;
        let residual = cg.gram_residual();
        if residual > TOL {
            return Err(Error::InvalidCoarseGraining(format!(
                "projectors not orthogonal and complete (residual {residual:.3e})"
            )));
        }
        Ok(cg)
    }

    fn assemble(elements: Vec<Projector>, labels: Vec<Label>) -> Result<Self> {
        let dim = elements
            .first()
            .map(Projector::dim)
            .ok_or_else(|| Error::InvalidCoarseGraining("no elements".into()))?;
        if labels.len() != elements.len() {
            return Err(Error::InvalidCoarseGraining(format!(
                "{} labels for {} elements",
                labels.len(),
                elements.len()
            )));
        }
        if let Some(bad) = elements.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let total: usize = elements.iter().map(Projector::rank).sum();
        if total != dim {
            return Err(Error::InvalidCoarseGraining(format!(
                "volumes sum to {total}, dimension is {dim}"
            )));
        }
        Ok(CoarseGraining {
            dim,
            elements,
            labels,
        })
    }

    /// Construction path for callers that produce orthonormal, complete
    /// bases by design (block-structured products over a sector).
    pub(crate) fn new_unchecked(elements: Vec<Projector>, labels: Vec<Label>) -> Result<Self> {
        Self::assemble(elements, labels)
    }

    /// Builds from explicit projector matrices after checking each one and
    /// the set as a whole.
    pub fn from_matrices(matrices: &[CMatrix], labels: Vec<Label>) -> Result<Self> {
        let report = Self::matrices_report(matrices);
        if let Some(failure) = report.first_failure() {
            return Err(Error::InvalidCoarseGraining(format!(
                "{} check failed (residual {:.3e})",
                failure.name, failure.residual
            )));
        }
        let elements = matrices
            .iter()
            .map(Projector::from_matrix)
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, labels)
    }

    /// Per-element projector checks plus pairwise orthogonality and
    /// completeness, measured on the matrices themselves.
    pub fn matrices_report(matrices: &[CMatrix]) -> Report {
        let mut r = Report::default();
        let Some(first) = matrices.first() else {
            r.push(Check::within("nonempty", 1.0, 0.0));
            return r;
        };
        let dim = first.nrows();
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                r.push(Check::within(
                    format!("element {k} dimension"),
                    f64::INFINITY,
                    0.0,
                ));
                return r;
            }
            for c in Projector::matrix_report(m).checks {
                r.push(Check::within(
                    format!("element {k} {}", c.name),
                    c.residual,
                    c.tolerance,
                ));
            }
        }
        let mut orth = 0.0_f64;
        for i in 0..matrices.len() {
            for j in (i + 1)..matrices.len() {
                orth = orth.max(max_abs(&matmul(&matrices[i], &matrices[j])));
            }
        }
        r.push(Check::within("mutual orthogonality", orth, TOL));
        let sum = matrices
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, m| acc + m);
        r.push(Check::within("completeness", identity_residual(&sum), TOL));
        r
    }

    /// The trivial coarse-graining `{I}`.
    pub fn trivial(dim: usize) -> Self {
        CoarseGraining {
            dim,
            elements: vec![Projector::from_basis_unchecked(CMatrix::identity(dim, dim))],
            labels: vec![Label::Text("I".into())],
        }
    }

    /// Rank-1 projectors onto the computational basis, labeled by index.
    pub fn computational(dim: usize) -> Self {
        Self::rank_one(&CMatrix::identity(dim, dim))
    }

    /// Rank-1 projectors onto the columns of a unitary, labeled by index.
    pub fn rank_one(unitary: &CMatrix) -> Self {
        let dim = unitary.nrows();
        let elements = (0..dim)
            .map(|k| Projector::from_basis_unchecked(unitary.columns(k, 1).into_owned()))
            .collect();
        CoarseGraining {
            dim,
            elements,
            labels: (0..dim).map(Label::index).collect(),
        }
    }

    /// Groups the columns of a unitary into projectors; `groups` must
    /// partition `0..dim`.
    pub fn from_column_groups(unitary: &CMatrix, groups: &[Vec<usize>]) -> Result<Self> {
        let dim = unitary.nrows();
        let elements = groups
            .iter()
            .map(|g| {
                let basis = CMatrix::from_fn(dim, g.len(), |i, j| unitary[(i, g[j])]);
                Projector::from_basis(basis)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, (0..groups.len()).map(Label::index).collect())
    }

    /// Coarse-graining from an eigendecomposition (`values` ascending,
    /// eigenvectors as orthonormal columns).
    pub fn from_spectrum(values: &[f64], vectors: &CMatrix, binning: Binning) -> Result<Self> {
        let groups = group_degenerate(values, binning.degeneracy_tol());
        let means: Vec<f64> = groups
            .iter()
            .map(|g| g.iter().map(|&k| values[k]).sum::<f64>() / g.len() as f64)
            .collect();
        let (members, labels): (Vec<Vec<usize>>, Vec<Label>) = match binning {
            Binning::Degenerate { .. } => (groups, means.into_iter().map(Label::Number).collect()),
            Binning::Shells { width, origin, .. } => {
                let origin = origin.unwrap_or_else(|| values.first().copied().unwrap_or(0.0));
                let mut bins: Vec<(i64, Vec<usize>)> = Vec::new();
                for (g, mean) in groups.into_iter().zip(means) {
                    let bin = ((mean - origin) / width).floor() as i64;
                    match bins.last_mut() {
                        Some((b, members)) if *b == bin => members.extend(g),
                        _ => bins.push((bin, g)),
                    }
                }
                bins.into_iter()
                    .map(|(b, m)| (m, Label::Number(origin + b as f64 * width)))
                    .unzip()
            }
        };
        let dim = vectors.nrows();
        let elements = members
            .iter()
            .map(|g| {
                Projector::from_basis_unchecked(CMatrix::from_fn(dim, g.len(), |i, j| {
                    vectors[(i, g[j])]
                }))
            })
            .collect();
        Self::new(elements, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Projector] {
        &self.elements
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.elements.iter().map(Projector::volume).collect()
    }

    /// Max deviation of the stacked bases' Gram matrix from the identity;
    /// covers orthonormality, mutual orthogonality and completeness at once.
    pub fn gram_residual(&self) -> f64 {
        let mut stacked = CMatrix::zeros(self.dim, self.dim);
        let mut col = 0;
        for p in &self.elements {
            stacked.columns_mut(col, p.rank()).copy_from(p.basis());
            col += p.rank();
        }
        identity_residual(&adjoint_matmul(&stacked, &stacked))
    }

    /// Reconstructs `sum_a label_a P_a` for numerically labeled elements.
    pub fn reconstruct(&self) -> Option<CMatrix> {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (p, label) in self.elements.iter().zip(&self.labels) {
            let Label::Number(a) = label else {
                return None;
            };
            acc += p.matrix().scale(*a);
        }
        Some(acc)
    }
}

/// How eigenvalues are turned into macrostates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Binning {
    /// One projector per group of (numerically) degenerate eigenvalues.
    Degenerate { tol: f64 },
    /// Half-open shells `[origin + k w, origin + (k+1) w)`; `origin`
    /// defaults to the lowest eigenvalue.
    Shells {
        width: f64,
        origin: Option<f64>,
        tol: f64,
    },
}

impl Binning {
    /// Shells of the given width, or exact degeneracy grouping when the
    /// width is zero.
    pub fn shells(width: f64, origin: Option<f64>) -> Self {
        if width > 0.0 {
            Binning::Shells {
                width,
                origin,
                tol: DEFAULT_DEGENERACY_TOL,
            }
        } else {
            Binning::Degenerate {
                tol: DEFAULT_DEGENERACY_TOL,
            }
        }
    }

    fn degeneracy_tol(&self) -> f64 {
        match *self {
            Binning::Degenerate { tol } | Binning::Shells { tol, .. } => tol,
        }
    }
}

/// Chains sorted eigenvalues whose consecutive gaps are within
/// `tol * scale`, where the scale is the spectral range (or the spectral
/// magnitude for a numerically flat spectrum).
fn group_degenerate(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let Some((&lo, &hi)) = values.first().zip(values.last()) else {
        return Vec::new();
    };
    let magnitude = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = (hi - lo).max(magnitude).max(f64::MIN_POSITIVE);
    let threshold = tol * scale;
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..values.len() {
        if values[k] - values[k - 1] <= threshold {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    groups
}

/// Spectral coarse-graining of an observable: degenerate eigenvalues (within
/// `degeneracy_tol` of the spectral range) share a projector labeled by their
/// mean.
pub fn coarse_graining_from_observable(
    obs: &Observable,
    degeneracy_tol: f64,
) -> Result<CoarseGraining> {
    let residual = hermiticity_residual(obs.matrix());
    if residual > TOL {
        return Err(Error::NonHermitian { residual });
    }
    let (values, vectors) = hermitian_eigen(obs.matrix());
    CoarseGraining::from_spectrum(
        &values,
        &vectors,
        Binning::Degenerate {
            tol: degeneracy_tol,
        },
    )
}

/// Energy-shell coarse-graining with half-open shells of width
/// `shell_width` anchored at `origin` (default: lowest eigenvalue). Empty
/// shells are dropped; labels carry the lower shell edge. A zero width falls
/// back to exact degeneracy grouping.
pub fn energy_shell_coarse_graining(
    obs: &Observable,
    shell_width: f64,
    origin: Option<f64>,
) -> Result<CoarseGraining> {
    if !(shell_width >= 0.0) {
        return Err(Error::Config(format!(
            "shell width {shell_width} is negative"
        )));
    }
    let residual = hermiticity_residual(obs.matrix());
    if residual > TOL {
        return Err(Error::NonHermitian { residual });
    }
    let (values, vectors) = hermitian_eigen(obs.matrix());
    CoarseGraining::from_spectrum(&values, &vectors, Binning::shells(shell_width, origin))
}

/// Joint coarse-graining `{P_i Q_j}` of two commuting coarse-grainings.
pub fn joint_coarse_graining(
    a: &CoarseGraining,
    b: &CoarseGraining,
    tol: f64,
) -> Result<CoarseGraining> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let a_mats: Vec<CMatrix> = a.elements().iter().map(Projector::matrix).collect();
    let b_mats: Vec<CMatrix> = b.elements().iter().map(Projector::matrix).collect();
    let mut worst = 0.0_f64;
    for p in &a_mats {
        for q in &b_mats {
            worst = worst.max(commutator_residual(p, q));
        }
    }
    if worst > tol {
        return Err(Error::NonCommuting { residual: worst });
    }
    let mut elements = Vec::new();
    let mut labels = Vec::new();
    for (p, la) in a.elements().iter().zip(a.labels()) {
        for (q, lb) in b_mats.iter().zip(b.labels()) {
            // Range of P Q is the eigenvalue-1 subspace of B^dag Q B inside ran P.
            let compressed = adjoint_matmul(p.basis(), &matmul(q, p.basis()));
            let (values, vectors) = hermitian_eigen(&compressed);
            let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 0.5).collect();
            if keep.is_empty() {
                continue;
            }
            let local = CMatrix::from_fn(vectors.nrows(), keep.len(), |i, j| vectors[(i, keep[j])]);
            elements.push(Projector::from_basis_unchecked(p.basis() * local));
            labels.push(Label::Tuple(vec![la.clone(), lb.clone()]));
        }
    }
    CoarseGraining::new(elements, labels)
}

/// Trace-preserving set of Kraus operators, `sum_i K_i^dag K_i = I`.
#[derive(Clone, Debug)]
pub struct KrausCoarseGraining {
    dim: usize,
    elements: Vec<CMatrix>,
    labels: Vec<Label>,
}

impl KrausCoarseGraining {
    pub fn new(elements: Vec<CMatrix>, labels: Vec<Label>) -> Result<Self> {
        let report = Self::report_for(&elements);
        if let Some(failure) = report.first_failure() {
            if failure.name == "trace preserving" {
                return Err(Error::NotTracePreserving {
                    residual: failure.residual,
                });
            }
            return Err(Error::InvalidCoarseGraining(failure.name.clone()));
        }
        if labels.len() != elements.len() {
            return Err(Error::InvalidCoarseGraining(format!(
                "{} labels for {} Kraus operators",
                labels.len(),
                elements.len()
            )));
        }
        Ok(KrausCoarseGraining {
            dim: elements[0].nrows(),
            elements,
            labels,
        })
    }

    pub fn report_for(elements: &[CMatrix]) -> Report {
        let mut r = Report::default();
        let Some(first) = elements.first() else {
            r.push(Check::within("nonempty", 1.0, 0.0));
            return r;
        };
        let dim = first.nrows();
        if elements
            .iter()
            .any(|k| k.nrows() != dim || k.ncols() != dim)
        {
            r.push(Check::within(
                "square, equal dimensions",
                f64::INFINITY,
                0.0,
            ));
            return r;
        }
        let sum = elements
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        r.push(Check::within(
            "trace preserving",
            identity_residual(&sum),
            TOL,
        ));
        r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }
}

impl From<&CoarseGraining> for KrausCoarseGraining {
    fn from(cg: &CoarseGraining) -> Self {
        KrausCoarseGraining {
            dim: cg.dim(),
            elements: cg.elements().iter().map(Projector::matrix).collect(),
            labels: cg.labels().to_vec(),
        }
    }
}
