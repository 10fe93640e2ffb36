use super::{
    hermitian_eigenvalues, hermiticity_residual, outer, trace, CMatrix, CVector, Check, Report,
    C64, TOL,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A density operator on a finite Hilbert space.
///
/// Pure states keep their state vector so that probabilities can be computed
/// with matrix-vector products; `density_matrix` materializes `|psi><psi|`
/// on demand.
#[derive(Clone, Debug)]
pub struct QuantumState {
    repr: Repr,
}

impl QuantumState {
    /// Validates Hermiticity, unit trace and positivity within `1e-10`.
    pub fn from_density_matrix(matrix: CMatrix) -> Result<Self> {
        let report = Self::density_report(&matrix);
        if let Some(failure) = report.first_failure() {
            return Err(Error::NotAState(format!(
                "{} check failed (residual {:.3e})",
                failure.name, failure.residual
            )));
        }
        Ok(QuantumState {
            repr: Repr::Mixed(matrix),
        })
    }

    /// A pure state; the vector must have unit norm within `1e-10`.
    pub fn from_pure(vector: CVector) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::NotAState("empty state vector".into()));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::NotAState(format!("state vector norm {norm}")));
        }
        Ok(QuantumState {
            repr: Repr::Pure(vector),
        })
    }

    /// Normalizes `vector` before wrapping it.
    pub fn from_unnormalized(vector: CVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotAState("zero or non-finite state vector".into()));
        }
        Self::from_pure(vector.unscale(norm))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim, dim).unscale(dim as f64);
        QuantumState {
            repr: Repr::Mixed(m),
        }
    }

    /// The computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        QuantumState {
            repr: Repr::Pure(v),
        }
    }

    /// Diagonal state with the given populations (validated).
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(populations[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::from_density_matrix(m)
    }

    /// Wraps a matrix already known to be a valid state (e.g. the unitary
    /// image of a validated one).
    pub(crate) fn mixed_unchecked(matrix: CMatrix) -> Self {
        QuantumState {
            repr: Repr::Mixed(matrix),
        }
    }

    pub(crate) fn pure_unchecked(vector: CVector) -> Self {
        QuantumState {
            repr: Repr::Pure(vector),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Pure(v) => v.len(),
            Repr::Mixed(m) => m.nrows(),
        }
    }

    pub fn as_pure(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn as_mixed(&self) -> Option<&CMatrix> {
        match &self.repr {
            Repr::Pure(_) => None,
            Repr::Mixed(m) => Some(m),
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => outer(v),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// Eigenvalues of the density operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pure(_) => {
                let mut ev = vec![0.0; self.dim()];
                ev[self.dim() - 1] = 1.0;
                ev
            }
            Repr::Mixed(m) => hermitian_eigenvalues(m),
        }
    }

    /// `tr[A rho]`, real part.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        match &self.repr {
            Repr::Pure(v) => (v.adjoint() * op * v)[(0, 0)].re,
            Repr::Mixed(m) => trace(&(op * m)).re,
        }
    }

    /// `U rho U^dag` for a unitary `U`.
    pub fn conjugated(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(match &self.repr {
            Repr::Pure(v) => Self::pure_unchecked(unitary * v),
            Repr::Mixed(m) => Self::mixed_unchecked(unitary * m * unitary.adjoint()),
        })
    }

    /// Tensor product `self (x) other`, with `self` as the leading factor.
    pub fn kron(&self, other: &QuantumState) -> QuantumState {
        match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => Self::pure_unchecked(a.kronecker(b)),
            _ => Self::mixed_unchecked(self.density_matrix().kronecker(&other.density_matrix())),
        }
    }

    /// Measured residuals of every state invariant.
    pub fn report(&self) -> Report {
        match &self.repr {
            Repr::Pure(v) => {
                let mut r = Report::default();
                r.push(Check::within("unit norm", (v.norm() - 1.0).abs(), TOL));
                r
            }
            Repr::Mixed(m) => Self::density_report(m),
        }
    }

    /// Hermiticity, unit trace and positivity of a candidate density matrix.
    pub fn density_report(m: &CMatrix) -> Report {
        let mut r = Report::default();
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            r.push(Check::within("square", f64::INFINITY, 0.0));
            return r;
        }
        let herm = hermiticity_residual(m);
        r.push(Check::within("hermitian", herm, TOL));
        let tr = trace(m);
        r.push(Check::within(
            "unit trace",
            (tr - C64::new(1.0, 0.0)).norm(),
            TOL,
        ));
        let min_eig = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
        r.push(Check::within(
            "positive semidefinite",
            (-min_eig).max(0.0),
            TOL,
        ));
        r
    }
}

/// A Hermitian operator.
#[derive(Clone, Debug)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let residual = hermiticity_residual(&matrix);
        if residual > TOL {
            return Err(Error::NonHermitian { residual });
        }
        Ok(Observable { matrix })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Observable { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn report(&self) -> Report {
        Self::matrix_report(&self.matrix)
    }

    /// Squareness and Hermiticity of a candidate observable.
    pub fn matrix_report(m: &CMatrix) -> Report {
        let mut r = Report::default();
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            r.push(Check::within("square", f64::INFINITY, 0.0));
            return r;
        }
        r.push(Check::within("hermitian", hermiticity_residual(m), TOL));
        r
    }
}
