//! Observational entropy of ordered coarse-graining sequences.
//!
//! For a sequence `(C_1, ..., C_n)` the branch probabilities are
//! `p_i = tr[P_{i_n}...P_{i_1} rho P_{i_1}...P_{i_n}]` and the branch volumes
//! `V_i = tr[P_{i_n}...P_{i_1} P_{i_1}...P_{i_n}]` (Kraus steps use `K` on the
//! left and `K^dag` on the right). The entropy is `-sum_i p_i ln(p_i / V_i)`
//! with `0 ln 0 = 0`, in nats.

mod tree;

pub use tree::{BranchTree, PROBABILITY_SLACK, VOLUME_FLOOR};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CoarseGraining, KrausCoarseGraining, Label, QuantumState, TOL};

/// One measurement in a sequence.
#[derive(Clone, Debug)]
pub enum Step {
    Projective(CoarseGraining),
    Kraus(KrausCoarseGraining),
}

impl Step {
    pub fn dim(&self) -> usize {
        match self {
            Step::Projective(cg) => cg.dim(),
            Step::Kraus(k) => k.dim(),
        }
    }
}

impl From<CoarseGraining> for Step {
    fn from(cg: CoarseGraining) -> Self {
        Step::Projective(cg)
    }
}

impl From<KrausCoarseGraining> for Step {
    fn from(k: KrausCoarseGraining) -> Self {
        Step::Kraus(k)
    }
}

/// Ordered, nonempty tuple of measurements on a common space. `C_1` is
/// applied first.
#[derive(Clone, Debug)]
pub struct MeasurementSequence {
    dim: usize,
    steps: Vec<Step>,
}

impl MeasurementSequence {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        let dim = steps.first().ok_or(Error::EmptySequence)?.dim();
        if let Some(bad) = steps.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(MeasurementSequence { dim, steps })
    }

    pub fn single(cg: CoarseGraining) -> Self {
        MeasurementSequence {
            dim: cg.dim(),
            steps: vec![Step::Projective(cg)],
        }
    }

    pub fn projective(cgs: Vec<CoarseGraining>) -> Result<Self> {
        Self::new(cgs.into_iter().map(Step::Projective).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_projective(&self) -> bool {
        self.steps.iter().all(|s| matches!(s, Step::Projective(_)))
    }

    /// The sequence with one more measurement at the end.
    pub fn then(&self, step: impl Into<Step>) -> Result<Self> {
        let mut steps = self.steps.clone();
        steps.push(step.into());
        Self::new(steps)
    }
}

/// One branch of a measurement sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub multi_index: Vec<Label>,
    pub probability: f64,
    pub volume: f64,
}

/// The `(i, p_i, V_i)` records of a measurement sequence on one state, in
/// lexicographic order of the element indices.
#[derive(Clone, Debug, Serialize)]
pub struct MacrostateDistribution {
    pub dim: usize,
    pub projective: bool,
    pub records: Vec<Record>,
}

impl MacrostateDistribution {
    /// `-sum p ln(p / V)`.
    pub fn entropy(&self) -> f64 {
        -self
            .records
            .iter()
            .filter(|r| r.probability > 0.0)
            .map(|r| r.probability * (r.probability / r.volume).ln())
            .sum::<f64>()
    }

    /// `-sum p ln p`.
    pub fn shannon(&self) -> f64 {
        -self
            .records
            .iter()
            .filter(|r| r.probability > 0.0)
            .map(|r| r.probability * r.probability.ln())
            .sum::<f64>()
    }

    /// `sum p ln V`.
    pub fn mean_boltzmann(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.probability > 0.0)
            .map(|r| r.probability * r.volume.ln())
            .sum()
    }

    /// `D_KL(p || V / dim)`.
    pub fn kl_from_uniform(&self) -> f64 {
        let d = self.dim as f64;
        self.records
            .iter()
            .filter(|r| r.probability > 0.0)
            .map(|r| r.probability * (r.probability * d / r.volume).ln())
            .sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.records.iter().map(|r| r.probability).sum()
    }

    pub fn total_volume(&self) -> f64 {
        self.records.iter().map(|r| r.volume).sum()
    }
}

pub fn macrostate_distribution(
    state: &QuantumState,
    seq: &MeasurementSequence,
) -> Result<MacrostateDistribution> {
    check_dim(state, seq.dim())?;
    BranchTree::compile(seq)?.distribution(state)
}

/// Observational entropy `S_{C_1,...,C_n}(rho)`.
pub fn observational_entropy(state: &QuantumState, seq: &MeasurementSequence) -> Result<f64> {
    Ok(macrostate_distribution(state, seq)?.entropy())
}

/// Shannon part and mean Boltzmann part of a single coarse-graining entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub shannon_part: f64,
    pub mean_boltzmann_part: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.shannon_part + self.mean_boltzmann_part
    }
}

pub fn entropy_decomposition(state: &QuantumState, cg: &CoarseGraining) -> Result<Decomposition> {
    let dist = macrostate_distribution(state, &MeasurementSequence::single(cg.clone()))?;
    Ok(Decomposition {
        shannon_part: dist.shannon(),
        mean_boltzmann_part: dist.mean_boltzmann(),
    })
}

/// `rho_cg = sum_i p_i P_i / V_i`.
pub fn coarse_grained_state(state: &QuantumState, cg: &CoarseGraining) -> Result<QuantumState> {
    check_dim(state, cg.dim())?;
    let dim = cg.dim();
    let mut rho = CMatrix::zeros(dim, dim);
    for p in cg.elements() {
        let prob = state.expectation(&p.matrix()).clamp(0.0, 1.0);
        rho += p.matrix().scale(prob / p.volume());
    }
    QuantumState::from_density_matrix(rho)
}

/// `-tr[rho ln rho]`, clamping eigenvalues in `[-1e-10, 0]` to zero.
pub fn von_neumann_entropy(state: &QuantumState) -> Result<f64> {
    if state.as_pure().is_some() {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for lambda in state.eigenvalues() {
        if lambda < -TOL {
            return Err(Error::NotAState(format!(
                "negative eigenvalue {lambda:.3e}"
            )));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Entropy, `D_KL(p || V / dim)` and `|S - (ln dim - D_KL)|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KlIdentity {
    pub entropy: f64,
    pub kl: f64,
    pub residual: f64,
}

pub fn kl_identity_check(state: &QuantumState, seq: &MeasurementSequence) -> Result<KlIdentity> {
    let dist = macrostate_distribution(state, seq)?;
    let entropy = dist.entropy();
    let kl = dist.kl_from_uniform();
    let residual = (entropy - ((seq.dim() as f64).ln() - kl)).abs();
    Ok(KlIdentity {
        entropy,
        kl,
        residual,
    })
}

fn check_dim(state: &QuantumState, dim: usize) -> Result<()> {
    if state.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: state.dim(),
        });
    }
    Ok(())
}
