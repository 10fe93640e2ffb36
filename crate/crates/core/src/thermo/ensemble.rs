use serde::{Deserialize, Serialize};

use super::LatticeModel;
use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, QuantumState, C64, DEFAULT_DEGENERACY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSpec {
    /// Uniform over eigenstates with energy in `[energy, energy + width)`. A
    /// zero width selects the eigenspace at `energy`.
    Microcanonical {
        energy: f64,
        width: f64,
    },
    /// Uniform over eigenstates with energy in `[0, energy)`.
    VolumeMicrocanonical {
        energy: f64,
    },
    Canonical {
        beta: f64,
    },
    Grandcanonical {
        beta: f64,
        mu: f64,
    },
}

/// Ensemble state, diagonal in the model's energy eigenbasis.
pub fn ensemble_state(model: &LatticeModel, spec: &EnsembleSpec) -> Result<QuantumState> {
    let energies = model.energies();
    let weights: Vec<f64> = match *spec {
        EnsembleSpec::Microcanonical { energy, width } => {
            if !(width >= 0.0) {
                return Err(Error::Config(format!("shell width {width} is negative")));
            }
            let slack = DEFAULT_DEGENERACY_TOL * model.spectral_range().max(1.0);
            energies
                .iter()
                .map(|&e| {
                    let inside = if width > 0.0 {
                        energy <= e && e < energy + width
                    } else {
                        (e - energy).abs() <= slack
                    };
                    f64::from(u8::from(inside))
                })
                .collect()
        }
        EnsembleSpec::VolumeMicrocanonical { energy } => energies
            .iter()
            .map(|&e| f64::from(u8::from((0.0..energy).contains(&e))))
            .collect(),
        EnsembleSpec::Canonical { beta } => {
            check_beta(beta)?;
            boltzmann(energies.iter().map(|&e| -beta * e))
        }
        EnsembleSpec::Grandcanonical { beta, mu } => {
            check_beta(beta)?;
            boltzmann(
                energies
                    .iter()
                    .zip(model.eigen_particles())
                    .map(|(&e, &n)| -beta * (e - mu * n as f64)),
            )
        }
    };
    let z: f64 = weights.iter().sum();
    if z <= 0.0 {
        return Err(Error::EmptyShell);
    }
    let v = model.eigenvectors();
    let n = model.dim();
    let mut scaled = v.clone();
    for (j, w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(w / z);
    }
    let rho = &scaled * v.transpose();
    let rho = CMatrix::from_fn(n, n, |i, j| {
        C64::new(0.5 * (rho[(i, j)] + rho[(j, i)]), 0.0)
    });
    QuantumState::from_density_matrix(rho)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Config(format!(
            "inverse temperature {beta} must be positive"
        )));
    }
    Ok(())
}

/// Unnormalized `exp(x - max x)`.
fn boltzmann(exponents: impl Iterator<Item = f64>) -> Vec<f64> {
    let x: Vec<f64> = exponents.collect();
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    x.iter().map(|v| (v - top).exp()).collect()
}
