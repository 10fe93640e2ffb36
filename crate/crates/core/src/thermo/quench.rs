use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, EntropyId, EntropySuite, LatticeModel, ModelConfig, ShellWidths};
use crate::entropy::von_neumann_entropy;
use crate::error::{Error, Result};
use crate::hilbert::io::CoarseGrainingFile;
use crate::hilbert::{CoarseGraining, QuantumState};
use crate::random::{random_pure, seeded};

/// Fraction of the time grid, counted from the end, used for long-time
/// averages.
pub const FINAL_WINDOW: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Product occupation string; character `i` is site `i`.
    Occupation(String),
    /// Haar-random pure state on the model basis, drawn from the scenario
    /// seed.
    RandomPure,
}

/// Explicit times, or `steps + 1` evenly spaced points from `start` to
/// `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, steps: usize },
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            TimeGrid::List(t) => t.clone(),
            TimeGrid::Linspace { start, stop, steps } => {
                if *steps == 0 {
                    return vec![*start];
                }
                let dt = (stop - start) / *steps as f64;
                (0..=*steps).map(|k| start + k as f64 * dt).collect()
            }
        }
    }
}

fn all_entropies() -> Vec<EntropyId> {
    EntropyId::ALL.to_vec()
}

/// Scenario file contents.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    pub model: ModelConfig,
    pub initial_state: InitialState,
    pub times: TimeGrid,
    /// Shell width for every energy coarse-graining; defaults to each
    /// spectral range over 50.
    #[serde(default)]
    pub shell_width: Option<f64>,
    #[serde(default = "all_entropies")]
    pub entropies: Vec<EntropyId>,
    #[serde(default)]
    pub seed: u64,
    /// Cell-0 coarse-graining for entropy 4.
    #[serde(default)]
    pub subsystem: Option<CoarseGrainingFile>,
}

impl QuenchConfig {
    /// The reference experiment: domain wall on a half-filled chain, two
    /// cells, 201 points on `[0, 200]`.
    pub fn reference(sites: usize) -> Self {
        let half = sites / 2;
        QuenchConfig {
            model: ModelConfig::reference(sites),
            initial_state: InitialState::Occupation("1".repeat(half) + &"0".repeat(sites - half)),
            times: TimeGrid::Linspace {
                start: 0.0,
                stop: 200.0,
                steps: 200,
            },
            shell_width: None,
            entropies: all_entropies(),
            seed: 0,
            subsystem: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// A validated scenario with its model built.
#[derive(Clone, Debug)]
pub struct QuenchScenario {
    pub config: QuenchConfig,
    pub model: LatticeModel,
    pub initial: QuantumState,
    pub times: Vec<f64>,
    pub subsystem: Option<CoarseGraining>,
}

impl QuenchScenario {
    pub fn new(config: QuenchConfig) -> Result<Self> {
        let times = config.times.points();
        if times.is_empty() {
            return Err(Error::Config("no time points".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
            return Err(Error::Config("times must be finite and nonnegative".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("times must be sorted ascending".into()));
        }
        if config.entropies.is_empty() {
            return Err(Error::Config("no entropies selected".into()));
        }
        let model = build_model(&config.model)?;
        let initial = match &config.initial_state {
            InitialState::Occupation(s) => model.occupation_state(s)?,
            InitialState::RandomPure => random_pure(model.dim(), &mut seeded(config.seed)),
        };
        let subsystem = config
            .subsystem
            .as_ref()
            .map(CoarseGrainingFile::to_coarse_graining)
            .transpose()?;
        Ok(QuenchScenario {
            config,
            model,
            initial,
            times,
            subsystem,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuenchRow {
    pub t: f64,
    pub entropy_id: EntropyId,
    pub value: f64,
}

/// Sidecar describing a run.
#[derive(Clone, Debug, Serialize)]
pub struct QuenchMetadata {
    pub model: ModelConfig,
    pub dim: usize,
    pub cell_volumes: Vec<usize>,
    pub boundary_remainder_norm: f64,
    pub ln_dim: f64,
    pub s_vn_initial: f64,
    pub shell_widths: ShellWidths,
    pub entropies: Vec<EntropyId>,
    pub time_points: usize,
    pub initial_state: InitialState,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct QuenchResult {
    pub rows: Vec<QuenchRow>,
    pub metadata: QuenchMetadata,
}

/// Evaluates the selected entropies on `rho(t)` for every time point. Time
/// points run in parallel; rows come out ordered by `(t, entropy_id)`.
pub fn run_quench(scenario: &QuenchScenario) -> Result<QuenchResult> {
    let model = &scenario.model;
    let suite = EntropySuite::new(
        model,
        &scenario.config.entropies,
        scenario.config.shell_width,
        scenario.subsystem.as_ref(),
    )?;
    let per_time = scenario
        .times
        .par_iter()
        .map(|&t| {
            let state = model.evolve(&scenario.initial, t)?;
            Ok(suite
                .evaluate(&state)?
                .into_iter()
                .map(|(entropy_id, value)| QuenchRow {
                    t,
                    entropy_id,
                    value,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let metadata = QuenchMetadata {
        model: scenario.config.model.clone(),
        dim: model.dim(),
        cell_volumes: model.cell_volumes(),
        boundary_remainder_norm: model.boundary_norm(),
        ln_dim: (model.dim() as f64).ln(),
        s_vn_initial: von_neumann_entropy(&scenario.initial)?,
        shell_widths: suite.widths().clone(),
        entropies: suite.ids(),
        time_points: scenario.times.len(),
        initial_state: scenario.config.initial_state.clone(),
        seed: scenario.config.seed,
    };
    Ok(QuenchResult {
        rows: per_time.into_iter().flatten().collect(),
        metadata,
    })
}

impl QuenchResult {
    /// `(t, value)` pairs of one entropy.
    pub fn series(&self, id: EntropyId) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.entropy_id == id)
            .map(|r| (r.t, r.value))
            .collect()
    }

    /// Mean over the last [`FINAL_WINDOW`] of the time points (at least one).
    pub fn final_window_average(&self, id: EntropyId) -> Option<f64> {
        let series = self.series(id);
        if series.is_empty() {
            return None;
        }
        let count = ((series.len() as f64 * FINAL_WINDOW).round() as usize).clamp(1, series.len());
        let tail = &series[series.len() - count..];
        Some(tail.iter().map(|(_, v)| v).sum::<f64>() / count as f64)
    }

    /// CSV with header `t,entropy_id,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "entropy_id", "value"])
            .map_err(csv_error)?;
        for row in &self.rows {
            w.write_record([
                row.t.to_string(),
                row.entropy_id.tag().to_string(),
                row.value.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, returning both paths.
    pub fn write_outputs(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.json"));
        self.write_csv(fs::File::create(&csv_path)?)?;
        fs::write(&meta_path, serde_json::to_string_pretty(&self.metadata)?)?;
        Ok((csv_path, meta_path))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_includes_both_ends() {
        let grid = TimeGrid::Linspace {
            start: 0.0,
            stop: 200.0,
            steps: 200,
        };
        let t = grid.points();
        assert_eq!(t.len(), 201);
        assert_eq!(t[200], 200.0);
    }

    #[test]
    fn scenario_json_parses() {
        let raw = r#"{
            "model": {"sites": 6, "J": 1.0, "J_prime": 0.32, "U": 1.0, "particles": 3, "cells": 2},
            "initial_state": {"occupation": "111000"},
            "times": {"start": 0, "stop": 1, "steps": 4},
            "entropies": ["1c", "2c"]
        }"#;
        let config: QuenchConfig = serde_json::from_str(raw).unwrap();
        assert_eq!(
            config.entropies,
            vec![EntropyId::GlobalNumberEnergy, EntropyId::LocalNumberEnergy]
        );
        let scenario = QuenchScenario::new(config).unwrap();
        let result = run_quench(&scenario).unwrap();
        assert_eq!(result.rows.len(), 10);
        let mut out = Vec::new();
        result.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("t,entropy_id,value\n0,1c,"));
    }

    #[test]
    fn unsorted_times_rejected() {
        let mut config = QuenchConfig::reference(4);
        config.times = TimeGrid::List(vec![1.0, 0.5]);
        assert!(QuenchScenario::new(config).is_err());
    }
}
