use std::fs;
use std::path::Path;

use log::info;
use obsent_core::classical::{
    classical_distribution, gibbs_entropy, ClassicalCoarseGraining, ClassicalSpace,
};
use obsent_core::entropy::{
    coarse_grained_state, macrostate_distribution, von_neumann_entropy, MeasurementSequence, Step,
};
use obsent_core::hilbert::io::{
    load_state, load_step, write_coarse_graining, write_matrix, CoarseGrainingFile, ElementKind,
    MatrixFile,
};
use obsent_core::hilbert::{
    Check, CoarseGraining, KrausCoarseGraining, Label, Observable, Projector, QuantumState, Report,
    TensorSpace,
};
use obsent_core::local::{quantum_correlation_entropy, QceOptions};
use obsent_core::thermo::{run_quench, EntropyId, QuenchConfig, QuenchScenario};
use obsent_core::Error;
use serde::Serialize;
use serde_json::Value;

use crate::{CliError, InputKind};

type CliResult = Result<(), CliError>;

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    println!("{text}");
    Ok(())
}

fn unit_scale(bits: bool) -> (f64, &'static str) {
    if bits {
        (1.0 / std::f64::consts::LN_2, "bits")
    } else {
        (1.0, "nats")
    }
}

#[derive(Serialize)]
struct RecordOut {
    labels: Vec<Label>,
    probability: f64,
    volume: f64,
}

#[derive(Serialize)]
struct EntropyReport {
    units: &'static str,
    entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shannon_part: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_boltzmann_part: Option<f64>,
    #[serde(rename = "S_vN")]
    s_vn: f64,
    ln_dim: f64,
    kl: f64,
    records: Vec<RecordOut>,
}

pub fn entropy(
    state: &Path,
    sequence: &[std::path::PathBuf],
    bits: bool,
    cg_out: Option<&Path>,
) -> CliResult {
    let rho = load_state(state)?;
    let steps = sequence
        .iter()
        .map(|p| load_step(p))
        .collect::<Result<Vec<Step>, Error>>()?;
    let seq = MeasurementSequence::new(steps)?;
    let dist = macrostate_distribution(&rho, &seq)?;
    let single = match seq.steps() {
        [Step::Projective(cg)] => Some(cg),
        _ => None,
    };
    if let Some(path) = cg_out {
        let cg = single.ok_or_else(|| {
            CliError::Usage(
                "--coarse-grained-state needs exactly one projective coarse-graining".into(),
            )
        })?;
        write_matrix(path, &coarse_grained_state(&rho, cg)?.density_matrix())?;
        info!("wrote coarse-grained state to {}", path.display());
    }
    let (scale, units) = unit_scale(bits);
    print_json(&EntropyReport {
        units,
        entropy: dist.entropy() * scale,
        shannon_part: single.map(|_| dist.shannon() * scale),
        mean_boltzmann_part: single.map(|_| dist.mean_boltzmann() * scale),
        s_vn: von_neumann_entropy(&rho)? * scale,
        ln_dim: (rho.dim() as f64).ln() * scale,
        kl: dist.kl_from_uniform() * scale,
        records: dist
            .records
            .into_iter()
            .map(|r| RecordOut {
                labels: r.multi_index,
                probability: r.probability,
                volume: r.volume,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct ClassicalRecordOut {
    cells: Vec<usize>,
    probability: f64,
    volume: f64,
}

#[derive(Serialize)]
struct ClassicalReport {
    units: &'static str,
    entropy: f64,
    gibbs_entropy: f64,
    ln_total_measure: f64,
    records: Vec<ClassicalRecordOut>,
}

pub fn classical(space: &Path, partitions: &[std::path::PathBuf], bits: bool) -> CliResult {
    let space = ClassicalSpace::load(space)?;
    let cgs = partitions
        .iter()
        .map(|p| ClassicalCoarseGraining::load(p))
        .collect::<Result<Vec<_>, Error>>()?;
    let records = classical_distribution(&space, &cgs)?;
    let entropy: f64 = -records
        .iter()
        .filter(|r| r.probability > 0.0)
        .map(|r| r.probability * (r.probability / r.volume).ln())
        .sum::<f64>();
    let (scale, units) = unit_scale(bits);
    print_json(&ClassicalReport {
        units,
        entropy: entropy * scale,
        gibbs_entropy: gibbs_entropy(&space)? * scale,
        ln_total_measure: space.total_measure().ln() * scale,
        records: records
            .into_iter()
            .map(|r| ClassicalRecordOut {
                cells: r.cells,
                probability: r.probability,
                volume: r.volume,
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct RestartOut {
    restart: usize,
    iterations: usize,
    achieved: f64,
}

#[derive(Serialize)]
struct QceReport {
    /// Smallest `S - S_vN` found; an upper bound on the true infimum.
    value: f64,
    certificate_gap: f64,
    #[serde(rename = "S_vN")]
    s_vn: f64,
    dims: Vec<usize>,
    options: QceOptions,
    restarts: Vec<RestartOut>,
    note: &'static str,
}

pub fn qce(
    state: &Path,
    dims: Vec<usize>,
    opts: QceOptions,
    measurement_dir: Option<&Path>,
) -> CliResult {
    let rho = load_state(state)?;
    let space = TensorSpace::new(dims.clone())?;
    let result = quantum_correlation_entropy(&rho, &space, &opts)?;
    if let Some(dir) = measurement_dir {
        fs::create_dir_all(dir).map_err(Error::from)?;
        for (k, cg) in result.best_measurement.local_cgs().iter().enumerate() {
            write_coarse_graining(&dir.join(format!("party_{k}.json")), cg)?;
        }
    }
    print_json(&QceReport {
        value: result.value,
        certificate_gap: result.certificate_gap,
        s_vn: von_neumann_entropy(&rho)?,
        dims,
        options: opts,
        restarts: result
            .optimizer_trace
            .iter()
            .map(|t| RestartOut {
                restart: t.restart,
                iterations: t.iterations,
                achieved: t.achieved,
            })
            .collect(),
        note: "value is the best found over the restarts, an upper bound on the infimum",
    })
}

pub fn simulate(
    scenario_path: &Path,
    out: &Path,
    stem: Option<String>,
    delta_e: Option<f64>,
    seed: Option<u64>,
) -> CliResult {
    let mut config = QuenchConfig::load(scenario_path)?;
    if delta_e.is_some() {
        config.shell_width = delta_e;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let scenario = QuenchScenario::new(config)?;
    info!(
        "model dim {}, {} time points",
        scenario.model.dim(),
        scenario.times.len()
    );
    let result = run_quench(&scenario)?;
    fs::create_dir_all(out).map_err(Error::from)?;
    let stem = stem.unwrap_or_else(|| {
        scenario_path.file_stem().map_or_else(
            || "quench".to_string(),
            |s| s.to_string_lossy().into_owned(),
        )
    });
    let (csv, json) = result.write_outputs(out, &stem)?;

    let meta = &result.metadata;
    println!("wrote {} and {}", csv.display(), json.display());
    println!(
        "dim {}  ln dim {:.6}  S_vN(initial) {:.6}  boundary norm {:.6}",
        meta.dim, meta.ln_dim, meta.s_vn_initial, meta.boundary_remainder_norm
    );
    println!("final-window averages:");
    for &id in &meta.entropies {
        if let Some(avg) = result.final_window_average(id) {
            println!("  {:>3}  {avg:.6}", id.tag());
        }
    }
    let equilibrium = result.final_window_average(EntropyId::GlobalNumberEnergy);
    let nonequilibrium = result.final_window_average(EntropyId::LocalNumberEnergy);
    if let Some(eq) = equilibrium {
        println!("equilibrium (1c): {eq:.6}");
    }
    if let (Some(eq), Some(neq)) = (equilibrium, nonequilibrium) {
        println!("gap 1c - 2c: {:.6}", eq - neq);
    }
    Ok(())
}

fn detect(value: &Value) -> InputKind {
    let has = |key: &str| value.get(key).is_some();
    if has("model") {
        InputKind::Scenario
    } else if has("elements") {
        InputKind::CoarseGraining
    } else if has("density") {
        InputKind::Classical
    } else if has("cells") {
        InputKind::Partition
    } else {
        InputKind::State
    }
}

fn parse<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, Error> {
    Ok(serde_json::from_value(value)?)
}

fn failed(name: impl Into<String>) -> Check {
    Check::within(name, f64::INFINITY, 0.0)
}

fn classical_report(value: &Value) -> Report {
    let mut r = Report::default();
    let numbers = |key: &str| -> Option<Vec<f64>> {
        value
            .get(key)?
            .as_array()?
            .iter()
            .map(Value::as_f64)
            .collect()
    };
    let n = value
        .get("points")
        .and_then(Value::as_array)
        .map_or(0, Vec::len);
    let (Some(density), weights) = (numbers("density"), numbers("weights")) else {
        r.push(failed("density is a list of numbers"));
        return r;
    };
    let weights = weights
        .filter(|w| !w.is_empty())
        .unwrap_or_else(|| vec![1.0; n]);
    let lengths_ok = n > 0 && density.len() == n && weights.len() == n;
    r.push(Check::within(
        "lengths agree",
        if lengths_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    if !lengths_ok {
        return r;
    }
    let worst_weight = weights.iter().fold(0.0_f64, |m, &w| {
        m.max(if w > 0.0 { 0.0 } else { -w + f64::MIN_POSITIVE })
    });
    r.push(Check::within("positive weights", worst_weight, 0.0));
    let worst_density = density.iter().fold(0.0_f64, |m, &x| m.max(-x));
    r.push(Check::within("nonnegative density", worst_density, 0.0));
    let mass: f64 = density.iter().zip(&weights).map(|(x, w)| x * w).sum();
    r.push(Check::within("normalization", (mass - 1.0).abs(), 1e-10));
    r
}

fn scenario_report(config: QuenchConfig) -> Result<Report, Error> {
    let mut r = Report::default();
    match QuenchScenario::new(config) {
        Ok(s) => {
            r.push(Check::within(
                "[H, N] = 0",
                s.model.number_commutator_residual(),
                1e-10,
            ));
            r.push(Check::within(
                "terms partition H",
                s.model.term_partition_residual(),
                1e-12,
            ));
        }
        Err(err @ Error::CapExceeded(_)) => return Err(err),
        Err(err) => r.push(failed(format!("scenario builds ({err})"))),
    }
    Ok(r)
}

fn build_report(kind: InputKind, value: Value) -> Result<Report, Error> {
    Ok(match kind {
        InputKind::State => QuantumState::density_report(&parse::<MatrixFile>(value)?.to_matrix()?),
        InputKind::Observable => {
            Observable::matrix_report(&parse::<MatrixFile>(value)?.to_matrix()?)
        }
        InputKind::Projector => Projector::matrix_report(&parse::<MatrixFile>(value)?.to_matrix()?),
        InputKind::CoarseGraining => {
            let file: CoarseGrainingFile = parse(value)?;
            let mut r = Report::default();
            let dims_ok = file.elements.iter().all(|e| e.dim == file.dim);
            r.push(Check::within(
                "element dimensions",
                if dims_ok { 0.0 } else { 1.0 },
                0.0,
            ));
            let labels_ok = file.labels.is_empty() || file.labels.len() == file.elements.len();
            r.push(Check::within(
                "one label per element",
                if labels_ok { 0.0 } else { 1.0 },
                0.0,
            ));
            let mats = file
                .elements
                .iter()
                .map(MatrixFile::to_matrix)
                .collect::<Result<Vec<_>, Error>>()?;
            r.extend(match file.kind {
                ElementKind::Projector => CoarseGraining::matrices_report(&mats),
                ElementKind::Kraus => KrausCoarseGraining::report_for(&mats),
            });
            r
        }
        InputKind::Classical => classical_report(&value),
        InputKind::Partition => {
            let cg: ClassicalCoarseGraining = parse(value)?;
            let n = cg.cells().iter().flatten().max().map_or(0, |m| m + 1);
            let mut r = Report::default();
            match cg.assignment(n) {
                Ok(_) => r.push(Check::within("disjoint cells covering 0..n", 0.0, 0.0)),
                Err(err) => r.push(failed(format!("disjoint cells covering 0..n ({err})"))),
            }
            r
        }
        InputKind::Scenario => scenario_report(parse(value)?)?,
    })
}

#[derive(Serialize)]
struct ValidationOut<'a> {
    kind: String,
    passed: bool,
    checks: &'a [Check],
}

pub fn validate(path: &Path, kind: Option<InputKind>, json: bool) -> CliResult {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    let value: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let kind = kind.unwrap_or_else(|| detect(&value));
    let report = build_report(kind, value)?;
    let failures = report.checks.iter().filter(|c| !c.passed).count();
    if json {
        print_json(&ValidationOut {
            kind: format!("{kind:?}").to_lowercase(),
            passed: failures == 0,
            checks: &report.checks,
        })?;
    } else {
        println!("{} as {kind:?}", path.display());
        for c in &report.checks {
            println!(
                "  {}  {:<40} residual {:.3e}  (tolerance {:.1e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            );
        }
    }
    if failures > 0 {
        return Err(CliError::Validation(failures));
    }
    Ok(())
}
