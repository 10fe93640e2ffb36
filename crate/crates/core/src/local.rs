//! Product coarse-grainings, total correlation and quantum correlation
//! entropy.

use std::f64::consts::FRAC_PI_4;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{macrostate_distribution, von_neumann_entropy, MeasurementSequence};
use crate::error::{Error, Result};
use crate::hilbert::{
    adjoint_matmul, hermitian_eigen, matmul, tensor_product_coarse_graining, CMatrix,
    CoarseGraining, QuantumState, TensorSpace, C64,
};
use crate::random::haar_unitary;

/// `C_A (x) C_B (x) ... (x) C_C` on a tensor-product space.
#[derive(Clone, Debug)]
pub struct ProductMeasurement {
    space: TensorSpace,
    local_cgs: Vec<CoarseGraining>,
}

impl ProductMeasurement {
    pub fn new(space: TensorSpace, local_cgs: Vec<CoarseGraining>) -> Result<Self> {
        if local_cgs.len() != space.parties() {
            return Err(Error::DimensionMismatch {
                expected: space.parties(),
                found: local_cgs.len(),
            });
        }
        for (cg, &d) in local_cgs.iter().zip(space.subsystem_dims()) {
            if cg.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: cg.dim(),
                });
            }
        }
        Ok(ProductMeasurement { space, local_cgs })
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn local_cgs(&self) -> &[CoarseGraining] {
        &self.local_cgs
    }

    /// The product coarse-graining on the full space.
    pub fn joint(&self) -> Result<CoarseGraining> {
        tensor_product_coarse_graining(&self.local_cgs, &self.space)
    }

    fn check_state(&self, state: &QuantumState) -> Result<()> {
        if state.dim() != self.space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.total_dim(),
                found: state.dim(),
            });
        }
        Ok(())
    }
}

pub fn product_observational_entropy(state: &QuantumState, pm: &ProductMeasurement) -> Result<f64> {
    pm.check_state(state)?;
    crate::entropy::observational_entropy(state, &MeasurementSequence::single(pm.joint()?))
}

/// Joint outcome probabilities in Kronecker order (first party most
/// significant).
fn joint_probabilities(state: &QuantumState, pm: &ProductMeasurement) -> Result<Vec<f64>> {
    let joint = pm.joint()?;
    let expected = joint.len();
    let dist = macrostate_distribution(state, &MeasurementSequence::single(joint))?;
    if dist.records.len() != expected {
        return Err(Error::InvalidCoarseGraining(
            "product coarse-graining lost a branch".into(),
        ));
    }
    Ok(dist.records.iter().map(|r| r.probability).collect())
}

fn local_probabilities(reduced: &QuantumState, cg: &CoarseGraining) -> Vec<f64> {
    let rho = reduced.density_matrix();
    cg.elements()
        .iter()
        .map(|p| {
            let b = p.basis();
            let m = b.adjoint() * &rho * b;
            m.diagonal().iter().map(|z| z.re).sum::<f64>().max(0.0)
        })
        .collect()
}

/// `I = sum p ln(p / (p^A p^B ... p^C))` with marginals from the reduced
/// states.
pub fn total_correlation(state: &QuantumState, pm: &ProductMeasurement) -> Result<f64> {
    pm.check_state(state)?;
    let joint = joint_probabilities(state, pm)?;
    let marginals = (0..pm.space.parties())
        .map(|x| {
            let reduced = pm.space.reduced_state(state, x)?;
            Ok(local_probabilities(&reduced, &pm.local_cgs[x]))
        })
        .collect::<Result<Vec<_>>>()?;
    let radices: Vec<usize> = pm.local_cgs.iter().map(CoarseGraining::len).collect();
    let outcomes = TensorSpace::new(radices)?;
    let mut total = 0.0;
    for (k, &p) in joint.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let q: f64 = outcomes
            .digits(k)
            .iter()
            .zip(&marginals)
            .map(|(&l, m)| m[l])
            .product();
        total += p * (p / q).ln();
    }
    Ok(total)
}

/// `|S_product - (sum_X S_{C_X}(rho_X) - I)|`.
pub fn decomposition_check(state: &QuantumState, pm: &ProductMeasurement) -> Result<f64> {
    let s = product_observational_entropy(state, pm)?;
    let mut local_sum = 0.0;
    for (x, cg) in pm.local_cgs.iter().enumerate() {
        let reduced = pm.space.reduced_state(state, x)?;
        local_sum += crate::entropy::observational_entropy(
            &reduced,
            &MeasurementSequence::single(cg.clone()),
        )?;
    }
    let i = total_correlation(state, pm)?;
    Ok((s - (local_sum - i)).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QceOptions {
    pub restarts: usize,
    pub seed: u64,
    pub tol_obj: f64,
    pub max_sweeps: usize,
}

impl Default for QceOptions {
    fn default() -> Self {
        QceOptions {
            restarts: 16,
            seed: 0,
            tol_obj: 1e-8,
            max_sweeps: 200,
        }
    }
}

/// Per-restart optimizer record. `history[k]` is the objective after sweep
/// `k` (entry 0 is the starting value).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub iterations: usize,
    pub achieved: f64,
    pub history: Vec<f64>,
}

/// Best product measurement found. `value` is an upper bound on the true
/// infimum, since the search is local.
#[derive(Clone, Debug)]
pub struct QceResult {
    pub value: f64,
    pub best_measurement: ProductMeasurement,
    pub optimizer_trace: Vec<RestartTrace>,
    /// `S_product(best_measurement) - S_vN`, recomputed independently of the
    /// optimizer bookkeeping.
    pub certificate_gap: f64,
}

#[derive(Clone, Copy, Debug)]
enum Generator {
    Real,
    Complex,
}

/// Two-level rotation acting on columns `(a, b)`. Both families are
/// `pi/2`-periodic up to a permutation with phases, which leaves rank-one
/// coarse-grainings unchanged.
fn rotation(kind: Generator, theta: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    match kind {
        Generator::Real => [
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ],
        Generator::Complex => [
            [C64::new(c, 0.0), C64::new(0.0, s)],
            [C64::new(0.0, s), C64::new(c, 0.0)],
        ],
    }
}

fn shannon(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// Optimizer state for one restart: local unitaries and `sigma = W^dag rho W`
/// with `W = U_A (x) ... (x) U_C`, whose diagonal is the outcome distribution.
struct Descent<'a> {
    space: &'a TensorSpace,
    unitaries: Vec<CMatrix>,
    sigma: CMatrix,
}

impl Descent<'_> {
    fn objective(&self) -> f64 {
        let p: Vec<f64> = self.sigma.diagonal().iter().map(|z| z.re).collect();
        shannon(&p)
    }

    /// Composite index pairs `(i, j)` differing only in digit `party`, which
    /// equals `a` in `i` and `b` in `j`.
    fn pairs(&self, party: usize, a: usize, b: usize) -> Vec<(usize, usize)> {
        (0..self.space.total_dim())
            .filter_map(|i| {
                let mut d = self.space.digits(i);
                if d[party] != a {
                    return None;
                }
                d[party] = b;
                Some((i, self.space.compose(&d)))
            })
            .collect()
    }

    #[allow(clippy::needless_range_loop)]
    fn trial(&self, pairs: &[(usize, usize)], untouched: f64, g: &[[C64; 2]; 2]) -> f64 {
        let mut s = untouched;
        for &(i, j) in pairs {
            let m = [
                [self.sigma[(i, i)], self.sigma[(i, j)]],
                [self.sigma[(j, i)], self.sigma[(j, j)]],
            ];
            for col in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        acc += g[k][col].conj() * m[k][l] * g[l][col];
                    }
                }
                let p = acc.re;
                if p > 0.0 {
                    s -= p * p.ln();
                }
            }
        }
        s
    }

    fn apply(
        &mut self,
        party: usize,
        a: usize,
        b: usize,
        pairs: &[(usize, usize)],
        g: &[[C64; 2]; 2],
    ) {
        let u = &mut self.unitaries[party];
        for r in 0..u.nrows() {
            let (ua, ub) = (u[(r, a)], u[(r, b)]);
            u[(r, a)] = ua * g[0][0] + ub * g[1][0];
            u[(r, b)] = ua * g[0][1] + ub * g[1][1];
        }
        let n = self.sigma.nrows();
        // sigma <- G^dag sigma G, columns then rows.
        for &(i, j) in pairs {
            for r in 0..n {
                let (si, sj) = (self.sigma[(r, i)], self.sigma[(r, j)]);
                self.sigma[(r, i)] = si * g[0][0] + sj * g[1][0];
                self.sigma[(r, j)] = si * g[0][1] + sj * g[1][1];
            }
        }
        for &(i, j) in pairs {
            for c in 0..n {
                let (si, sj) = (self.sigma[(i, c)], self.sigma[(j, c)]);
                self.sigma[(i, c)] = g[0][0].conj() * si + g[1][0].conj() * sj;
                self.sigma[(j, c)] = g[0][1].conj() * si + g[1][1].conj() * sj;
            }
        }
    }

    /// One coordinate step: coarse grid over a full period, then
    /// golden-section refinement around the best grid point. Returns the new
    /// objective if it strictly improves on `current`.
    fn line_search(
        &mut self,
        party: usize,
        a: usize,
        b: usize,
        kind: Generator,
        current: f64,
    ) -> Option<f64> {
        const GRID: usize = 16;
        let pairs = self.pairs(party, a, b);
        let touched: f64 = pairs
            .iter()
            .flat_map(|&(i, j)| [self.sigma[(i, i)].re, self.sigma[(j, j)].re])
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        let untouched = current - touched;
        let f = |theta: f64| self.trial(&pairs, untouched, &rotation(kind, theta));

        let step = 2.0 * FRAC_PI_4 / GRID as f64;
        let (best_k, _) = (0..GRID)
            .map(|k| (k, f(-FRAC_PI_4 + k as f64 * step)))
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
        let centre = -FRAC_PI_4 + best_k as f64 * step;
        let (theta, value) = golden_section(f, centre - step, centre + step, 1e-10);
        if value < current {
            self.apply(party, a, b, &pairs, &rotation(kind, theta));
            Some(self.objective())
        } else {
            None
        }
    }

    fn run(&mut self, opts: &QceOptions, restart: usize) -> RestartTrace {
        let mut current = self.objective();
        let mut history = vec![current];
        let mut iterations = 0;
        while iterations < opts.max_sweeps {
            let start = current;
            for party in 0..self.space.parties() {
                let d = self.space.subsystem_dims()[party];
                for a in 0..d {
                    for b in a + 1..d {
                        for kind in [Generator::Real, Generator::Complex] {
                            if let Some(v) = self.line_search(party, a, b, kind, current) {
                                current = current.min(v);
                            }
                        }
                    }
                }
            }
            iterations += 1;
            history.push(current);
            if start - current < opts.tol_obj {
                break;
            }
        }
        RestartTrace {
            restart,
            iterations,
            achieved: current,
            history,
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn kron_all(unitaries: &[CMatrix]) -> CMatrix {
    unitaries
        .iter()
        .fold(CMatrix::from_element(1, 1, C64::new(1.0, 0.0)), |acc, u| {
            acc.kronecker(u)
        })
}

/// Initial local bases: restart 0 uses the eigenbases of the reduced states,
/// every other restart draws Haar unitaries from its own ChaCha stream.
fn initial_unitaries(
    state: &QuantumState,
    space: &TensorSpace,
    seed: u64,
    restart: usize,
) -> Result<Vec<CMatrix>> {
    if restart == 0 {
        return (0..space.parties())
            .map(|x| Ok(hermitian_eigen(&space.reduced_state(state, x)?.density_matrix()).1))
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    Ok(space
        .subsystem_dims()
        .iter()
        .map(|&d| haar_unitary(d, &mut rng))
        .collect())
}

/// Quarrelation: the smallest `S - S_vN` over product measurements with a
/// complete local basis on every subsystem, found by multi-start descent
/// over local unitaries.
pub fn quantum_correlation_entropy(
    state: &QuantumState,
    space: &TensorSpace,
    opts: &QceOptions,
) -> Result<QceResult> {
    if state.dim() != space.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            found: state.dim(),
        });
    }
    if space.parties() < 2 {
        return Err(Error::Config(
            "quarrelation needs at least two subsystems".into(),
        ));
    }
    if opts.restarts == 0 {
        return Err(Error::Config("at least one restart is required".into()));
    }
    let rho = state.density_matrix();
    let s_vn = von_neumann_entropy(state)?;

    let runs = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            let unitaries = initial_unitaries(state, space, opts.seed, restart)?;
            let w = kron_all(&unitaries);
            let sigma = adjoint_matmul(&w, &matmul(&rho, &w));
            let mut descent = Descent {
                space,
                unitaries,
                sigma,
            };
            let trace = descent.run(opts, restart);
            Ok((trace, descent.unitaries))
        })
        .collect::<Result<Vec<_>>>()?;

    // Ties go to the lowest restart index.
    let best = runs.iter().enumerate().fold(0, |best, (k, run)| {
        if run.0.achieved < runs[best].0.achieved {
            k
        } else {
            best
        }
    });
    let local_cgs = runs[best].1.iter().map(CoarseGraining::rank_one).collect();
    let best_measurement = ProductMeasurement::new(space.clone(), local_cgs)?;
    let certificate_gap = product_observational_entropy(state, &best_measurement)? - s_vn;
    let value = runs[best].0.achieved - s_vn;
    let optimizer_trace = runs.into_iter().map(|(t, _)| t).collect();
    Ok(QceResult {
        value,
        best_measurement,
        optimizer_trace,
        certificate_gap,
    })
}

/// `S_product(pm) >= S_vN + qce.value - 1e-9`.
pub fn quarrelation_bound_check(
    state: &QuantumState,
    pm: &ProductMeasurement,
    qce: &QceResult,
) -> Result<bool> {
    let s = product_observational_entropy(state, pm)?;
    Ok(s >= von_neumann_entropy(state)? + qce.value - 1e-9)
}
