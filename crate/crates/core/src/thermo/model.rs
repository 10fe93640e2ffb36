use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    adjoint_matmul, matmul, real_symmetric_eigen, sandwich, to_complex, CMatrix, CVector,
    Observable, QuantumState, C64,
};

/// Only [`ModelConfig::site_cap`] bounds the lattice by default; the dense
/// diagonalization also needs the basis dimension bounded.
pub const DEFAULT_SITE_CAP: usize = 16;
pub const DEFAULT_DIM_CAP: usize = 5000;

fn unit() -> f64 {
    1.0
}

fn site_cap() -> usize {
    DEFAULT_SITE_CAP
}

fn dim_cap() -> usize {
    DEFAULT_DIM_CAP
}

fn two_cells() -> Cells {
    Cells::Count(2)
}

/// Partition of the chain into contiguous cells: either a cell count (sizes
/// as equal as possible, larger cells first) or explicit sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cells {
    Count(usize),
    Sizes(Vec<usize>),
}

/// Open chain of hard-core bosons:
/// `H = -J sum (b_i^+ b_{i+1} + h.c.) - J' sum (b_i^+ b_{i+2} + h.c.)
///      + U sum n_i n_{i+1} + sum_i v_i n_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub sites: usize,
    #[serde(default = "unit", alias = "J")]
    pub hopping: f64,
    #[serde(default, alias = "J_prime")]
    pub next_hopping: f64,
    #[serde(default, alias = "U")]
    pub interaction: f64,
    #[serde(default)]
    pub potentials: Vec<f64>,
    /// Fixed total particle number; `None` keeps the full Fock space.
    #[serde(default)]
    pub particles: Option<usize>,
    #[serde(default = "two_cells")]
    pub cells: Cells,
    #[serde(default = "site_cap")]
    pub site_cap: usize,
    #[serde(default = "dim_cap")]
    pub dim_cap: usize,
}

impl ModelConfig {
    pub fn new(sites: usize) -> Self {
        ModelConfig {
            sites,
            hopping: 1.0,
            next_hopping: 0.0,
            interaction: 0.0,
            potentials: Vec::new(),
            particles: None,
            cells: Cells::Count(2),
            site_cap: DEFAULT_SITE_CAP,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    /// The reference quench model: `J = 1, J' = 0.32, U = 1`, half filling,
    /// two cells.
    pub fn reference(sites: usize) -> Self {
        ModelConfig {
            next_hopping: 0.32,
            interaction: 1.0,
            particles: Some(sites / 2),
            ..Self::new(sites)
        }
    }

    fn cell_sizes(&self) -> Result<Vec<usize>> {
        let sizes = match &self.cells {
            Cells::Count(m) => {
                if *m == 0 || *m > self.sites {
                    return Err(Error::Config(format!(
                        "cannot split {} sites into {m} nonempty cells",
                        self.sites
                    )));
                }
                let (q, r) = (self.sites / m, self.sites % m);
                (0..*m).map(|k| q + usize::from(k < r)).collect()
            }
            Cells::Sizes(s) => s.clone(),
        };
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::Config(format!(
                "cells must be nonempty, got {sizes:?}"
            )));
        }
        if sizes.iter().sum::<usize>() != self.sites {
            return Err(Error::Config(format!(
                "cell sizes {sizes:?} do not cover {} sites",
                self.sites
            )));
        }
        Ok(sizes)
    }
}

/// One Hamiltonian term on explicit sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Term {
    Hop { a: usize, b: usize, amplitude: f64 },
    Density { a: usize, b: usize, amplitude: f64 },
    Potential { site: usize, amplitude: f64 },
}

impl Term {
    fn sites(&self) -> (usize, usize) {
        match *self {
            Term::Hop { a, b, .. } | Term::Density { a, b, .. } => (a, b),
            Term::Potential { site, .. } => (site, site),
        }
    }

    fn shifted(&self, offset: usize) -> Term {
        match *self {
            Term::Hop { a, b, amplitude } => Term::Hop {
                a: a - offset,
                b: b - offset,
                amplitude,
            },
            Term::Density { a, b, amplitude } => Term::Density {
                a: a - offset,
                b: b - offset,
                amplitude,
            },
            Term::Potential { site, amplitude } => Term::Potential {
                site: site - offset,
                amplitude,
            },
        }
    }
}

fn terms(config: &ModelConfig) -> Vec<Term> {
    let l = config.sites;
    let mut out = Vec::new();
    for a in 0..l.saturating_sub(1) {
        if config.hopping != 0.0 {
            out.push(Term::Hop {
                a,
                b: a + 1,
                amplitude: -config.hopping,
            });
        }
        if config.interaction != 0.0 {
            out.push(Term::Density {
                a,
                b: a + 1,
                amplitude: config.interaction,
            });
        }
    }
    if config.next_hopping != 0.0 {
        for a in 0..l.saturating_sub(2) {
            out.push(Term::Hop {
                a,
                b: a + 2,
                amplitude: -config.next_hopping,
            });
        }
    }
    for (site, &v) in config.potentials.iter().enumerate() {
        if v != 0.0 {
            out.push(Term::Potential { site, amplitude: v });
        }
    }
    out
}

/// Occupation basis: bit `i` of a state is the occupation of site `i`.
#[derive(Clone, Debug)]
pub struct FockBasis {
    sites: usize,
    states: Vec<u32>,
    index: Vec<usize>,
}

impl FockBasis {
    /// States ordered by particle number, then by bit pattern.
    pub fn new(sites: usize, particles: Option<usize>) -> Self {
        let mut states: Vec<u32> = (0..1u32 << sites)
            .filter(|s| particles.is_none_or(|n| s.count_ones() as usize == n))
            .collect();
        states.sort_by_key(|&s| (s.count_ones(), s));
        let mut index = vec![usize::MAX; 1 << sites];
        for (k, &s) in states.iter().enumerate() {
            index[s as usize] = k;
        }
        FockBasis {
            sites,
            states,
            index,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn index_of(&self, state: u32) -> Option<usize> {
        self.index
            .get(state as usize)
            .copied()
            .filter(|&k| k != usize::MAX)
    }

    pub fn particle_count(&self, k: usize) -> usize {
        self.states[k].count_ones() as usize
    }

    fn operator(&self, terms: &[Term]) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (x, &s) in self.states.iter().enumerate() {
            for term in terms {
                match *term {
                    Term::Hop { a, b, amplitude } => {
                        for (from, to) in [(a, b), (b, a)] {
                            if s >> from & 1 == 1 && s >> to & 1 == 0 {
                                let t = s ^ (1 << from) ^ (1 << to);
                                if let Some(y) = self.index_of(t) {
                                    h[(y, x)] += amplitude;
                                }
                            }
                        }
                    }
                    Term::Density { a, b, amplitude } => {
                        if s >> a & 1 == 1 && s >> b & 1 == 1 {
                            h[(x, x)] += amplitude;
                        }
                    }
                    Term::Potential { site, amplitude } => {
                        if s >> site & 1 == 1 {
                            h[(x, x)] += amplitude;
                        }
                    }
                }
            }
        }
        h
    }

    /// Eigendecomposition block by particle number, merged and sorted by
    /// energy. Every eigenvector therefore has a definite particle number.
    fn block_eigen(&self, h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, Vec<usize>) {
        let n = self.dim();
        let mut pairs: Vec<(f64, usize, DVector<f64>)> = Vec::with_capacity(n);
        let mut start = 0;
        while start < n {
            let count = self.particle_count(start);
            let end = (start..n)
                .find(|&k| self.particle_count(k) != count)
                .unwrap_or(n);
            let block = h
                .view((start, start), (end - start, end - start))
                .into_owned();
            let (values, vectors) = real_symmetric_eigen(&block);
            for (j, &e) in values.iter().enumerate() {
                let mut v = DVector::zeros(n);
                v.rows_mut(start, end - start).copy_from(&vectors.column(j));
                pairs.push((e, count, v));
            }
            start = end;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let energies = pairs.iter().map(|p| p.0).collect();
        let particles = pairs.iter().map(|p| p.1).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| pairs[j].2[i]);
        (energies, vectors, particles)
    }
}

/// Spectrum of one cell's Hamiltonian on the cell's full Fock space.
#[derive(Clone, Debug)]
pub struct CellSpectrum {
    pub start: usize,
    pub len: usize,
    pub hamiltonian: DMatrix<f64>,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub particles: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LatticeModel {
    config: ModelConfig,
    basis: FockBasis,
    terms: Vec<Term>,
    /// Cell owning each term, `None` for boundary terms.
    owners: Vec<Option<usize>>,
    hamiltonian: DMatrix<f64>,
    cell_hamiltonians: Vec<DMatrix<f64>>,
    boundary: DMatrix<f64>,
    boundary_norm: f64,
    energies: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    eigen_particles: Vec<usize>,
    cells: Vec<CellSpectrum>,
}

/// Builds and diagonalizes the model, checking particle conservation and
/// the term partition.
pub fn build_model(config: &ModelConfig) -> Result<LatticeModel> {
    let l = config.sites;
    if l == 0 {
        return Err(Error::Config("lattice needs at least one site".into()));
    }
    if l > config.site_cap {
        return Err(Error::CapExceeded(format!(
            "{l} sites exceed the cap of {}",
            config.site_cap
        )));
    }
    if !config.potentials.is_empty() && config.potentials.len() != l {
        return Err(Error::Config(format!(
            "{} potentials for {l} sites",
            config.potentials.len()
        )));
    }
    if let Some(n) = config.particles {
        if n > l {
            return Err(Error::Config(format!(
                "{n} particles do not fit on {l} sites"
            )));
        }
    }
    let sizes = config.cell_sizes()?;
    let basis = FockBasis::new(l, config.particles);
    if basis.dim() > config.dim_cap {
        return Err(Error::CapExceeded(format!(
            "basis dimension {} exceeds the cap of {}",
            basis.dim(),
            config.dim_cap
        )));
    }

    let mut starts = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in &sizes {
        starts.push(acc);
        acc += s;
    }
    let cell_of = |site: usize| {
        starts
            .iter()
            .rposition(|&s| s <= site)
            .expect("site in range")
    };

    let terms = terms(config);
    let owners: Vec<Option<usize>> = terms
        .iter()
        .map(|t| {
            let (a, b) = t.sites();
            let (ca, cb) = (cell_of(a), cell_of(b));
            (ca == cb).then_some(ca)
        })
        .collect();

    let hamiltonian = basis.operator(&terms);
    let select = |want: Option<usize>| -> Vec<Term> {
        terms
            .iter()
            .zip(&owners)
            .filter(|(_, o)| **o == want)
            .map(|(t, _)| *t)
            .collect()
    };
    let cell_hamiltonians: Vec<DMatrix<f64>> = (0..sizes.len())
        .map(|k| basis.operator(&select(Some(k))))
        .collect();
    let boundary = basis.operator(&select(None));
    let boundary_norm = if boundary.iter().all(|&x| x == 0.0) {
        0.0
    } else {
        real_symmetric_eigen(&boundary)
            .0
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.abs()))
    };

    let cells = sizes
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(k, (&len, &start))| {
            let local_terms: Vec<Term> = select(Some(k)).iter().map(|t| t.shifted(start)).collect();
            let local = FockBasis::new(len, None);
            let h = local.operator(&local_terms);
            let (energies, vectors, particles) = local.block_eigen(&h);
            // Undo the (n, bits) ordering so rows index raw local bit patterns.
            let mut raw = DMatrix::zeros(local.dim(), local.dim());
            let mut raw_h = DMatrix::zeros(local.dim(), local.dim());
            for (i, &si) in local.states().iter().enumerate() {
                raw.row_mut(si as usize).copy_from(&vectors.row(i));
                for (j, &sj) in local.states().iter().enumerate() {
                    raw_h[(si as usize, sj as usize)] = h[(i, j)];
                }
            }
            CellSpectrum {
                start,
                len,
                hamiltonian: raw_h,
                energies,
                vectors: raw,
                particles,
            }
        })
        .collect();

    let (energies, eigenvectors, eigen_particles) = basis.block_eigen(&hamiltonian);
    let model = LatticeModel {
        config: config.clone(),
        basis,
        terms,
        owners,
        hamiltonian,
        cell_hamiltonians,
        boundary,
        boundary_norm,
        energies,
        eigenvectors,
        eigen_particles,
        cells,
    };
    let residual = model.number_commutator_residual();
    if residual > 1e-10 {
        return Err(Error::NonCommuting { residual });
    }
    let partition = model.term_partition_residual();
    if partition > 1e-12 {
        return Err(Error::Config(format!(
            "cell terms and boundary do not sum to H (residual {partition:.3e})"
        )));
    }
    Ok(model)
}

impl LatticeModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn sites(&self) -> usize {
        self.config.sites
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[CellSpectrum] {
        &self.cells
    }

    /// Site counts per cell.
    pub fn cell_volumes(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len).collect()
    }

    pub fn is_sector(&self) -> bool {
        self.config.particles.is_some()
    }

    /// `J' != 0` or `U != 0`; a statement of intent, not a dynamical check.
    pub fn nonintegrable(&self) -> bool {
        self.config.next_hopping != 0.0 || self.config.interaction != 0.0
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Owning cell of each term in [`Self::terms`]; `None` marks the
    /// boundary remainder.
    pub fn term_owners(&self) -> &[Option<usize>] {
        &self.owners
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.hamiltonian
    }

    pub fn cell_hamiltonian(&self, cell: usize) -> &DMatrix<f64> {
        &self.cell_hamiltonians[cell]
    }

    pub fn boundary(&self) -> &DMatrix<f64> {
        &self.boundary
    }

    /// Spectral norm of the inter-cell remainder.
    pub fn boundary_norm(&self) -> f64 {
        self.boundary_norm
    }

    /// Ascending eigenvalues of `H` on the model basis.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigen_particles(&self) -> &[usize] {
        &self.eigen_particles
    }

    pub fn spectral_range(&self) -> f64 {
        self.energies.last().unwrap_or(&0.0) - self.energies.first().unwrap_or(&0.0)
    }

    /// Diagonal of `N` in the model basis.
    pub fn particle_numbers(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|k| self.basis.particle_count(k))
            .collect()
    }

    /// Diagonal of `N_cell` in the model basis.
    pub fn cell_particle_numbers(&self, cell: usize) -> Vec<usize> {
        let c = &self.cells[cell];
        let mask = ((1u32 << c.len) - 1) << c.start;
        self.basis
            .states()
            .iter()
            .map(|s| (s & mask).count_ones() as usize)
            .collect()
    }

    pub fn hamiltonian_observable(&self) -> Observable {
        Observable::new(to_complex(&self.hamiltonian)).expect("H is symmetric")
    }

    pub fn number_observable(&self) -> Observable {
        let n: Vec<f64> = self.particle_numbers().iter().map(|&n| n as f64).collect();
        Observable::diagonal(&n)
    }

    /// `H_cell` on the cell's own Fock space (rows indexed by local bits).
    pub fn local_hamiltonian_observable(&self, cell: usize) -> Observable {
        Observable::new(to_complex(&self.cells[cell].hamiltonian)).expect("H_cell is symmetric")
    }

    pub fn local_number_observable(&self, cell: usize) -> Observable {
        let d = 1usize << self.cells[cell].len;
        let n: Vec<f64> = (0..d).map(|s| (s as u32).count_ones() as f64).collect();
        Observable::diagonal(&n)
    }

    /// `max |[H, N]|`; `N` is diagonal so this is `max |H_xy (n_x - n_y)|`.
    pub fn number_commutator_residual(&self) -> f64 {
        let n = self.particle_numbers();
        let mut worst = 0.0_f64;
        for y in 0..self.dim() {
            for x in 0..self.dim() {
                let r = self.hamiltonian[(y, x)] * (n[y] as f64 - n[x] as f64);
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// `max |sum_i H_i + boundary - H|`.
    pub fn term_partition_residual(&self) -> f64 {
        let mut sum = self.boundary.clone();
        for h in &self.cell_hamiltonians {
            sum += h;
        }
        (sum - &self.hamiltonian).amax()
    }

    /// Product occupation state; character `i` is the occupation of site `i`.
    pub fn occupation_state(&self, occupation: &str) -> Result<QuantumState> {
        if occupation.len() != self.sites() {
            return Err(Error::Config(format!(
                "occupation {occupation:?} does not have {} sites",
                self.sites()
            )));
        }
        let mut bits = 0u32;
        for (i, c) in occupation.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return Err(Error::Config(format!("bad occupation character {c:?}"))),
            }
        }
        let k = self.basis.index_of(bits).ok_or_else(|| {
            Error::Config(format!(
                "occupation {occupation:?} lies outside the particle sector"
            ))
        })?;
        Ok(QuantumState::basis(self.dim(), k))
    }

    /// The `k`-th energy eigenstate.
    pub fn eigenstate(&self, k: usize) -> QuantumState {
        let v = self.eigenvectors.column(k).map(|x| C64::new(x, 0.0));
        QuantumState::pure_unchecked(v)
    }

    /// `rho(t) = e^{-iHt} rho e^{iHt}` through the cached eigenbasis.
    pub fn evolve(&self, state: &QuantumState, t: f64) -> Result<QuantumState> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        let phases: Vec<C64> = self
            .energies
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect();
        let v = &self.eigenvectors;
        match state.as_pure() {
            Some(psi) => {
                let mut c = real_transpose_times(v, psi);
                for (ck, ph) in c.iter_mut().zip(&phases) {
                    *ck *= ph;
                }
                Ok(QuantumState::pure_unchecked(real_times(v, &c)))
            }
            None => {
                let vc: CMatrix = to_complex(v);
                let mut r = adjoint_matmul(&vc, &matmul(&state.density_matrix(), &vc));
                for i in 0..r.nrows() {
                    for j in 0..r.ncols() {
                        r[(i, j)] *= phases[i] * phases[j].conj();
                    }
                }
                let rho = sandwich(&vc, &r);
                Ok(QuantumState::mixed_unchecked(
                    (&rho + rho.adjoint()).scale(0.5),
                ))
            }
        }
    }
}

fn split(v: &CVector) -> (DVector<f64>, DVector<f64>) {
    (v.map(|z| z.re), v.map(|z| z.im))
}

fn join(re: DVector<f64>, im: DVector<f64>) -> CVector {
    CVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]))
}

fn real_transpose_times(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let (re, im) = split(v);
    join(m.tr_mul(&re), m.tr_mul(&im))
}

fn real_times(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let (re, im) = split(v);
    join(m * re, m * im)
}
