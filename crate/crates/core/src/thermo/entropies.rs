use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LatticeModel;
use crate::entropy::{BranchTree, MeasurementSequence, Step};
use crate::error::{Error, Result};
use crate::hilbert::to_complex;
use crate::hilbert::{
    commutator_residual, energy_shell_coarse_graining, hermitian_eigen, Binning, CMatrix,
    CoarseGraining, Label, Observable, Projector, QuantumState, C64,
};

/// Fraction of the spectral range used as the default shell width.
pub const DEFAULT_SHELL_FRACTION: f64 = 1.0 / 50.0;

/// The thermodynamic observational entropies, by their customary tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntropyId {
    /// Global particle number.
    #[serde(rename = "1a")]
    GlobalNumber,
    /// Global energy shells.
    #[serde(rename = "1b")]
    GlobalEnergy,
    /// Global number, then global energy: the equilibrium entropy.
    #[serde(rename = "1c")]
    GlobalNumberEnergy,
    /// Product of local particle numbers.
    #[serde(rename = "2a")]
    LocalNumber,
    /// Product of local energy shells.
    #[serde(rename = "2b")]
    LocalEnergy,
    /// Local numbers, then local energies: the non-equilibrium entropy.
    #[serde(rename = "2c")]
    LocalNumberEnergy,
    /// Local numbers, then global energy.
    #[serde(rename = "3a")]
    LocalNumberGlobalEnergy,
    /// Global energy, then local numbers.
    #[serde(rename = "3b")]
    GlobalEnergyLocalNumber,
    /// A coarse-graining of cell 0 times local energy shells elsewhere.
    #[serde(rename = "4")]
    SubsystemBath,
}

impl EntropyId {
    pub const ALL: [EntropyId; 9] = [
        EntropyId::GlobalNumber,
        EntropyId::GlobalEnergy,
        EntropyId::GlobalNumberEnergy,
        EntropyId::LocalNumber,
        EntropyId::LocalEnergy,
        EntropyId::LocalNumberEnergy,
        EntropyId::LocalNumberGlobalEnergy,
        EntropyId::GlobalEnergyLocalNumber,
        EntropyId::SubsystemBath,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            EntropyId::GlobalNumber => "1a",
            EntropyId::GlobalEnergy => "1b",
            EntropyId::GlobalNumberEnergy => "1c",
            EntropyId::LocalNumber => "2a",
            EntropyId::LocalEnergy => "2b",
            EntropyId::LocalNumberEnergy => "2c",
            EntropyId::LocalNumberGlobalEnergy => "3a",
            EntropyId::GlobalEnergyLocalNumber => "3b",
            EntropyId::SubsystemBath => "4",
        }
    }
}

impl fmt::Display for EntropyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EntropyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntropyId::ALL
            .into_iter()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::Parse(format!("unknown entropy id {s:?}")))
    }
}

/// Shell widths for the global and per-cell energy coarse-grainings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellWidths {
    pub global: f64,
    pub local: Vec<f64>,
}

impl ShellWidths {
    /// An explicit `delta_e` applies everywhere; otherwise each spectrum
    /// gets its own range times [`DEFAULT_SHELL_FRACTION`].
    pub fn resolve(model: &LatticeModel, delta_e: Option<f64>) -> Result<Self> {
        if let Some(w) = delta_e {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Config(format!("shell width {w} is invalid")));
            }
            return Ok(ShellWidths {
                global: w,
                local: vec![w; model.cell_count()],
            });
        }
        let range = |e: &[f64]| e.last().unwrap_or(&0.0) - e.first().unwrap_or(&0.0);
        Ok(ShellWidths {
            global: model.spectral_range() * DEFAULT_SHELL_FRACTION,
            local: model
                .cells()
                .iter()
                .map(|c| range(&c.energies) * DEFAULT_SHELL_FRACTION)
                .collect(),
        })
    }
}

impl LatticeModel {
    /// `C_N`: one projector per total particle number present in the basis.
    pub fn global_number_cg(&self) -> CoarseGraining {
        let numbers = self.particle_numbers();
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (k, &n) in numbers.iter().enumerate() {
            match groups.last_mut() {
                Some((m, g)) if *m == n => g.push(k),
                _ => groups.push((n, vec![k])),
            }
        }
        let dim = self.dim();
        let elements = groups
            .iter()
            .map(|(_, g)| {
                Projector::from_basis_unchecked(CMatrix::from_fn(dim, g.len(), |i, j| {
                    C64::new(f64::from(u8::from(i == g[j])), 0.0)
                }))
            })
            .collect();
        let labels = groups.iter().map(|(n, _)| Label::index(*n)).collect();
        CoarseGraining::new_unchecked(elements, labels).expect("number blocks cover the basis")
    }

    /// `C_E`: half-open shells of the global spectrum from its minimum.
    pub fn global_energy_cg(&self, width: f64) -> Result<CoarseGraining> {
        let vectors = to_complex(self.eigenvectors());
        CoarseGraining::from_spectrum(self.energies(), &vectors, Binning::shells(width, None))
    }

    /// `C_{N_i}` on the cell's own Fock space.
    pub fn local_number_cg(&self, cell: usize) -> CoarseGraining {
        let len = self.cells()[cell].len;
        let d = 1usize << len;
        let elements = (0..=len)
            .map(|n| {
                let states: Vec<usize> = (0..d).filter(|s| s.count_ones() as usize == n).collect();
                Projector::from_basis_unchecked(CMatrix::from_fn(d, states.len(), |i, j| {
                    C64::new(f64::from(u8::from(i == states[j])), 0.0)
                }))
            })
            .collect();
        let labels = (0..=len).map(Label::index).collect();
        CoarseGraining::new_unchecked(elements, labels).expect("number blocks cover the cell")
    }

    /// `C_{E_i}` on the cell's own Fock space; each basis vector has a
    /// definite local particle number.
    pub fn local_energy_cg(&self, cell: usize, width: f64) -> Result<CoarseGraining> {
        let c = &self.cells()[cell];
        let vectors = to_complex(&c.vectors);
        CoarseGraining::from_spectrum(&c.energies, &vectors, Binning::shells(width, None))
    }

    /// `C_1 (x) ... (x) C_m` on the model basis, one local coarse-graining
    /// per cell on that cell's Fock space. In a fixed-particle sector every
    /// local element must commute with the local number operator; products
    /// are then restricted to the sector exactly, and elements with no
    /// support there are dropped.
    pub fn product_cg(&self, locals: &[CoarseGraining]) -> Result<CoarseGraining> {
        if locals.len() != self.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: self.cell_count(),
                found: locals.len(),
            });
        }
        let sector = self.config().particles;
        let mut split = Vec::with_capacity(locals.len());
        for (k, cg) in locals.iter().enumerate() {
            let d = 1usize << self.cells()[k].len;
            if cg.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: cg.dim(),
                });
            }
            split.push(
                cg.elements()
                    .iter()
                    .map(|p| split_by_number(p, sector.is_some()))
                    .collect::<Result<Vec<_>>>()?,
            );
        }

        let dim = self.dim();
        let mut elements = Vec::new();
        let mut labels = Vec::new();
        let mut choice = vec![0usize; locals.len()];
        loop {
            let parts: Vec<&LocalElement> = choice
                .iter()
                .enumerate()
                .map(|(k, &e)| &split[k][e])
                .collect();
            let columns = self.product_columns(&parts, sector);
            if !columns.is_empty() {
                let mut basis = CMatrix::zeros(dim, columns.len());
                for (j, col) in columns.iter().enumerate() {
                    for &(r, amp) in col {
                        basis[(r, j)] = amp;
                    }
                }
                elements.push(Projector::from_basis_unchecked(basis));
                labels.push(Label::Tuple(
                    choice
                        .iter()
                        .enumerate()
                        .map(|(k, &e)| locals[k].labels()[e].clone())
                        .collect(),
                ));
            }
            // Odometer over element tuples, last cell fastest.
            let mut k = locals.len();
            loop {
                if k == 0 {
                    return CoarseGraining::new_unchecked(elements, labels);
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < locals[k].len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    /// Sparse columns (model-basis row, amplitude) of the product of the
    /// given local elements, restricted to the sector if there is one.
    fn product_columns(
        &self,
        parts: &[&LocalElement],
        sector: Option<usize>,
    ) -> Vec<Vec<(usize, C64)>> {
        let mut out = Vec::new();
        let mut partial: SparseColumn = vec![(0, C64::new(1.0, 0.0))];
        self.extend_columns(parts, 0, 0, sector, &mut partial, &mut out);
        out
    }

    fn extend_columns(
        &self,
        parts: &[&LocalElement],
        cell: usize,
        count: usize,
        sector: Option<usize>,
        partial: &mut SparseColumn,
        out: &mut Vec<Vec<(usize, C64)>>,
    ) {
        if cell == parts.len() {
            if sector.is_none_or(|n| n == count) {
                let column = partial
                    .iter()
                    .filter_map(|&(bits, amp)| self.basis().index_of(bits).map(|r| (r, amp)))
                    .collect();
                out.push(column);
            }
            return;
        }
        let remaining_sites: usize = self.cells()[cell..].iter().map(|c| c.len).sum();
        let shift = self.cells()[cell].start;
        for (n, vector) in &parts[cell].columns {
            if let Some(total) = sector {
                let after = count + n;
                let rest = remaining_sites - self.cells()[cell].len;
                if after > total || after + rest < total {
                    continue;
                }
            }
            let saved = partial.clone();
            let mut next = Vec::with_capacity(partial.len() * vector.len());
            for &(bits, amp) in partial.iter() {
                for &(local, a) in vector {
                    next.push((bits | (local << shift), amp * a));
                }
            }
            *partial = next;
            self.extend_columns(parts, cell + 1, count + n, sector, partial, out);
            *partial = saved;
        }
    }
}

/// A local projector as sparse basis columns with definite particle number.
struct LocalElement {
    columns: Vec<(usize, SparseColumn)>,
}

const SPARSE_CUTOFF: f64 = 1e-14;

/// Nonzero entries of a column, keyed by raw local bits.
type SparseColumn = Vec<(u32, C64)>;

fn sparse(col: impl Iterator<Item = C64>) -> SparseColumn {
    col.enumerate()
        .filter(|(_, z)| z.norm() > SPARSE_CUTOFF)
        .map(|(i, z)| (i as u32, z))
        .collect()
}

/// Splits a local projector into parts of definite particle number. Basis
/// columns that already have one are used as they are; otherwise the
/// projector must commute with the local number operator and each number
/// block is diagonalized. Without a sector the split is not needed and
/// every column is tagged with 0.
fn split_by_number(p: &Projector, in_sector: bool) -> Result<LocalElement> {
    let b = p.basis();
    if !in_sector {
        return Ok(LocalElement {
            columns: (0..b.ncols())
                .map(|j| (0, sparse(b.column(j).iter().copied())))
                .collect(),
        });
    }
    let definite: Option<Vec<(usize, SparseColumn)>> = (0..b.ncols())
        .map(|j| {
            let col = sparse(b.column(j).iter().copied());
            let n = col.first().map(|(s, _)| s.count_ones() as usize)?;
            col.iter()
                .all(|(s, _)| s.count_ones() as usize == n)
                .then_some((n, col))
        })
        .collect();
    if let Some(columns) = definite {
        return Ok(LocalElement { columns });
    }
    let d = b.nrows();
    let number = CMatrix::from_fn(d, d, |i, j| {
        C64::new(
            if i == j {
                (i as u32).count_ones() as f64
            } else {
                0.0
            },
            0.0,
        )
    });
    let residual = commutator_residual(&p.matrix(), &number);
    if residual > 1e-10 {
        return Err(Error::NotSectorPreserving(format!(
            "local element does not commute with the cell particle number (residual {residual:.3e})"
        )));
    }
    let full = p.matrix();
    let levels = (d as f64).log2().round() as usize;
    let mut columns = Vec::new();
    for n in 0..=levels {
        let states: Vec<usize> = (0..d).filter(|s| s.count_ones() as usize == n).collect();
        let block = CMatrix::from_fn(states.len(), states.len(), |i, j| {
            full[(states[i], states[j])]
        });
        let (values, vectors) = hermitian_eigen(&block);
        for (k, &v) in values.iter().enumerate() {
            if v > 0.5 {
                let mut col = vec![C64::new(0.0, 0.0); d];
                for (i, &s) in states.iter().enumerate() {
                    col[s] = vectors[(i, k)];
                }
                columns.push((n, sparse(col.into_iter())));
            }
        }
    }
    Ok(LocalElement { columns })
}

/// The coarse-graining sequences behind every [`EntropyId`], compiled once
/// per model so the same trees serve many states.
pub struct EntropySuite {
    widths: ShellWidths,
    trees: Vec<(EntropyId, BranchTree)>,
}

impl EntropySuite {
    /// `subsystem` is the cell-0 coarse-graining of entropy 4; it defaults
    /// to the local particle number of cell 0.
    pub fn new(
        model: &LatticeModel,
        ids: &[EntropyId],
        delta_e: Option<f64>,
        subsystem: Option<&CoarseGraining>,
    ) -> Result<Self> {
        let widths = ShellWidths::resolve(model, delta_e)?;
        let mut ids = ids.to_vec();
        ids.sort();
        ids.dedup();
        let needs = |set: &[EntropyId]| ids.iter().any(|id| set.contains(id));
        use EntropyId::*;

        let global_n = needs(&[GlobalNumber, GlobalNumberEnergy]).then(|| model.global_number_cg());
        let global_e = if needs(&[
            GlobalEnergy,
            GlobalNumberEnergy,
            LocalNumberGlobalEnergy,
            GlobalEnergyLocalNumber,
        ]) {
            Some(model.global_energy_cg(widths.global)?)
        } else {
            None
        };
        let local_e: Option<Vec<CoarseGraining>> =
            if needs(&[LocalEnergy, LocalNumberEnergy, SubsystemBath]) {
                Some(
                    (0..model.cell_count())
                        .map(|k| model.local_energy_cg(k, widths.local[k]))
                        .collect::<Result<_>>()?,
                )
            } else {
                None
            };
        let local_n_product = if needs(&[
            LocalNumber,
            LocalNumberEnergy,
            LocalNumberGlobalEnergy,
            GlobalEnergyLocalNumber,
        ]) {
            let locals: Vec<CoarseGraining> = (0..model.cell_count())
                .map(|k| model.local_number_cg(k))
                .collect();
            Some(model.product_cg(&locals)?)
        } else {
            None
        };
        let local_e_product = match &local_e {
            Some(l) if needs(&[LocalEnergy, LocalNumberEnergy]) => Some(model.product_cg(l)?),
            _ => None,
        };
        let subsystem_product = match &local_e {
            Some(l) if needs(&[SubsystemBath]) => {
                let mut locals = l.clone();
                locals[0] = subsystem
                    .cloned()
                    .unwrap_or_else(|| model.local_number_cg(0));
                Some(model.product_cg(&locals)?)
            }
            _ => None,
        };

        let get = |cg: &Option<CoarseGraining>| -> Step {
            Step::Projective(cg.clone().expect("built above"))
        };
        let mut trees = Vec::with_capacity(ids.len());
        for id in ids {
            let steps = match id {
                GlobalNumber => vec![get(&global_n)],
                GlobalEnergy => vec![get(&global_e)],
                GlobalNumberEnergy => vec![get(&global_n), get(&global_e)],
                LocalNumber => vec![get(&local_n_product)],
                LocalEnergy => vec![get(&local_e_product)],
                LocalNumberEnergy => vec![get(&local_n_product), get(&local_e_product)],
                LocalNumberGlobalEnergy => vec![get(&local_n_product), get(&global_e)],
                GlobalEnergyLocalNumber => vec![get(&global_e), get(&local_n_product)],
                SubsystemBath => vec![get(&subsystem_product)],
            };
            trees.push((id, BranchTree::compile(&MeasurementSequence::new(steps)?)?));
        }
        Ok(EntropySuite { widths, trees })
    }

    pub fn widths(&self) -> &ShellWidths {
        &self.widths
    }

    pub fn ids(&self) -> Vec<EntropyId> {
        self.trees.iter().map(|(id, _)| *id).collect()
    }

    /// Values in [`EntropyId`] order.
    pub fn evaluate(&self, state: &QuantumState) -> Result<Vec<(EntropyId, f64)>> {
        self.trees
            .iter()
            .map(|(id, tree)| Ok((*id, tree.entropy(state)?)))
            .collect()
    }

    pub fn value(&self, id: EntropyId, state: &QuantumState) -> Result<f64> {
        let (_, tree) = self
            .trees
            .iter()
            .find(|(i, _)| *i == id)
            .ok_or_else(|| Error::Config(format!("entropy {id} was not compiled")))?;
        tree.entropy(state)
    }
}

/// One thermodynamic entropy of `state`. `delta_e = None` uses the default
/// shell widths.
pub fn thermo_entropy(
    id: EntropyId,
    state: &QuantumState,
    model: &LatticeModel,
    delta_e: Option<f64>,
    subsystem: Option<&CoarseGraining>,
) -> Result<f64> {
    EntropySuite::new(model, &[id], delta_e, subsystem)?.value(id, state)
}

macro_rules! named_entropy {
    ($($name:ident => $id:ident),* $(,)?) => {
        $(
            pub fn $name(state: &QuantumState, model: &LatticeModel, delta_e: Option<f64>) -> Result<f64> {
                thermo_entropy(EntropyId::$id, state, model, delta_e, None)
            }
        )*
    };
}

named_entropy! {
    entropy_1a => GlobalNumber,
    entropy_1b => GlobalEnergy,
    entropy_1c => GlobalNumberEnergy,
    entropy_2a => LocalNumber,
    entropy_2b => LocalEnergy,
    entropy_2c => LocalNumberEnergy,
    entropy_3a => LocalNumberGlobalEnergy,
    entropy_3b => GlobalEnergyLocalNumber,
}

/// Entropy 4 with a caller-supplied coarse-graining of cell 0.
pub fn entropy_4(
    state: &QuantumState,
    model: &LatticeModel,
    delta_e: Option<f64>,
    subsystem: &CoarseGraining,
) -> Result<f64> {
    thermo_entropy(
        EntropyId::SubsystemBath,
        state,
        model,
        delta_e,
        Some(subsystem),
    )
}

/// A conserved quantity: a global observable on the model basis, its shell
/// width (zero groups exact degeneracies), and optionally one local variant
/// per cell on the cells' own Fock spaces.
#[derive(Clone, Debug)]
pub struct ConservedQuantity {
    pub global: Observable,
    pub width: f64,
    pub local: Option<Vec<Observable>>,
}

impl ConservedQuantity {
    pub fn number(model: &LatticeModel) -> Self {
        ConservedQuantity {
            global: model.number_observable(),
            width: 0.0,
            local: Some(
                (0..model.cell_count())
                    .map(|k| model.local_number_observable(k))
                    .collect(),
            ),
        }
    }

    pub fn energy(model: &LatticeModel, widths: &ShellWidths) -> Self {
        ConservedQuantity {
            global: model.hamiltonian_observable(),
            width: widths.global,
            local: Some(
                (0..model.cell_count())
                    .map(|k| model.local_hamiltonian_observable(k))
                    .collect(),
            ),
        }
    }
}

/// Equilibrium entropy over the sequence of global coarse-grainings and,
/// when every quantity has local variants, the non-equilibrium entropy over
/// the sequence of their per-cell products. Local shells use the same width
/// as their global counterpart unless `local_widths` overrides it per cell.
pub fn general_conserved_entropy(
    model: &LatticeModel,
    state: &QuantumState,
    quantities: &[ConservedQuantity],
    local_widths: Option<&[f64]>,
) -> Result<(f64, Option<f64>)> {
    let h = to_complex(model.hamiltonian());
    let mut global = Vec::with_capacity(quantities.len());
    for q in quantities {
        if q.global.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: q.global.dim(),
            });
        }
        let residual = commutator_residual(q.global.matrix(), &h);
        if residual > 1e-8 {
            warn!("observable does not commute with H (residual {residual:.3e})");
        }
        global.push(Step::Projective(energy_shell_coarse_graining(
            &q.global, q.width, None,
        )?));
    }
    let equilibrium = BranchTree::compile(&MeasurementSequence::new(global)?)?.entropy(state)?;

    if quantities.iter().any(|q| q.local.is_none()) {
        return Ok((equilibrium, None));
    }
    let mut products = Vec::with_capacity(quantities.len());
    for q in quantities {
        let locals = q
            .local
            .as_ref()
            .expect("checked above")
            .iter()
            .enumerate()
            .map(|(k, obs)| {
                let width = local_widths.map_or(q.width, |w| w[k]);
                energy_shell_coarse_graining(obs, width, None)
            })
            .collect::<Result<Vec<_>>>()?;
        products.push(Step::Projective(model.product_cg(&locals)?));
    }
    let nonequilibrium =
        BranchTree::compile(&MeasurementSequence::new(products)?)?.entropy(state)?;
    Ok((equilibrium, Some(nonequilibrium)))
}

/// Real-symmetric matrix as a complex observable.
pub fn observable_from_real(m: &DMatrix<f64>) -> Result<Observable> {
    Observable::new(to_complex(m))
}
