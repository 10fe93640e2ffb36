use super::{MacrostateDistribution, MeasurementSequence, Record, Step};
use crate::error::{Error, Result};
use crate::hilbert::{
    adjoint_matmul, matmul, sandwich, trace, CMatrix, CVector, Label, QuantumState,
};

/// Branches whose volume falls below this are pruned.
pub const VOLUME_FLOOR: f64 = 1e-12;
/// Sanity window for probabilities and total probability.
pub const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
struct Node {
    parent: Option<usize>,
    transfer: CMatrix,
}

#[derive(Clone, Debug)]
struct Leaf {
    node: usize,
    multi_index: Vec<Label>,
    volume: f64,
}

/// Every surviving branch `i = (i_1, ..., i_n)` of a measurement sequence,
/// compiled into a tree of transfer matrices.
///
/// A branch operator `K_{i_n} ... K_{i_1}` (projectors are `B B^dag` with an
/// isometry `B`) is factored as `E_n W_n ... W_1`, where each transfer `W_k`
/// maps the range coordinates of step `k-1` into those of step `k`. With
/// that factoring `p_i = tr[W rho W^dag]` and `V_i = tr[W W^dag]`, so a
/// compiled tree can be evaluated on many states with matrix-vector work
/// for pure states. Nodes are stored breadth first, which makes leaf order
/// lexicographic in the element indices.
#[derive(Clone, Debug)]
pub struct BranchTree {
    dim: usize,
    projective: bool,
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
}

enum Embedding {
    Identity,
    Isometry(CMatrix),
}

/// `W W^dag` of a branch; branches that start with a projector have an
/// identity gram, which is kept implicit.
enum Gram {
    Identity(usize),
    Full(CMatrix),
}

impl Gram {
    fn trace(&self) -> f64 {
        match self {
            Gram::Identity(r) => *r as f64,
            Gram::Full(m) => trace(m).re,
        }
    }

    fn transform(&self, w: &CMatrix) -> CMatrix {
        match self {
            Gram::Identity(_) => matmul(w, &w.adjoint()),
            Gram::Full(nu) => sandwich(w, nu),
        }
    }
}

impl BranchTree {
    pub fn compile(seq: &MeasurementSequence) -> Result<Self> {
        let dim = seq.dim();
        let mut nodes: Vec<Node> = Vec::new();
        // (node, label path, gram nu = W W^dag, embedding of the range)
        let mut frontier: Vec<(Option<usize>, Vec<Label>, Gram, Embedding)> =
            vec![(None, Vec::new(), Gram::Identity(dim), Embedding::Identity)];

        for step in seq.steps() {
            let mut next = Vec::new();
            match step {
                Step::Projective(cg) => {
                    let mut stacked = CMatrix::zeros(dim, dim);
                    let mut offsets = Vec::with_capacity(cg.len());
                    let mut col = 0;
                    for p in cg.elements() {
                        stacked.columns_mut(col, p.rank()).copy_from(p.basis());
                        offsets.push((col, p.rank()));
                        col += p.rank();
                    }
                    let adjoint = stacked.adjoint();
                    for (node, path, nu, embed) in frontier {
                        let at_root = matches!(embed, Embedding::Identity);
                        let all = match &embed {
                            Embedding::Identity => adjoint.clone(),
                            Embedding::Isometry(b) => adjoint_matmul(&stacked, b),
                        };
                        for ((k, p), &(start, rank)) in
                            cg.elements().iter().enumerate().zip(&offsets)
                        {
                            let w = all.rows(start, rank).into_owned();
                            // At the root W = B^dag, so W W^dag = I.
                            let gram = match (&nu, at_root) {
                                (Gram::Identity(_), true) => Gram::Identity(rank),
                                _ => Gram::Full(nu.transform(&w)),
                            };
                            if gram.trace() < VOLUME_FLOOR {
                                continue;
                            }
                            nodes.push(Node {
                                parent: node,
                                transfer: w,
                            });
                            let mut path = path.clone();
                            path.push(cg.labels()[k].clone());
                            next.push((
                                Some(nodes.len() - 1),
                                path,
                                gram,
                                Embedding::Isometry(p.basis().clone()),
                            ));
                        }
                    }
                }
                Step::Kraus(kraus) => {
                    for (node, path, nu, embed) in frontier {
                        for (k, op) in kraus.elements().iter().enumerate() {
                            let w = match &embed {
                                Embedding::Identity => op.clone(),
                                Embedding::Isometry(b) => matmul(op, b),
                            };
                            let gram = Gram::Full(nu.transform(&w));
                            if gram.trace() < VOLUME_FLOOR {
                                continue;
                            }
                            nodes.push(Node {
                                parent: node,
                                transfer: w,
                            });
                            let mut path = path.clone();
                            path.push(kraus.labels()[k].clone());
                            next.push((Some(nodes.len() - 1), path, gram, Embedding::Identity));
                        }
                    }
                }
            }
            frontier = next;
        }

        let leaves = frontier
            .into_iter()
            .map(|(node, multi_index, gram, _)| Leaf {
                node: node.expect("nonempty sequence yields nodes"),
                multi_index,
                volume: gram.trace(),
            })
            .collect();
        Ok(BranchTree {
            dim,
            projective: seq.is_projective(),
            nodes,
            leaves,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.leaves.iter().map(|l| l.volume).collect()
    }

    /// Unclamped branch probabilities in leaf order.
    pub fn raw_probabilities(&self, state: &QuantumState) -> Result<Vec<f64>> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        let leaf_probability: Vec<f64> = match state.as_pure() {
            Some(psi) => {
                let mut amps: Vec<CVector> = Vec::with_capacity(self.nodes.len());
                for node in &self.nodes {
                    let v = match node.parent {
                        None => &node.transfer * psi,
                        Some(p) => &node.transfer * &amps[p],
                    };
                    amps.push(v);
                }
                self.leaves
                    .iter()
                    .map(|l| amps[l.node].norm_squared())
                    .collect()
            }
            None => {
                let rho = state.density_matrix();
                let mut sandwiches: Vec<CMatrix> = Vec::with_capacity(self.nodes.len());
                for node in &self.nodes {
                    let w = &node.transfer;
                    let s = match node.parent {
                        None => sandwich(w, &rho),
                        Some(p) => sandwich(w, &sandwiches[p]),
                    };
                    sandwiches.push(s);
                }
                self.leaves
                    .iter()
                    .map(|l| trace(&sandwiches[l.node]).re)
                    .collect()
            }
        };
        Ok(leaf_probability)
    }

    /// Branch probabilities and volumes for `state`, with the sanity window
    /// applied: entries in `[-1e-9, 0)` are zeroed, anything further out of
    /// `[0, 1]` is an error, and the kept branches must carry all the
    /// probability (pruned branches cannot hold mass for a valid state).
    pub fn distribution(&self, state: &QuantumState) -> Result<MacrostateDistribution> {
        let raw = self.raw_probabilities(state)?;
        let mut records = Vec::with_capacity(raw.len());
        let mut total = 0.0;
        for (leaf, p) in self.leaves.iter().zip(raw) {
            if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
                return Err(Error::ProbabilityOutOfRange(p));
            }
            if p > PROBABILITY_SLACK && leaf.volume < VOLUME_FLOOR {
                return Err(Error::InconsistentBranch {
                    probability: p,
                    volume: leaf.volume,
                });
            }
            let p = p.clamp(0.0, 1.0);
            total += p;
            records.push(Record {
                multi_index: leaf.multi_index.clone(),
                probability: p,
                volume: leaf.volume,
            });
        }
        if (total - 1.0).abs() > PROBABILITY_SLACK {
            return Err(Error::InconsistentBranch {
                probability: 1.0 - total,
                volume: 0.0,
            });
        }
        Ok(MacrostateDistribution {
            dim: self.dim,
            projective: self.projective,
            records,
        })
    }

    pub fn entropy(&self, state: &QuantumState) -> Result<f64> {
        Ok(self.distribution(state)?.entropy())
    }
}
