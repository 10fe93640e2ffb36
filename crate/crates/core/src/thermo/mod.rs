//! Hard-core boson lattices and their thermodynamic observational entropies.
//!
//! Every coarse-graining here commutes with the total particle number, so a
//! model restricted to a fixed-particle sector evaluates them exactly on
//! that sector.

mod ensemble;
mod entropies;
mod model;
mod quench;

pub use ensemble::{ensemble_state, EnsembleSpec};
pub use entropies::{
    entropy_1a, entropy_1b, entropy_1c, entropy_2a, entropy_2b, entropy_2c, entropy_3a, entropy_3b,
    entropy_4, general_conserved_entropy, observable_from_real, thermo_entropy, ConservedQuantity,
    EntropyId, EntropySuite, ShellWidths, DEFAULT_SHELL_FRACTION,
};
pub use model::{
    build_model, CellSpectrum, Cells, FockBasis, LatticeModel, ModelConfig, Term, DEFAULT_DIM_CAP,
    DEFAULT_SITE_CAP,
};
pub use quench::{
    run_quench, InitialState, QuenchConfig, QuenchMetadata, QuenchResult, QuenchRow,
    QuenchScenario, TimeGrid, FINAL_WINDOW,
};
