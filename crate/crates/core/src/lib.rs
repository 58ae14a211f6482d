//! Model confidence bounds for variable selection.
//!
//! A bootstrap ensemble of selected models yields, for each width `w`, the
//! nested pair `LBM ⊆ UBM` with `|UBM \ LBM| = w` that captures the most
//! bootstrap models. The resulting coverage curve (MUC) and its area (AMUC)
//! summarize how stable a selection procedure is. The crate also provides the
//! F-test based variable selection confidence set and a simulation harness.

pub mod bootstrap;
pub mod confidence;
pub mod data;
pub mod error;
pub mod model_set;
pub mod regression;
pub mod rng;
pub mod selectors;
pub mod sim;
pub mod vscs;

pub use bootstrap::{build_ensemble, BootstrapEnsemble, BootstrapMethod};
pub use confidence::{
    amuc, bcr, mcb_exhaustive, mcb_ranked, mcs_enumerate, select_final_mcb, Algorithm, McbPair,
    McbReport, Muc, Sidedness,
};
pub use data::{read_csv, standardize, write_csv, Dataset, Scaling};
pub use error::{McbError, Result};
pub use model_set::ModelIndexSet;
pub use regression::{fit_ols, FitResult};
pub use selectors::{select, IcPenalty, LambdaPolicy, Selection, SelectorKind, SelectorSpec};
pub use sim::{
    compare_selectors, run_coverage_experiment, AlgorithmChoice, McReport, SimConfig,
};
pub use vscs::{vscs, VscsReport, VscsResult};
