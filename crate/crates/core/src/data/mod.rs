//! libsvm ingestion, deterministic splits, a synthetic sparse regression
//! generator and finite-sum problems over a training set.

mod empirical;
mod libsvm;
mod split;
mod synthetic;

pub use empirical::{mean_loss, EmpiricalProblem, Loss};
pub use libsvm::{parse_libsvm, read_libsvm, to_libsvm, SparseDataset, SparseRow};
pub use split::{part_sizes, split};
pub use synthetic::SyntheticSparse;
