//! Benchmark and illustration models, each with its baseline policy.

pub mod energy;
pub mod grid;
pub mod instances;
pub mod random;

pub use energy::{build_energy, EnergyConfig, EnergyDomain};
pub use grid::{build_grid, GridConfig};
pub use instances::{build_example1, build_illustrative, build_tightness, ScenarioInstance};
pub use random::{bound_corpus, build_random, CorpusInstance};
