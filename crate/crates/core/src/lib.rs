//! Subsampling, under-sampling and importance-sampling ensembles for
//! estimating class probabilities in imbalanced binary classification.
//!
//! Two base learners are provided: a label-blind random partition tree
//! (infinite random forests) and the 1-nearest-neighbour rule (bagged 1-NN).
//! Each comes in three flavours: plain subsampling targets the regression
//! function `mu`, stratified under-sampling targets the rebalanced `mu*`,
//! and the importance-sampling variant maps `mu*` back to `mu`.

pub mod dataset;
pub mod debias;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod nn;
pub mod rng;
pub mod synth;
pub mod theory;

mod combin;

pub use dataset::{Dataset, LabeledSample, SubsampleScheme};
pub use debias::{EmpiricalPriors, PriorPair};
pub use error::{Error, Result};
pub use experiment::{
    CltReport, CltRow, Estimator, ExperimentConfig, McRow, McSummary, SRule,
};
pub use forest::{Partitioner, TreeParams};
pub use rng::RandomStream;
pub use synth::{Scenario, Setup, SyntheticModel};
pub use theory::TheoryInputs;
