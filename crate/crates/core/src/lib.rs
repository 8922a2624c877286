//! Design of budget-constrained batches of multi-node interventions for
//! identifying a causal DAG within its equivalence class.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! harness and the command line live in the `multiperturb` crate.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

mod bits;
pub mod error;
pub mod generate;
pub mod graph;
pub mod mec;
pub mod meek;
pub mod objectives;
pub mod optimize;
pub mod rng;
pub mod sem;
pub mod sepsys;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use graph::{check_constraints, is_acyclic, skeleton, v_structures, Batch, Dag, Edge, Intervention, NodeId, Pdag};
pub use mec::{
    enumerate_mec, essential_graph, interventional_classes, prop1_counterexample, sample_ensemble, DagEnsemble,
    EssentialGraph,
};
pub use meek::{meek_closure, orient_by_intervention, r_oriented};
pub use sepsys::{separate_agnostic, separate_graph_sensitive, verify_separation, Requirement, SeparatingSystem, SeparationMode};
pub use objectives::{estimate_gradient, f_eo, f_eo_node_restricted, f_eo_soft, f_inf_tilde, multilinear_value_exact, EoWeights, Evaluator};
pub use optimize::{
    baseline_greedy_single, baseline_rand, dgc, lazy_greedy, lmo, nmscg, round, ssg, ssg_with, theorem3_bound, DesignProblem,
    NmscgParams, Objective, SsgMode,
};
pub use sem::{
    edge_probabilities, eval_f1_shd, f_mi_estimate, gen_sem, reweight_posterior, simulate, Dataset, FiniteModel, LinearSem, Posterior,
};
pub use generate::{gen_dag, GraphKind, GraphSpec};
