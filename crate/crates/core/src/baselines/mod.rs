//! Alternative concept-pair scorers: KB co-occurrence PMI and TransE.
//! Both implement [`crate::qa::PairScorer`], so the QA pipeline accepts
//! them in place of a trained encoder.

pub mod pmi;
pub mod transe;

pub use pmi::{pmi_score, PmiScorer, PmiTable};
pub use transe::{
    load_transe, save_transe, transe_init, transe_pair_score, transe_train, Norm, TransEConfig,
    TransEParams, TransERun, TransEScorer,
};
