//! Commonsense concept relatedness over a triple knowledge graph.
//!
//! The pipeline:
//!
//! 1. [`kb`] ingests `relation/subject/object/weight` triples into an
//!    immutable graph ([`conceptnet`] converts raw assertion dumps first).
//! 2. [`encoder`] represents a concept by a BiLSTM over its words plus a
//!    relation-aware sum over its graph neighbors, and scores two concepts by
//!    the dot product of their encodings.
//! 3. [`pretrain`] fits two independent encoders with a margin ranking loss:
//!    one for directly connected concepts, one for concepts sharing a pivot.
//! 4. [`text`] links sentences to concepts by n-gram lookup, and [`qa`]
//!    turns concept-pair scores into candidate-answer scores, mixes them with
//!    external document scores and evaluates multiple-choice accuracy.
//!
//! [`baselines`] provides PMI and TransE scorers behind the same
//! [`qa::PairScorer`] interface.

pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod conceptnet;
pub mod encoder;
pub mod error;
pub mod io;
pub mod kb;
pub mod pretrain;
pub mod qa;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
pub use kb::{ConceptId, HopDistance, KnowledgeGraph, NeighborMode, RelationId};
