//! Query-by-example lexical reranking.
//!
//! The engine reranks fixed candidate pools with BM25, Jelinek-Mercer
//! language models, TILDE query likelihood and TILDEv2 exact-match impacts,
//! fuses a lexical and a contextualized ranking by z-scaled interpolation,
//! and evaluates the result with MAP, nDCG and paired t-tests.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common case.

pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod fuse;
pub mod lexindex;
pub mod pipeline;
pub mod rankers;
pub mod scalar;
pub mod synth;
pub mod textproc;

mod jsonl;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Query id reserved for aggregate rows in reports.
pub const ALL_QUERIES: &str = "ALL";

pub type ScoredList64 = rankers::ScoredList<f64>;
pub type ScoredList32 = rankers::ScoredList<f32>;
pub type TildeDistributionStore64 = lexindex::TildeDistributionStore<f64>;
pub type TildeDistributionStore32 = lexindex::TildeDistributionStore<f32>;
pub type ImpactStore64 = lexindex::ImpactStore<f64>;
pub type ImpactStore32 = lexindex::ImpactStore<f32>;
