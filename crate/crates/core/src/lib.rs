//! Tabular binary classification for traffic-accident injury risk.
//!
//! The crate covers the whole modelling path: CSV ingestion and cleansing
//! ([`dataset`]), target derivation, one-hot encoding, scaling and seeded
//! splits ([`features`]), five classifiers ([`linear`], [`naive_bayes`],
//! [`knn`], [`forest`]) behind the [`model::Classifier`] trait, ROC/AUC and
//! per-class metrics ([`evaluation`]) and validation-AUC grid search
//! ([`tuning`]).

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod forest;
pub mod knn;
mod linalg;
pub mod linear;
pub mod model;
pub mod naive_bayes;
pub mod rng;
pub mod tuning;

pub use error::{Error, Result};
