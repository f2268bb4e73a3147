//! Recoverability analysis for noisy quantum order finding.
//!
//! The pipeline synthesizes ideal and noise-distorted precision-register
//! distributions ([`spectrum`]), decodes them with continued fractions and
//! modular verification ([`decoder`]), extracts four recoverability features
//! ([`features`]), and analyzes labeled runs with AUROC, CART trees and
//! random forests ([`mlkit`], [`analysis`]). [`dataset`] generates, imports
//! and persists run collections.

pub mod analysis;
pub mod dataset;
pub mod decoder;
pub mod error;
pub mod features;
pub mod mlkit;
pub mod numtheory;
pub mod rng;
pub mod spectrum;

pub use decoder::{decode, is_recoverable, CandidateRule, DecodeResult, MassMap};
pub use error::{Error, Result};
pub use features::{feature_vector, Feature, FeatureVector};
pub use numtheory::{Convergent, Instance};
pub use spectrum::{Counts, KernelFamily, NoiseConfig, Sector, Spectrum, SpectrumData};
