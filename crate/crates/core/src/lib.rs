//! Cooperative and distributed decision making for a five-agent buried-IED
//! detection platform.
//!
//! Each agent carries one sensor (visual, near-infrared, near-ultraviolet,
//! thermal, ground-penetrating radar). It makes a local decision β from its
//! own readings and a cooperative decision Ω from the five β values of the
//! team. Decision models are evolved either as topology-augmenting neural
//! networks ([`neuroevo`]) or as genetic fuzzy systems ([`fuzzyga`]); the
//! [`experiment`] module trains and compares them across three
//! train/validation split cases of a two-day acquisition campaign.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod experiment;
pub mod fusion;
pub mod fuzzyga;
pub mod metrics;
pub mod models;
pub mod neuroevo;
pub mod rng;
pub mod synthgen;
