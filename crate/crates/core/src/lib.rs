//! Exact analysis of Hörmander's bracket condition for the likelihood-ratio
//! generators of hidden-Markov drift models, with a Monte-Carlo filtering
//! simulator as an independent check on the dynamics.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod exact;
pub mod exec;
pub mod filtersim;
pub mod hormander;
pub mod model;
pub mod polyfield;
pub mod theorems;
