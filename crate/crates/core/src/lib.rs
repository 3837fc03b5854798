//! Mesh-free hemodynamic surrogate: a transformer encoder over vessel
//! centerline tokens, conditioned on inlet flow rate, decoding wall pressure
//! and wall shear stress as sums of anisotropic Gaussian kernels.
//!
//! The crate also carries everything needed to train and check the model
//! without CFD: synthetic vessel generation, a Hagen–Poiseuille
//! low-fidelity solver used as a label oracle, metrics, FLOP accounting,
//! and the on-disk formats.

pub mod dataio;
pub mod flopbench;
pub mod geometry;
pub mod lowfi;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod seed;
pub mod training;
