//! Straddled Matrix weight initialisation and an autoencoder benchmark that
//! compares it with common initialisers.
//!
//! The Straddled Matrix places a single 1 in every row of a weight matrix,
//! at column `row mod fan_out`. Combined with ReLU and inputs in `[0, 1]`,
//! it makes the first forward pass of an autoencoder an exact linear map.
//!
//! ```
//! use straddled::initialisers::straddled;
//!
//! let w = straddled(5, 3);
//! assert_eq!(w.row(3), &[1.0, 0.0, 0.0]);
//! ```
//!
//! Modules, bottom-up:
//! - [`numerics`]: matrices, seeded sampling, Householder QR
//! - [`initialisers`]: Straddled, identity variants, Glorot, He, orthogonal, random normal
//! - [`network`]: the dense autoencoder with backpropagation and gradient descent
//! - [`data`]: synthetic generator, IDX and CSV loaders, scaling, splits
//! - [`experiment`]: seeded repeated training across initialisers
//! - [`analysis`] and [`stats`]: convergence detection, confidence bands, Welch tests
//! - [`report`], [`plot`], [`cli`]: runs files, summaries, SVG figures and commands

pub mod analysis;
pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod initialisers;
pub mod network;
pub mod numerics;
pub mod plot;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
pub use initialisers::{InitialiserKind, InitialiserSpec};
pub use network::{Autoencoder, BatchSize};
pub use numerics::{Matrix, Rng};
