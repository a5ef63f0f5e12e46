//! Steady-state charge current through tight-binding molecular junctions whose
//! sites carry a damped vibrational mode, computed by projecting the polaron-dressed
//! electrons onto the complex resonances of the electronic drift matrix.

pub mod cavity;
pub mod config;
pub mod correlations;
pub mod error;
pub mod model;
pub mod oracles;
pub mod quadrature;
pub mod rates;
pub mod resonances;
pub mod spectral;
pub mod transport;

pub use error::{Category, Error, Result};
