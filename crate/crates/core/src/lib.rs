pub mod airy;
pub mod basis;
pub mod checks;
pub mod error;
pub mod interferometry;
pub mod propagator;
pub mod qfi;
pub mod quadrature;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
