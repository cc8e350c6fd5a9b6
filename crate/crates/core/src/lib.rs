//! Look-ahead cellular-automaton traffic on a ring, its mesoscopic ODE
//! closures, the nonlocal continuum limit, and the ensemble statistics used
//! to compare them.

pub mod continuum;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod meso;
pub mod oracle;

pub use error::{Error, Result};
