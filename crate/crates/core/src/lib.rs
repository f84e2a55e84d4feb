//! Sign-changing radial solutions of the critical Hardy problem on the unit ball.

pub mod asymptotics;
pub mod closed_forms;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod quadrature;
pub mod radial_ode;
pub mod shooting;

pub use error::{Error, Result};
