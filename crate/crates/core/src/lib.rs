//! Numerical toolkit for radially symmetric isentropic Euler flow with a
//! focus on inward supersonic blow-up: Riccati identities for the gradient
//! variables, a high-order solver, characteristic tracing and certification
//! of the blow-up hypotheses.

pub mod gas;
pub mod identities;
pub mod profile;
pub mod solver;
pub mod characteristics;
pub mod hypotheses;
pub mod experiment;
