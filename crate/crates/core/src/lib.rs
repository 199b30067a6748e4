//! Variational model of a charged droplet with Debye–Hückel screening.
//!
//! The free energy of a nearly-spherical droplet `E` is `F(E) = P(E) + Q² G(E)`,
//! where `G` is evaluated through its dual `G = K/|E| − 2J(E)` and `J` is an
//! unconstrained convex minimization over a single potential.

pub mod ball;
pub mod calculus;
pub mod error;
pub mod io;
pub mod linalg;
pub mod modes;
pub mod params;
pub mod sphere;
pub mod transmission;

pub use error::{DropletError, Result};
pub use params::PhysicalParams;
