//! Solvers for McKean-Vlasov equations whose drift is driven by the law of an
//! elastic stopping time.
//!
//! A particle at `X_{0-} + B_t - alpha * Lambda_t` is reflected at zero by the
//! Skorokhod map and killed once its accumulated boundary push `L_t` exceeds an
//! independent `Exp(kappa)` threshold; `Lambda_t` is the probability of having
//! been killed by time `t`. The crate provides
//!
//! * [`paths`]: sampled paths, the Skorokhod reflection map and the Lévy / sup
//!   diagnostics used for convergence checks,
//! * [`sampling`]: initial laws and counter-based random streams,
//! * [`particle`]: the N-particle system with physical cascade resolution, in
//!   both the elastic and the equivalent absorbing form,
//! * [`mkv_solver`]: the operator `Gamma_kappa`, Picard iteration from zero and
//!   closed-form first-passage oracles,
//! * [`stefan_pde`]: a finite-difference solver for the density equation with
//!   its Robin boundary condition, plus the moving-frame Stefan transform,
//! * [`experiments`]: the config-driven runner behind the `elastic-mkv` CLI.

pub mod error;
pub mod experiments;
pub mod mkv_solver;
pub mod particle;
pub mod paths;
pub mod quad;
pub mod sampling;
pub mod stefan_pde;

pub use error::{Error, Result};
pub use paths::{GridPath, LossCurve, TimeGrid};
pub use sampling::{InitialLaw, ModelParams, RngStream};
