//! Corporate control networks, cross-border ownership chains and a two-step
//! structural gravity pipeline for the delegation of monitoring in
//! multinational enterprises.
//!
//! The crate is organised bottom-up:
//!
//! - [`ownership`] parses equity graphs and identifies ultimate parents by the
//!   majority rule (direct, transitive and consolidated control).
//! - [`chains`] walks control hierarchies into parent-to-final chains and
//!   aggregates dyadic and triadic count tables.
//! - [`frictions`] builds country-pair regressors (overlapping working hours,
//!   distance, dummies, ratio controls) and regression design tables.
//! - [`ppml`] fits Poisson pseudo-maximum-likelihood models with absorbed
//!   fixed effects and clustered sandwich covariance, and recovers the
//!   multilateral monitoring cost from bilateral fixed effects.
//! - [`structural`] holds the inspection game, middleman choice and auction
//!   probabilities, and a world simulator.
//! - [`recovery`] chains everything into an end-to-end parameter recovery run.

pub mod chains;
pub mod error;
pub mod frame;
pub mod frictions;
pub mod iso;
pub mod numfmt;
pub mod ownership;
pub mod ppml;
pub mod recovery;
pub mod structural;
pub mod tabular;

pub use error::{Error, Result};
pub use iso::Iso2;
