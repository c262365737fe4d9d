//! Optimal mediated equilibria of extensive-form games.
//!
//! A game ([`game::GameTree`]) and a solution concept ([`notion::NotionConfig`])
//! are turned into a mediator-augmented game ([`augment::AugmentedGame`]) in
//! which the mediator interacts with every player and at most one player
//! deviates. Its sequence-form relaxation ([`sequence_form`]) yields a linear
//! program ([`lp`]) whose optimum is the best equilibrium for a chosen
//! objective. [`oracle`] checks solutions by explicit best responses and
//! [`frontier`] traces two-player payoff frontiers.

pub mod augment;
pub mod error;
pub mod frontier;
pub mod game;
pub mod io;
pub mod lp;
pub mod notion;
pub mod oracle;
pub mod par;
pub mod sequence_form;
mod simplex;

pub use error::{ConfigError, GameError, ParseError, SolveError};
