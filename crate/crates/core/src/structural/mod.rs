//! Delegated-monitoring model: the inspection game, middleman choice,
//! the acquisition auction and a simulator built from them.

mod choice;
mod game;
mod simulate;
mod world;

pub use choice::{auction_win_prob, middleman_choice_prob, multilateral_cost, AuctionConfig};
pub use game::{equilibrium, expected_payoffs, value_with_multilateral_cost, Equilibrium, ExpectedPayoffs, GameParams};
pub use simulate::{parent_id, simulate_world, SimOutput, SimRecord, Truth};
pub use world::{generate_world, synthetic_iso, World, WorldConfig};
