//! What-if analysis for linear and integer optimization models.
//!
//! The crate is organised around one round of analysis: a model written in
//! the model language ([`model`]) receives a patch ([`patch`]), both versions
//! are solved exactly ([`solver`]), the change between them is measured as a
//! graph edit distance on their bipartite graphs ([`graph`]), and a chat
//! provider explains the outcome ([`agent`]). [`bench`] runs that loop over a
//! dataset and scores it.

pub mod agent;
pub mod bench;
pub mod graph;
pub mod model;
pub mod patch;
pub mod solver;

mod serde_ext;

/// The airline example model shipped with the crate.
pub const AIRCRAFT_MODEL: &str = include_str!("../data/aircraft.eor");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/patches.md")]
    mod patches {}
    #[doc = include_str!("../../../book/src/decision-information.md")]
    mod decision_information {}
    #[doc = include_str!("../../../book/src/agents.md")]
    mod agents {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
}
