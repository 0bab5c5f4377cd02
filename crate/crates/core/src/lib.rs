//! Cuckoo hashing with pages.
//!
//! Each key has `k_p` cell choices on a primary page and `k_b` on a distinct
//! backup page. The crate provides:
//!
//! * [`graph`]: table configuration and random cuckoo graphs;
//! * [`solver`]: an optimal offline placement (fewest backup keys);
//! * [`table`]: an online table with biased random-walk insertion,
//!   deletion, and lookups with page-request accounting;
//! * [`bloom`]: per-page Bloom filters for unsuccessful lookups;
//! * [`analysis`]: closed-form estimates, sigmoid threshold fits and trial
//!   statistics;
//! * [`harness`]: the experiment drivers behind the command-line tool.

pub mod analysis;
pub mod bloom;
mod error;
pub mod graph;
pub mod harness;
pub mod placement;
pub mod rng;
pub mod solver;
pub mod table;

pub use error::{ConfigError, Error};
pub use graph::{Config, CuckooGraph, KeyChoices};
pub use placement::Placement;
pub use rng::Rng;
pub use solver::solve;
pub use table::{PagedTable, WalkParams};
