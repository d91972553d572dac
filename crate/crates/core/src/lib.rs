//! Exact arithmetic for greedy expansions in a non-integer base, the adic
//! successor map on admissible digit words, the random-walk skew product it
//! drives, transfer-operator numerics, and a reproducible experiment
//! harness over all of it.
//!
//! The working objects are finite digit words with an implicit zero tail:
//! the shift map drops digits, the successor map edits a prefix, and both
//! are exact. Real-valued entry points are converted through the greedy
//! expansion in rational arithmetic.
//!
//! Modules:
//! - [`beta`]: the base, expansions, admissibility, cylinders.
//! - [`automaton`]: the follower-state automaton, counting, preimages.
//! - [`adic`]: successor/predecessor and orbit block statistics.
//! - [`skew`]: observables, cocycles, the skew orbit and its bounds.
//! - [`spectral`]: bin-transition operators, density, variance, profiles.
//! - [`experiments`]: seeded experiment drivers with JSON/CSV reports.
//! - [`plot`]: deterministic SVG rendering of reports.

pub mod adic;
pub mod automaton;
pub mod beta;
pub mod experiments;
pub mod plot;
pub mod ratio;
pub mod skew;
pub mod spectral;
pub mod stats;
pub mod word;

pub use adic::{predecessor, successor, AdicError, AdicStep, BlockStats};
pub use automaton::Automaton;
pub use beta::{Beta, BetaError, Cylinder};
pub use skew::{Fiber, Group, Observable, SkewPoint, Window};
pub use word::Word;
