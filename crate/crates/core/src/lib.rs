//! Counting squares and cubes in prefixes of the Fibonacci word.
//!
//! The four counting functions of a prefix `𝔽[1,n]` are exposed through
//! exact fast paths that never build the word:
//!
//! * `A(n)` distinct squares: [`squares::count_distinct_squares`]
//! * `B(n)` square occurrences: [`squares::count_square_occurrences`]
//! * `C(n)` distinct cubes: [`cubes::count_distinct_cubes`]
//! * `D(n)` cube occurrences: [`cubes::count_cube_occurrences`]
//!
//! [`oracle`] recomputes everything by brute force on materialized prefixes.

pub mod cli;
pub mod cubes;
pub mod error;
pub mod fibword;
pub mod oracle;
pub mod squares;

pub use error::{Error, Result};
pub use fibword::{Letter, Word};
