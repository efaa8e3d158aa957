//! Exact combinatorics for an amenable étale equivalence relation on the path
//! space of a Bratteli diagram carrying two disjoint copies of a guest diagram.

pub mod cli;
pub mod diagram;
pub mod embedding;
pub mod measure;
pub mod fixtures;
pub mod groupoid;
pub mod ktheory;
pub mod par;
pub mod star_algebra;
