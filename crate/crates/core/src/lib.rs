//! Finite-window tools for minimal two-dimensional symbolic systems: cube
//! sets of commuting shifts, regionally proximal relations, product
//! detection, block-code automorphism search, the Morse and Robinson
//! tilings, and a Heisenberg nilrotation simulator.

pub mod automorphism;
pub mod cubes;
pub mod error;
pub mod grid;
pub mod heisenberg;
pub mod product;
pub mod robinson;
pub mod substitution;

pub use error::{Error, Result};
pub use grid::{Alphabet, Pattern, Rect, ShiftVector, Symbol};
