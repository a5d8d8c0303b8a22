//! Finite-stage construction of a free family of partial bijections whose
//! word graphs stay linearly independent over the rationals, together with
//! an independent verifier for every invariant the construction promises.

pub mod cli;
pub mod dump;
pub mod engine;
pub mod freewords;
pub mod partialmaps;
pub mod qspace;
pub mod verify;
