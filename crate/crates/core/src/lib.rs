//! Principal specializations Υ_w of Schubert polynomials — three exact
//! recurrences with search for maximizing permutations — together with the
//! reduced bumpless pipe dream model: lattice structure, local moves, a
//! uniform MCMC sampler, and diagnostics showing why monotone coupling from
//! the past fails on this state space.

pub mod bpd;
pub mod cftp;
pub mod eval;
pub mod mcmc;
pub mod moves;
pub mod perm;
pub mod ratio;
pub mod search;
pub mod stats;

pub use bpd::{Asm, Bpd, HeightGrid, Tile};
pub use eval::{AddArith, DescentArith, EvalError, EvalMode, EvalValue};
pub use perm::{LayeredSpec, PackedPerm, Perm, PermError};
