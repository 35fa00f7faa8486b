//! Two massless Dirac particles in 1+1 dimensions interacting only through
//! a boundary condition on the collision set `z1 = z2` at equal times.

mod diagnostics;
mod initial;
mod oracle;
mod solver;

pub use diagnostics::*;
pub use initial::{AmplitudeFn, GridSamples, InitialData2P, Packet, ProductTerm};
pub use oracle::lattice_oracle;
pub(crate) use oracle::step as pair_step;
pub use solver::{Side, SliceGrid, ZeroRangeModel};
