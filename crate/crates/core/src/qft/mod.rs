//! Multi-time emission–absorption model: multi-time Fock functions built
//! from Heisenberg-picture operator products, the multi-time equations as
//! residuals, and commutator experiments for the statistics rule.

mod equations;
mod heisenberg;
mod statistics;

pub use equations::{
    apply_partial_hamiltonian, creation_term, equal_time_reduction_check, green_term, multitime_equation_residual,
    splitting_equivalence_residual, truncation_leak, Slot, Splitting,
};
pub use heisenberg::{
    configuration_spacelike, lattice_spacelike, packet_state, FockFunction, GreenFunctionCut, LatticePoint, QftModel,
};
pub use statistics::{
    qft_commutator_check, statistics_consistency_experiment, statistics_sweep, EmissionAbsorptionSpec,
    MultiTimeOperators, Orbital, ProbeFockFunction, Statistics, StatisticsOutcome,
};

#[cfg(test)]
mod tests;
