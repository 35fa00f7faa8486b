use serde::Serialize;

use crate::args::Profile;

/// Pass thresholds. `default` matches the acceptance suite; `strict`
/// tightens every bound.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Tolerances {
    /// `|norm - 1|` on slices and surfaces.
    pub unitarity: f64,
    /// Relative defect of the collision boundary condition.
    pub boundary: f64,
    /// Allowed `|slope - expected|` for convergence orders.
    pub order_band: f64,
    pub covariance: f64,
    /// Largest purity that still counts as entangled.
    pub purity_max: f64,
    /// Richardson limit of a commutator that should vanish.
    pub commutator_zero: f64,
    /// Smallest Richardson limit for a commutator that should not vanish.
    pub commutator_nonzero: f64,
    pub equal_time: f64,
    /// Exact-zero checks, e.g. the splitting outside the cutoff.
    pub exact: f64,
    pub statistics: f64,
    /// Largest ratio finest/coarsest for a quantity halved twice.
    pub refinement_ratio: f64,
    pub born_tv_one: f64,
    pub born_tv_two: f64,
    pub born_mass: f64,
    pub mutual_information: f64,
}

impl Tolerances {
    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Default => Tolerances {
                unitarity: 1e-6,
                boundary: 1e-8,
                order_band: 0.3,
                covariance: 1e-6,
                purity_max: 0.99,
                commutator_zero: 1e-8,
                commutator_nonzero: 1e-3,
                equal_time: 1e-8,
                exact: 1e-12,
                statistics: 1e-6,
                refinement_ratio: 0.5,
                born_tv_one: 0.02,
                born_tv_two: 0.05,
                born_mass: 1e-6,
                mutual_information: 1e-3,
            },
            Profile::Strict => Tolerances {
                unitarity: 1e-9,
                boundary: 1e-10,
                order_band: 0.15,
                covariance: 1e-10,
                purity_max: 0.9,
                commutator_zero: 1e-10,
                commutator_nonzero: 1e-2,
                equal_time: 1e-11,
                exact: 1e-14,
                statistics: 1e-8,
                refinement_ratio: 0.35,
                born_tv_one: 0.01,
                born_tv_two: 0.02,
                born_mass: 1e-9,
                mutual_information: 1e-6,
            },
        }
    }
}
