//! Closed forms for mod-1 shift channels and Poisson process families,
//! with quadrature, sampling and discretization.

mod discretize;
mod poisson;
mod sample;
mod shift;

pub use discretize::{intensity_levels, poisson_discretize, poisson_discretize_with, DiscretizeOptions};
pub use poisson::{
    bounded_rate, constant_divergence_rate, mean_capacity_mixture, mean_center_intensity, optimal_mean,
    poisson_bounded_capacity, poisson_capacity, poisson_constrained_capacity, poisson_divergence,
    poisson_mean_capacity, poisson_product_capacity, Ceiling, Intensity, MeanConstraint, PoissonFamilySpec,
    PoissonSolution,
};
pub use sample::{
    poisson_expectation, poisson_log_rnd, poisson_mc_divergence, poisson_mc_expectation, poisson_rnd, poisson_sample,
    McEstimate, SamplePath, MC_BATCHES,
};
pub use shift::{shift_capacity, shift_family_capacity, DensityOnCircle, UNIT_MASS_TOL};
