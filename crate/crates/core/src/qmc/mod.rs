//! Randomly shifted rank-1 lattice rules.

mod cbc;
mod lattice;
mod normal;

pub use cbc::{
    bernoulli2, cbc_construct, cbc_construct_traced, worst_case_error_sq, CbcStep, WeightSpec,
};
pub use lattice::{
    lattice_point, load_generating_vector, map_to_parameters, parse_generating_vector,
    LatticeRule, Provenance, RandomShift,
};
pub(crate) use lattice::{lattice_point_into, map_to_parameters_clamped};
pub use normal::{inverse_normal_cdf, inverse_normal_cdf_clamped, normal_cdf, CLAMP_EPS};
