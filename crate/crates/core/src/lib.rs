//! Posted-price mechanisms for Bayesian budget-feasible procurement.
//!
//! A buyer with a hard budget purchases services from agents whose private
//! costs are drawn independently from known priors. The crate computes
//! ex ante relaxations in quantile space, turns them into take-it-or-leave-it
//! price menus, and measures the resulting mechanisms by simulation.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below cover the common case.

// `!(x > 0)` style comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod exante;
pub mod mech;
pub mod real;
pub mod rng;
pub mod sim;
pub mod value;

pub use error::{Error, Result};
pub use real::Real;

pub type CostDistributionF64 = dist::CostDistribution<f64>;
pub type CostDistributionF32 = dist::CostDistribution<f32>;
pub type AgentPriorF64 = dist::AgentPrior<f64>;
pub type AgentPriorF32 = dist::AgentPrior<f32>;
pub type ValueFunctionF64 = value::ValueFunction<f64>;
pub type ValueFunctionF32 = value::ValueFunction<f32>;
pub type ExAnteSolutionF64 = exante::ExAnteSolution<f64>;
pub type ExAnteSolutionF32 = exante::ExAnteSolution<f32>;
pub type PriceMenuF64 = mech::PriceMenu<f64>;
pub type PriceMenuF32 = mech::PriceMenu<f32>;
