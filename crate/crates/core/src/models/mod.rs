//! Builders for the reference models and a seeded random-instance generator.
//!
//! The growth and repair models live on continuous state spaces; they are
//! realized here on uniform grids.

mod growth;
mod quadrature;
mod random;
mod repair;
mod unbounded;

pub use growth::{
    growth_delta_bound, growth_delta_sup, growth_model, noisy_growth_delta_bound,
    noisy_growth_model, SuccessorMapping,
};
pub use quadrature::tanh_sinh;
pub use random::{random_cmdp, RandomCmdpSpec};
pub use repair::{default_repair_cost, default_repair_density, repair_model, repair_model_default};
pub use unbounded::{unbounded_model, unbounded_policy, UnboundedVariant};

use crate::assumptions::WeightSpec;
use crate::error::{Error, Result};
use crate::model::FiniteCmdp;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscretizationSpec {
    /// Number of grid states, including both endpoints.
    pub n_states: usize,
    /// Upper end of the state range `[0, s_max]`.
    pub s_max: f64,
    /// Maximum number of actions kept per state.
    pub n_actions: usize,
    /// Quadrature nodes for noise (growth) or density (repair) integration.
    pub quad_nodes: usize,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self {
            n_states: 201,
            s_max: 10.0,
            n_actions: 41,
            quad_nodes: 32,
        }
    }
}

impl DiscretizationSpec {
    pub fn check(&self) -> Result<()> {
        if self.n_states < 2 || self.n_actions < 2 || self.quad_nodes < 2 {
            return Err(Error::InvalidArgument(
                "grid sizes must be at least 2".into(),
            ));
        }
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "range bound {} must be positive",
                self.s_max
            )));
        }
        Ok(())
    }

    /// Grid spacing on `[0, upper]`.
    fn step(&self, upper: f64) -> f64 {
        upper / (self.n_states - 1) as f64
    }
}

/// A built model with its weight function and any builder warnings.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub model: FiniteCmdp,
    pub weight: WeightSpec,
    pub warnings: Vec<String>,
}

/// Evenly spaced subset of `0..=last` with at most `max` entries, always
/// containing both ends.
fn thin_indices(last: usize, max: usize) -> Vec<usize> {
    if last < max {
        return (0..=last).collect();
    }
    let mut idx: Vec<usize> = (0..max)
        .map(|j| ((j as f64) * last as f64 / (max - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}
