//! The generational loop: evaluate, speciate, stagnate, apportion offspring,
//! reproduce.

mod reproduce;
mod run;
mod species;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{AttributeSchema, GenomeLimits};
use crate::inference::{Activation, Aggregation};
use crate::ops::{DistanceConfig, MutationConfig};

pub use reproduce::{initial_genomes, initialize_population, reproduce};
pub use run::{evaluate_population, evolve, evolve_with, EvolveOutcome, RunStats};
pub use species::{clamp_spawn, compute_spawn_counts, rank_normalize, speciate, update_stagnation, Species, SpeciesState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeatConfig {
    pub seed: u64,
    pub fitness_target: f64,
    pub generation_limit: usize,
    pub pop_size: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub limits: GenomeLimits,
    pub max_species: usize,
    pub compatibility_threshold: f64,
    pub species_elitism: usize,
    pub max_stagnation: usize,
    pub genome_elitism: usize,
    pub survival_threshold: f64,
    pub spawn_number_change_rate: f64,
    pub mutation: MutationConfig,
    pub distance: DistanceConfig,
}

impl Default for NeatConfig {
    fn default() -> Self {
        NeatConfig {
            seed: 0,
            fitness_target: f64::INFINITY,
            generation_limit: 100,
            pop_size: 10000,
            num_inputs: 3,
            num_outputs: 1,
            limits: GenomeLimits::new(50, 100),
            max_species: 10,
            compatibility_threshold: 3.5,
            species_elitism: 2,
            max_stagnation: 15,
            genome_elitism: 2,
            survival_threshold: 0.2,
            spawn_number_change_rate: 0.5,
            mutation: MutationConfig::default(),
            distance: DistanceConfig::default(),
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { field: field.to_string(), reason: reason.into() }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(invalid("pop_size", format!("{} < 2", self.pop_size)));
        }
        if !(self.survival_threshold > 0.0 && self.survival_threshold <= 1.0) {
            return Err(invalid("survival_threshold", format!("{} not in (0, 1]", self.survival_threshold)));
        }
        if !(0.0..=1.0).contains(&self.spawn_number_change_rate) {
            return Err(invalid("spawn_number_change_rate", format!("{} not in [0, 1]", self.spawn_number_change_rate)));
        }
        if self.max_species == 0 {
            return Err(invalid("max_species", "must be at least 1"));
        }
        if self.compatibility_threshold.is_nan() || self.compatibility_threshold < 0.0 {
            return Err(invalid("compatibility_threshold", "must be >= 0"));
        }
        if self.fitness_target.is_nan() {
            return Err(invalid("fitness_target", "NaN"));
        }
        if self.generation_limit == 0 {
            return Err(invalid("generation_limit", "must be at least 1"));
        }
        if self.num_inputs == 0 || self.num_outputs == 0 {
            return Err(invalid("num_inputs", "inputs and outputs must be non-empty"));
        }
        let io = self.num_inputs + self.num_outputs;
        if io + 1 > self.limits.max_nodes {
            return Err(Error::LimitsTooSmall(format!(
                "max_nodes {} cannot hold {} inputs, {} outputs and a hidden node",
                self.limits.max_nodes, self.num_inputs, self.num_outputs
            )));
        }
        if io > self.limits.max_conns {
            return Err(Error::LimitsTooSmall(format!(
                "max_conns {} cannot hold the {io} initial connections",
                self.limits.max_conns
            )));
        }
        self.mutation.validate()
    }

    /// Function registries: the configured options, then the defaults and
    /// the problem's output activation if they are not already listed.
    pub fn schema(&self, output_activation: Activation) -> AttributeSchema {
        let mut acts: Vec<Activation> = Vec::new();
        for a in self
            .mutation
            .activation_options
            .iter()
            .chain([&self.mutation.activation_default, &output_activation])
        {
            if !acts.contains(a) {
                acts.push(*a);
            }
        }
        let mut aggs: Vec<Aggregation> = Vec::new();
        for a in self.mutation.aggregation_options.iter().chain([&self.mutation.aggregation_default]) {
            if !aggs.contains(a) {
                aggs.push(*a);
            }
        }
        AttributeSchema::new(acts, aggs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = NeatConfig::default();
        assert_eq!(c.limits, GenomeLimits::new(50, 100));
        assert_eq!(c.max_species, 10);
        assert_eq!(c.compatibility_threshold, 3.5);
        assert_eq!(c.survival_threshold, 0.2);
        assert_eq!(c.mutation.node_add, 0.2);
        assert_eq!(c.mutation.conn_add, 0.4);
        c.validate().unwrap();
    }

    #[test]
    fn invariants() {
        let c = NeatConfig { pop_size: 1, ..NeatConfig::default() };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig { field, .. }) if field == "pop_size"));
        let c = NeatConfig { survival_threshold: 0.0, ..NeatConfig::default() };
        assert!(c.validate().is_err());
        let c = NeatConfig { limits: GenomeLimits::new(4, 10), ..NeatConfig::default() };
        assert!(matches!(c.validate(), Err(Error::LimitsTooSmall(_))));
    }

    #[test]
    fn schema_appends_output_activation() {
        let s = NeatConfig::default().schema(Activation::Sigmoid);
        assert_eq!(s.activations, vec![Activation::Tanh, Activation::Sigmoid]);
        assert_eq!(s.aggregations, vec![Aggregation::Sum]);
    }
}
