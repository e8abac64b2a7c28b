//! Flat experiment configuration.
//!
//! Field names follow the hyperparameter glossary one to one
//! (`compatibility_threshold = 3.5`, `weight_mutate_rate = 0.8`, ...). Any
//! omitted field takes the library default.

use std::path::{Path, PathBuf};

use neat_core::inference::{Activation, Aggregation};
use neat_core::ops::{AttrMutation, DistanceConfig, MutationConfig};
use neat_core::problems::{CartPole, FuncFit, Problem, Xor};
use neat_core::{GenomeLimits, NeatConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One seed or a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    One(u64),
    Many(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::One(s) => vec![*s],
            Seeds::Many(v) => v.clone(),
        }
    }
}

/// Floats that may be infinite. TOML spells them `inf`, JSON cannot, so
/// non-finite values serialize as the strings `"inf"` / `"-inf"`.
mod loose_float {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Int(i) => Ok(i as f64),
            Repr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(|_| D::Error::custom(format!("`{t}` is not a number"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `xor`, `cartpole` or `func_fit`.
    pub problem: String,
    /// Comma-separated dataset for `func_fit`; relative paths resolve
    /// against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Episode length for `cartpole`.
    pub max_steps: usize,

    pub seed: Seeds,
    #[serde(with = "loose_float")]
    pub fitness_target: f64,
    pub generation_limit: usize,
    pub pop_size: usize,
    pub network_type: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<usize>,
    pub max_nodes: usize,
    pub max_conns: usize,
    pub max_species: usize,
    pub compatibility_disjoint: f64,
    pub compatibility_homologous: f64,
    pub node_add: f64,
    pub node_delete: f64,
    pub conn_add: f64,
    pub conn_delete: f64,
    pub compatibility_threshold: f64,
    pub species_elitism: usize,
    pub max_stagnation: usize,
    pub genome_elitism: usize,
    pub survival_threshold: f64,
    pub spawn_number_change_rate: f64,

    pub bias_init_mean: f64,
    pub bias_init_std: f64,
    pub bias_mutate_power: f64,
    pub bias_mutate_rate: f64,
    pub bias_replace_rate: f64,
    pub response_init_mean: f64,
    pub response_init_std: f64,
    pub response_mutate_power: f64,
    pub response_mutate_rate: f64,
    pub response_replace_rate: f64,
    pub weight_init_mean: f64,
    pub weight_init_std: f64,
    pub weight_mutate_power: f64,
    pub weight_mutate_rate: f64,
    pub weight_replace_rate: f64,
    pub activation_default: Activation,
    pub activation_options: Vec<Activation>,
    pub activation_replace_rate: f64,
    pub aggregation_default: Aggregation,
    pub aggregation_options: Vec<Aggregation>,
    pub aggregation_replace_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let n = NeatConfig::default();
        let m = n.mutation;
        ExperimentConfig {
            problem: "xor".into(),
            dataset: None,
            max_steps: CartPole::default().max_steps,
            seed: Seeds::Many((0..10).collect()),
            fitness_target: n.fitness_target,
            generation_limit: n.generation_limit,
            pop_size: n.pop_size,
            network_type: "feedforward".into(),
            inputs: None,
            outputs: None,
            max_nodes: n.limits.max_nodes,
            max_conns: n.limits.max_conns,
            max_species: n.max_species,
            compatibility_disjoint: n.distance.compatibility_disjoint,
            compatibility_homologous: n.distance.compatibility_homologous,
            node_add: m.node_add,
            node_delete: m.node_delete,
            conn_add: m.conn_add,
            conn_delete: m.conn_delete,
            compatibility_threshold: n.compatibility_threshold,
            species_elitism: n.species_elitism,
            max_stagnation: n.max_stagnation,
            genome_elitism: n.genome_elitism,
            survival_threshold: n.survival_threshold,
            spawn_number_change_rate: n.spawn_number_change_rate,
            bias_init_mean: m.bias.init_mean,
            bias_init_std: m.bias.init_std,
            bias_mutate_power: m.bias.mutate_power,
            bias_mutate_rate: m.bias.mutate_rate,
            bias_replace_rate: m.bias.replace_rate,
            response_init_mean: m.response.init_mean,
            response_init_std: m.response.init_std,
            response_mutate_power: m.response.mutate_power,
            response_mutate_rate: m.response.mutate_rate,
            response_replace_rate: m.response.replace_rate,
            weight_init_mean: m.weight.init_mean,
            weight_init_std: m.weight.init_std,
            weight_mutate_power: m.weight.mutate_power,
            weight_mutate_rate: m.weight.mutate_rate,
            weight_replace_rate: m.weight.replace_rate,
            activation_default: m.activation_default,
            activation_options: m.activation_options,
            activation_replace_rate: m.activation_replace_rate,
            aggregation_default: m.aggregation_default,
            aggregation_options: m.aggregation_options,
            aggregation_replace_rate: m.aggregation_replace_rate,
        }
    }
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {reason}"))
}

/// Parses `key=value`. The value is read as a TOML value when it is one
/// (`3`, `0.5`, `inf`, `[1, 2]`, `"x"`) and as a bare string otherwise.
pub fn parse_override(spec: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{spec}` has an empty key")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

impl ExperimentConfig {
    /// Reads `path` (or starts from defaults), applies `overrides` in order
    /// and resolves a relative `dataset` against the file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for spec in overrides {
            let (k, v) = parse_override(spec)?;
            table.insert(k, v);
        }
        let text = toml::to_string(&table).map_err(|e| CliError::Config(e.to_string()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            let key = e
                .span()
                .and_then(|sp| text[..sp.start].rsplit('\n').next().and_then(|line| line.split_once('=')))
                .map(|(k, _)| k.trim().to_string());
            match key {
                Some(k) if !k.is_empty() => config_err(&k, e.message()),
                _ => CliError::Config(e.message().to_string()),
            }
        })?;
        if let (Some(ds), Some(p)) = (&cfg.dataset, path) {
            if ds.is_relative() {
                let base = p.parent().unwrap_or(Path::new("."));
                cfg.dataset = Some(base.join(ds));
            }
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<Box<dyn Problem>, CliError> {
        let problem: Box<dyn Problem> = match self.problem.as_str() {
            "xor" => Box::new(Xor),
            "cartpole" => Box::new(CartPole { max_steps: self.max_steps, ..CartPole::default() }),
            "func_fit" => {
                let path = self.dataset.as_ref().ok_or_else(|| config_err("dataset", "required by problem `func_fit`"))?;
                let n = self.outputs.unwrap_or(1);
                Box::new(FuncFit::from_csv(path, n).map_err(|e| config_err("dataset", e))?)
            }
            other => {
                return Err(config_err("problem", format!("unknown problem `{other}` (expected xor, cartpole or func_fit)")))
            }
        };
        if let Some(i) = self.inputs.filter(|&i| i != problem.input_shape()) {
            return Err(config_err("inputs", format!("{i} but problem `{}` has {}", self.problem, problem.input_shape())));
        }
        if let Some(o) = self.outputs.filter(|&o| o != problem.output_shape()) {
            return Err(config_err("outputs", format!("{o} but problem `{}` has {}", self.problem, problem.output_shape())));
        }
        Ok(problem)
    }

    /// Library configuration for one seed of this experiment.
    pub fn neat_config(&self, problem: &dyn Problem, seed: u64) -> Result<NeatConfig, CliError> {
        if self.network_type != "feedforward" {
            return Err(config_err("network_type", format!("`{}` is not supported (only feedforward)", self.network_type)));
        }
        let attr = |init_mean, init_std, mutate_power, mutate_rate, replace_rate| AttrMutation {
            init_mean,
            init_std,
            mutate_power,
            mutate_rate,
            replace_rate,
        };
        let cfg = NeatConfig {
            seed,
            fitness_target: self.fitness_target,
            generation_limit: self.generation_limit,
            pop_size: self.pop_size,
            num_inputs: problem.input_shape(),
            num_outputs: problem.output_shape(),
            limits: GenomeLimits::new(self.max_nodes, self.max_conns),
            max_species: self.max_species,
            compatibility_threshold: self.compatibility_threshold,
            species_elitism: self.species_elitism,
            max_stagnation: self.max_stagnation,
            genome_elitism: self.genome_elitism,
            survival_threshold: self.survival_threshold,
            spawn_number_change_rate: self.spawn_number_change_rate,
            mutation: MutationConfig {
                node_add: self.node_add,
                node_delete: self.node_delete,
                conn_add: self.conn_add,
                conn_delete: self.conn_delete,
                bias: attr(
                    self.bias_init_mean,
                    self.bias_init_std,
                    self.bias_mutate_power,
                    self.bias_mutate_rate,
                    self.bias_replace_rate,
                ),
                response: attr(
                    self.response_init_mean,
                    self.response_init_std,
                    self.response_mutate_power,
                    self.response_mutate_rate,
                    self.response_replace_rate,
                ),
                weight: attr(
                    self.weight_init_mean,
                    self.weight_init_std,
                    self.weight_mutate_power,
                    self.weight_mutate_rate,
                    self.weight_replace_rate,
                ),
                activation_default: self.activation_default,
                activation_options: self.activation_options.clone(),
                activation_replace_rate: self.activation_replace_rate,
                aggregation_default: self.aggregation_default,
                aggregation_options: self.aggregation_options.clone(),
                aggregation_replace_rate: self.aggregation_replace_rate,
            },
            distance: DistanceConfig {
                compatibility_disjoint: self.compatibility_disjoint,
                compatibility_homologous: self.compatibility_homologous,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_library_default() {
        let cfg = ExperimentConfig::load(None, &[]).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let neat = cfg.neat_config(&Xor, 0).unwrap();
        assert_eq!(NeatConfig { num_inputs: 3, num_outputs: 1, ..NeatConfig::default() }, neat);
    }

    #[test]
    fn overrides() {
        assert_eq!(parse_override("pop_size=150").unwrap().1, toml::Value::Integer(150));
        assert_eq!(parse_override("problem=cartpole").unwrap().1, toml::Value::String("cartpole".into()));
        assert!(parse_override("nokey").is_err());
        let cfg = ExperimentConfig::load(
            None,
            &["fitness_target=inf".into(), "seed=[3, 4]".into(), "activation_options=[\"tanh\", \"relu\"]".into()],
        )
        .unwrap();
        assert_eq!(cfg.fitness_target, f64::INFINITY);
        assert_eq!(cfg.seed.to_vec(), vec![3, 4]);
        assert_eq!(cfg.activation_options, vec![Activation::Tanh, Activation::Relu]);
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::load(None, &["popsize=3".into()]).unwrap_err();
        assert!(e.to_string().contains("popsize"), "{e}");
        let e = ExperimentConfig::load(None, &["problem=maze".into()]).unwrap().problem().err().unwrap();
        assert!(e.to_string().contains("problem"), "{e}");
        let e = ExperimentConfig::load(None, &["pop_size=\"many\"".into()]).unwrap_err();
        assert!(e.to_string().contains("`pop_size`"), "{e}");
        let cfg = ExperimentConfig::load(None, &["survival_threshold=0".into()]).unwrap();
        let e = cfg.neat_config(&Xor, 0).unwrap_err();
        assert!(e.to_string().contains("survival_threshold"), "{e}");
    }

    #[test]
    fn json_snapshot_roundtrip() {
        let cfg = ExperimentConfig { fitness_target: f64::INFINITY, seed: Seeds::One(7), ..ExperimentConfig::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"inf\""));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
