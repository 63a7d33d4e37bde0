//! Experiment configuration: JSON documents or command-line flags, merged
//! and validated into an [`ExperimentConfig`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Graph selector: `cycle:K`, `torus:N:D`, `complete:K`, or `custom:FILE`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Cycle { k: u32 },
    Torus { n: u32, d: u32 },
    Complete { k: u32 },
    Custom { path: PathBuf },
}

impl GraphSpec {
    pub fn parse(text: &str) -> Result<GraphSpec> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::Config(format!("bad graph spec `{text}` (want cycle:K, torus:N:D, complete:K, custom:FILE)"));
        match parts.as_slice() {
            ["cycle", k] => Ok(GraphSpec::Cycle { k: k.parse().map_err(|_| bad())? }),
            ["torus", n, d] => Ok(GraphSpec::Torus {
                n: n.parse().map_err(|_| bad())?,
                d: d.parse().map_err(|_| bad())?,
            }),
            ["complete", k] => Ok(GraphSpec::Complete { k: k.parse().map_err(|_| bad())? }),
            ["custom", path] => Ok(GraphSpec::Custom { path: PathBuf::from(path) }),
            _ => Err(bad()),
        }
    }

    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Cycle { k } => Graph::cycle(*k),
            GraphSpec::Torus { n, d } => Graph::torus(*n, *d),
            GraphSpec::Complete { k } => Graph::complete(*k),
            GraphSpec::Custom { path } => {
                let doc = std::fs::read_to_string(path)?;
                Ok(Graph::from_json(&doc)?.0)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSpec::Cycle { k } => format!("cycle:{k}"),
            GraphSpec::Torus { n, d } => format!("torus:{n}:{d}"),
            GraphSpec::Complete { k } => format!("complete:{k}"),
            GraphSpec::Custom { path } => format!("custom:{}", path.display()),
        }
    }
}

/// A fully validated experiment configuration. The pair (config, seed)
/// determines every output byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub graph: Option<GraphSpec>,
    pub seed: u64,
    #[serde(default)]
    pub reps: Option<u64>,
    #[serde(default)]
    pub burn_in_events: Option<u64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub budget_seconds: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawConfig {
    experiment: Option<String>,
    graph: Option<serde_json::Value>,
    seed: Option<u64>,
    #[serde(default)]
    reps: Option<u64>,
    #[serde(default)]
    burn_in_events: Option<u64>,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    budget_seconds: Option<f64>,
}

/// Parses a JSON config document. The graph field may be either a string
/// spec (`"cycle:100"`) or a structured object.
pub fn parse_config(document: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(document)
        .map_err(|e| Error::Config(format!("malformed config: {e}")))?;
    let experiment = raw
        .experiment
        .ok_or_else(|| Error::Config("missing field `experiment`".into()))?;
    let graph = match raw.graph {
        None => None,
        Some(serde_json::Value::String(s)) => Some(GraphSpec::parse(&s)?),
        Some(v) => Some(
            serde_json::from_value(v)
                .map_err(|e| Error::Config(format!("bad `graph` object: {e}")))?,
        ),
    };
    let seed = raw.seed.ok_or_else(|| {
        Error::Config("missing field `seed`: runs must be reproducible".into())
    })?;
    let cfg = ExperimentConfig {
        experiment,
        graph,
        seed,
        reps: raw.reps,
        burn_in_events: raw.burn_in_events,
        horizon: raw.horizon,
        out_dir: raw.out_dir,
        budget_seconds: raw.budget_seconds,
    };
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !crate::experiments::REGISTRY.iter().any(|(name, _)| *name == cfg.experiment) {
        let names: Vec<&str> = crate::experiments::REGISTRY.iter().map(|(n, _)| *n).collect();
        return Err(Error::Config(format!(
            "unknown experiment `{}`; valid names: {}",
            cfg.experiment,
            names.join(", ")
        )));
    }
    if let Some(reps) = cfg.reps {
        if reps == 0 {
            return Err(Error::Config("field `reps` must be positive".into()));
        }
    }
    if let Some(h) = cfg.horizon {
        if !(h > 0.0) {
            return Err(Error::Config("field `horizon` must be positive".into()));
        }
    }
    if let Some(b) = cfg.budget_seconds {
        if !(b > 0.0) {
            return Err(Error::Config("field `budget_seconds` must be positive".into()));
        }
    }
    if let Some(spec) = &cfg.graph {
        match spec {
            GraphSpec::Cycle { k } | GraphSpec::Complete { k } if *k == 0 => {
                return Err(Error::Config("graph size must be positive".into()));
            }
            GraphSpec::Torus { n, d } if *n == 0 || *d == 0 => {
                return Err(Error::Config("torus parameters must be positive".into()));
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_valid_config() {
        let cfg = parse_config(
            r#"{"experiment":"crater-spectrum","graph":{"kind":"cycle","k":10000},"seed":42,"reps":100}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, "crater-spectrum");
        assert_eq!(cfg.graph, Some(GraphSpec::Cycle { k: 10000 }));
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.reps, Some(100));
    }

    #[test]
    fn string_graph_spec() {
        let cfg =
            parse_config(r#"{"experiment":"moments","graph":"cycle:2000","seed":1}"#).unwrap();
        assert_eq!(cfg.graph, Some(GraphSpec::Cycle { k: 2000 }));
    }

    #[test]
    fn missing_seed_rejected() {
        let err = parse_config(r#"{"experiment":"moments","graph":"cycle:2000"}"#).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn zero_size_rejected() {
        let err =
            parse_config(r#"{"experiment":"moments","graph":"cycle:0","seed":3}"#).unwrap_err();
        assert!(err.to_string().contains("positive"));
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let err = parse_config(r#"{"experiment":"nope","seed":3}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown experiment"));
        assert!(msg.contains("moments"));
        assert!(msg.contains("oracle-tables"));
    }

    #[test]
    fn graph_spec_parsing() {
        assert_eq!(GraphSpec::parse("cycle:17").unwrap(), GraphSpec::Cycle { k: 17 });
        assert_eq!(GraphSpec::parse("torus:8:2").unwrap(), GraphSpec::Torus { n: 8, d: 2 });
        assert_eq!(GraphSpec::parse("complete:64").unwrap(), GraphSpec::Complete { k: 64 });
        assert!(GraphSpec::parse("blob:9").is_err());
        assert!(GraphSpec::parse("torus:8").is_err());
    }
}
