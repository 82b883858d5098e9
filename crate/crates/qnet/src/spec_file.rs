//! JSON network spec files. Node ids and routing targets are 1-based.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qnet_core::network::validate_network;
use qnet_core::{CriterionKind, NetworkSpec, NodeSpec, ParameterDomain, RoutingDistribution, ServiceFamily, ValidatedNetwork};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub nodes: Vec<NodeFile>,
    #[serde(rename = "horizon_L")]
    pub horizon: usize,
    pub theta_domain: [f64; 2],
    pub tagged_node: usize,
    #[serde(rename = "completions_K")]
    pub completions: usize,
    /// Criterion used when the command line names none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: usize,
    pub initial_customers: usize,
    pub service: ServiceFile,
    pub routing: RoutingFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceFile {
    ShiftedUniform { offset: f64, theta_slope: f64, width: f64 },
    ExponentialScale,
    Deterministic { constant: f64, theta_slope: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoutingFile {
    Constant {
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
    Affine {
        targets: Vec<usize>,
        #[serde(rename = "const")]
        constant: Vec<f64>,
        slope: Vec<f64>,
    },
    Deterministic {
        target: usize,
    },
}

/// A validated network with what was read from disk.
#[derive(Clone, Debug)]
pub struct LoadedSpec {
    pub network: ValidatedNetwork,
    /// Hex SHA-256 of the file bytes.
    pub hash: String,
    pub default_criterion: Option<CriterionKind>,
}

fn zero_based(id: usize, what: &str) -> anyhow::Result<usize> {
    if id == 0 {
        bail!("{what} must be a 1-based node id, got 0");
    }
    Ok(id - 1)
}

impl SpecFile {
    pub fn to_network(&self) -> anyhow::Result<ValidatedNetwork> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos + 1 {
                bail!("node at position {} has id {}; ids must be 1..N in order", pos + 1, node.id);
            }
            let service = match node.service {
                ServiceFile::ShiftedUniform { offset, theta_slope, width } => {
                    ServiceFamily::ShiftedUniform { offset, theta_slope, width }
                }
                ServiceFile::ExponentialScale => ServiceFamily::ExponentialScale,
                ServiceFile::Deterministic { constant, theta_slope } => ServiceFamily::Deterministic { constant, theta_slope },
            };
            let targets = |ts: &[usize]| ts.iter().map(|&t| zero_based(t, "routing target")).collect::<anyhow::Result<Vec<_>>>();
            let routing = match &node.routing {
                RoutingFile::Constant { targets: t, probs } => RoutingDistribution::constant(targets(t)?, probs.clone()),
                RoutingFile::Affine { targets: t, constant, slope } => {
                    RoutingDistribution::affine(targets(t)?, constant.clone(), slope.clone())
                }
                RoutingFile::Deterministic { target } => RoutingDistribution::deterministic(zero_based(*target, "routing target")?),
            };
            nodes.push(NodeSpec { initial_customers: node.initial_customers, service, routing });
        }
        let [lo, hi] = self.theta_domain;
        let spec = NetworkSpec {
            nodes,
            horizon: self.horizon,
            theta_domain: ParameterDomain::new(lo, hi)?,
            tagged_node: zero_based(self.tagged_node, "tagged_node")?,
            completions: self.completions,
        };
        Ok(validate_network(spec)?)
    }

    pub fn from_network(net: &ValidatedNetwork) -> Self {
        let nodes = net
            .nodes()
            .iter()
            .enumerate()
            .map(|(n, node)| {
                let service = match node.service {
                    ServiceFamily::ShiftedUniform { offset, theta_slope, width } => {
                        ServiceFile::ShiftedUniform { offset, theta_slope, width }
                    }
                    ServiceFamily::ExponentialScale => ServiceFile::ExponentialScale,
                    ServiceFamily::Deterministic { constant, theta_slope } => ServiceFile::Deterministic { constant, theta_slope },
                };
                let r = &node.routing;
                let targets: Vec<usize> = r.targets().iter().map(|t| t + 1).collect();
                let routing = if r.is_affine() {
                    RoutingFile::Affine { targets, constant: r.constants().to_vec(), slope: r.slopes().to_vec() }
                } else if targets.len() == 1 {
                    RoutingFile::Deterministic { target: targets[0] }
                } else {
                    RoutingFile::Constant { targets, probs: r.constants().to_vec() }
                };
                NodeFile { id: n + 1, initial_customers: node.initial_customers, service, routing }
            })
            .collect();
        let d = net.domain();
        SpecFile {
            nodes,
            horizon: net.horizon(),
            theta_domain: [d.lo, d.hi],
            tagged_node: net.tagged_node() + 1,
            completions: net.completions(),
            criterion: None,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Parses and validates a spec held in memory.
pub fn parse_spec(bytes: &[u8]) -> anyhow::Result<LoadedSpec> {
    let file: SpecFile = serde_json::from_slice(bytes).context("malformed network spec")?;
    let network = file.to_network()?;
    let default_criterion = match &file.criterion {
        Some(s) => Some(s.parse::<CriterionKind>().with_context(|| format!("spec criterion {s:?}"))?),
        None => None,
    };
    Ok(LoadedSpec { network, hash: sha256_hex(bytes), default_criterion })
}

pub fn load_spec(path: &Path) -> anyhow::Result<LoadedSpec> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&bytes).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = include_str!("../specs/toy.json");

    #[test]
    fn toy_file_matches_builtin_toy() {
        let loaded = parse_spec(TOY.as_bytes()).unwrap();
        assert_eq!(loaded.network.spec(), qnet_core::oracle::toy_network().spec());
        assert_eq!(loaded.default_criterion, Some(CriterionKind::CompletionEpoch));
        assert_eq!(loaded.hash.len(), 64);
    }

    #[test]
    fn round_trip() {
        let net = qnet_core::oracle::toy_network();
        let file = SpecFile::from_network(&net);
        let text = serde_json::to_string(&file).unwrap();
        let back = parse_spec(text.as_bytes()).unwrap();
        assert_eq!(back.network.spec(), net.spec());
    }

    #[test]
    fn spec_example_parses() {
        let text = r#"{"nodes":[
            {"id":1,"initial_customers":1,"service":{"family":"shifted_uniform","offset":1.0,"theta_slope":1.0,"width":1.0},
             "routing":{"kind":"affine","targets":[1,2],"const":[0.0,1.0],"slope":[1.0,-1.0]}},
            {"id":2,"initial_customers":0,"service":{"family":"exponential_scale"},
             "routing":{"kind":"constant","targets":[1],"probs":[1.0]}}],
            "horizon_L":50,"theta_domain":[0.05,0.95],"tagged_node":1,"completions_K":20}"#;
        let net = parse_spec(text.as_bytes()).unwrap().network;
        assert_eq!((net.len(), net.horizon(), net.completions(), net.tagged_node()), (2, 50, 20, 0));
    }

    #[test]
    fn rejections() {
        let bad_key = TOY.replacen("\"horizon_L\"", "\"horizon\": 3, \"horizon_L\"", 1);
        assert!(parse_spec(bad_key.as_bytes()).is_err());
        let bad_service_key = TOY.replacen("\"width\"", "\"scale\": 1, \"width\"", 1);
        assert!(parse_spec(bad_service_key.as_bytes()).is_err());
        let bad_id = TOY.replacen("\"id\": 2", "\"id\": 7", 1);
        assert!(parse_spec(bad_id.as_bytes()).is_err());
        let bad_target = TOY.replacen("\"target\": 4", "\"target\": 9", 1);
        let err = parse_spec(bad_target.as_bytes()).unwrap_err();
        assert!(matches!(err.downcast_ref::<qnet_core::Error>(), Some(qnet_core::Error::InvalidTopology(_))));
        let open_domain = TOY.replacen("[0.05, 0.95]", "[0.0, 1.0]", 1);
        let err = parse_spec(open_domain.as_bytes()).unwrap_err();
        assert!(matches!(err.downcast_ref::<qnet_core::Error>(), Some(qnet_core::Error::InvalidProbability { .. })));
    }
}
