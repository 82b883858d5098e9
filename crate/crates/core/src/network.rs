//! Static description of a closed network and its routing tables.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::inputs::{Purpose, RandomStream, RoutingDistribution, ServiceFamily};

/// Default cap on the number of tables [`enumerate_routing_tables`] emits.
pub const DEFAULT_TABLE_CAP: u128 = 1_000_000;

/// Closed interval of admissible θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterDomain {
    pub lo: f64,
    pub hi: f64,
}

impl ParameterDomain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidDomain { lo, hi })
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lo <= theta && theta <= self.hi
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::ThetaOutOfDomain { theta, lo: self.lo, hi: self.hi })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeSpec {
    /// `K_n`, customers in the buffer at time zero.
    pub initial_customers: usize,
    pub service: ServiceFamily,
    pub routing: RoutingDistribution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeSpec>,
    /// `L`, routing decisions kept per node.
    pub horizon: usize,
    pub theta_domain: ParameterDomain,
    pub tagged_node: usize,
    /// `K`, completions at the tagged node that end a run.
    pub completions: usize,
}

/// A network that passed [`validate_network`]. Immutable.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedNetwork {
    spec: NetworkSpec,
}

impl ValidatedNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.spec.nodes
    }

    pub fn node(&self, n: usize) -> &NodeSpec {
        &self.spec.nodes[n]
    }

    pub fn len(&self) -> usize {
        self.spec.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spec.nodes.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn domain(&self) -> ParameterDomain {
        self.spec.theta_domain
    }

    pub fn tagged_node(&self) -> usize {
        self.spec.tagged_node
    }

    pub fn completions(&self) -> usize {
        self.spec.completions
    }

    pub fn population(&self) -> usize {
        self.spec.nodes.iter().map(|n| n.initial_customers).sum()
    }

    /// Same network with a different stopping rule.
    pub fn with_stopping(&self, tagged_node: usize, completions: usize, horizon: usize) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.tagged_node = tagged_node;
        spec.completions = completions;
        spec.horizon = horizon;
        validate_network(spec)
    }
}

/// Checks every structural and probabilistic invariant of `spec`.
///
/// Routing laws come back with targets sorted ascending, so validating an
/// already validated spec returns an equal network.
pub fn validate_network(mut spec: NetworkSpec) -> Result<ValidatedNetwork> {
    let domain = ParameterDomain::new(spec.theta_domain.lo, spec.theta_domain.hi)?;
    let n_nodes = spec.nodes.len();
    if n_nodes == 0 {
        return Err(Error::InvalidTopology(format!("network has no nodes")));
    }
    if spec.tagged_node >= n_nodes {
        return Err(Error::InvalidTopology(format!(
            "tagged node {} outside 1..={n_nodes}",
            spec.tagged_node + 1
        )));
    }
    if spec.completions == 0 || spec.horizon == 0 {
        return Err(Error::InvalidTopology(format!("completions K and horizon L must be positive")));
    }
    if spec.completions > spec.horizon {
        return Err(Error::HorizonTooSmall { completions: spec.completions, horizon: spec.horizon });
    }
    for (n, node) in spec.nodes.iter_mut().enumerate() {
        node.routing.validate(n, n_nodes, domain)?;
        node.service.validate(n, domain)?;
    }
    if spec.nodes.iter().all(|n| n.initial_customers == 0) {
        return Err(Error::EmptyPopulation);
    }
    Ok(ValidatedNetwork { spec })
}

/// Realized next-node decisions, `N × L`, row-major. Entry `(n, k)` with
/// 0-based `k` is `r_n^{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RoutingTable {
    nodes: usize,
    horizon: usize,
    entries: Vec<usize>,
}

impl RoutingTable {
    pub fn from_entries(nodes: usize, horizon: usize, entries: Vec<usize>) -> Result<Self> {
        if entries.len() != nodes * horizon {
            return Err(Error::InvalidTopology(format!(
                "routing table has {} entries, expected {nodes}x{horizon}",
                entries.len()
            )));
        }
        if let Some(&bad) = entries.iter().find(|&&e| e >= nodes) {
            return Err(Error::InvalidTopology(format!("routing table entry {} out of range", bad + 1)));
        }
        Ok(Self { nodes, horizon, entries })
    }

    /// Draws every entry up front from the routing substreams.
    pub fn sample(net: &ValidatedNetwork, theta: f64, stream: &RandomStream) -> Self {
        let horizon = net.horizon();
        let mut entries = Vec::with_capacity(net.len() * horizon);
        for (n, node) in net.nodes().iter().enumerate() {
            let dist = &node.routing;
            if dist.support_len() == 1 {
                entries.extend(core::iter::repeat(dist.targets()[0]).take(horizon));
                continue;
            }
            for k in 1..=horizon {
                entries.push(dist.sample(theta, stream.uniform(n, Purpose::Routing, k)));
            }
        }
        Self { nodes: net.len(), horizon, entries }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, node: usize, k: usize) -> usize {
        self.entries[node * self.horizon + k]
    }

    pub fn set(&mut self, node: usize, k: usize, target: usize) {
        self.entries[node * self.horizon + k] = target;
    }

    pub fn row(&self, node: usize) -> &[usize] {
        &self.entries[node * self.horizon..(node + 1) * self.horizon]
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }
}

/// Every table with positive probability, in row-major lexicographic order
/// of ascending targets. Oracle use only.
pub fn enumerate_routing_tables(net: &ValidatedNetwork, cap: u128) -> Result<Vec<RoutingTable>> {
    let horizon = net.horizon();
    let supports: Vec<&[usize]> = net
        .nodes()
        .iter()
        .flat_map(|node| core::iter::repeat(node.routing.targets()).take(horizon))
        .collect();
    let mut size: u128 = 1;
    for s in &supports {
        size = size.saturating_mul(s.len() as u128);
        if size > cap {
            return Err(Error::SupportTooLarge { size, cap });
        }
    }
    let mut digits = alloc::vec![0usize; supports.len()];
    let mut tables = Vec::with_capacity(size as usize);
    loop {
        let entries = digits.iter().zip(&supports).map(|(&d, s)| s[d]).collect();
        tables.push(RoutingTable { nodes: net.len(), horizon, entries });
        // odometer, last entry fastest
        let mut pos = supports.len();
        loop {
            if pos == 0 {
                return Ok(tables);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < supports[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}
