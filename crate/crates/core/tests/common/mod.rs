#![allow(dead_code)]

use proptest::prelude::*;
use qnet_core::network::validate_network;
use qnet_core::{NetworkSpec, NodeSpec, ParameterDomain, RoutingDistribution, ServiceFamily, ValidatedNetwork};

pub const LO: f64 = 0.2;
pub const HI: f64 = 0.8;

/// Routing over `targets` with every probability at least half its base
/// weight anywhere in `[0, 1]`.
fn routing(targets: Vec<usize>, weights: Vec<f64>, tilt: Vec<f64>, affine: bool) -> RoutingDistribution {
    let total: f64 = weights.iter().sum();
    let c: Vec<f64> = weights.iter().map(|w| w / total).collect();
    if !affine || targets.len() == 1 {
        return RoutingDistribution::constant(targets, c);
    }
    let mean = tilt.iter().sum::<f64>() / tilt.len() as f64;
    let raw: Vec<f64> = tilt.iter().map(|t| t - mean).collect();
    let scale = c
        .iter()
        .zip(&raw)
        .map(|(ci, di)| 0.5 * ci / (di.abs() + 1e-12))
        .fold(1.0f64, f64::min);
    let d: Vec<f64> = raw.iter().map(|x| x * scale).collect();
    RoutingDistribution::affine(targets, c, d)
}

fn service() -> impl Strategy<Value = ServiceFamily> {
    prop_oneof![
        3 => (0.5f64..1.5, -0.5f64..1.0, 0.5f64..1.5)
            .prop_map(|(offset, theta_slope, width)| ServiceFamily::ShiftedUniform { offset, theta_slope, width }),
        1 => Just(ServiceFamily::ExponentialScale),
    ]
}

fn node(n_nodes: usize, idx: usize, affine: bool) -> impl Strategy<Value = NodeSpec> {
    let next = (idx + 1) % n_nodes;
    (
        0usize..=2,
        service(),
        proptest::collection::vec(any::<bool>(), n_nodes),
        proptest::collection::vec(0.2f64..1.0, n_nodes),
        proptest::collection::vec(-1.0f64..1.0, n_nodes),
    )
        .prop_map(move |(initial_customers, service, keep, w, tilt)| {
            // the successor is always in the support, so every node is reachable
            let targets: Vec<usize> = (0..n_nodes).filter(|&j| j == next || keep[j]).collect();
            let weights = targets.iter().map(|&j| w[j]).collect();
            let tilt = targets.iter().map(|&j| tilt[j]).collect();
            NodeSpec { initial_customers, service, routing: routing(targets, weights, tilt, affine) }
        })
}

/// Random closed network on `[LO, HI]`.
pub fn network(
    nodes: std::ops::RangeInclusive<usize>,
    completions: std::ops::RangeInclusive<usize>,
    horizon: Option<usize>,
    affine: bool,
) -> impl Strategy<Value = ValidatedNetwork> {
    nodes
        .prop_flat_map(move |n| {
            let specs: Vec<_> = (0..n).map(|i| node(n, i, affine)).collect();
            (specs, 0..n, completions.clone())
        })
        .prop_map(move |(mut nodes, tagged, k)| {
            if nodes.iter().all(|n| n.initial_customers == 0) {
                nodes[0].initial_customers = 1;
            }
            validate_network(NetworkSpec {
                nodes,
                horizon: horizon.unwrap_or(k.max(1) * 40),
                theta_domain: ParameterDomain::new(LO, HI).unwrap(),
                tagged_node: tagged,
                completions: k.min(horizon.unwrap_or(usize::MAX)),
            })
            .expect("generated network is valid")
        })
}

pub fn shifted_uniform(offset: f64, theta_slope: f64) -> ServiceFamily {
    ServiceFamily::ShiftedUniform { offset, theta_slope, width: 1.0 }
}

/// Fixed three-node network with one θ-dependent router.
pub fn three_node(affine: bool) -> ValidatedNetwork {
    let router = if affine {
        RoutingDistribution::affine(vec![1, 2], vec![0.3, 0.7], vec![0.5, -0.5])
    } else {
        RoutingDistribution::constant(vec![1, 2], vec![0.45, 0.55])
    };
    validate_network(NetworkSpec {
        nodes: vec![
            NodeSpec { initial_customers: 2, service: shifted_uniform(0.4, 1.0), routing: router },
            NodeSpec {
                initial_customers: 1,
                service: shifted_uniform(0.8, -0.3),
                routing: RoutingDistribution::constant(vec![0, 2], vec![0.6, 0.4]),
            },
            NodeSpec {
                initial_customers: 0,
                service: shifted_uniform(0.5, 0.5),
                routing: RoutingDistribution::deterministic(0),
            },
        ],
        horizon: 60,
        theta_domain: ParameterDomain::new(LO, HI).unwrap(),
        tagged_node: 0,
        completions: 10,
    })
    .unwrap()
}
