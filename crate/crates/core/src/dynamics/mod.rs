//! Node recursions and the network simulator, with tangent propagation.

mod conformance;
mod recursion;
mod simulate;

pub use conformance::{trajectory_satisfies_recursions, Violation};
pub use recursion::{
    compose_arrivals, gg1_closed_form, gg1_departures, gg1_departures_counting, gg2_departures,
    kth_arrival_from_departures,
};
pub use simulate::{
    simulate_network, simulate_with_table, Completion, NodePath, SimObserver, Simulator, Trajectory,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::inputs::{RandomStream, RoutingDistribution, ServiceFamily};
    use crate::network::{validate_network, NetworkSpec, NodeSpec, ParameterDomain};
    use crate::tangent::Tangent;
    use alloc::vec;
    use alloc::vec::Vec;

    fn det(c: f64) -> ServiceFamily {
        ServiceFamily::Deterministic { constant: c, theta_slope: 0.0 }
    }

    fn values(ts: &[Tangent]) -> Vec<f64> {
        ts.iter().map(|t| t.value).collect()
    }

    fn spec(nodes: Vec<NodeSpec>, tagged: usize, k: usize, horizon: usize) -> NetworkSpec {
        NetworkSpec {
            nodes,
            horizon,
            theta_domain: ParameterDomain::new(0.1, 0.9).unwrap(),
            tagged_node: tagged,
            completions: k,
        }
    }

    #[test]
    fn two_node_cycle_hand_trace() {
        let net = validate_network(spec(
            vec![
                NodeSpec { initial_customers: 1, service: det(1.0), routing: RoutingDistribution::deterministic(1) },
                NodeSpec { initial_customers: 0, service: det(2.0), routing: RoutingDistribution::deterministic(0) },
            ],
            0,
            2,
            4,
        ))
        .unwrap();
        let (traj, table) = simulate_network(&net, 0.5, &RandomStream::new(0, 0)).unwrap();
        assert_eq!(values(&traj.node(0).departures), vec![1.0, 4.0]);
        assert_eq!(values(&traj.node(1).departures), vec![3.0]);
        assert_eq!(traj.node(0).routes, vec![1]);
        assert_eq!(trajectory_satisfies_recursions(&traj, &net, &table), Ok(()));
    }

    #[test]
    fn self_loop_is_saturated() {
        let c = 1.25;
        let k = 6;
        let net = validate_network(spec(
            vec![NodeSpec { initial_customers: 1, service: det(c), routing: RoutingDistribution::deterministic(0) }],
            0,
            k,
            k,
        ))
        .unwrap();
        let (traj, _) = simulate_network(&net, 0.5, &RandomStream::new(3, 0)).unwrap();
        let expected: Vec<f64> = (1..=k).map(|i| i as f64 * c).collect();
        assert_eq!(values(&traj.node(0).departures), expected);
    }

    #[test]
    fn unreachable_tagged_node_starves() {
        let net = validate_network(spec(
            vec![
                NodeSpec { initial_customers: 1, service: det(1.0), routing: RoutingDistribution::deterministic(0) },
                NodeSpec { initial_customers: 0, service: det(1.0), routing: RoutingDistribution::deterministic(0) },
            ],
            1,
            1,
            3,
        ))
        .unwrap();
        let err = simulate_network(&net, 0.5, &RandomStream::new(0, 0)).unwrap_err();
        assert_eq!(err, Error::Starvation { node: 2, completions: 0 });
    }

    #[test]
    fn horizon_exceeded_on_long_detour() {
        // node 1 cycles its own customer twice before node 2 finishes
        let net = validate_network(spec(
            vec![
                NodeSpec { initial_customers: 1, service: det(1.0), routing: RoutingDistribution::deterministic(0) },
                NodeSpec { initial_customers: 1, service: det(5.0), routing: RoutingDistribution::deterministic(0) },
            ],
            1,
            1,
            1,
        ))
        .unwrap();
        let err = simulate_network(&net, 0.5, &RandomStream::new(0, 0)).unwrap_err();
        assert_eq!(err, Error::HorizonExceeded { node: 1, k: 2, horizon: 1 });
    }

    fn three_node_random() -> crate::network::ValidatedNetwork {
        let su = |a: f64, b: f64| ServiceFamily::ShiftedUniform { offset: a, theta_slope: b, width: 1.0 };
        validate_network(spec(
            vec![
                NodeSpec {
                    initial_customers: 2,
                    service: su(0.2, 1.0),
                    routing: RoutingDistribution::affine(vec![1, 2], vec![0.3, 0.7], vec![0.5, -0.5]),
                },
                NodeSpec { initial_customers: 1, service: su(0.5, -0.3), routing: RoutingDistribution::deterministic(0) },
                NodeSpec {
                    initial_customers: 0,
                    service: ServiceFamily::ExponentialScale,
                    routing: RoutingDistribution::constant(vec![0, 1], vec![0.6, 0.4]),
                },
            ],
            0,
            15,
            40,
        ))
        .unwrap()
    }

    #[test]
    fn simulated_trajectories_conform() {
        let net = three_node_random();
        for rep in 0..200 {
            let (traj, table) = simulate_network(&net, 0.4, &RandomStream::new(11, rep)).unwrap();
            assert_eq!(trajectory_satisfies_recursions(&traj, &net, &table), Ok(()), "rep {rep}");
            for path in &traj.nodes {
                assert!(path.departures.windows(2).all(|w| w[0].value <= w[1].value));
                for (d, a) in path.departures.iter().zip(&path.arrivals) {
                    assert!(d.value >= a.value);
                }
            }
            assert_eq!(traj.node(0).departures.len(), 15);
        }
    }

    #[test]
    fn checker_catches_tampering() {
        let net = three_node_random();
        let (traj, table) = simulate_network(&net, 0.4, &RandomStream::new(5, 0)).unwrap();

        let mut bumped = traj.clone();
        bumped.nodes[0].departures[3].value += 0.1;
        assert!(matches!(
            trajectory_satisfies_recursions(&bumped, &net, &table),
            Err(Violation::Departure { node: 1, k: 4, .. })
        ));

        let mut relabeled = traj.clone();
        let r = relabeled.nodes[0].routes[0];
        relabeled.nodes[0].routes[0] = if r == 1 { 2 } else { 1 };
        assert!(trajectory_satisfies_recursions(&relabeled, &net, &table).is_err());

        // same trajectory against a table with one decision swapped
        let mut other = table.clone();
        let r = other.get(0, 0);
        other.set(0, 0, if r == 1 { 2 } else { 1 });
        assert!(trajectory_satisfies_recursions(&traj, &net, &other).is_err());
    }

    #[test]
    fn determinism() {
        let net = three_node_random();
        let a = simulate_network(&net, 0.3, &RandomStream::new(99, 4)).unwrap();
        let b = simulate_network(&net, 0.3, &RandomStream::new(99, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn theta_outside_domain_rejected() {
        let net = three_node_random();
        assert!(matches!(
            simulate_network(&net, 0.95, &RandomStream::new(0, 0)),
            Err(Error::ThetaOutOfDomain { .. })
        ));
    }
}
