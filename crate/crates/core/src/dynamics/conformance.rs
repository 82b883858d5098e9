//! Algebraic conformance check of a simulated trajectory.

use alloc::vec::Vec;
use core::fmt;

use super::recursion::{gg1_departures, kth_arrival_from_departures};
use super::simulate::Trajectory;
use crate::network::{RoutingTable, ValidatedNetwork};
use crate::tangent::Tangent;

/// Where a trajectory breaks the recursions. Indices are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Shape { node: usize },
    Departure { node: usize, k: usize, stored: Tangent, recomputed: Tangent },
    InitialArrival { node: usize, k: usize },
    ArrivalCount { node: usize, stored: usize, routed: usize },
    Arrival { node: usize, k: usize, stored: Tangent, recomputed: Tangent },
    Route { node: usize, k: usize, stored: usize, table: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { node } => write!(f, "node {node}: inconsistent list lengths"),
            Violation::Departure { node, k, stored, recomputed } => {
                write!(f, "node {node}: D^{k} stored {stored}, recursion gives {recomputed}")
            }
            Violation::InitialArrival { node, k } => write!(f, "node {node}: initial arrival {k} is not zero"),
            Violation::ArrivalCount { node, stored, routed } => {
                write!(f, "node {node}: {stored} real arrivals but {routed} routed departures")
            }
            Violation::Arrival { node, k, stored, recomputed } => {
                write!(f, "node {node}: real arrival {k} stored {stored}, order statistic gives {recomputed}")
            }
            Violation::Route { node, k, stored, table } => {
                write!(f, "node {node}: route {k} stored {stored}, table says {table}")
            }
        }
    }
}

/// Checks that every node obeys the single-server recursion and that every
/// real arrival is the order statistic of the departures routed to it.
///
/// Departures routed to node `n` are taken from `table`, not from the
/// trajectory's own route labels, and the labels are checked against the
/// table separately.
pub fn trajectory_satisfies_recursions(
    traj: &Trajectory,
    net: &ValidatedNetwork,
    table: &RoutingTable,
) -> Result<(), Violation> {
    if traj.nodes.len() != net.len() {
        return Err(Violation::Shape { node: 0 });
    }
    for (n, path) in traj.nodes.iter().enumerate() {
        let done = path.departures.len();
        if path.arrivals.len() < done || path.services.len() < done || path.services.len() > path.arrivals.len() {
            return Err(Violation::Shape { node: n + 1 });
        }
        let recomputed = gg1_departures(&path.arrivals[..done], &path.services[..done])
            .map_err(|_| Violation::Shape { node: n + 1 })?;
        for (k, (s, r)) in path.departures.iter().zip(&recomputed).enumerate() {
            if !s.bit_eq(*r) {
                return Err(Violation::Departure { node: n + 1, k: k + 1, stored: *s, recomputed: *r });
            }
        }
        let init = net.node(n).initial_customers;
        if path.initial_customers != init || path.arrivals.len() < init {
            return Err(Violation::Shape { node: n + 1 });
        }
        if let Some(k) = path.arrivals[..init].iter().position(|a| !a.bit_eq(Tangent::ZERO)) {
            return Err(Violation::InitialArrival { node: n + 1, k: k + 1 });
        }
        let routed = if n == traj.stop_node { done.saturating_sub(1) } else { done };
        if path.routes.len() != routed {
            return Err(Violation::Shape { node: n + 1 });
        }
        for (k, &r) in path.routes.iter().enumerate() {
            let expected = table.get(n, k);
            if r != expected {
                return Err(Violation::Route { node: n + 1, k: k + 1, stored: r + 1, table: expected + 1 });
            }
        }
    }

    // the routed-departure set of every node, in (node, k) insertion order
    let mut routed_to: Vec<Vec<Tangent>> = alloc::vec![Vec::new(); net.len()];
    for (i, path) in traj.nodes.iter().enumerate() {
        let routed = if i == traj.stop_node { path.departures.len().saturating_sub(1) } else { path.departures.len() };
        for (j, d) in path.departures[..routed].iter().enumerate() {
            routed_to[table.get(i, j)].push(*d);
        }
    }
    for (n, path) in traj.nodes.iter().enumerate() {
        let real = path.real_arrivals();
        let set = &routed_to[n];
        if real.len() != set.len() {
            return Err(Violation::ArrivalCount { node: n + 1, stored: real.len(), routed: set.len() });
        }
        for (k, stored) in real.iter().enumerate() {
            let recomputed = kth_arrival_from_departures(set, k + 1).expect("k within set size");
            if !stored.bit_eq(recomputed) {
                return Err(Violation::Arrival { node: n + 1, k: k + 1, stored: *stored, recomputed });
            }
        }
    }
    Ok(())
}
