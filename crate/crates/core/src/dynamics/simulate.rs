//! Event-driven simulation of a closed network of single-server FIFO nodes.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::inputs::{RandomStream, ServiceUniforms};
use crate::network::{RoutingTable, ValidatedNetwork};
use crate::tangent::Tangent;

/// Everything one node saw during a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodePath {
    /// `K_n` at time zero.
    pub initial_customers: usize,
    /// `A_n^k`, starting with the `K_n` zero entries. Includes customers
    /// still waiting when the run stopped.
    pub arrivals: Vec<Tangent>,
    /// `D_n^k` for every completed service.
    pub departures: Vec<Tangent>,
    /// `τ_n^k` per service initiation; may hold one in-progress service.
    pub services: Vec<Tangent>,
    /// Realized next node after each departure, except the final departure
    /// of the tagged node.
    pub routes: Vec<usize>,
}

impl NodePath {
    fn reset(&mut self, initial_customers: usize) {
        self.initial_customers = initial_customers;
        self.arrivals.clear();
        self.departures.clear();
        self.services.clear();
        self.routes.clear();
        self.arrivals.resize(initial_customers, Tangent::ZERO);
    }

    fn busy(&self) -> bool {
        self.services.len() > self.departures.len()
    }

    fn waiting(&self) -> bool {
        self.arrivals.len() > self.services.len()
    }

    /// Real arrivals (those after the initial customers).
    pub fn real_arrivals(&self) -> &[Tangent] {
        &self.arrivals[self.initial_customers.min(self.arrivals.len())..]
    }
}

/// One replication's timestamps with their θ-derivatives.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub nodes: Vec<NodePath>,
    pub stop_node: usize,
    pub stop_count: usize,
    /// Max comparisons that tied in value but not in derivative.
    pub ties: usize,
}

impl Trajectory {
    pub fn node(&self, n: usize) -> &NodePath {
        &self.nodes[n]
    }

    /// Routing decisions realized per node.
    pub fn decision_counts(&self) -> Vec<usize> {
        self.nodes.iter().map(|p| p.routes.len()).collect()
    }
}

/// A service completion as seen by a [`SimObserver`].
#[derive(Clone, Copy, Debug)]
pub struct Completion {
    pub node: usize,
    /// 1-based completion index at `node`.
    pub k: usize,
    pub service: Tangent,
    pub departure: Tangent,
    /// Next node, or `None` for the completion that ends the run.
    pub route: Option<usize>,
    /// Whether the server at `route` is free at the moment of the departure.
    pub route_server_free: bool,
}

/// Hook called on every service completion, in event order.
pub trait SimObserver {
    fn on_completion(&mut self, event: &Completion);
}

impl SimObserver for () {
    #[inline]
    fn on_completion(&mut self, _: &Completion) {}
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    node: usize,
    k: usize,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest (time, node, k) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| other.k.cmp(&self.k))
    }
}

/// Reusable simulation state. Keeps buffer capacity between runs, which
/// matters for quadrature over millions of lattice points.
#[derive(Debug)]
pub struct Simulator<'a> {
    net: &'a ValidatedNetwork,
    traj: Trajectory,
    events: BinaryHeap<Event>,
    tagged_reachable: bool,
}

/// Whether any customer can ever reach the tagged node through the routing
/// supports.
fn tagged_reachable(net: &ValidatedNetwork) -> bool {
    let mut seen = alloc::vec![false; net.len()];
    let mut stack: Vec<usize> = (0..net.len()).filter(|&n| net.node(n).initial_customers > 0).collect();
    for &n in &stack {
        seen[n] = true;
    }
    while let Some(n) = stack.pop() {
        if n == net.tagged_node() {
            return true;
        }
        for &r in net.node(n).routing.targets() {
            if !seen[r] {
                seen[r] = true;
                stack.push(r);
            }
        }
    }
    false
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a ValidatedNetwork) -> Self {
        Self {
            net,
            traj: Trajectory { nodes: alloc::vec![NodePath::default(); net.len()], ..Default::default() },
            events: BinaryHeap::with_capacity(net.len()),
            tagged_reachable: tagged_reachable(net),
        }
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.traj
    }

    fn start_service<U: ServiceUniforms>(&mut self, node: usize, theta: f64, uniforms: &mut U) -> Result<()> {
        let family = &self.net.node(node).service;
        let path = &mut self.traj.nodes[node];
        let k = path.services.len() + 1;
        let u = if family.uses_uniform() { uniforms.service_uniform(node, k)? } else { 0.0 };
        let tau = family.sample(theta, u);
        let arrival = path.arrivals[k - 1];
        let prev = path.departures.last().copied().unwrap_or(Tangent::ZERO);
        if arrival.ties_with(prev) {
            self.traj.ties += 1;
        }
        let departure = arrival.max_first(prev) + tau;
        path.services.push(tau);
        self.events.push(Event { time: departure.value, node, k });
        Ok(())
    }

    /// Runs until the `K`th completion at the tagged node, taking routes
    /// from `table`.
    pub fn run<U, O>(&mut self, theta: f64, table: &RoutingTable, uniforms: &mut U, observer: &mut O) -> Result<&Trajectory>
    where
        U: ServiceUniforms,
        O: SimObserver + ?Sized,
    {
        let net = self.net;
        let tagged = net.tagged_node();
        let target = net.completions();
        let horizon = net.horizon();
        if !self.tagged_reachable {
            return Err(Error::Starvation { node: tagged + 1, completions: 0 });
        }
        self.events.clear();
        self.traj.ties = 0;
        self.traj.stop_node = tagged;
        self.traj.stop_count = target;
        for (n, node) in net.nodes().iter().enumerate() {
            self.traj.nodes[n].reset(node.initial_customers);
        }
        for n in 0..net.len() {
            if self.traj.nodes[n].waiting() {
                self.start_service(n, theta, uniforms)?;
            }
        }

        while let Some(Event { node, k, .. }) = self.events.pop() {
            let path = &mut self.traj.nodes[node];
            let service = path.services[k - 1];
            let arrival = path.arrivals[k - 1];
            let prev = path.departures.last().copied().unwrap_or(Tangent::ZERO);
            let departure = arrival.max_first(prev) + service;
            path.departures.push(departure);

            if node == tagged && k == target {
                observer.on_completion(&Completion {
                    node,
                    k,
                    service,
                    departure,
                    route: None,
                    route_server_free: false,
                });
                return Ok(&self.traj);
            }
            if k > horizon {
                return Err(Error::HorizonExceeded { node: node + 1, k, horizon });
            }
            let route = table.get(node, k - 1);
            path.routes.push(route);
            let route_server_free = !self.traj.nodes[route].busy();
            observer.on_completion(&Completion {
                node,
                k,
                service,
                departure,
                route: Some(route),
                route_server_free,
            });
            self.traj.nodes[route].arrivals.push(departure);
            if !self.traj.nodes[node].busy() && self.traj.nodes[node].waiting() {
                self.start_service(node, theta, uniforms)?;
            }
            if route != node && !self.traj.nodes[route].busy() {
                self.start_service(route, theta, uniforms)?;
            }
        }
        Err(Error::Starvation { node: tagged + 1, completions: self.traj.nodes[tagged].departures.len() })
    }
}

/// Draws the routing table up front, then simulates one replication.
pub fn simulate_network(net: &ValidatedNetwork, theta: f64, stream: &RandomStream) -> Result<(Trajectory, RoutingTable)> {
    net.domain().check(theta)?;
    let table = RoutingTable::sample(net, theta, stream);
    let mut sim = Simulator::new(net);
    let mut uniforms = *stream;
    sim.run(theta, &table, &mut uniforms, &mut ())?;
    Ok((sim.into_trajectory(), table))
}

/// Simulates under a fixed routing table.
pub fn simulate_with_table<U: ServiceUniforms>(
    net: &ValidatedNetwork,
    theta: f64,
    table: &RoutingTable,
    uniforms: &mut U,
) -> Result<Trajectory> {
    let mut sim = Simulator::new(net);
    sim.run(theta, table, uniforms, &mut ())?;
    Ok(sim.into_trajectory())
}
