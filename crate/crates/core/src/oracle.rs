//! Independent references for the simulator and the estimators.
//!
//! Everything here trades speed for transparency. The mixture oracle sums
//! over every routing table and integrates the service uniforms on a
//! midpoint lattice.

use alloc::vec;
use alloc::vec::Vec;

use crate::criteria::{evaluate_criterion, CriterionKind};
use crate::dynamics::Simulator;
use crate::error::{Error, Result};
use crate::inputs::{full_table_score, table_likelihood, Purpose, RandomStream, RoutingDistribution, ServiceFamily, ServiceUniforms};
use crate::network::{enumerate_routing_tables, validate_network, NetworkSpec, NodeSpec, ParameterDomain, RoutingTable, ValidatedNetwork, DEFAULT_TABLE_CAP};

/// Closed-form moments of the two-branch toy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyExact {
    /// `E[F] = 2θ + 1/2`
    pub expected_f: f64,
    /// `dE[F]/dθ = 2`
    pub d_expected_f: f64,
    /// `E[∂F/∂θ] = 1`
    pub expected_ipa: f64,
    /// `E[G] = 2`
    pub expected_g: f64,
}

/// Toy with `F = θ + U + 1` w.p. θ and `F = θ + U` w.p. `1 − θ`.
pub fn toy_exact(theta: f64) -> Result<ToyExact> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfDomain(theta));
    }
    Ok(ToyExact { expected_f: 2.0 * theta + 0.5, d_expected_f: 2.0, expected_ipa: 1.0, expected_g: 2.0 })
}

/// The toy as a network, read with [`CriterionKind::CompletionEpoch`].
///
/// Node 0 holds the only customer, serves it in zero time and sends it to
/// node 1 (`θ + u + 1`) with probability θ or to node 2 (`θ + u`) otherwise.
/// Both send it on to node 3, a zero-time sink whose first completion
/// stops the run. The completion epoch equals the chosen service time and
/// the only random routing decision is the first one.
pub fn toy_network() -> ValidatedNetwork {
    let zero = ServiceFamily::Deterministic { constant: 0.0, theta_slope: 0.0 };
    let su = |offset| ServiceFamily::ShiftedUniform { offset, theta_slope: 1.0, width: 1.0 };
    let node = |initial_customers, service, routing| NodeSpec { initial_customers, service, routing };
    validate_network(NetworkSpec {
        nodes: vec![
            node(1, zero.clone(), RoutingDistribution::affine(vec![1, 2], vec![0.0, 1.0], vec![1.0, -1.0])),
            node(0, su(1.0), RoutingDistribution::deterministic(3)),
            node(0, su(0.0), RoutingDistribution::deterministic(3)),
            node(0, zero, RoutingDistribution::deterministic(0)),
        ],
        horizon: 1,
        theta_domain: ParameterDomain { lo: 0.05, hi: 0.95 },
        tagged_node: 3,
        completions: 1,
    })
    .expect("toy network is valid")
}

/// Largest departure list [`subset_enum_arrival`] accepts.
pub const SUBSET_ENUM_CAP: usize = 20;

/// `k`th smallest departure, found as the minimum over all `k`-subsets of
/// the subset maximum.
pub fn subset_enum_arrival(departures: &[f64], k: usize) -> Result<f64> {
    let n = departures.len();
    if n > SUBSET_ENUM_CAP {
        return Err(Error::SupportTooLarge { size: 1u128 << n.min(127), cap: 1u128 << SUBSET_ENUM_CAP });
    }
    if k == 0 || k > n {
        return Err(Error::KTooLarge { k, len: n });
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let max = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| departures[i]).fold(f64::NEG_INFINITY, f64::max);
        best = best.min(max);
    }
    Ok(best)
}

/// Two parallel FIFO servers fed in arrival order. Each customer starts on
/// whichever server frees first (server 1 on ties). Departures come back
/// sorted.
pub fn two_server_event_oracle(arrivals: &[f64], services: &[f64]) -> Result<Vec<f64>> {
    if arrivals.len() != services.len() {
        return Err(Error::LengthMismatch { arrivals: arrivals.len(), services: services.len() });
    }
    let mut free = [0.0f64; 2];
    let mut out = Vec::with_capacity(arrivals.len());
    for (&a, &s) in arrivals.iter().zip(services) {
        let server = if free[1] < free[0] { 1 } else { 0 };
        let done = a.max(free[server]) + s;
        free[server] = done;
        out.push(done);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Most service coordinates a single routing table may need.
pub const MAX_COORDINATES: usize = 4;
/// Lattice points per quadrature at most.
pub const MAX_LATTICE_POINTS: u128 = 10_000_000_000;

const PROBES: u64 = 64;
const PROBE_SEED: u64 = 0x0c0f_fee5;
const IDENTITY_STEP: f64 = 1e-4;

/// Uniform source that records which labels a run asks for.
struct Probe {
    stream: RandomStream,
    labels: Vec<(usize, usize)>,
}

impl ServiceUniforms for Probe {
    fn service_uniform(&mut self, node: usize, k: usize) -> Result<f64> {
        if !self.labels.contains(&(node, k)) {
            self.labels.push((node, k));
        }
        Ok(self.stream.uniform(node, Purpose::Service, k))
    }
}

/// Uniform source fixed at one lattice point.
struct Lattice<'a> {
    labels: &'a [(usize, usize)],
    coords: [f64; MAX_COORDINATES],
}

impl ServiceUniforms for Lattice<'_> {
    fn service_uniform(&mut self, node: usize, k: usize) -> Result<f64> {
        match self.labels.iter().position(|&l| l == (node, k)) {
            Some(i) => Ok(self.coords[i]),
            None => Err(Error::CoordinateSetUnstable { node: node + 1, k }),
        }
    }
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

fn discover_labels(sim: &mut Simulator<'_>, table: &RoutingTable, thetas: &[f64]) -> Result<Vec<(usize, usize)>> {
    let mut probe = Probe { stream: RandomStream::new(PROBE_SEED, 0), labels: Vec::new() };
    for &theta in thetas {
        for p in 0..PROBES {
            probe.stream = RandomStream::new(PROBE_SEED, p);
            sim.run(theta, table, &mut probe, &mut ())?;
            if probe.labels.len() > MAX_COORDINATES {
                return Err(Error::TooManyCoordinates { found: probe.labels.len(), cap: MAX_COORDINATES });
            }
        }
    }
    probe.labels.sort_unstable();
    Ok(probe.labels)
}

/// `(E[F | R], E[∂F/∂θ | R])` by the midpoint rule on `grid_m^dim` points.
fn conditional_moments(
    sim: &mut Simulator<'_>,
    net: &ValidatedNetwork,
    kind: CriterionKind,
    theta: f64,
    table: &RoutingTable,
    labels: &[(usize, usize)],
    grid_m: usize,
) -> Result<(f64, f64)> {
    let dim = labels.len();
    let points = (grid_m as u128).pow(dim as u32);
    if points > MAX_LATTICE_POINTS {
        return Err(Error::SupportTooLarge { size: points, cap: MAX_LATTICE_POINTS });
    }
    let mut uniforms = Lattice { labels, coords: [0.0; MAX_COORDINATES] };
    let mut digits = [0usize; MAX_COORDINATES];
    let (mut value, mut deriv) = (Sum::default(), Sum::default());
    for _ in 0..points {
        for j in 0..dim {
            uniforms.coords[j] = (digits[j] as f64 + 0.5) / grid_m as f64;
        }
        let traj = sim.run(theta, table, &mut uniforms, &mut ())?;
        let f = evaluate_criterion(kind, traj, net.tagged_node(), net.completions())?;
        value.add(f.value);
        deriv.add(f.deriv);
        for d in digits[..dim].iter_mut() {
            *d += 1;
            if *d < grid_m {
                break;
            }
            *d = 0;
        }
    }
    let n = points as f64;
    Ok((value.value() / n, deriv.value() / n))
}

/// Exact-up-to-quadrature mixture quantities over all routing tables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureReport {
    /// `Σ_R Φ(θ,R) E[F | R]`
    pub expected_f: f64,
    /// Central difference of `expected_f` in θ.
    pub d_expected_f: f64,
    /// `Σ_R Φ(θ,R) E[∂F/∂θ | R]`
    pub expected_ipa: f64,
    /// `Σ_R Φ(θ,R) (E[∂F/∂θ | R] + E[F | R] Ψ(θ,R))`
    pub expected_g: f64,
    pub tables: usize,
    /// Most service coordinates any table needed.
    pub max_coordinates: usize,
}

impl MixtureReport {
    /// `|dE[F]/dθ − E[G]|`
    pub fn residual(&self) -> f64 {
        (self.d_expected_f - self.expected_g).abs()
    }
}

/// Sums over every routing table with lattice quadrature over the service
/// uniforms each table actually consumes. Feasible only for tiny networks.
pub fn mixture_report(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, grid_m: usize) -> Result<MixtureReport> {
    let domain = net.domain();
    domain.check(theta)?;
    if grid_m == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let h = IDENTITY_STEP.min(theta - domain.lo).min(domain.hi - theta);
    if !(h > 0.0) {
        return Err(Error::InvalidStep { theta, h });
    }
    let tables = enumerate_routing_tables(net, DEFAULT_TABLE_CAP)?;
    let mut sim = Simulator::new(net);
    let mut max_coordinates = 0;
    let (mut ef, mut ef_up, mut ef_down, mut ipa, mut g) =
        (Sum::default(), Sum::default(), Sum::default(), Sum::default(), Sum::default());
    for table in &tables {
        let labels = discover_labels(&mut sim, table, &[theta - h, theta, theta + h])?;
        max_coordinates = max_coordinates.max(labels.len());
        let (f, df) = conditional_moments(&mut sim, net, kind, theta, table, &labels, grid_m)?;
        let (f_up, _) = conditional_moments(&mut sim, net, kind, theta + h, table, &labels, grid_m)?;
        let (f_down, _) = conditional_moments(&mut sim, net, kind, theta - h, table, &labels, grid_m)?;
        let phi = table_likelihood(net, theta, table);
        let psi = full_table_score(net, theta, table);
        ef.add(phi * f);
        ef_up.add(table_likelihood(net, theta + h, table) * f_up);
        ef_down.add(table_likelihood(net, theta - h, table) * f_down);
        ipa.add(phi * df);
        g.add(phi * (df + f * psi));
    }
    Ok(MixtureReport {
        expected_f: ef.value(),
        d_expected_f: (ef_up.value() - ef_down.value()) / (2.0 * h),
        expected_ipa: ipa.value(),
        expected_g: g.value(),
        tables: tables.len(),
        max_coordinates,
    })
}

/// `(E[F], dE[F]/dθ)` from the exhaustive mixture.
pub fn brute_force_expectation(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, grid_m: usize) -> Result<(f64, f64)> {
    let r = mixture_report(net, kind, theta, grid_m)?;
    Ok((r.expected_f, r.d_expected_f))
}

/// `|dE[F]/dθ − E[∂F/∂θ + F·Ψ]|` with both sides from the exhaustive mixture.
pub fn score_identity_residual(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, grid_m: usize) -> Result<f64> {
    Ok(mixture_report(net, kind, theta, grid_m)?.residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inputs::full_table_score;

    #[test]
    fn toy_closed_form() {
        let t = toy_exact(0.5).unwrap();
        assert_eq!(t, ToyExact { expected_f: 1.5, d_expected_f: 2.0, expected_ipa: 1.0, expected_g: 2.0 });
        assert_eq!(toy_exact(0.0), Err(Error::OutOfDomain(0.0)));
        assert_eq!(toy_exact(1.5), Err(Error::OutOfDomain(1.5)));
    }

    #[test]
    fn toy_network_reproduces_branches() {
        let net = toy_network();
        let theta = 0.3;
        for rep in 0..50 {
            let stream = RandomStream::new(1, rep);
            let (traj, table) = crate::dynamics::simulate_network(&net, theta, &stream).unwrap();
            let f = evaluate_criterion(CriterionKind::CompletionEpoch, &traj, 3, 1).unwrap();
            let r = table.get(0, 0);
            let u = stream.uniform(r, Purpose::Service, 1);
            let expected = theta + u + if r == 1 { 1.0 } else { 0.0 };
            assert!((f.value - expected).abs() < 1e-12);
            assert_eq!(f.deriv, 1.0);
            let psi = full_table_score(&net, theta, &table);
            let expected_psi = if r == 1 { 1.0 / theta } else { 1.0 / (theta - 1.0) };
            assert!((psi - expected_psi).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_mixture_matches_closed_form() {
        let net = toy_network();
        let r = mixture_report(&net, CriterionKind::CompletionEpoch, 0.5, 200).unwrap();
        assert_eq!(r.tables, 2);
        assert_eq!(r.max_coordinates, 1);
        assert!((r.expected_f - 1.5).abs() < 1e-12);
        assert!((r.d_expected_f - 2.0).abs() < 1e-8);
        assert!((r.expected_ipa - 1.0).abs() < 1e-12);
        assert!((r.expected_g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subset_enum_arrival(&[3.0, 1.0, 2.0], 2), Ok(2.0));
        assert_eq!(subset_enum_arrival(&[3.0, 1.0, 2.0], 4), Err(Error::KTooLarge { k: 4, len: 3 }));
        assert!(subset_enum_arrival(&[0.0; 21], 1).is_err());
    }

    #[test]
    fn two_servers() {
        let d = two_server_event_oracle(&[0.0, 0.0, 0.0], &[3.0, 1.0, 1.0]).unwrap();
        assert_eq!(d, vec![1.0, 2.0, 3.0]);
    }
}
