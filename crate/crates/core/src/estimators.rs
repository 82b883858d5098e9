//! Monte Carlo gradient estimators.
//!
//! Replication `i` of a run with seed `s` always uses `RandomStream::new(s, i)`,
//! and every reduction walks replications in index order, so a
//! `(net, θ, M, seed)` tuple determines the summary bit for bit.

use alloc::vec::Vec;
use core::fmt;

use crate::criteria::{evaluate_criterion, CriterionKind};
use crate::dynamics::{Completion, SimObserver, Simulator};
use crate::error::{Error, Result};
use crate::inputs::{mix_seed, table_score, RandomStream};
use crate::network::{RoutingTable, ValidatedNetwork};
use crate::tangent::Tangent;

/// How many routing decisions enter the score `Ψ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PsiMode {
    /// Every entry of the truncated `N × L` table. Unbiased.
    #[default]
    FixedHorizon,
    /// Only the decisions realized before the stopping completion.
    Online,
}

impl PsiMode {
    pub fn name(self) -> &'static str {
        match self {
            PsiMode::FixedHorizon => "fixed-horizon",
            PsiMode::Online => "online",
        }
    }
}

impl fmt::Display for PsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EstimatorTag {
    /// Mean of the pathwise derivative alone.
    NaiveIpa,
    /// Pathwise derivative plus `F·Ψ`.
    LrCorrected,
    /// The online completion-driven accumulator for utilization.
    Alg51,
    /// Central finite difference.
    FiniteDifference,
    /// Mean of `F` itself, not a gradient.
    Value,
}

impl EstimatorTag {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorTag::NaiveIpa => "naive-ipa",
            EstimatorTag::LrCorrected => "lr-corrected",
            EstimatorTag::Alg51 => "alg51",
            EstimatorTag::FiniteDifference => "fd",
            EstimatorTag::Value => "value",
        }
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateSummary {
    pub mean: f64,
    pub sample_variance: f64,
    pub reps: usize,
    /// `1.96·sqrt(sample_variance / reps)`.
    pub ci95_halfwidth: f64,
    pub estimator: EstimatorTag,
    pub ties_observed: usize,
}

impl EstimateSummary {
    pub fn standard_error(&self) -> f64 {
        libm::sqrt(self.sample_variance / self.reps as f64)
    }
}

/// Mean, unbiased sample variance and 95% half-width, summed in index order.
pub fn mc_summary(estimator: EstimatorTag, samples: &[f64]) -> Result<EstimateSummary> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let mut sum = 0.0;
    for &x in samples {
        sum += x;
    }
    let mean = sum / m as f64;
    let mut ss = 0.0;
    for &x in samples {
        let d = x - mean;
        ss += d * d;
    }
    let sample_variance = ss / (m - 1) as f64;
    Ok(EstimateSummary {
        mean,
        sample_variance,
        reps: m,
        ci95_halfwidth: 1.96 * libm::sqrt(sample_variance / m as f64),
        estimator,
        ties_observed: 0,
    })
}

/// One realization of the criterion with everything the estimators need.
#[derive(Clone, Debug, PartialEq)]
pub struct Replication {
    pub value: Tangent,
    pub table: RoutingTable,
    /// Routing decisions realized per node.
    pub counts: Vec<usize>,
    pub ties: usize,
}

/// Reuses one simulator across replications.
struct Replicator<'a> {
    net: &'a ValidatedNetwork,
    sim: Simulator<'a>,
    kind: CriterionKind,
}

impl<'a> Replicator<'a> {
    fn new(net: &'a ValidatedNetwork, kind: CriterionKind) -> Self {
        Self { net, sim: Simulator::new(net), kind }
    }

    fn run(&mut self, theta: f64, stream: &RandomStream) -> Result<Replication> {
        let table = RoutingTable::sample(self.net, theta, stream);
        let mut uniforms = *stream;
        let traj = self.sim.run(theta, &table, &mut uniforms, &mut ())?;
        let value = evaluate_criterion(self.kind, traj, self.net.tagged_node(), self.net.completions())?;
        Ok(Replication { value, counts: traj.decision_counts(), ties: traj.ties, table })
    }
}

/// Simulates one replication and evaluates `kind` at the tagged node over
/// the first `K` completions.
pub fn replicate_f(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, stream: &RandomStream) -> Result<Replication> {
    net.domain().check(theta)?;
    Replicator::new(net, kind).run(theta, stream)
}

/// `G = ∂F/∂θ + F·Ψ` for one replication.
pub fn corrected_sample(net: &ValidatedNetwork, theta: f64, rep: &Replication, psi_mode: PsiMode) -> f64 {
    let psi = match psi_mode {
        PsiMode::FixedHorizon => {
            let all = alloc::vec![net.horizon(); net.len()];
            table_score(net, theta, &rep.table, &all)
        }
        PsiMode::Online => table_score(net, theta, &rep.table, &rep.counts),
    };
    rep.value.deriv + rep.value.value * psi
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        Err(Error::TooFewSamples(reps))
    } else {
        Ok(())
    }
}

fn collect<F>(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, reps: usize, seed: u64, tag: EstimatorTag, mut f: F) -> Result<EstimateSummary>
where
    F: FnMut(&Replication) -> f64,
{
    check_reps(reps)?;
    net.domain().check(theta)?;
    let mut runner = Replicator::new(net, kind);
    let mut samples = Vec::with_capacity(reps);
    let mut ties = 0;
    for i in 0..reps {
        let rep = runner.run(theta, &RandomStream::new(seed, i as u64))?;
        ties += rep.ties;
        samples.push(f(&rep));
    }
    let mut summary = mc_summary(tag, &samples)?;
    summary.ties_observed = ties;
    Ok(summary)
}

/// Mean of the pathwise derivative `∂F/∂θ` alone. Biased when routing
/// depends on θ.
pub fn naive_ipa_estimate(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, reps: usize, seed: u64) -> Result<EstimateSummary> {
    collect(net, kind, theta, reps, seed, EstimatorTag::NaiveIpa, |r| r.value.deriv)
}

/// Mean of `G = ∂F/∂θ + F·Ψ` with `Ψ` counted per `psi_mode`.
pub fn corrected_estimate(
    net: &ValidatedNetwork,
    kind: CriterionKind,
    theta: f64,
    reps: usize,
    seed: u64,
    psi_mode: PsiMode,
) -> Result<EstimateSummary> {
    collect(net, kind, theta, reps, seed, EstimatorTag::LrCorrected, |r| corrected_sample(net, theta, r, psi_mode))
}

/// Mean of `F`.
pub fn value_estimate(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, reps: usize, seed: u64) -> Result<EstimateSummary> {
    collect(net, kind, theta, reps, seed, EstimatorTag::Value, |r| r.value.value)
}

/// Accumulators updated on each service completion; the utilization
/// gradient of the tagged node is read off at the stopping completion.
struct OnlineUtilizationGradient<'a> {
    net: &'a ValidatedNetwork,
    theta: f64,
    /// derivative of the current departure epoch, per node
    g: Vec<f64>,
    t: f64,
    t_prime: f64,
    s: f64,
    d: Option<f64>,
}

impl SimObserver for OnlineUtilizationGradient<'_> {
    fn on_completion(&mut self, ev: &Completion) {
        let i = ev.node;
        self.g[i] += ev.service.deriv;
        if i == self.net.tagged_node() {
            self.t += ev.service.value;
            self.t_prime += ev.service.deriv;
            if ev.k == self.net.completions() {
                self.d = Some(ev.departure.value);
                return;
            }
        }
        let Some(r) = ev.route else { return };
        self.s += self.net.node(i).routing.score(self.theta, r).unwrap_or(0.0);
        if ev.route_server_free {
            self.g[r] = self.g[i];
        }
    }
}

/// Utilization gradient at the tagged node from a single run, accumulated
/// online during the simulation: `(t′d − t·g_n)/d² + t·s/d`.
pub fn online_estimate_alg51(net: &ValidatedNetwork, theta: f64, stream: &RandomStream) -> Result<f64> {
    net.domain().check(theta)?;
    let mut sim = Simulator::new(net);
    online_with(&mut sim, net, theta, stream)
}

fn online_with(sim: &mut Simulator<'_>, net: &ValidatedNetwork, theta: f64, stream: &RandomStream) -> Result<f64> {
    let table = RoutingTable::sample(net, theta, stream);
    let mut acc = OnlineUtilizationGradient {
        net,
        theta,
        g: alloc::vec![0.0; net.len()],
        t: 0.0,
        t_prime: 0.0,
        s: 0.0,
        d: None,
    };
    let mut uniforms = *stream;
    sim.run(theta, &table, &mut uniforms, &mut acc)?;
    let d = acc.d.expect("run ends on the stopping completion");
    if d == 0.0 {
        return Err(Error::ZeroDeparture { node: net.tagged_node() + 1 });
    }
    let g_n = acc.g[net.tagged_node()];
    Ok((acc.t_prime * d - acc.t * g_n) / (d * d) + acc.t * acc.s / d)
}

/// Monte Carlo mean of [`online_estimate_alg51`].
pub fn alg51_estimate(net: &ValidatedNetwork, theta: f64, reps: usize, seed: u64) -> Result<EstimateSummary> {
    check_reps(reps)?;
    net.domain().check(theta)?;
    let mut sim = Simulator::new(net);
    let mut samples = Vec::with_capacity(reps);
    let mut ties = 0;
    for i in 0..reps {
        samples.push(online_with(&mut sim, net, theta, &RandomStream::new(seed, i as u64))?);
        ties += sim.trajectory().ties;
    }
    let mut summary = mc_summary(EstimatorTag::Alg51, &samples)?;
    summary.ties_observed = ties;
    Ok(summary)
}

/// One central difference next to the pathwise derivative it should match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReplication {
    pub fd: f64,
    pub ipa: f64,
    /// The two perturbed runs drew different routing tables.
    pub routing_flip: bool,
    pub ties: usize,
}

fn check_step(net: &ValidatedNetwork, theta: f64, h: f64) -> Result<()> {
    let dom = net.domain();
    if !(h > 0.0) || !dom.contains(theta - h) || !dom.contains(theta + h) {
        return Err(Error::InvalidStep { theta, h });
    }
    Ok(())
}

/// `(F(θ+h) − F(θ−h)) / 2h` on common random numbers, alongside the
/// pathwise derivative at θ on the same stream.
pub fn fd_replication(net: &ValidatedNetwork, kind: CriterionKind, theta: f64, h: f64, stream: &RandomStream) -> Result<FdReplication> {
    check_step(net, theta, h)?;
    let mut runner = Replicator::new(net, kind);
    let up = runner.run(theta + h, stream)?;
    let down = runner.run(theta - h, stream)?;
    let mid = runner.run(theta, stream)?;
    Ok(FdReplication {
        fd: (up.value.value - down.value.value) / (2.0 * h),
        ipa: mid.value.deriv,
        routing_flip: up.table != down.table || up.table != mid.table,
        ties: up.ties + down.ties + mid.ties,
    })
}

/// Mean central difference. With `crn` both sides of replication `i` share
/// its stream; without, the lower side draws from an independent seed.
pub fn finite_difference_estimate(
    net: &ValidatedNetwork,
    kind: CriterionKind,
    theta: f64,
    h: f64,
    reps: usize,
    seed: u64,
    crn: bool,
) -> Result<EstimateSummary> {
    check_reps(reps)?;
    check_step(net, theta, h)?;
    let lower_seed = if crn { seed } else { mix_seed(seed, 0x6664) };
    let mut runner = Replicator::new(net, kind);
    let mut samples = Vec::with_capacity(reps);
    let mut ties = 0;
    for i in 0..reps {
        let up = runner.run(theta + h, &RandomStream::new(seed, i as u64))?;
        let down = runner.run(theta - h, &RandomStream::new(lower_seed, i as u64))?;
        ties += up.ties + down.ties;
        samples.push((up.value.value - down.value.value) / (2.0 * h));
    }
    let mut summary = mc_summary(EstimatorTag::FiniteDifference, &samples)?;
    summary.ties_observed = ties;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_constants() {
        let s = mc_summary(EstimatorTag::Value, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.sample_variance, s.ci95_halfwidth), (1.0, 0.0, 0.0));
    }

    #[test]
    fn summary_textbook() {
        let s = mc_summary(EstimatorTag::Value, &[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.sample_variance, s.reps), (1.0, 2.0, 2));
        assert!((s.ci95_halfwidth - 1.96).abs() < 1e-15);
    }

    #[test]
    fn summary_needs_two_samples() {
        assert_eq!(mc_summary(EstimatorTag::Value, &[1.0]), Err(Error::TooFewSamples(1)));
    }

    #[test]
    fn summary_of_normal_draws() {
        // Box–Muller on the counter stream
        let stream = RandomStream::new(2024, 0);
        let mut xs = Vec::with_capacity(10_000);
        for k in 1..=10_000 {
            let u1 = stream.uniform(0, crate::inputs::Purpose::Service, k);
            let u2 = stream.uniform(1, crate::inputs::Purpose::Service, k);
            xs.push(libm::sqrt(-2.0 * libm::log1p(-u1)) * libm::cos(core::f64::consts::TAU * u2));
        }
        let s = mc_summary(EstimatorTag::Value, &xs).unwrap();
        assert!(s.mean.abs() < 0.05, "mean {}", s.mean);
        assert!((s.sample_variance - 1.0).abs() < 0.05);
    }
}
