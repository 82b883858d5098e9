//! Per-node performance criteria and their exact pathwise derivatives.

use core::fmt;
use core::str::FromStr;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::tangent::Tangent;

/// Averages over the first `K` customers served at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    /// `S = Σ (D^k − A^k) / K`
    SystemTime,
    /// `W = Σ (D^k − A^k − τ^k) / K`
    WaitingTime,
    /// `T = K / D^K`
    Throughput,
    /// `U = Σ τ^k / D^K`
    Utilization,
    /// `J = Σ (D^k − A^k) / D^K`
    NumberInSystem,
    /// `Q = Σ (D^k − A^k − τ^k) / D^K`
    QueueLength,
    /// Oracle-only functional: the completion epoch `D^K` itself. Not one
    /// of the six network criteria; with zero-time dispatch and sink nodes it
    /// equals the service time picked by a single routing decision, which is
    /// how the two-branch counterexample is encoded as a network.
    CompletionEpoch,
}

impl CriterionKind {
    pub const NETWORK: [CriterionKind; 6] = [
        CriterionKind::SystemTime,
        CriterionKind::WaitingTime,
        CriterionKind::Throughput,
        CriterionKind::Utilization,
        CriterionKind::NumberInSystem,
        CriterionKind::QueueLength,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CriterionKind::SystemTime => "S",
            CriterionKind::WaitingTime => "W",
            CriterionKind::Throughput => "T",
            CriterionKind::Utilization => "U",
            CriterionKind::NumberInSystem => "J",
            CriterionKind::QueueLength => "Q",
            CriterionKind::CompletionEpoch => "D",
        }
    }

    /// Divided by `D^K` rather than by `K`.
    pub fn is_ratio(self) -> bool {
        matches!(
            self,
            CriterionKind::Throughput
                | CriterionKind::Utilization
                | CriterionKind::NumberInSystem
                | CriterionKind::QueueLength
        )
    }

    pub fn is_oracle_only(self) -> bool {
        self == CriterionKind::CompletionEpoch
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "S" => CriterionKind::SystemTime,
            "W" => CriterionKind::WaitingTime,
            "T" => CriterionKind::Throughput,
            "U" => CriterionKind::Utilization,
            "J" => CriterionKind::NumberInSystem,
            "Q" => CriterionKind::QueueLength,
            "D" => CriterionKind::CompletionEpoch,
            _ => return Err(Error::UnsupportedCriterion("unknown criterion symbol")),
        })
    }
}

/// `(value, dvalue/dθ)` of a criterion at node `node` over `k` completions.
pub fn evaluate_criterion(kind: CriterionKind, traj: &Trajectory, node: usize, k: usize) -> Result<Tangent> {
    let path = traj.node(node);
    let available = path.departures.len().min(path.arrivals.len());
    if k == 0 || available < k {
        return Err(Error::InsufficientCompletions { node: node + 1, needed: k, available });
    }

    let mut sojourn = Tangent::ZERO;
    let mut service = Tangent::ZERO;
    for ((d, a), tau) in path.departures[..k].iter().zip(&path.arrivals[..k]).zip(&path.services[..k]) {
        sojourn = sojourn + (*d - *a);
        service = service + *tau;
    }
    let wait = sojourn - service;

    let per_customer = |sum: Tangent| Tangent::new(sum.value / k as f64, sum.deriv / k as f64);
    let last = path.departures[k - 1];
    let (d, dd) = (last.value, last.deriv);
    let per_time = |sum: Tangent| -> Result<Tangent> {
        if d == 0.0 {
            return Err(Error::ZeroDeparture { node: node + 1 });
        }
        Ok(Tangent::new(sum.value / d, (sum.deriv * d - sum.value * dd) / (d * d)))
    };

    match kind {
        CriterionKind::SystemTime => Ok(per_customer(sojourn)),
        CriterionKind::WaitingTime => Ok(per_customer(wait)),
        CriterionKind::Throughput => per_time(Tangent::constant(k as f64)),
        CriterionKind::Utilization => per_time(service),
        CriterionKind::NumberInSystem => per_time(sojourn),
        CriterionKind::QueueLength => per_time(wait),
        CriterionKind::CompletionEpoch => Ok(last),
    }
}
