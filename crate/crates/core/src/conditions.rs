//! Static check of the sufficient conditions for pathwise unbiasedness.
//!
//! The conditions are sufficient, not necessary. A node whose family fails a
//! bound that the criterion needs is reported as violated; a node for which
//! the bound is finite but a degenerate service law makes ties possible is
//! reported as unknown.

use alloc::vec::Vec;
use core::fmt;

use crate::criteria::CriterionKind;
use crate::inputs::FamilyBounds;
use crate::network::ValidatedNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionStatus {
    Satisfied,
    Violated,
    Unknown,
}

impl ConditionStatus {
    pub fn name(self) -> &'static str {
        match self {
            ConditionStatus::Satisfied => "satisfied",
            ConditionStatus::Violated => "violated",
            ConditionStatus::Unknown => "unknown",
        }
    }

    fn worst(self, other: Self) -> Self {
        use ConditionStatus::*;
        match (self, other) {
            (Violated, _) | (_, Violated) => Violated,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => Satisfied,
        }
    }
}

impl fmt::Display for ConditionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeCondition {
    /// 0-based.
    pub node: usize,
    pub family: &'static str,
    pub bounds: FamilyBounds,
    pub status: ConditionStatus,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub kind: CriterionKind,
    pub nodes: Vec<NodeCondition>,
    pub overall: ConditionStatus,
    /// Some routing distribution moves with θ, so the pathwise derivative
    /// alone misses the routing term.
    pub parameter_dependent_routing: bool,
}

fn classify(kind: CriterionKind, b: &FamilyBounds) -> (ConditionStatus, &'static str) {
    if !b.lipschitz_mean.is_finite() {
        return (ConditionStatus::Violated, "Lipschitz constant not integrable");
    }
    if kind.is_ratio() {
        if b.nu <= 0.0 {
            return (ConditionStatus::Violated, "service time not bounded away from zero");
        }
        if !b.mu.is_finite() {
            return (ConditionStatus::Violated, "service time not bounded above");
        }
        if !b.lipschitz_sup.is_finite() {
            return (ConditionStatus::Violated, "Lipschitz constant not bounded");
        }
    }
    if !b.continuous {
        return (ConditionStatus::Unknown, "degenerate service law, ties possible");
    }
    (ConditionStatus::Satisfied, "bounds hold")
}

/// Per-node verdict on the service-time conditions for `kind`.
pub fn check_unbiasedness_conditions(net: &ValidatedNetwork, kind: CriterionKind) -> ConditionReport {
    let domain = net.domain();
    let mut overall = ConditionStatus::Satisfied;
    let nodes: Vec<NodeCondition> = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(n, spec)| {
            let bounds = spec.service.bounds(domain);
            let (status, reason) = classify(kind, &bounds);
            overall = overall.worst(status);
            NodeCondition { node: n, family: spec.service.name(), bounds, status, reason }
        })
        .collect();
    ConditionReport {
        kind,
        nodes,
        overall,
        parameter_dependent_routing: net.nodes().iter().any(|n| !n.routing.is_parameter_free()),
    }
}
