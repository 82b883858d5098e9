//! Closed queueing networks with θ-dependent service times and routing.
//!
//! The crate simulates single-server FIFO networks with exact pathwise
//! derivatives carried on every timestamp. Gradient estimators build on
//! those derivatives, adding a routing score term where routing moves with
//! θ; central finite differences serve as a baseline. The [`oracle`] module
//! holds small exact references for testing.
//!
//! Node indices are 0-based in this API; file formats use 1-based ids.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod conditions;
pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod inputs;
pub mod network;
pub mod oracle;
pub mod tangent;

pub use criteria::{evaluate_criterion, CriterionKind};
pub use dynamics::{simulate_network, trajectory_satisfies_recursions, Trajectory};
pub use error::{Error, Result};
pub use estimators::{EstimateSummary, EstimatorTag, PsiMode};
pub use inputs::{RandomStream, RoutingDistribution, ServiceFamily};
pub use network::{NetworkSpec, NodeSpec, ParameterDomain, RoutingTable, ValidatedNetwork};
pub use tangent::Tangent;
