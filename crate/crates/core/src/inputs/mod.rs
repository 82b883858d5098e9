//! Random service times and routing laws, both driven by explicit uniforms.

mod routing;
mod service;
mod stream;

pub use routing::{
    full_table_score, table_likelihood, table_log_likelihood, table_score, RoutingDistribution,
    PROBABILITY_MARGIN,
};
pub use service::{FamilyBounds, ServiceFamily};
pub use stream::{mix_seed, Purpose, RandomStream, ServiceUniforms};
