use crate::error::Result;

/// What a uniform is consumed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Service,
    Routing,
}

/// Counter-based source of uniforms.
///
/// Each uniform is a pure function of `(seed, replication, node, purpose, k)`,
/// so a label consumes the same uniform no matter how the event order of a
/// run unfolds. This is what keeps θ-perturbed runs on common random numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    replication: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes two words into one; used for deriving child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ salt)
}

impl RandomStream {
    pub const fn new(seed: u64, replication: u64) -> Self {
        Self { seed, replication }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    /// Uniform in `[0, 1)` for the label `(node, purpose, k)`; `k` is 1-based.
    pub fn uniform(&self, node: usize, purpose: Purpose, k: usize) -> f64 {
        let lane = ((node as u64) << 1) | matches!(purpose, Purpose::Routing) as u64;
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ self.replication);
        h = splitmix64(h ^ lane);
        h = splitmix64(h ^ k as u64);
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Supplier of the uniform behind the `k`th service initiation at a node.
///
/// Implemented by [`RandomStream`] for simulation and by lattice points for
/// quadrature.
pub trait ServiceUniforms {
    fn service_uniform(&mut self, node: usize, k: usize) -> Result<f64>;
}

impl ServiceUniforms for RandomStream {
    #[inline]
    fn service_uniform(&mut self, node: usize, k: usize) -> Result<f64> {
        Ok(self.uniform(node, Purpose::Service, k))
    }
}
