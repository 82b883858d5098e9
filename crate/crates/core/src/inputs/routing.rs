use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{ParameterDomain, RoutingTable, ValidatedNetwork};

/// Minimum probability any target may have anywhere on Θ.
pub const PROBABILITY_MARGIN: f64 = 1e-9;
const SUM_TOLERANCE: f64 = 1e-12;

/// Next-node law applied at every departure of one node.
///
/// Probabilities are affine in θ: `p_r(θ) = constant_r + slope_r·θ`; a
/// constant law has all slopes zero. Targets are kept in ascending order,
/// which is the order the inverse CDF walks.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingDistribution {
    targets: Vec<usize>,
    constant: Vec<f64>,
    slope: Vec<f64>,
    affine: bool,
}

impl RoutingDistribution {
    /// θ-independent law.
    pub fn constant(targets: Vec<usize>, probs: Vec<f64>) -> Self {
        let slope = alloc::vec![0.0; probs.len()];
        Self { targets, constant: probs, slope, affine: false }
    }

    /// `p_r(θ) = constant_r + slope_r·θ`.
    pub fn affine(targets: Vec<usize>, constant: Vec<f64>, slope: Vec<f64>) -> Self {
        Self { targets, constant, slope, affine: true }
    }

    /// All mass on one target.
    pub fn deterministic(target: usize) -> Self {
        Self::constant(alloc::vec![target], alloc::vec![1.0])
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn constants(&self) -> &[f64] {
        &self.constant
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slope
    }

    pub fn is_affine(&self) -> bool {
        self.affine
    }

    /// True when no probability depends on θ.
    pub fn is_parameter_free(&self) -> bool {
        self.slope.iter().all(|&d| d == 0.0)
    }

    pub fn support_len(&self) -> usize {
        self.targets.len()
    }

    fn index_of(&self, target: usize) -> Result<usize> {
        self.targets
            .binary_search(&target)
            .map_err(|_| Error::TargetNotInSupport { target: target + 1 })
    }

    #[inline]
    fn prob_at(&self, idx: usize, theta: f64) -> f64 {
        self.constant[idx] + self.slope[idx] * theta
    }

    /// `p_r(θ)`.
    pub fn pmf(&self, theta: f64, target: usize) -> Result<f64> {
        Ok(self.prob_at(self.index_of(target)?, theta))
    }

    /// `∂/∂θ ln p_r(θ)`.
    pub fn score(&self, theta: f64, target: usize) -> Result<f64> {
        let idx = self.index_of(target)?;
        Ok(self.score_at(idx, theta))
    }

    #[inline]
    fn score_at(&self, idx: usize, theta: f64) -> f64 {
        let d = self.slope[idx];
        if d == 0.0 {
            0.0
        } else {
            d / self.prob_at(idx, theta)
        }
    }

    /// Inverse CDF over ascending targets: the first target with `u < CDF`.
    pub fn sample(&self, theta: f64, u: f64) -> usize {
        let mut cdf = 0.0;
        for (idx, &target) in self.targets.iter().enumerate() {
            cdf += self.prob_at(idx, theta);
            if u < cdf {
                return target;
            }
        }
        // u above a CDF that rounds to just under 1
        *self.targets.last().expect("validated distributions are non-empty")
    }

    /// Sorts targets ascending and checks the law is a strictly positive
    /// probability vector on all of `domain`.
    pub(crate) fn validate(&mut self, node: usize, n_nodes: usize, domain: ParameterDomain) -> Result<()> {
        let bad = |reason: alloc::string::String| Err(Error::InvalidProbability { node: node + 1, reason });
        let len = self.targets.len();
        if len == 0 {
            return Err(Error::InvalidTopology(format!("node {} has no routing targets", node + 1)));
        }
        if self.constant.len() != len || self.slope.len() != len {
            return bad(format!("{} targets but {} constants and {} slopes", len, self.constant.len(), self.slope.len()));
        }
        if let Some(&t) = self.targets.iter().find(|&&t| t >= n_nodes) {
            return Err(Error::InvalidTopology(format!(
                "node {} routes to node {} in a {}-node network",
                node + 1,
                t + 1,
                n_nodes
            )));
        }
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by_key(|&i| self.targets[i]);
        self.targets = order.iter().map(|&i| self.targets[i]).collect();
        self.constant = order.iter().map(|&i| self.constant[i]).collect();
        self.slope = order.iter().map(|&i| self.slope[i]).collect();
        if self.targets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology(format!("node {} lists a routing target twice", node + 1)));
        }
        if self.constant.iter().chain(&self.slope).any(|x| !x.is_finite()) {
            return bad(format!("non-finite coefficient"));
        }
        let sum_c: f64 = self.constant.iter().sum();
        let sum_d: f64 = self.slope.iter().sum();
        if (sum_c - 1.0).abs() > SUM_TOLERANCE || sum_d.abs() > SUM_TOLERANCE {
            return bad(format!("probabilities sum to {sum_c} + {sum_d}·theta, not 1"));
        }
        // affine in θ, so the extremes sit at the interval ends
        for theta in [domain.lo, domain.hi] {
            for idx in 0..len {
                let p = self.prob_at(idx, theta);
                if !(p >= PROBABILITY_MARGIN) {
                    return bad(format!(
                        "p(target {}) = {p} at theta = {theta}; must stay positive on the domain",
                        self.targets[idx] + 1
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `Ψ` restricted to the first `counts[n]` decisions of each row:
/// `Σ_n Σ_{k ≤ counts[n]} ∂/∂θ ln φ_n(θ, r_n^k)`. With every count equal
/// to the horizon this is the score of the whole truncated table.
pub fn table_score(net: &ValidatedNetwork, theta: f64, table: &RoutingTable, counts: &[usize]) -> f64 {
    let mut psi = 0.0;
    for (n, node) in net.nodes().iter().enumerate() {
        let dist = &node.routing;
        if dist.is_parameter_free() {
            continue;
        }
        let count = counts.get(n).copied().unwrap_or(0).min(table.horizon());
        for &r in &table.row(n)[..count] {
            let idx = dist.index_of(r).expect("table entries lie in the support");
            psi += dist.score_at(idx, theta);
        }
    }
    psi
}

/// Score of the whole truncated table (every count equal to `L`).
pub fn full_table_score(net: &ValidatedNetwork, theta: f64, table: &RoutingTable) -> f64 {
    let counts = alloc::vec![table.horizon(); net.len()];
    table_score(net, theta, table, &counts)
}

/// `Φ(θ, R) = Π_n Π_k φ_n(θ, r_n^k)` as a direct product.
pub fn table_likelihood(net: &ValidatedNetwork, theta: f64, table: &RoutingTable) -> f64 {
    let mut phi = 1.0;
    for (n, node) in net.nodes().iter().enumerate() {
        for &r in table.row(n) {
            phi *= node.routing.pmf(theta, r).unwrap_or(0.0);
        }
    }
    phi
}

/// `ln Φ(θ, R)` accumulated as a sum of logs.
pub fn table_log_likelihood(net: &ValidatedNetwork, theta: f64, table: &RoutingTable) -> f64 {
    let mut log_phi = 0.0;
    for (n, node) in net.nodes().iter().enumerate() {
        for &r in table.row(n) {
            log_phi += libm::log(node.routing.pmf(theta, r).unwrap_or(0.0));
        }
    }
    log_phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    // p_1 = θ, p_2 = 1 − θ (0-based targets 0 and 1)
    fn toy() -> RoutingDistribution {
        RoutingDistribution::affine(vec![0, 1], vec![0.0, 1.0], vec![1.0, -1.0])
    }

    #[test]
    fn pmf_matches_closed_forms() {
        let d = toy();
        assert_eq!(d.pmf(0.5, 0).unwrap(), 0.5);
        assert_eq!(d.pmf(0.5, 1).unwrap(), 0.5);
        let c = RoutingDistribution::constant(vec![0, 1], vec![0.3, 0.7]);
        assert_eq!(c.pmf(0.123, 1).unwrap(), 0.7);
        assert_eq!(d.pmf(0.5, 2), Err(Error::TargetNotInSupport { target: 3 }));
    }

    #[test]
    fn score_matches_closed_forms() {
        let d = toy();
        assert!((d.score(0.5, 0).unwrap() - 2.0).abs() < 1e-15);
        assert!((d.score(0.5, 1).unwrap() + 2.0).abs() < 1e-15);
        let c = RoutingDistribution::constant(vec![0, 1], vec![0.3, 0.7]);
        assert_eq!(c.score(0.4, 0).unwrap(), 0.0);
        assert_eq!(c.score(0.4, 1).unwrap(), 0.0);
    }

    #[test]
    fn inverse_cdf_routing() {
        let d = toy();
        assert_eq!(d.sample(0.5, 0.4), 0);
        assert_eq!(d.sample(0.5, 0.9), 1);
        // strict u < CDF: u = θ goes to the second target
        assert_eq!(d.sample(0.5, 0.5), 1);
        let single = RoutingDistribution::deterministic(3);
        for u in [0.0, 0.5, 0.999_999] {
            assert_eq!(single.sample(0.2, u), 3);
        }
    }

    #[test]
    fn routing_flips_at_most_once_in_theta() {
        let d = toy();
        for i in 0..50 {
            let u = (i as f64 + 0.5) / 50.0;
            let mut flips = 0;
            let mut prev = d.sample(0.05, u);
            let mut theta = 0.05;
            while theta <= 0.95 {
                let r = d.sample(theta, u);
                if r != prev {
                    flips += 1;
                    prev = r;
                }
                theta += 1e-3;
            }
            assert!(flips <= 1);
        }
    }

    #[test]
    fn validation_sorts_and_checks_margin() {
        let dom = ParameterDomain::new(0.05, 0.95).unwrap();
        let mut d = RoutingDistribution::affine(vec![1, 0], vec![1.0, 0.0], vec![-1.0, 1.0]);
        d.validate(0, 2, dom).unwrap();
        assert_eq!(d.targets(), &[0, 1]);
        assert_eq!(d.constants(), &[0.0, 1.0]);

        let closed = ParameterDomain::new(0.0, 1.0).unwrap();
        let mut d = toy();
        assert!(matches!(d.validate(0, 2, closed), Err(Error::InvalidProbability { .. })));

        let mut d = RoutingDistribution::constant(vec![0, 2], vec![0.5, 0.5]);
        assert!(matches!(d.validate(0, 2, dom), Err(Error::InvalidTopology(_))));

        let mut d = RoutingDistribution::constant(vec![0, 1], vec![0.5, 0.6]);
        assert!(matches!(d.validate(0, 2, dom), Err(Error::InvalidProbability { .. })));
    }

    #[test]
    fn normalization_and_mean_zero_score_on_grid() {
        let d = RoutingDistribution::affine(vec![0, 1, 2], vec![0.2, 0.5, 0.3], vec![0.5, -0.2, -0.3]);
        let h = 1e-5;
        let mut theta = 0.0;
        while theta <= 0.5 {
            let mut total = 0.0;
            let mut mean_score = 0.0;
            for r in 0..3 {
                let p = d.pmf(theta, r).unwrap();
                let s = d.score(theta, r).unwrap();
                total += p;
                mean_score += p * s;
                let dp = (d.pmf(theta + h, r).unwrap() - d.pmf(theta - h, r).unwrap()) / (2.0 * h);
                assert!((dp - p * s).abs() < 1e-9);
            }
            assert!((total - 1.0).abs() < 1e-12);
            assert!(mean_score.abs() < 1e-12);
            theta += 1e-3;
        }
        assert_eq!(d.slopes().iter().sum::<f64>(), 0.0);
    }
}
