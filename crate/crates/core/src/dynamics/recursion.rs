//! Max/min-plus node recursions on tangents.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tangent::Tangent;

fn check_lengths(arrivals: &[Tangent], services: &[Tangent]) -> Result<()> {
    if services.len() < arrivals.len() {
        return Err(Error::LengthMismatch { arrivals: arrivals.len(), services: services.len() });
    }
    Ok(())
}

/// Single-server FIFO departures: `D^k = (A^k ∨ D^{k−1}) + τ^k`, `D^0 = 0`.
///
/// Returns one departure per arrival; extra services are ignored.
pub fn gg1_departures(arrivals: &[Tangent], services: &[Tangent]) -> Result<Vec<Tangent>> {
    let mut ties = 0;
    gg1_departures_counting(arrivals, services, &mut ties)
}

/// [`gg1_departures`] that also counts derivative-relevant ties.
pub fn gg1_departures_counting(
    arrivals: &[Tangent],
    services: &[Tangent],
    ties: &mut usize,
) -> Result<Vec<Tangent>> {
    check_lengths(arrivals, services)?;
    let mut out = Vec::with_capacity(arrivals.len());
    let mut prev = Tangent::ZERO;
    for (a, tau) in arrivals.iter().zip(services) {
        if a.ties_with(prev) {
            *ties += 1;
        }
        prev = a.max_first(prev) + *tau;
        out.push(prev);
    }
    Ok(out)
}

/// Explicit solution of the single-server recursion:
/// `D^k = ⋁_{i ≤ k} (A^i + Σ_{j=i..k} τ^j)`.
///
/// Sums are accumulated left to right from `A^i` and equal values resolve to
/// the latest `i`, which is exactly what the recursion does, so both agree
/// bit for bit.
pub fn gg1_closed_form(arrivals: &[Tangent], services: &[Tangent]) -> Result<Vec<Tangent>> {
    check_lengths(arrivals, services)?;
    // candidate[i] = A^i + τ^i + … + τ^k for the current k
    let mut candidate: Vec<Tangent> = Vec::with_capacity(arrivals.len());
    let mut out = Vec::with_capacity(arrivals.len());
    for (a, tau) in arrivals.iter().zip(services) {
        for c in candidate.iter_mut() {
            *c = *c + *tau;
        }
        candidate.push(*a + *tau);
        let best = candidate
            .iter()
            .rev()
            .copied()
            .reduce(Tangent::max_first)
            .expect("at least one candidate");
        out.push(best);
    }
    Ok(out)
}

/// Two-server FIFO departure epochs:
/// `D^k = [⋁_{i ≤ k} ((A^i ∨ D^{i−2}) + τ^i)] ∧ [(A^{k+1} ∨ D^{k−1}) + τ^{k+1}]`
/// with `D^j = 0` for `j ≤ 0`. A missing `(k+1)`th arrival counts as `+∞`,
/// so the last departure is the first bracket alone.
pub fn gg2_departures(arrivals: &[Tangent], services: &[Tangent]) -> Result<Vec<Tangent>> {
    check_lengths(arrivals, services)?;
    let n = arrivals.len();
    let mut out: Vec<Tangent> = Vec::with_capacity(n);
    let d = |out: &Vec<Tangent>, j: isize| -> Tangent {
        if j <= 0 {
            Tangent::ZERO
        } else {
            out[j as usize - 1]
        }
    };
    let mut running: Option<Tangent> = None;
    for k in 1..=n {
        let ki = k as isize;
        let term = arrivals[k - 1].max_first(d(&out, ki - 2)) + services[k - 1];
        let first = match running {
            Some(m) => m.max_first(term),
            None => term,
        };
        running = Some(first);
        let dk = if k < n {
            let second = arrivals[k].max_first(d(&out, ki - 1)) + services[k];
            first.min_first(second)
        } else {
            first
        };
        out.push(dk);
    }
    Ok(out)
}

/// `k`th smallest of the routed departure times (1-based `k`): the minimum
/// over all `k`-subsets of the subset maximum. Equal values keep their input
/// order, which decides whose tangent is returned.
pub fn kth_arrival_from_departures(departures: &[Tangent], k: usize) -> Result<Tangent> {
    if k == 0 || k > departures.len() {
        return Err(Error::KTooLarge { k, len: departures.len() });
    }
    let mut sorted: Vec<Tangent> = departures.to_vec();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(sorted[k - 1])
}

/// `A_n^k`: zero for the `K_n` initial customers, otherwise the
/// `(k − K_n)`th real arrival. `real_arrival` takes a 1-based index.
pub fn compose_arrivals<F>(real_arrival: F, initial_customers: usize, k: usize) -> Result<Tangent>
where
    F: Fn(usize) -> Option<Tangent>,
{
    if k <= initial_customers {
        return Ok(Tangent::ZERO);
    }
    real_arrival(k - initial_customers).ok_or(Error::MissingArrival { node: 0, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn values(ts: &[Tangent]) -> Vec<f64> {
        ts.iter().map(|t| t.value).collect()
    }

    fn consts(xs: &[f64]) -> Vec<Tangent> {
        xs.iter().map(|&x| Tangent::constant(x)).collect()
    }

    #[test]
    fn gg1_examples() {
        let d = gg1_departures(&consts(&[0.0, 0.0, 0.0]), &consts(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(values(&d), vec![1.0, 2.0, 3.0]);
        let d = gg1_departures(&consts(&[0.0, 5.0]), &consts(&[1.0, 1.0])).unwrap();
        assert_eq!(values(&d), vec![1.0, 6.0]);
        let c = gg1_closed_form(&consts(&[0.0, 5.0]), &consts(&[1.0, 1.0])).unwrap();
        assert_eq!(values(&c), vec![1.0, 6.0]);
        let c = gg1_closed_form(&consts(&[0.0, 0.0, 0.0]), &consts(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(values(&c), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn gg1_tangents_hand_propagated() {
        let a = [Tangent::ZERO, Tangent::ZERO];
        let tau = [Tangent::new(1.0, 1.0), Tangent::new(1.0, 0.0)];
        let d = gg1_departures(&a, &tau).unwrap();
        assert_eq!(d, vec![Tangent::new(1.0, 1.0), Tangent::new(2.0, 1.0)]);

        // oracle: central difference with τ¹ = 1 + θ, τ² = 1 around θ = 0
        let h = 1e-6;
        let run = |theta: f64| {
            gg1_departures(&consts(&[0.0, 0.0]), &consts(&[1.0 + theta, 1.0])).unwrap()
        };
        let (up, down) = (run(h), run(-h));
        for k in 0..2 {
            let fd = (up[k].value - down[k].value) / (2.0 * h);
            assert!((fd - d[k].deriv).abs() < 1e-8);
        }
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            gg1_departures(&consts(&[0.0, 1.0]), &consts(&[1.0])),
            Err(Error::LengthMismatch { arrivals: 2, services: 1 })
        );
        assert!(gg2_departures(&consts(&[0.0, 1.0]), &consts(&[1.0])).is_err());
    }

    #[test]
    fn gg2_examples() {
        let d = gg2_departures(&consts(&[0.0, 0.0]), &consts(&[5.0, 1.0])).unwrap();
        assert_eq!(values(&d), vec![1.0, 5.0]);
        let d = gg2_departures(&consts(&[0.0, 0.0, 0.0]), &consts(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(values(&d), vec![1.0, 1.0, 2.0]);
        let d = gg2_departures(&consts(&[0.0]), &consts(&[7.0])).unwrap();
        assert_eq!(values(&d), vec![7.0]);
    }

    #[test]
    fn order_statistics() {
        let m = consts(&[3.0, 1.0, 2.0]);
        assert_eq!(kth_arrival_from_departures(&m, 1).unwrap().value, 1.0);
        assert_eq!(kth_arrival_from_departures(&m, 2).unwrap().value, 2.0);
        assert_eq!(kth_arrival_from_departures(&m, 3).unwrap().value, 3.0);
        assert_eq!(kth_arrival_from_departures(&m, 4), Err(Error::KTooLarge { k: 4, len: 3 }));
        // ties keep insertion order
        let tied = [Tangent::new(1.0, 7.0), Tangent::new(1.0, 9.0)];
        assert_eq!(kth_arrival_from_departures(&tied, 1).unwrap().deriv, 7.0);
        assert_eq!(kth_arrival_from_departures(&tied, 2).unwrap().deriv, 9.0);
    }

    #[test]
    fn arrival_composition() {
        let real = |k: usize| if k == 1 { Some(Tangent::new(4.5, 1.0)) } else { None };
        assert_eq!(compose_arrivals(real, 2, 1).unwrap(), Tangent::ZERO);
        assert_eq!(compose_arrivals(real, 2, 3).unwrap(), Tangent::new(4.5, 1.0));
        assert!(matches!(compose_arrivals(real, 2, 4), Err(Error::MissingArrival { .. })));
        let real = |k: usize| if k == 1 { Some(Tangent::new(2.0, 0.0)) } else { None };
        assert_eq!(compose_arrivals(real, 0, 1).unwrap(), Tangent::new(2.0, 0.0));
    }
}
