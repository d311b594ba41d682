//! Mean-field (n → ∞) stationary occupancy under power-of-d routing.
//!
//! The fraction of servers holding at least `i` jobs is
//! `rho^((d^i - 1) / (d - 1))` for `d >= 2` and `rho^i` for `d = 1`, with
//! `rho = lambda / mu`.

use crate::distribution::LoadDistribution;
use crate::error::{Error, Result};

fn check(lambda: f64, mu: f64, d: u32) -> Result<f64> {
    if !(lambda >= 0.0 && mu > 0.0 && lambda < mu && lambda.is_finite() && mu.is_finite()) || d == 0 {
        return Err(Error::InvalidRate { lambda, mu });
    }
    Ok(lambda / mu)
}

fn tail_at(rho: f64, d: u32, i: u32) -> f64 {
    if i == 0 {
        return 1.0;
    }
    if rho == 0.0 {
        return 0.0;
    }
    let exponent = if d == 1 {
        i as f64
    } else {
        let d = d as f64;
        (d.powi(i as i32) - 1.0) / (d - 1.0)
    };
    rho.powf(exponent)
}

/// `P(Q >= i)` in the mean-field limit.
pub fn tail(lambda: f64, mu: f64, d: u32, i: u32) -> Result<f64> {
    Ok(tail_at(check(lambda, mu, d)?, d, i))
}

/// Mean-field occupancy PDF on `0..=support_cap`; the mass beyond the cap is
/// folded into the last bin.
pub fn mean_field_pot_pdf(lambda: f64, mu: f64, d: u32, support_cap: usize) -> Result<LoadDistribution> {
    let rho = check(lambda, mu, d)?;
    let cap = support_cap as u32;
    let mut pdf: Vec<f64> = (0..cap)
        .map(|i| tail_at(rho, d, i) - tail_at(rho, d, i + 1))
        .collect();
    pdf.push(tail_at(rho, d, cap));
    LoadDistribution::from_weights(&pdf)
}

/// `E[Q] = sum_{i >= 1} P(Q >= i)`.
pub fn mean_queue_length(lambda: f64, mu: f64, d: u32) -> Result<f64> {
    let rho = check(lambda, mu, d)?;
    let mut sum = 0.0;
    for i in 1.. {
        let t = tail_at(rho, d, i);
        sum += t;
        if t < 1e-17 * sum.max(1.0) || i > 1_000_000 {
            break;
        }
    }
    Ok(sum)
}

/// Mean time in system, `E[Q] / lambda` by Little's law.
pub fn mean_sojourn(lambda: f64, mu: f64, d: u32) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::InvalidRate { lambda, mu });
    }
    Ok(mean_queue_length(lambda, mu, d)? / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubly_exponential_tail() {
        assert!((tail(0.95, 1.0, 2, 1).unwrap() - 0.95).abs() < 1e-15);
        assert!((tail(0.95, 1.0, 2, 2).unwrap() - 0.857375).abs() < 1e-12);
        assert!((tail(0.95, 1.0, 2, 3).unwrap() - 0.698_337_296_9).abs() < 1e-9);
    }

    #[test]
    fn single_choice_is_geometric() {
        for i in 0..20 {
            assert!((tail(0.6, 1.0, 1, i).unwrap() - 0.6f64.powi(i as i32)).abs() < 1e-14);
        }
        // M/M/1: E[T] = 1 / (mu - lambda)
        assert!((mean_sojourn(0.5, 1.0, 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn idle_system() {
        assert_eq!(mean_field_pot_pdf(0.0, 1.0, 2, 10).unwrap().fractions(), &[1.0]);
    }

    #[test]
    fn pdf_normalised_with_folded_tail() {
        let pdf = mean_field_pot_pdf(0.95, 1.0, 1, 5).unwrap();
        assert!((pdf.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((pdf.get(5) - 0.95f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn pot_mean_sojourn_at_high_load() {
        // 0.95 + 0.95^3 + 0.95^7 + 0.95^15 + ...
        let q: f64 = (1..40).map(|i| 0.95f64.powf(((1u64 << i) - 1) as f64)).sum();
        assert!((mean_queue_length(0.95, 1.0, 2).unwrap() - q).abs() < 1e-12);
        assert!((q - 3.214).abs() < 1e-3);
        assert!((mean_sojourn(0.95, 1.0, 2).unwrap() - 3.383).abs() < 1e-3);
    }

    #[test]
    fn rejects_unstable_rates() {
        assert!(matches!(mean_field_pot_pdf(1.0, 1.0, 2, 10), Err(Error::InvalidRate { .. })));
        assert!(mean_field_pot_pdf(-0.1, 1.0, 2, 10).is_err());
    }
}
