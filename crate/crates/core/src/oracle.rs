//! Closed-form reference traces for the limits where the answer is known.

use num_complex::Complex;

use crate::error::Result;
use crate::linalg::CMatrix;
use crate::model::{build_system_hamiltonian, initial_bright_state, AggregateSpec, BathTerm};
use crate::propagation::TimeGrid;
use crate::scalar::{cre, inner, Real, C};
use crate::spectra::CorrelationTrace;

/// `(e^{-w} - 1 + w) / w^2`, with a series near `w = 0`.
fn second_order_phi<T: Real>(w: C<T>) -> C<T> {
    if w.norm() < T::lit(0.05) {
        // sum_{k>=0} (-w)^k / (k+2)!
        let mut term = cre(T::lit(0.5));
        let mut sum = term;
        for k in 1..12usize {
            term = -term * w / T::from_usize_lossy(k + 2);
            sum = sum + term;
        }
        sum
    } else {
        ((-w).exp() - cre(T::one()) + w) / (w * w)
    }
}

/// Line-shape exponent `g(t) = sum_j Gamma_j (e^{-z_j t} - 1 + z_j t) / z_j^2`, `z_j = i Omega_j + gamma_j`.
pub fn lineshape_function<T: Real>(terms: &[BathTerm<T>], t: T) -> C<T> {
    terms.iter().fold(cre(T::zero()), |acc, term| {
        let w = term.exponent() * t;
        acc + second_order_phi(w) * (term.gamma_amp * t * t)
    })
}

/// Independent-boson monomer `M(t) = mu^2 exp(-i eps t - g(t))`; exact for
/// a single monomer with a sum-of-exponentials bath.
pub fn cumulant_oracle<T: Real>(
    terms: &[BathTerm<T>],
    epsilon: T,
    mu_sq: T,
    grid: TimeGrid<T>,
) -> Result<CorrelationTrace<T>> {
    let samples = (0..grid.len)
        .map(|k| {
            let t = grid.time(k);
            let exponent = Complex::new(T::zero(), -epsilon * t) - lineshape_function(terms, t);
            exponent.exp() * mu_sq
        })
        .collect();
    CorrelationTrace::new(grid.step, samples, mu_sq)
}

/// Markov-bath aggregate `M(t) = mu_tot^2 <psi0| exp[(-i H_sys - sum_n theta_n L_n^dag L_n) t] |psi0>`.
pub fn markov_oracle<T: Real>(
    agg: &AggregateSpec<T>,
    theta: &[T],
    grid: TimeGrid<T>,
) -> Result<CorrelationTrace<T>> {
    let n = agg.n_monomers();
    if theta.len() != n {
        return Err(crate::Error::DimensionMismatch {
            expected: n,
            found: theta.len(),
        });
    }
    let bright = initial_bright_state(agg)?;
    let h = build_system_hamiltonian(agg);
    // L_n^dag L_n = |pi_n><pi_n| for either sign of L_n.
    let generator = CMatrix::from_fn(n, |i, j| {
        let z = Complex::new(T::zero(), -T::one()) * h[(i, j)];
        if i == j {
            z - cre(theta[i])
        } else {
            z
        }
    });
    let step = generator.scale(cre(grid.step)).expm();
    let mu_sq = bright.mu_tot_sq();
    let mut psi = bright.psi0.clone();
    let mut samples = Vec::with_capacity(grid.len);
    for k in 0..grid.len {
        if k == 0 {
            samples.push(cre(mu_sq));
        } else {
            psi = step.mul_vec(&psi);
            samples.push(inner(&bright.psi0, &psi) * mu_sq);
        }
    }
    CorrelationTrace::new(grid.step, samples, mu_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AggregateSpec;

    fn grid(step: f64, len: usize) -> TimeGrid<f64> {
        TimeGrid { step, len }
    }

    #[test]
    fn uncoupled_monomer_is_a_pure_phase() {
        let terms = [BathTerm::new(0.0, 1.0, 0.25)];
        let trace = cumulant_oracle(&terms, 0.4, 2.0, grid(0.1, 200)).unwrap();
        for (k, m) in trace.samples().iter().enumerate() {
            let t = 0.1 * k as f64;
            assert!((m - Complex::new(0.0, -0.4 * t).exp() * 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn short_time_expansion() {
        // M(t) = mu^2 (1 - i eps t - (eps^2 + alpha0) t^2 / 2 + O(t^3))
        let terms = [BathTerm::new(0.64, 1.0, 0.25), BathTerm::new(0.2, 0.3, 0.1)];
        let (eps, alpha0) = (0.3, 0.84);
        for &t in &[1e-3, 2e-3, 4e-3] {
            let m = cumulant_oracle(&terms, eps, 1.0, grid(t, 2))
                .unwrap()
                .samples()[1];
            let approx = Complex::new(1.0 - (eps * eps + alpha0) * t * t / 2.0, -eps * t);
            assert!((m - approx).norm() < 2.0 * t * t * t, "t = {t}");
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switchover() {
        for w in [
            Complex::new(0.049, 0.0),
            Complex::new(0.0, 0.049),
            Complex::new(0.03, -0.03),
        ] {
            let series = second_order_phi(w);
            let closed = ((-w).exp() - 1.0 + w) / (w * w);
            assert!((series - closed).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_exponent_uses_quadratic_limit() {
        let terms = [BathTerm::new(0.5, 0.0, 0.0)];
        let g = lineshape_function(&terms, 2.0);
        assert!((g - Complex::new(0.5 * 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn markov_monomer() {
        let agg = AggregateSpec::homogeneous(1, 0.5, 0.0).unwrap();
        let trace = markov_oracle(&agg, &[0.2], grid(0.05, 400)).unwrap();
        for (k, m) in trace.samples().iter().enumerate() {
            let t = 0.05 * k as f64;
            assert!((m - (Complex::new(-0.2, -0.5) * t).exp()).norm() < 1e-11);
        }
    }

    #[test]
    fn equal_markov_rates_factor_out() {
        let agg = AggregateSpec::homogeneous(3, 0.0, 0.8).unwrap();
        let damped = markov_oracle(&agg, &[0.3; 3], grid(0.1, 300)).unwrap();
        let free = markov_oracle(&agg, &[0.0; 3], grid(0.1, 300)).unwrap();
        for (k, (a, b)) in damped.samples().iter().zip(free.samples()).enumerate() {
            let t = 0.1 * k as f64;
            assert!((a - b * (-0.3 * t).exp()).norm() < 1e-11);
        }
    }
}
