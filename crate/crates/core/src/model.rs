//! Aggregate and environment description.
//!
//! Energies are in units of a reference vibrational quantum, times in its
//! inverse, with `hbar = 1`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cre, Real, C};

pub type Vec3<T> = [T; 3];

fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Reference frequency that fixes the energy and time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem<T> {
    reference_frequency: T,
}

impl<T: Real> UnitSystem<T> {
    pub fn new(reference_frequency: T) -> Result<Self> {
        if !(reference_frequency > T::zero()) || !reference_frequency.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "reference frequency must be positive, got {reference_frequency}"
            )));
        }
        Ok(Self {
            reference_frequency,
        })
    }

    pub fn reference_frequency(&self) -> T {
        self.reference_frequency
    }

    /// Angular frequency (or energy with `hbar = 1`) expressed in reference units.
    pub fn to_reduced(&self, value: T) -> T {
        value / self.reference_frequency
    }

    pub fn from_reduced(&self, value: T) -> T {
        value * self.reference_frequency
    }

    pub fn time_to_reduced(&self, time: T) -> T {
        time * self.reference_frequency
    }
}

/// Open chain of monomers with nearest-neighbour coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateSpec<T> {
    epsilon: Vec<T>,
    coupling_v: T,
    dipoles: Vec<Vec3<T>>,
    polarization: Vec3<T>,
}

impl<T: Real> AggregateSpec<T> {
    pub fn new(
        epsilon: Vec<T>,
        coupling_v: T,
        dipoles: Vec<Vec3<T>>,
        polarization: Vec3<T>,
    ) -> Result<Self> {
        if epsilon.is_empty() {
            return Err(Error::EmptyAggregate);
        }
        if dipoles.len() != epsilon.len() {
            return Err(Error::InvalidAggregate(format!(
                "{} transition dipoles for {} monomers",
                dipoles.len(),
                epsilon.len()
            )));
        }
        let all_finite = epsilon.iter().all(|e| e.is_finite())
            && coupling_v.is_finite()
            && dipoles.iter().flatten().all(|d| d.is_finite())
            && polarization.iter().all(|p| p.is_finite());
        if !all_finite {
            return Err(Error::InvalidAggregate("non-finite parameter".into()));
        }
        if dot(&polarization, &polarization) == T::zero() {
            return Err(Error::InvalidAggregate("polarization has zero norm".into()));
        }
        let agg = Self {
            epsilon,
            coupling_v,
            dipoles,
            polarization,
        };
        if agg.mu_tot_sq() == T::zero() {
            return Err(Error::DarkInitialState);
        }
        Ok(agg)
    }

    /// Identical unit dipoles all parallel to the polarization.
    pub fn equal_parallel(epsilon: Vec<T>, coupling_v: T) -> Result<Self> {
        let unit = [T::one(), T::zero(), T::zero()];
        let dipoles = vec![unit; epsilon.len()];
        Self::new(epsilon, coupling_v, dipoles, unit)
    }

    /// Chain of `n` identical monomers at transition energy `epsilon`.
    pub fn homogeneous(n: usize, epsilon: T, coupling_v: T) -> Result<Self> {
        Self::equal_parallel(vec![epsilon; n], coupling_v)
    }

    pub fn with_coupling(&self, coupling_v: T) -> Self {
        Self {
            coupling_v,
            ..self.clone()
        }
    }

    pub fn n_monomers(&self) -> usize {
        self.epsilon.len()
    }

    pub fn epsilon(&self) -> &[T] {
        &self.epsilon
    }

    pub fn coupling_v(&self) -> T {
        self.coupling_v
    }

    pub fn dipoles(&self) -> &[Vec3<T>] {
        &self.dipoles
    }

    pub fn polarization(&self) -> Vec3<T> {
        self.polarization
    }

    /// `mu_n . E` for every monomer.
    pub fn projected_dipoles(&self) -> Vec<T> {
        self.dipoles
            .iter()
            .map(|d| dot(d, &self.polarization))
            .collect()
    }

    /// `sum_n |mu_n . E|^2`
    pub fn mu_tot_sq(&self) -> T {
        self.projected_dipoles()
            .iter()
            .fold(T::zero(), |acc, &p| acc + p * p)
    }
}

/// `H_sys`: site energies on the diagonal, `V` between chain neighbours.
pub fn build_system_hamiltonian<T: Real>(agg: &AggregateSpec<T>) -> CMatrix<T> {
    let n = agg.n_monomers();
    CMatrix::from_fn(n, |i, j| {
        if i == j {
            cre(agg.epsilon[i])
        } else if i.abs_diff(j) == 1 {
            cre(agg.coupling_v)
        } else {
            cre(T::zero())
        }
    })
}

/// Normalized electronic state created by the dipole operator, plus `mu_tot`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightState<T> {
    pub psi0: Vec<C<T>>,
    pub mu_tot: T,
    mu_tot_sq: T,
}

impl<T: Real> BrightState<T> {
    /// `sum_n |mu_n . E|^2`, summed directly rather than squared from `mu_tot`.
    pub fn mu_tot_sq(&self) -> T {
        self.mu_tot_sq
    }
}

pub fn initial_bright_state<T: Real>(agg: &AggregateSpec<T>) -> Result<BrightState<T>> {
    let projected = agg.projected_dipoles();
    let mu_tot_sq = agg.mu_tot_sq();
    let mu_tot = mu_tot_sq.sqrt();
    if !(mu_tot > T::zero()) {
        return Err(Error::DarkInitialState);
    }
    Ok(BrightState {
        psi0: projected.iter().map(|&p| cre(p / mu_tot)).collect(),
        mu_tot,
        mu_tot_sq,
    })
}

/// One Lorentzian of the spectral density, i.e. one exponential of the
/// bath correlation function: `gamma_amp * exp(-(i center + width) tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathTerm<T> {
    pub gamma_amp: T,
    pub center: T,
    pub width: T,
}

impl<T: Real> BathTerm<T> {
    pub fn new(gamma_amp: T, center: T, width: T) -> Self {
        Self {
            gamma_amp,
            center,
            width,
        }
    }

    /// Term from a Huang-Rhys factor `X = gamma_amp / center^2`.
    pub fn from_huang_rhys(x: T, center: T, width: T) -> Self {
        Self::new(huang_rhys_to_gamma(x, center), center, width)
    }

    pub fn huang_rhys(&self) -> T {
        gamma_to_huang_rhys(self.gamma_amp, self.center)
    }

    /// `i center + width`, the decay exponent of the correlation term.
    pub fn exponent(&self) -> C<T> {
        Complex::new(self.width, self.center)
    }

    fn validate(&self, monomer: usize, term: usize) -> Result<()> {
        let reason =
            if !(self.gamma_amp.is_finite() && self.center.is_finite() && self.width.is_finite()) {
                Some("non-finite parameter")
            } else if self.gamma_amp < T::zero() {
                Some("coupling strength must be non-negative")
            } else if self.center < T::zero() {
                Some("center frequency must be non-negative")
            } else if self.width < T::zero() {
                Some("width must be non-negative")
            } else {
                None
            };
        match reason {
            Some(reason) => Err(Error::InvalidBathTerm {
                monomer,
                term,
                reason,
            }),
            None => Ok(()),
        }
    }
}

/// Per-monomer lists of Lorentzian terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzianBath<T> {
    terms: Vec<Vec<BathTerm<T>>>,
}

impl<T: Real> LorentzianBath<T> {
    pub fn per_monomer(terms: Vec<Vec<BathTerm<T>>>) -> Result<Self> {
        for (n, list) in terms.iter().enumerate() {
            for (j, term) in list.iter().enumerate() {
                term.validate(n, j)?;
            }
        }
        Ok(Self { terms })
    }

    /// The same term list replicated on `n_monomers` monomers.
    pub fn uniform(n_monomers: usize, terms: &[BathTerm<T>]) -> Result<Self> {
        Self::per_monomer(vec![terms.to_vec(); n_monomers])
    }

    pub fn n_monomers(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self, monomer: usize) -> &[BathTerm<T>] {
        &self.terms[monomer]
    }

    pub fn all_terms(&self) -> impl Iterator<Item = (usize, &BathTerm<T>)> {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(n, list)| list.iter().map(move |t| (n, t)))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.iter().map(Vec::len).sum()
    }

    pub fn modes_per_monomer(&self) -> Vec<usize> {
        self.terms.iter().map(Vec::len).collect()
    }

    /// `alpha_n(0) = sum_j Gamma_nj`
    pub fn total_coupling(&self, monomer: usize) -> T {
        self.terms[monomer]
            .iter()
            .fold(T::zero(), |acc, t| acc + t.gamma_amp)
    }

    pub fn max_huang_rhys(&self) -> T {
        self.all_terms()
            .filter(|(_, t)| t.center > T::zero())
            .map(|(_, t)| t.huang_rhys())
            .fold(T::zero(), T::max)
    }

    pub fn check_matches(&self, agg: &AggregateSpec<T>) -> Result<()> {
        if self.n_monomers() != agg.n_monomers() {
            return Err(Error::BathSizeMismatch {
                expected: agg.n_monomers(),
                found: self.n_monomers(),
            });
        }
        Ok(())
    }
}

/// `alpha_n(tau) = sum_j Gamma_nj exp(-i Omega_nj tau - gamma_nj tau)` for `tau >= 0`.
pub fn bath_correlation<T: Real>(bath: &LorentzianBath<T>, monomer: usize, tau: T) -> Result<C<T>> {
    if tau < T::zero() {
        return Err(Error::NegativeTime(tau.as_f64()));
    }
    Ok(bath.terms(monomer).iter().fold(cre(T::zero()), |acc, t| {
        acc + (-t.exponent() * tau).exp() * t.gamma_amp
    }))
}

/// `J_n(omega) = (1/pi) sum_j Gamma_nj gamma_nj / ((omega - Omega_nj)^2 + gamma_nj^2)`.
pub fn spectral_density<T: Real>(bath: &LorentzianBath<T>, monomer: usize, omega: T) -> T {
    bath.terms(monomer).iter().fold(T::zero(), |acc, t| {
        let d = omega - t.center;
        acc + t.gamma_amp * t.width / (d * d + t.width * t.width)
    }) / T::PI()
}

/// `Gamma = X Omega^2`
pub fn huang_rhys_to_gamma<T: Real>(x: T, omega: T) -> T {
    x * omega * omega
}

/// `X = Gamma / Omega^2`
pub fn gamma_to_huang_rhys<T: Real>(gamma_amp: T, omega: T) -> T {
    gamma_amp / (omega * omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(gamma_amp: f64, center: f64, width: f64) -> LorentzianBath<f64> {
        LorentzianBath::uniform(1, &[BathTerm::new(gamma_amp, center, width)]).unwrap()
    }

    fn fig4_bath() -> LorentzianBath<f64> {
        let centers = [0.23, 0.42, 0.57, 1.29, 1.41, 1.61];
        let x = [0.4, 0.07, 0.18, 0.24, 0.12, 0.24];
        let terms: Vec<_> = centers
            .iter()
            .zip(&x)
            .map(|(&c, &x)| BathTerm::from_huang_rhys(x, c, 0.25 * c))
            .collect();
        LorentzianBath::uniform(1, &terms).unwrap()
    }

    #[test]
    fn monomer_hamiltonian() {
        let agg = AggregateSpec::homogeneous(1, 0.3, 0.0).unwrap();
        let h = build_system_hamiltonian(&agg);
        assert_eq!(h.dim(), 1);
        assert_eq!(h[(0, 0)], cre(0.3));
    }

    #[test]
    fn dimer_hamiltonian() {
        let agg = AggregateSpec::homogeneous(2, 0.0, -1.5).unwrap();
        let h = build_system_hamiltonian(&agg);
        assert_eq!(h[(0, 0)], cre(0.0));
        assert_eq!(h[(0, 1)], cre(-1.5));
        assert_eq!(h[(1, 0)], cre(-1.5));
        assert_eq!(h, h.adjoint());
    }

    #[test]
    fn trimer_is_open_chain() {
        let agg = AggregateSpec::homogeneous(3, 0.0, 0.44).unwrap();
        let h = build_system_hamiltonian(&agg);
        assert_eq!(h[(0, 1)], cre(0.44));
        assert_eq!(h[(1, 2)], cre(0.44));
        assert_eq!(h[(0, 2)], cre(0.0));
        assert_eq!(h[(2, 0)], cre(0.0));
    }

    #[test]
    fn bright_state_of_equal_parallel_dipoles() {
        let dimer =
            AggregateSpec::new(vec![0.0; 2], 0.0, vec![[0.0, 2.0, 0.0]; 2], [0.0, 1.0, 0.0])
                .unwrap();
        let b = initial_bright_state(&dimer).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((b.psi0[0].re - s).abs() < 1e-15 && (b.psi0[1].re - s).abs() < 1e-15);
        assert!((b.mu_tot - 2f64.sqrt() * 2.0).abs() < 1e-14);

        let mono =
            AggregateSpec::new(vec![0.0], 0.0, vec![[3.0, 1.0, 0.0]], [1.0, 0.0, 0.0]).unwrap();
        let b = initial_bright_state(&mono).unwrap();
        assert_eq!(b.psi0, vec![cre(1.0)]);
        assert_eq!(b.mu_tot, 3.0);

        let trimer = AggregateSpec::homogeneous(3, 0.0, 1.0).unwrap();
        let b = initial_bright_state(&trimer).unwrap();
        for z in &b.psi0 {
            assert!((z.re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn dark_and_degenerate_aggregates_are_rejected() {
        let dark = AggregateSpec::new(vec![0.0; 2], 0.0, vec![[0.0, 1.0, 0.0]; 2], [1.0, 0.0, 0.0]);
        assert_eq!(dark, Err(Error::DarkInitialState));
        assert_eq!(
            AggregateSpec::<f64>::homogeneous(0, 0.0, 0.0),
            Err(Error::EmptyAggregate)
        );
        let no_pol = AggregateSpec::new(vec![0.0], 0.0, vec![[1.0, 0.0, 0.0]], [0.0; 3]);
        assert!(matches!(no_pol, Err(Error::InvalidAggregate(_))));
    }

    #[test]
    fn correlation_at_zero_is_total_coupling() {
        let bath = fig4_bath();
        let a0 = bath_correlation(&bath, 0, 0.0).unwrap();
        assert_eq!(a0.im, 0.0);
        assert!((a0.re - bath.total_coupling(0)).abs() < 1e-15);
    }

    #[test]
    fn correlation_single_term_at_pi() {
        // 0.64 e^{-0.25 pi} (cos pi - i sin pi), evaluated independently
        let bath = single(0.64, 1.0, 0.25);
        let got = bath_correlation(&bath, 0, PI).unwrap();
        let mag = 0.64 * (-0.25 * PI).exp();
        assert!((got.re - mag * PI.cos()).abs() < 1e-15);
        assert!((got.im + mag * PI.sin()).abs() < 1e-15);
    }

    #[test]
    fn conjugate_pair_gives_real_correlation() {
        // A negative center is not a valid physical term, so build the pair by hand.
        let a = BathTerm::new(0.3, 0.8, 0.1);
        let b = BathTerm { center: -0.8, ..a };
        let bath = LorentzianBath {
            terms: vec![vec![a, b]],
        };
        for k in 0..50 {
            let tau = 0.37 * k as f64;
            assert!(bath_correlation(&bath, 0, tau).unwrap().im.abs() < 1e-15);
        }
    }

    #[test]
    fn negative_time_is_an_error() {
        assert!(matches!(
            bath_correlation(&single(1.0, 1.0, 0.1), 0, -1.0),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn spectral_density_peak_and_half_width() {
        let bath = single(0.64, 1.0, 0.25);
        let peak = spectral_density(&bath, 0, 1.0);
        assert!((peak - 0.64 / (PI * 0.25)).abs() < 1e-15);
        assert!((spectral_density(&bath, 0, 1.25) - peak / 2.0).abs() < 1e-14);
        assert!((spectral_density(&bath, 0, 0.75) - peak / 2.0).abs() < 1e-14);
    }

    #[test]
    fn six_term_density_is_dominated_by_lowest_mode_at_its_center() {
        let bath = fig4_bath();
        let total = spectral_density(&bath, 0, 0.23);
        let first = bath.terms(0)[0];
        let own = first.gamma_amp / (PI * first.width);
        // closed-form sum of the six Lorentzians at omega = 0.23
        let expected: f64 = bath
            .terms(0)
            .iter()
            .map(|t| t.gamma_amp * t.width / ((0.23 - t.center).powi(2) + t.width.powi(2)) / PI)
            .sum();
        assert!((total - expected).abs() < 1e-14);
        for t in &bath.terms(0)[1..] {
            let d = 0.23 - t.center;
            assert!(own > t.gamma_amp * t.width / (d * d + t.width * t.width) / PI);
        }
        assert!(own / total > 0.45, "first term contributes {}", own / total);
    }

    #[test]
    fn huang_rhys_conversion() {
        assert_eq!(huang_rhys_to_gamma(0.64, 1.0), 0.64);
        assert_eq!(huang_rhys_to_gamma(1.2, 1.0), 1.2);
        assert_eq!(huang_rhys_to_gamma(0.0, 3.3), 0.0);
        assert!(
            (gamma_to_huang_rhys(huang_rhys_to_gamma(0.18f64, 0.57), 0.57) - 0.18).abs() < 1e-16
        );
    }

    #[test]
    fn invalid_terms_are_rejected() {
        assert!(LorentzianBath::uniform(1, &[BathTerm::new(-1.0, 1.0, 0.1)]).is_err());
        assert!(LorentzianBath::uniform(1, &[BathTerm::new(1.0, 1.0, -0.1)]).is_err());
        assert!(LorentzianBath::uniform(1, &[BathTerm::new(1.0, f64::NAN, 0.1)]).is_err());
    }

    #[test]
    fn unit_system_round_trip() {
        let u = UnitSystem::new(1200.0).unwrap();
        assert_eq!(u.to_reduced(600.0), 0.5);
        assert_eq!(u.from_reduced(0.5), 600.0);
        assert!(UnitSystem::new(0.0).is_err());
    }
}
