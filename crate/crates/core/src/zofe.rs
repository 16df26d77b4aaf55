//! NMQSD propagation at vanishing noise under the zeroth-order functional
//! expansion.
//!
//! The memory integral `O_bar^(n)(t) = int_0^t ds alpha_n(t-s) O_0^(n)(t,s)`
//! is split into one auxiliary operator per exponential term,
//! `Q^(n,j)(t) = int_0^t ds Gamma_nj e^{-(i Omega_nj + gamma_nj)(t-s)} O_0^(n)(t,s)`,
//! which obeys the closed equation
//!
//! ```text
//! dQ/dt = Gamma_nj L_n - (i Omega_nj + gamma_nj) Q + [A(t), Q]
//! A(t)  = -i H_sys - sum_m L_m^dag O_bar^(m)(t)
//! ```
//!
//! and the electronic state follows `d psi/dt = A(t) psi`.

use crate::error::{Error, Result};
use crate::linalg::{matmul_into, matvec_into, CMatrix};
use crate::model::{build_system_hamiltonian, initial_bright_state, AggregateSpec, LorentzianBath};
use crate::propagation::{norm_limit_sq, ComplexOde, PropagationConfig, Rk4};
use crate::scalar::{cre, czero, inner, minus_i, norm_sqr, Real, C};
use crate::spectra::CorrelationTrace;

/// Sign convention of the site operators `L_n = sign |pi_n><pi_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingSign {
    /// `L_n = -|pi_n><pi_n|`, from a coupling `-kappa (a + a^dag)` on the excited state.
    #[default]
    Negative,
    Positive,
}

impl CouplingSign {
    pub fn value<T: Real>(self) -> T {
        match self {
            CouplingSign::Negative => -T::one(),
            CouplingSign::Positive => T::one(),
        }
    }
}

/// `L_n = sign |pi_site><pi_site|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteCoupling<T> {
    pub site: usize,
    pub sign: T,
}

pub fn site_couplings<T: Real>(n_monomers: usize, sign: CouplingSign) -> Vec<SiteCoupling<T>> {
    (0..n_monomers)
        .map(|site| SiteCoupling {
            site,
            sign: sign.value(),
        })
        .collect()
}

/// Electronic state at `z* = 0` with one auxiliary operator per `(monomer, term)`,
/// ordered monomer-major as in [`LorentzianBath::all_terms`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZofeState<T> {
    pub psi: Vec<C<T>>,
    pub aux: Vec<CMatrix<T>>,
    pub t: T,
}

impl<T: Real> ZofeState<T> {
    pub fn initial(psi0: Vec<C<T>>, n_terms: usize) -> Self {
        let n = psi0.len();
        Self {
            psi: psi0,
            aux: vec![CMatrix::zeros(n); n_terms],
            t: T::zero(),
        }
    }

    fn pack(&self) -> Vec<C<T>> {
        let mut y = self.psi.clone();
        for q in &self.aux {
            y.extend_from_slice(q.as_slice());
        }
        y
    }
}

/// Time derivative of a [`ZofeState`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZofeRate<T> {
    pub psi: Vec<C<T>>,
    pub aux: Vec<CMatrix<T>>,
}

struct TermData<T> {
    site: usize,
    gamma_amp: T,
    exponent: C<T>,
}

/// Flat-state right-hand side shared by [`zofe_rhs`] and the propagator.
struct ZofeSystem<T> {
    n: usize,
    minus_i_h: Vec<C<T>>,
    /// Sign of `L_n` indexed by site; zero where no coupling was given.
    signs: Vec<T>,
    terms: Vec<TermData<T>>,
    qbar: Vec<C<T>>,
    a: Vec<C<T>>,
    left: Vec<C<T>>,
    right: Vec<C<T>>,
}

impl<T: Real> ZofeSystem<T> {
    fn new(
        h_sys: &CMatrix<T>,
        bath: &LorentzianBath<T>,
        couplings: &[SiteCoupling<T>],
    ) -> Result<Self> {
        let n = h_sys.dim();
        if bath.n_monomers() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bath.n_monomers(),
            });
        }
        let mut signs = vec![T::zero(); n];
        for c in couplings {
            if c.site >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.site + 1,
                });
            }
            signs[c.site] = c.sign;
        }
        let terms = bath
            .all_terms()
            .map(|(site, t)| TermData {
                site,
                gamma_amp: t.gamma_amp,
                exponent: t.exponent(),
            })
            .collect();
        Ok(Self {
            n,
            minus_i_h: h_sys.as_slice().iter().map(|&z| minus_i(z)).collect(),
            signs,
            terms,
            qbar: vec![czero(); n * n * n],
            a: vec![czero(); n * n],
            left: vec![czero(); n * n],
            right: vec![czero(); n * n],
        })
    }

    fn state_dim(&self) -> usize {
        self.n + self.terms.len() * self.n * self.n
    }
}

impl<T: Real> ComplexOde<T> for ZofeSystem<T> {
    fn dim(&self) -> usize {
        self.state_dim()
    }

    fn derivative(&mut self, y: &[C<T>], dy: &mut [C<T>]) {
        let n = self.n;
        let nn = n * n;
        let (psi, aux) = y.split_at(n);
        let (dpsi, daux) = dy.split_at_mut(n);

        // O_bar^(m) = sum_j Q^(m,j), stored per site
        self.qbar.iter_mut().for_each(|z| *z = czero());
        for (k, term) in self.terms.iter().enumerate() {
            let q = &aux[k * nn..(k + 1) * nn];
            let target = &mut self.qbar[term.site * nn..(term.site + 1) * nn];
            for (t, v) in target.iter_mut().zip(q) {
                *t = *t + v;
            }
        }

        // A = -iH - sum_m L_m^dag O_bar^(m); L_m^dag = sign_m P_m touches only row m.
        self.a.copy_from_slice(&self.minus_i_h);
        for m in 0..n {
            let sign = self.signs[m];
            if sign == T::zero() {
                continue;
            }
            let qrow = &self.qbar[m * nn + m * n..m * nn + (m + 1) * n];
            for (a, q) in self.a[m * n..(m + 1) * n].iter_mut().zip(qrow) {
                *a = *a - q * sign;
            }
        }

        matvec_into(n, &self.a, psi, dpsi);

        for (k, term) in self.terms.iter().enumerate() {
            let q = &aux[k * nn..(k + 1) * nn];
            let dq = &mut daux[k * nn..(k + 1) * nn];
            matmul_into(n, &self.a, q, &mut self.left);
            matmul_into(n, q, &self.a, &mut self.right);
            for i in 0..nn {
                dq[i] = self.left[i] - self.right[i] - term.exponent * q[i];
            }
            let s = term.site;
            dq[s * n + s] = dq[s * n + s] + cre(term.gamma_amp * self.signs[s]);
        }
    }
}

/// Right-hand side of the closed ZOFE system for an explicit state.
pub fn zofe_rhs<T: Real>(
    state: &ZofeState<T>,
    h_sys: &CMatrix<T>,
    bath: &LorentzianBath<T>,
    couplings: &[SiteCoupling<T>],
) -> Result<ZofeRate<T>> {
    let mut system = ZofeSystem::new(h_sys, bath, couplings)?;
    let n = system.n;
    if state.psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.psi.len(),
        });
    }
    if state.aux.len() != system.terms.len() {
        return Err(Error::DimensionMismatch {
            expected: system.terms.len(),
            found: state.aux.len(),
        });
    }
    if let Some(bad) = state.aux.iter().find(|q| q.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let y = state.pack();
    let mut dy = vec![czero(); y.len()];
    system.derivative(&y, &mut dy);
    let nn = n * n;
    let aux = (0..state.aux.len())
        .map(|k| {
            let block = &dy[n + k * nn..n + (k + 1) * nn];
            CMatrix::from_fn(n, |i, j| block[i * n + j])
        })
        .collect();
    Ok(ZofeRate {
        psi: dy[..n].to_vec(),
        aux,
    })
}

/// `M(t_k) = mu_tot^2 <psi0|psi(t_k, z* = 0)>` with the paper's sign of `L_n`.
pub fn propagate_zofe<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    config: &PropagationConfig<T>,
) -> Result<CorrelationTrace<T>> {
    propagate_zofe_with_sign(agg, bath, config, CouplingSign::Negative)
}

pub fn propagate_zofe_with_sign<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    config: &PropagationConfig<T>,
    sign: CouplingSign,
) -> Result<CorrelationTrace<T>> {
    bath.check_matches(agg)?;
    let bright = initial_bright_state(agg)?;
    let h = build_system_hamiltonian(agg);
    let couplings = site_couplings(agg.n_monomers(), sign);
    let mut system = ZofeSystem::new(&h, bath, &couplings)?;
    let n = agg.n_monomers();

    let mut y = ZofeState::initial(bright.psi0.clone(), bath.n_terms()).pack();
    let mut rk = Rk4::new(system.state_dim());
    let mu_sq = bright.mu_tot_sq();
    let dt = config.dt();
    let stride = config.sample_stride();
    let limit = norm_limit_sq::<T>();

    let mut samples = Vec::with_capacity(config.sample_grid().len);
    samples.push(cre(mu_sq));
    for step in 1..=config.steps() {
        rk.step(&mut system, dt, &mut y);
        let psi = &y[..n];
        let norm = norm_sqr(psi);
        if !(norm <= limit) {
            return Err(Error::NormGrowth {
                norm: norm.sqrt().as_f64(),
                time: (dt * T::from_usize_lossy(step)).as_f64(),
            });
        }
        if step % stride == 0 {
            samples.push(inner(&bright.psi0, psi) * mu_sq);
        }
    }
    CorrelationTrace::new(config.sample_grid().step, samples, mu_sq)
}

/// Runs at `dt` and `dt/2` and reports the largest scaled deviation between the two traces.
pub fn propagate_zofe_self_checked<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    config: &PropagationConfig<T>,
) -> Result<(CorrelationTrace<T>, T)> {
    let coarse = propagate_zofe(agg, bath, config)?;
    let fine = propagate_zofe(agg, bath, &config.halved_dt()?)?;
    let deviation = coarse.max_scaled_deviation(&fine);
    Ok((fine, deviation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BathTerm;
    use num_complex::Complex;

    fn monomer_bath(gamma_amp: f64, center: f64, width: f64) -> LorentzianBath<f64> {
        LorentzianBath::uniform(1, &[BathTerm::new(gamma_amp, center, width)]).unwrap()
    }

    #[test]
    fn initial_rate_is_free_evolution_plus_source() {
        let agg = AggregateSpec::homogeneous(2, 0.2, -1.5).unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let h = build_system_hamiltonian(&agg);
        let psi0 = initial_bright_state(&agg).unwrap().psi0;
        let state = ZofeState::initial(psi0.clone(), 2);
        let rate = zofe_rhs(
            &state,
            &h,
            &bath,
            &site_couplings(2, CouplingSign::Negative),
        )
        .unwrap();
        let expected: Vec<_> = h.mul_vec(&psi0).into_iter().map(minus_i).collect();
        assert_eq!(rate.psi, expected);
        // dQ(0) = Gamma L_n
        assert_eq!(rate.aux[0][(0, 0)], cre(-0.64));
        assert_eq!(rate.aux[1][(1, 1)], cre(-0.64));
        assert_eq!(rate.aux[0][(1, 1)], czero());
    }

    #[test]
    fn rhs_rejects_mismatched_state() {
        let agg = AggregateSpec::homogeneous(2, 0.0, 0.0).unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let h = build_system_hamiltonian(&agg);
        let couplings = site_couplings(2, CouplingSign::Negative);
        let bad = ZofeState::initial(vec![cre(1.0)], 2);
        assert!(matches!(
            zofe_rhs(&bad, &h, &bath, &couplings),
            Err(Error::DimensionMismatch { .. })
        ));
        let missing_aux = ZofeState::initial(vec![cre(1.0), cre(0.0)], 1);
        assert!(zofe_rhs(&missing_aux, &h, &bath, &couplings).is_err());
        let wrong_bath = LorentzianBath::uniform(3, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let ok_state = ZofeState::initial(vec![cre(1.0), cre(0.0)], 2);
        assert!(zofe_rhs(&ok_state, &h, &wrong_bath, &couplings).is_err());
    }

    #[test]
    fn monomer_aux_operator_matches_closed_form() {
        // V = 0: Q(t) = Gamma L (1 - e^{-z t}) / z
        let (g, om, w) = (0.64, 1.0, 0.25);
        let bath = monomer_bath(g, om, w);
        let agg = AggregateSpec::homogeneous(1, 0.0, 0.0).unwrap();
        let h = build_system_hamiltonian(&agg);
        let couplings = site_couplings(1, CouplingSign::Negative);
        let mut system = ZofeSystem::new(&h, &bath, &couplings).unwrap();
        let mut y = ZofeState::initial(vec![cre(1.0)], 1).pack();
        let mut rk = Rk4::new(2);
        let dt = 0.001;
        for _ in 0..5000 {
            rk.step(&mut system, dt, &mut y);
        }
        let t = 5.0;
        let z = Complex::new(w, om);
        let expected = -(Complex::new(1.0, 0.0) - (-z * t).exp()) / z * g;
        assert!((y[1] - expected).norm() < 1e-12, "{} vs {}", y[1], expected);
    }

    #[test]
    fn sign_of_site_operator_does_not_change_trace() {
        let agg = AggregateSpec::homogeneous(2, 0.0, 0.44).unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let cfg = PropagationConfig::new(0.01, 20.0).unwrap();
        let neg = propagate_zofe_with_sign(&agg, &bath, &cfg, CouplingSign::Negative).unwrap();
        let pos = propagate_zofe_with_sign(&agg, &bath, &cfg, CouplingSign::Positive).unwrap();
        assert!(neg.max_scaled_deviation(&pos) < 1e-13);
    }

    #[test]
    fn decoupled_dimer_has_monomer_shape() {
        let terms = [BathTerm::new(0.64, 1.0, 0.25)];
        let cfg = PropagationConfig::new(0.01, 30.0)
            .unwrap()
            .with_sample_stride(5)
            .unwrap();
        let mono = propagate_zofe(
            &AggregateSpec::homogeneous(1, 0.0, 0.0).unwrap(),
            &LorentzianBath::uniform(1, &terms).unwrap(),
            &cfg,
        )
        .unwrap();
        let dimer = propagate_zofe(
            &AggregateSpec::homogeneous(2, 0.0, 0.0).unwrap(),
            &LorentzianBath::uniform(2, &terms).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(dimer.mu_tot_sq(), 2.0);
        for (a, b) in mono.samples().iter().zip(dimer.samples()) {
            assert!((a * 2.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn first_sample_is_mu_tot_sq() {
        let agg = AggregateSpec::new(
            vec![0.1, 0.2],
            0.3,
            vec![[1.0, 0.0, 0.0], [0.5, 0.5, 0.0]],
            [1.0, 0.0, 0.0],
        )
        .unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.2, 1.0, 0.5)]).unwrap();
        let trace =
            propagate_zofe(&agg, &bath, &PropagationConfig::new(0.01, 1.0).unwrap()).unwrap();
        assert_eq!(trace.samples()[0], cre(1.25));
    }

    #[test]
    fn oversized_step_trips_norm_guard() {
        let agg = AggregateSpec::homogeneous(2, 0.0, 5.0).unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let cfg = PropagationConfig::new(0.8, 40.0).unwrap();
        assert!(matches!(
            propagate_zofe(&agg, &bath, &cfg),
            Err(Error::NormGrowth { .. })
        ));
    }

    #[test]
    fn identical_inputs_give_identical_traces() {
        let agg = AggregateSpec::homogeneous(3, 0.0, -0.41).unwrap();
        let bath = LorentzianBath::uniform(
            3,
            &[BathTerm::new(0.64, 1.0, 0.25), BathTerm::new(0.1, 0.4, 0.1)],
        )
        .unwrap();
        let cfg = PropagationConfig::new(0.01, 10.0).unwrap();
        let a = propagate_zofe(&agg, &bath, &cfg).unwrap();
        let b = propagate_zofe(&agg, &bath, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_check_reports_small_deviation() {
        let agg = AggregateSpec::homogeneous(2, 0.0, 0.44).unwrap();
        let bath = LorentzianBath::uniform(2, &[BathTerm::new(0.64, 1.0, 0.25)]).unwrap();
        let cfg = PropagationConfig::new(0.01, 10.0).unwrap();
        let (_, dev) = propagate_zofe_self_checked(&agg, &bath, &cfg).unwrap();
        assert!(dev < 1e-6, "deviation {dev}");
    }
}
