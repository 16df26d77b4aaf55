//! Exact spectra from the pseudomode embedding.
//!
//! Each Lorentzian term becomes a damped harmonic mode coupled to its
//! monomer with strength `sqrt(Gamma_nj)`. The zero-noise Markov equation
//! is propagated in a truncated product basis `|pi_n>|beta>` where `beta`
//! holds occupations of every pseudomode of every monomer.

use std::collections::HashMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::model::{initial_bright_state, AggregateSpec, BrightState, LorentzianBath};
use crate::propagation::{norm_limit_sq, ComplexOde, PropagationConfig, Rk4};
use crate::scalar::{bilinear, cre, czero, inner, norm_sqr, times_i, Real, C};
use crate::spectra::{absorption_with_method, overlap, CorrelationTrace, Method, Spectrum};
use crate::zofe::CouplingSign;

/// Default limit on the number of basis states.
pub const DEFAULT_BUDGET: usize = 4_000_000;

/// Truncation of the pseudomode Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisCaps {
    /// Bound on the total number of quanta over all pseudomodes.
    pub total: u32,
    /// Bound on the quanta of any single pseudomode.
    pub per_mode: u32,
}

impl BasisCaps {
    pub fn uniform(cap: u32) -> Self {
        Self {
            total: cap,
            per_mode: cap,
        }
    }

    /// `ceil(4 + 6 max_j X_j)` for both caps.
    pub fn heuristic<T: Real>(bath: &LorentzianBath<T>) -> Self {
        let x = bath.max_huang_rhys().as_f64();
        Self::uniform((4.0 + 6.0 * x).ceil() as u32)
    }
}

/// `|pi_n>` times the occupation vector `beta` over all pseudomodes, monomer-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PmBasisState {
    pub n: usize,
    pub beta: Vec<u16>,
}

/// Ordered set of basis states with index lookup.
#[derive(Debug, Clone)]
pub struct PmBasis {
    n_monomers: usize,
    mode_offsets: Vec<usize>,
    states: Vec<PmBasisState>,
    lookup: HashMap<PmBasisState, usize>,
}

impl PmBasis {
    /// Wraps an arbitrary ordering of states; every state must be distinct and well formed.
    pub fn from_states(
        n_monomers: usize,
        modes_per_monomer: &[usize],
        states: Vec<PmBasisState>,
    ) -> Result<Self> {
        if modes_per_monomer.len() != n_monomers {
            return Err(Error::DimensionMismatch {
                expected: n_monomers,
                found: modes_per_monomer.len(),
            });
        }
        let mut mode_offsets = Vec::with_capacity(n_monomers + 1);
        mode_offsets.push(0);
        for m in modes_per_monomer {
            mode_offsets.push(mode_offsets.last().unwrap() + m);
        }
        let n_modes = *mode_offsets.last().unwrap();
        let mut lookup = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if s.n >= n_monomers || s.beta.len() != n_modes {
                return Err(Error::InvalidBasis(format!("malformed state {s:?}")));
            }
            if lookup.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidBasis(format!("duplicate state {s:?}")));
            }
        }
        Ok(Self {
            n_monomers,
            mode_offsets,
            states,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_monomers(&self) -> usize {
        self.n_monomers
    }

    pub fn n_modes(&self) -> usize {
        *self.mode_offsets.last().unwrap()
    }

    /// Global pseudomode indices belonging to monomer `n`.
    pub fn modes_of(&self, n: usize) -> std::ops::Range<usize> {
        self.mode_offsets[n]..self.mode_offsets[n + 1]
    }

    pub fn states(&self) -> &[PmBasisState] {
        &self.states
    }

    pub fn index_of(&self, state: &PmBasisState) -> Option<usize> {
        self.lookup.get(state).copied()
    }
}

/// Number of occupation vectors of length `modes` with entries `<= per_mode` and sum `<= total`.
pub fn occupation_count(modes: usize, caps: BasisCaps) -> u128 {
    let total = caps.total as usize;
    // ways[s] = vectors so far with sum exactly s
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for _ in 0..modes {
        let mut next = vec![0u128; total + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=(caps.per_mode as usize).min(total - s) {
                next[s + k] = next[s + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Every state within `caps`, ordered lexicographically in `(n, beta)`.
pub fn enumerate_basis(
    n_monomers: usize,
    modes_per_monomer: &[usize],
    caps: BasisCaps,
    budget: usize,
) -> Result<PmBasis> {
    let n_modes: usize = modes_per_monomer.iter().sum();
    let per_monomer = occupation_count(n_modes, caps);
    let dimension = per_monomer.saturating_mul(n_monomers as u128);
    if dimension > budget as u128 {
        return Err(Error::BasisTooLarge {
            dimension: usize::try_from(dimension).unwrap_or(usize::MAX),
            budget,
        });
    }
    if caps.per_mode > u16::MAX as u32 {
        return Err(Error::InvalidBasis("per-mode cap exceeds 65535".into()));
    }
    let mut occupations = Vec::with_capacity(per_monomer as usize);
    let mut current = vec![0u16; n_modes];
    push_occupations(&mut occupations, &mut current, 0, caps.total, caps.per_mode);

    let mut states = Vec::with_capacity(dimension as usize);
    for n in 0..n_monomers {
        states.extend(occupations.iter().map(|beta| PmBasisState {
            n,
            beta: beta.clone(),
        }));
    }
    PmBasis::from_states(n_monomers, modes_per_monomer, states)
}

fn push_occupations(
    out: &mut Vec<Vec<u16>>,
    current: &mut Vec<u16>,
    pos: usize,
    remaining: u32,
    per_mode: u32,
) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for k in 0..=per_mode.min(remaining) {
        current[pos] = k as u16;
        push_occupations(out, current, pos + 1, remaining - k, per_mode);
    }
    current[pos] = 0;
}

/// Sparse generator `G = -i H_eff` of the zero-noise pseudomode equation.
#[derive(Debug, Clone)]
pub struct PmGenerator<T> {
    matrix: CsrMatrix<T>,
    damping: Vec<T>,
}

impl<T: Real> PmGenerator<T> {
    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Diagonal damping `sum_{m,j} gamma_mj beta_mj` of every basis state.
    pub fn damping(&self) -> &[T] {
        &self.damping
    }

    /// Hermitian part `H = i (G + D)` of the effective Hamiltonian.
    pub fn hamiltonian_part(&self) -> CsrMatrix<T> {
        self.matrix.map_values(|i, j, v| {
            let v = if i == j { v + cre(self.damping[i]) } else { v };
            times_i(v)
        })
    }
}

/// Assembles the coupled component equations with hard truncation at the basis edge.
pub fn assemble_generator<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    basis: &PmBasis,
) -> Result<PmGenerator<T>> {
    assemble_generator_with_sign(agg, bath, basis, CouplingSign::Negative)
}

pub fn assemble_generator_with_sign<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    basis: &PmBasis,
    sign: CouplingSign,
) -> Result<PmGenerator<T>> {
    bath.check_matches(agg)?;
    if basis.n_monomers() != agg.n_monomers() {
        return Err(Error::DimensionMismatch {
            expected: agg.n_monomers(),
            found: basis.n_monomers(),
        });
    }
    for n in 0..agg.n_monomers() {
        let modes = basis.modes_of(n).len();
        if modes != bath.terms(n).len() {
            return Err(Error::DimensionMismatch {
                expected: bath.terms(n).len(),
                found: modes,
            });
        }
    }

    let modes: Vec<_> = bath.all_terms().map(|(_, t)| *t).collect();
    let couplings: Vec<T> = modes
        .iter()
        .map(|t| t.gamma_amp.sqrt() * sign.value::<T>())
        .collect();
    let v = agg.coupling_v();
    let n_monomers = agg.n_monomers();
    let minus_i = |x: T| Complex::new(T::zero(), -x);

    let mut rows = Vec::with_capacity(basis.len());
    let mut damping = Vec::with_capacity(basis.len());
    let mut probe = PmBasisState {
        n: 0,
        beta: Vec::new(),
    };
    for state in basis.states() {
        let mut row = Vec::new();
        let mut energy = agg.epsilon()[state.n];
        let mut loss = T::zero();
        for (q, &b) in state.beta.iter().enumerate() {
            let b = T::from_u16(b).unwrap();
            energy = energy + modes[q].center * b;
            loss = loss + modes[q].width * b;
        }
        row.push((basis.index_of(state).unwrap(), Complex::new(-loss, -energy)));
        damping.push(loss);

        probe.n = state.n;
        probe.beta.clone_from(&state.beta);
        for q in basis.modes_of(state.n) {
            let g = couplings[q];
            if g == T::zero() {
                continue;
            }
            let b = state.beta[q];
            if b > 0 {
                probe.beta[q] = b - 1;
                if let Some(col) = basis.index_of(&probe) {
                    row.push((col, minus_i(g * T::from_u16(b).unwrap().sqrt())));
                }
            }
            if b < u16::MAX {
                probe.beta[q] = b + 1;
                if let Some(col) = basis.index_of(&probe) {
                    row.push((col, minus_i(g * T::from_u16(b + 1).unwrap().sqrt())));
                }
            }
            probe.beta[q] = b;
        }

        if v != T::zero() {
            for m in [state.n.wrapping_sub(1), state.n + 1] {
                if m < n_monomers {
                    probe.n = m;
                    if let Some(col) = basis.index_of(&probe) {
                        row.push((col, minus_i(v)));
                    }
                }
            }
            probe.n = state.n;
        }
        rows.push(row);
    }
    Ok(PmGenerator {
        matrix: CsrMatrix::from_rows(rows),
        damping,
    })
}

/// `psi0 (x) |0...0>` in the given basis.
pub fn embed_initial_state<T: Real>(basis: &PmBasis, bright: &BrightState<T>) -> Result<Vec<C<T>>> {
    if bright.psi0.len() != basis.n_monomers() {
        return Err(Error::DimensionMismatch {
            expected: basis.n_monomers(),
            found: bright.psi0.len(),
        });
    }
    let mut psi = vec![czero(); basis.len()];
    for (n, &amp) in bright.psi0.iter().enumerate() {
        let ground = PmBasisState {
            n,
            beta: vec![0; basis.n_modes()],
        };
        let idx = basis.index_of(&ground).ok_or_else(|| {
            Error::InvalidBasis(format!(
                "basis lacks vibrational ground state of monomer {n}"
            ))
        })?;
        psi[idx] = amp;
    }
    Ok(psi)
}

/// Whether `M(2t)` is assembled from `psi(t)^T psi(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeDoubling {
    #[default]
    Enabled,
    Disabled,
}

struct SparseSystem<'a, T> {
    matrix: &'a CsrMatrix<T>,
}

impl<T: Real> ComplexOde<T> for SparseSystem<'_, T> {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn derivative(&mut self, y: &[C<T>], dy: &mut [C<T>]) {
        self.matrix.mul_vec_into(y, dy);
    }
}

fn check_norm<T: Real>(psi: &[C<T>], limit: T, step: usize, dt: T) -> Result<()> {
    let norm = norm_sqr(psi);
    if !(norm <= limit) {
        return Err(Error::NormGrowth {
            norm: norm.sqrt().as_f64(),
            time: (dt * T::from_usize_lossy(step)).as_f64(),
        });
    }
    Ok(())
}

/// `M(t_k) = mu_tot^2 <psi0|psi(t_k)>` on the config's sample grid.
///
/// With doubling, `M(p dt)` is `psi_{floor(p/2)}^T psi_{ceil(p/2)}`: the
/// step map of RK4 is a polynomial in the symmetric generator, so this
/// equals the directly propagated value up to rounding.
pub fn propagate_pm<T: Real>(
    generator: &PmGenerator<T>,
    psi0: &[C<T>],
    mu_tot_sq: T,
    config: &PropagationConfig<T>,
    doubling: TimeDoubling,
) -> Result<CorrelationTrace<T>> {
    if psi0.len() != generator.dim() {
        return Err(Error::DimensionMismatch {
            expected: generator.dim(),
            found: psi0.len(),
        });
    }
    let mut system = SparseSystem {
        matrix: &generator.matrix,
    };
    let mut rk = Rk4::new(generator.dim());
    let dt = config.dt();
    let stride = config.sample_stride();
    let limit = norm_limit_sq::<T>();
    let grid = config.sample_grid();
    let last_index = (grid.len - 1) * stride;

    let mut samples = Vec::with_capacity(grid.len);
    samples.push(cre(mu_tot_sq));
    let mut psi = psi0.to_vec();

    match doubling {
        TimeDoubling::Disabled => {
            for step in 1..=last_index {
                rk.step(&mut system, dt, &mut psi);
                check_norm(&psi, limit, step, dt)?;
                if step % stride == 0 {
                    samples.push(inner(psi0, &psi) * mu_tot_sq);
                }
            }
        }
        TimeDoubling::Enabled => {
            if psi0.iter().any(|z| z.im != T::zero()) {
                return Err(Error::ComplexInitialState);
            }
            let mut previous = psi.clone();
            for step in 1..=last_index.div_ceil(2) {
                previous.copy_from_slice(&psi);
                rk.step(&mut system, dt, &mut psi);
                check_norm(&psi, limit, step, dt)?;
                for p in [2 * step - 1, 2 * step] {
                    if p <= last_index && p % stride == 0 {
                        let value = if p % 2 == 0 {
                            bilinear(&psi, &psi)
                        } else {
                            bilinear(&previous, &psi)
                        };
                        samples.push(value * mu_tot_sq);
                    }
                }
            }
        }
    }
    CorrelationTrace::new(grid.step, samples, mu_tot_sq)
}

/// Builds the basis and generator for `caps` and propagates, doubling whenever the embedded state is real.
pub fn pm_correlation<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    caps: BasisCaps,
    config: &PropagationConfig<T>,
    budget: usize,
) -> Result<CorrelationTrace<T>> {
    bath.check_matches(agg)?;
    let basis = enumerate_basis(agg.n_monomers(), &bath.modes_per_monomer(), caps, budget)?;
    let generator = assemble_generator(agg, bath, &basis)?;
    let bright = initial_bright_state(agg)?;
    let psi0 = embed_initial_state(&basis, &bright)?;
    let doubling = if psi0.iter().all(|z| z.im == T::zero()) {
        TimeDoubling::Enabled
    } else {
        TimeDoubling::Disabled
    };
    propagate_pm(&generator, &psi0, bright.mu_tot_sq(), config, doubling)
}

/// Broadening, frequency grid and stopping rule for [`converge_caps`].
#[derive(Debug, Clone)]
pub struct ConvergenceSettings<T> {
    pub tolerance: T,
    pub eta: T,
    pub nu: Vec<T>,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderRung<T> {
    pub caps: BasisCaps,
    pub dimension: usize,
    /// Overlap in percent with the previous rung.
    pub overlap_with_previous: Option<T>,
}

#[derive(Debug, Clone)]
pub struct ConvergedCaps<T> {
    pub caps: BasisCaps,
    pub trace: CorrelationTrace<T>,
    pub spectrum: Spectrum<T>,
    pub ladder: Vec<LadderRung<T>>,
}

/// Ladder `0, 1, 2, 4, 8, ...` of uniform caps.
pub fn cap_ladder() -> impl Iterator<Item = u32> {
    std::iter::once(0).chain((0..31).map(|k| 1u32 << k))
}

/// Smallest rung whose spectrum overlaps the next rung's by at least
/// `100 (1 - tolerance)` percent.
///
/// Rungs whose trace fails the ringing guard are kept in the ladder without
/// an overlap and never returned.
pub fn converge_caps<T: Real>(
    agg: &AggregateSpec<T>,
    bath: &LorentzianBath<T>,
    config: &PropagationConfig<T>,
    settings: &ConvergenceSettings<T>,
) -> Result<ConvergedCaps<T>> {
    if !(settings.tolerance > T::zero()) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {}",
            settings.tolerance
        )));
    }
    let threshold = T::lit(100.0) * (T::one() - settings.tolerance);
    let mut ladder: Vec<LadderRung<T>> = Vec::new();
    let mut previous: Option<(BasisCaps, CorrelationTrace<T>, Spectrum<T>)> = None;
    for cap in cap_ladder() {
        let caps = BasisCaps::uniform(cap);
        let trace = match pm_correlation(agg, bath, caps, config, settings.budget) {
            Ok(trace) => trace,
            Err(Error::BasisTooLarge { .. }) => {
                let mut overlaps = ladder.iter().rev().filter_map(|r| r.overlap_with_previous);
                let last = overlaps.next().map(|o| o.as_f64());
                let previous = overlaps.next().map(|o| o.as_f64());
                return Err(Error::NotConverged { previous, last });
            }
            Err(e) => return Err(e),
        };
        let dimension = agg.n_monomers() * occupation_count(bath.n_terms(), caps) as usize;
        let spectrum =
            match absorption_with_method(&trace, settings.eta, &settings.nu, Method::Pseudomode) {
                Ok(spectrum) => spectrum,
                // Small bases can leave too little damping for the window; such
                // rungs are recorded and skipped.
                Err(Error::Ringing { .. }) => {
                    ladder.push(LadderRung {
                        caps,
                        dimension,
                        overlap_with_previous: None,
                    });
                    previous = None;
                    continue;
                }
                Err(e) => return Err(e),
            };
        let overlap_with_previous = match &previous {
            Some((_, _, prev)) => Some(overlap(prev, &spectrum)?),
            None => None,
        };
        ladder.push(LadderRung {
            caps,
            dimension,
            overlap_with_previous,
        });
        if let (Some(o), Some((prev_caps, prev_trace, prev_spec))) =
            (overlap_with_previous, previous.take())
        {
            if o >= threshold {
                return Ok(ConvergedCaps {
                    caps: prev_caps,
                    trace: prev_trace,
                    spectrum: prev_spec,
                    ladder,
                });
            }
        }
        previous = Some((caps, trace, spectrum));
    }
    Err(Error::NotConverged {
        previous: None,
        last: None,
    })
}
