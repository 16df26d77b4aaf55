//! Fixed-step fourth-order Runge-Kutta propagation of complex linear systems.

use crate::error::{Error, Result};
use crate::model::{AggregateSpec, LorentzianBath};
use crate::scalar::{czero, Real, C};

/// Norm growth beyond this factor aborts a propagation.
pub const NORM_GUARD: f64 = 1e-6;

/// Default step `0.002 / s`, with `s` the largest of the bath frequencies and
/// widths, `|V|`, `|eps_n|` and `sqrt(alpha_n(0))`.
pub fn default_time_step<T: Real>(agg: &AggregateSpec<T>, bath: &LorentzianBath<T>) -> T {
    let mut scale = agg.coupling_v().abs();
    for e in agg.epsilon() {
        scale = scale.max(e.abs());
    }
    for (_, term) in bath.all_terms() {
        scale = scale.max(term.center).max(term.width);
    }
    for n in 0..bath.n_monomers() {
        scale = scale.max(bath.total_coupling(n).sqrt());
    }
    if !(scale > T::zero()) {
        scale = T::one();
    }
    T::lit(0.002) / scale
}

pub(crate) fn norm_limit_sq<T: Real>() -> T {
    let slack = T::lit(NORM_GUARD).max(T::epsilon() * T::lit(100.0));
    (T::one() + slack) * (T::one() + slack)
}

/// Right-hand side of `dy/dt = f(y)` over a flat complex state.
pub trait ComplexOde<T> {
    fn dim(&self) -> usize;
    fn derivative(&mut self, y: &[C<T>], dy: &mut [C<T>]);
}

/// Classic RK4 with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    k: Vec<C<T>>,
    stage: Vec<C<T>>,
    acc: Vec<C<T>>,
}

impl<T: Real> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            k: vec![czero(); dim],
            stage: vec![czero(); dim],
            acc: vec![czero(); dim],
        }
    }

    pub fn step<S: ComplexOde<T>>(&mut self, system: &mut S, h: T, y: &mut [C<T>]) {
        let half = h * T::lit(0.5);
        let sixth = h / T::lit(6.0);
        let third = h / T::lit(3.0);

        system.derivative(y, &mut self.k);
        for ((acc, s), (k, y)) in self
            .acc
            .iter_mut()
            .zip(&mut self.stage)
            .zip(self.k.iter().zip(y.iter()))
        {
            *acc = k * sixth;
            *s = y + k * half;
        }

        system.derivative(&self.stage, &mut self.k);
        for ((acc, s), (k, y)) in self
            .acc
            .iter_mut()
            .zip(&mut self.stage)
            .zip(self.k.iter().zip(y.iter()))
        {
            *acc = *acc + k * third;
            *s = y + k * half;
        }

        system.derivative(&self.stage, &mut self.k);
        for ((acc, s), (k, y)) in self
            .acc
            .iter_mut()
            .zip(&mut self.stage)
            .zip(self.k.iter().zip(y.iter()))
        {
            *acc = *acc + k * third;
            *s = y + k * h;
        }

        system.derivative(&self.stage, &mut self.k);
        for ((y, acc), k) in y.iter_mut().zip(&self.acc).zip(&self.k) {
            *y = *y + acc + k * sixth;
        }
    }
}

/// Uniform sampling grid `t_k = k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub step: T,
    pub len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.step
    }

    pub fn t_max(&self) -> T {
        self.time(self.len.saturating_sub(1))
    }
}

/// Integration step, final time and output decimation.
///
/// `t_max / dt` is rounded to the nearest integer step count; the rounded
/// value must agree with the ratio to within `1e-6` relative, so `t_max`
/// is always reached exactly in whole steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig<T> {
    dt: T,
    t_max: T,
    sample_stride: usize,
}

impl<T: Real> PropagationConfig<T> {
    pub fn new(dt: T, t_max: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !t_max.is_finite() || t_max < dt {
            return Err(Error::InvalidConfig(format!(
                "t_max = {t_max} must be at least dt = {dt}"
            )));
        }
        let ratio = (t_max / dt).as_f64();
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "t_max / dt = {ratio} is not an integer number of steps"
            )));
        }
        Ok(Self {
            dt,
            t_max,
            sample_stride: 1,
        })
    }

    /// Chooses `dt` no larger than `dt_max` such that `t_max` is a whole number of steps.
    pub fn fitted(dt_max: T, t_max: T) -> Result<Self> {
        if !(dt_max > T::zero()) || !(t_max > T::zero()) {
            return Err(Error::InvalidConfig("dt and t_max must be positive".into()));
        }
        let steps = (t_max / dt_max).as_f64().ceil().max(1.0);
        Self::new(t_max / T::lit(steps), t_max)
    }

    pub fn with_sample_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidConfig(
                "sample stride must be at least 1".into(),
            ));
        }
        self.sample_stride = stride;
        Ok(self)
    }

    /// Picks the largest stride whose sample spacing does not exceed `spacing`.
    pub fn with_sample_spacing(self, spacing: T) -> Result<Self> {
        let stride = (spacing / self.dt).as_f64().floor().max(1.0) as usize;
        self.with_sample_stride(stride)
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn sample_stride(&self) -> usize {
        self.sample_stride
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).as_f64().round() as usize
    }

    /// Grid on which solver traces are reported.
    pub fn sample_grid(&self) -> TimeGrid<T> {
        TimeGrid {
            step: self.dt * T::from_usize_lossy(self.sample_stride),
            len: self.steps() / self.sample_stride + 1,
        }
    }

    pub fn halved_dt(&self) -> Result<Self> {
        Self::new(self.dt * T::lit(0.5), self.t_max)?.with_sample_stride(self.sample_stride * 2)
    }
}
