//! Correlation traces, absorption spectra and the area-overlap metric.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::TimeGrid;
use crate::scalar::{Real, C};

/// Uniformly sampled dipole correlation function `M(t_k)`, `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace<T> {
    dt: T,
    samples: Vec<C<T>>,
    mu_tot_sq: T,
}

impl<T: Real> CorrelationTrace<T> {
    pub fn new(dt: T, samples: Vec<C<T>>, mu_tot_sq: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::InvalidSpectrum(format!(
                "trace step must be positive, got {dt}"
            )));
        }
        let Some(first) = samples.first() else {
            return Err(Error::InvalidSpectrum("empty trace".into()));
        };
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * mu_tot_sq;
        if (*first - mu_tot_sq).norm() > tol {
            return Err(Error::InvalidSpectrum(format!(
                "M(0) = {first} differs from mu_tot^2 = {mu_tot_sq}"
            )));
        }
        Ok(Self {
            dt,
            samples,
            mu_tot_sq,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn samples(&self) -> &[C<T>] {
        &self.samples
    }

    pub fn mu_tot_sq(&self) -> T {
        self.mu_tot_sq
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid(&self) -> TimeGrid<T> {
        TimeGrid {
            step: self.dt,
            len: self.samples.len(),
        }
    }

    pub fn time(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt
    }

    pub fn t_max(&self) -> T {
        self.time(self.samples.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.samples.len()).map(|k| self.time(k))
    }

    /// Largest `|M_a(t_k) - M_b(t_k)| / mu_tot^2` over the common prefix.
    pub fn max_scaled_deviation(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
            / self.mu_tot_sq
    }
}

/// Which route produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Zofe,
    Pseudomode,
    Cumulant,
    Markov,
    Unspecified,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Zofe => "zofe",
            Method::Pseudomode => "pm",
            Method::Cumulant => "cumulant",
            Method::Markov => "markov",
            Method::Unspecified => "unspecified",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Absorption `A(nu)` on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    nu: Vec<T>,
    values: Vec<T>,
    pub method: Method,
    pub eta: T,
}

impl<T: Real> Spectrum<T> {
    pub fn new(nu: Vec<T>, values: Vec<T>, method: Method, eta: T) -> Result<Self> {
        check_grid(&nu)?;
        if values.len() != nu.len() {
            return Err(Error::DimensionMismatch {
                expected: nu.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            nu,
            values,
            method,
            eta,
        })
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn area(&self) -> T {
        trapezoid(&self.nu, &self.values)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, nu: T) -> T {
        interpolate(&self.nu, &self.values, nu)
    }

    /// Grid point of the largest value.
    pub fn peak(&self) -> (T, T) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (self.nu[best], self.values[best])
    }

    /// Interior local maxima whose height exceeds `min_fraction` of the global maximum.
    pub fn local_maxima(&self, min_fraction: T) -> Vec<(T, T)> {
        let (_, top) = self.peak();
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= min_fraction * top)
            .map(|i| (self.nu[i], v[i]))
            .collect()
    }
}

fn check_grid<T: Real>(nu: &[T]) -> Result<()> {
    if nu.len() < 2 {
        return Err(Error::InvalidSpectrum(
            "frequency grid needs at least two points".into(),
        ));
    }
    if nu.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSpectrum(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `points` equally spaced values from `min` to `max` inclusive.
pub fn uniform_grid<T: Real>(min: T, max: T, points: usize) -> Result<Vec<T>> {
    if points < 2 || !(max > min) {
        return Err(Error::InvalidSpectrum(format!(
            "need at least two points on a non-empty interval, got {points} on [{min}, {max}]"
        )));
    }
    let step = (max - min) / T::from_usize_lossy(points - 1);
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                max
            } else {
                min + step * T::from_usize_lossy(i)
            }
        })
        .collect())
}

pub(crate) fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    let half = T::lit(0.5);
    x.windows(2)
        .zip(y.windows(2))
        .fold(T::zero(), |acc, (xs, ys)| {
            acc + (xs[1] - xs[0]) * (ys[0] + ys[1]) * half
        })
}

fn interpolate<T: Real>(x: &[T], y: &[T], at: T) -> T {
    if at < x[0] || at > x[x.len() - 1] {
        return T::zero();
    }
    let hi = x.partition_point(|&v| v < at).max(1).min(x.len() - 1);
    let lo = hi - 1;
    let w = (at - x[lo]) / (x[hi] - x[lo]);
    y[lo] + (y[hi] - y[lo]) * w
}

/// Ringing guard threshold on `|M(t_max)| e^{-eta t_max} / mu_tot^2`.
pub const RINGING_LIMIT: f64 = 1e-4;

/// One-sided transform `A(nu) = Re sum_k w_k e^{i nu t_k} e^{-eta t_k} M(t_k) dt`
/// with trapezoid weights.
pub fn absorption_from_trace<T: Real>(
    trace: &CorrelationTrace<T>,
    eta: T,
    nu: &[T],
) -> Result<Spectrum<T>> {
    absorption_with_method(trace, eta, nu, Method::Unspecified)
}

pub fn absorption_with_method<T: Real>(
    trace: &CorrelationTrace<T>,
    eta: T,
    nu: &[T],
    method: Method,
) -> Result<Spectrum<T>> {
    if !(eta >= T::zero()) {
        return Err(Error::InvalidSpectrum(format!(
            "eta must be non-negative, got {eta}"
        )));
    }
    check_grid(nu)?;
    if trace.len() < 2 {
        return Err(Error::InvalidSpectrum(
            "trace needs at least two samples".into(),
        ));
    }
    let t_max = trace.t_max();
    let residual = trace.samples()[trace.len() - 1].norm() * (-eta * t_max).exp();
    let limit = T::lit(RINGING_LIMIT) * trace.mu_tot_sq();
    if residual > limit {
        return Err(Error::Ringing {
            residual: residual.as_f64(),
            limit: limit.as_f64(),
        });
    }

    let dt = trace.dt();
    let last = trace.len() - 1;
    let weighted: Vec<C<T>> = trace
        .samples()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let w = if k == 0 || k == last {
                T::lit(0.5)
            } else {
                T::one()
            };
            m * ((-eta * trace.time(k)).exp() * w * dt)
        })
        .collect();

    let values: Vec<T> = nu
        .par_iter()
        .map(|&freq| {
            // Re(e^{i nu t} m) summed in index order for bit-stable output.
            weighted.iter().enumerate().fold(T::zero(), |acc, (k, m)| {
                let (s, c) = (freq * trace.time(k)).sin_cos();
                acc + (c * m.re - s * m.im)
            })
        })
        .collect();
    Spectrum::new(nu.to_vec(), values, method, eta)
}

/// Translates the grid so that the first moment `int nu A / int A` sits at zero.
pub fn mean_shift<T: Real>(spec: &Spectrum<T>) -> Result<(Spectrum<T>, T)> {
    let area = spec.area();
    if !(area > T::zero()) {
        return Err(Error::NonPositiveArea(area.as_f64()));
    }
    let weighted: Vec<T> = spec
        .nu
        .iter()
        .zip(&spec.values)
        .map(|(&n, &a)| n * a)
        .collect();
    let mean = trapezoid(&spec.nu, &weighted) / area;
    let shifted = Spectrum {
        nu: spec.nu.iter().map(|&n| n - mean).collect(),
        ..spec.clone()
    };
    Ok((shifted, mean))
}

/// Common area of two spectra after clipping negatives and normalizing each
/// to unit area, in percent.
///
/// Spectra on different grids are resampled onto a uniform grid spanning
/// both supports at the finer of the two spacings.
pub fn overlap<T: Real>(a: &Spectrum<T>, b: &Spectrum<T>) -> Result<T> {
    let (grid, va, vb) = if a.nu == b.nu {
        (a.nu.clone(), a.values.clone(), b.values.clone())
    } else {
        let lo = a.nu[0].min(b.nu[0]);
        let hi = a.nu[a.nu.len() - 1].max(b.nu[b.nu.len() - 1]);
        let spacing = min_spacing(&a.nu).min(min_spacing(&b.nu));
        let points = ((hi - lo) / spacing).as_f64().ceil() as usize + 1;
        let grid = uniform_grid(lo, hi, points.max(2))?;
        let va = grid.iter().map(|&x| a.value_at(x)).collect();
        let vb = grid.iter().map(|&x| b.value_at(x)).collect();
        (grid, va, vb)
    };
    let na = clipped_normalized(&grid, va)?;
    let nb = clipped_normalized(&grid, vb)?;
    let common: Vec<T> = na.iter().zip(&nb).map(|(&x, &y)| x.min(y)).collect();
    Ok(T::lit(100.0) * trapezoid(&grid, &common))
}

fn min_spacing<T: Real>(nu: &[T]) -> T {
    nu.windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::infinity(), T::min)
}

fn clipped_normalized<T: Real>(grid: &[T], values: Vec<T>) -> Result<Vec<T>> {
    let clipped: Vec<T> = values.into_iter().map(|v| v.max(T::zero())).collect();
    let area = trapezoid(grid, &clipped);
    if !(area > T::zero()) {
        return Err(Error::NonPositiveArea(area.as_f64()));
    }
    Ok(clipped.into_iter().map(|v| v / area).collect())
}
