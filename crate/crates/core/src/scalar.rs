//! Scalar abstraction shared by every solver.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cre<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `-i * z`
#[inline]
pub(crate) fn minus_i<T: Real>(z: C<T>) -> C<T> {
    Complex::new(z.im, -z.re)
}

/// `i * z`
#[inline]
pub(crate) fn times_i<T: Real>(z: C<T>) -> C<T> {
    Complex::new(-z.im, z.re)
}

pub(crate) fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// `<a|b>` with conjugation of the bra.
pub(crate) fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// `a^T b`, no conjugation.
pub(crate) fn bilinear<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x * y)
}
