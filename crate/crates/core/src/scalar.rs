//! Scalar abstraction shared by the simulator and the Pauli algebra.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point scalar used by the numeric kernels.
///
/// Implemented for `f32` and `f64`. The experiment pipeline is instantiated
/// at `f64` only; the tolerances quoted throughout the crate assume it.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

/// Multiply by `i^k`.
#[inline]
pub(crate) fn mul_i_pow<T: Real>(z: Cplx<T>, k: u8) -> Cplx<T> {
    match k & 3 {
        0 => z,
        1 => c(-z.im, z.re),
        2 => c(-z.re, -z.im),
        _ => c(z.im, -z.re),
    }
}
