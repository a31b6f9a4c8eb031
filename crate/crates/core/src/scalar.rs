//! Floating-point abstraction so the iteration kernels can run in either
//! f64 (default) or f32.

use num_traits::Float;

/// Scalar type the solver kernels are generic over.
///
/// Only `f64` and `f32` implement this; the two casts are explicit so no
/// fallible `NumCast` plumbing leaks into the hot loops.
pub trait Real:
    Float
    + num_traits::NumAssignOps
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy cast from an f64 constant.
    fn of(x: f64) -> Self;
    /// Widen to f64.
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>().sqrt()
}

/// Squared Euclidean norm of a slice.
#[inline]
pub fn norm2_sq<T: Real>(v: &[T]) -> T {
    v.iter().map(|&a| a * a).sum::<T>()
}

/// Dot product; panics on length mismatch in debug builds.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>()
}
