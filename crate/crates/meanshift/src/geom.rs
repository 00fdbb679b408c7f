//! Shared distance helpers.
//!
//! Kernel arguments and neighbor-set membership tests must agree bit for
//! bit at ball boundaries, so both go through the same scaled distance
//! computation here.

use crate::scalar::Real;

/// Euclidean distance between two coordinate slices of equal length.
pub fn euclid<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let diff = x - y;
        s += diff * diff;
    }
    s.sqrt()
}

/// Squared Euclidean distance.
pub fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let diff = x - y;
        s += diff * diff;
    }
    s
}

/// The kernel argument `t = ‖(a − b)/h‖²`, computed as `(‖a−b‖/h)²`.
///
/// A point exactly at distance `h` yields `t = 1` exactly, so the closed
/// ball `‖a−b‖ ≤ h` coincides with `scaled_sq_dist ≤ 1`.
pub fn scaled_sq_dist<T: Real>(a: &[T], b: &[T], h: T) -> T {
    let q = euclid(a, b) / h;
    q * q
}
