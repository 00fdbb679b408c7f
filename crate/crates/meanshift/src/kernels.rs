//! Kernel profiles and the adaptive-bandwidth density estimate.

use crate::data::PointSet;
use crate::error::{Error, Result};
use crate::geom::scaled_sq_dist;
use crate::scalar::{real, Real};
use serde::{Deserialize, Serialize};

/// Radial kernel profile `k(t)` with shadow `g(t) = −k′(t)`.
///
/// Profiles are unnormalized (no volume constant); mode locations and
/// weight ratios do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelProfile {
    /// `k(t) = 1 − t` on `[0, 1]`, 0 outside. Closed support: `g(1) = 1`.
    Epanechnikov,
    /// `k(t) = exp(−t/2)`, untruncated.
    Gaussian,
}

impl KernelProfile {
    /// Evaluates the profile `k(t)` for `t ≥ 0`.
    pub fn profile_k<T: Real>(&self, t: T) -> T {
        assert!(t >= T::zero(), "kernel profile argument must be non-negative");
        match self {
            KernelProfile::Epanechnikov => {
                if t <= T::one() {
                    T::one() - t
                } else {
                    T::zero()
                }
            }
            KernelProfile::Gaussian => (-t / real(2.0)).exp(),
        }
    }

    /// Evaluates the shadow `g(t) = −k′(t)` for `t ≥ 0`.
    pub fn profile_g<T: Real>(&self, t: T) -> T {
        assert!(t >= T::zero(), "kernel profile argument must be non-negative");
        match self {
            KernelProfile::Epanechnikov => {
                if t <= T::one() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            KernelProfile::Gaussian => real::<T>(0.5) * (-t / real(2.0)).exp(),
        }
    }
}

/// The sample-point density estimate
/// `f(x) = (1/n) Σ_i k(‖(x−x_i)/h_i‖²) / h_i^d`.
pub fn density_estimate<T: Real>(
    x: &[T],
    points: &PointSet<T>,
    bandwidths: &[T],
    kernel: KernelProfile,
) -> Result<T> {
    if bandwidths.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: bandwidths.len(),
        });
    }
    if bandwidths.iter().any(|&h| h <= T::zero()) {
        return Err(Error::NonPositiveBandwidth);
    }
    let d = points.dim() as i32;
    let mut sum = T::zero();
    for (p, &h) in points.iter().zip(bandwidths) {
        let t = scaled_sq_dist(x, p, h);
        sum += kernel.profile_k(t) / h.powi(d);
    }
    Ok(sum / real(points.len() as f64))
}
