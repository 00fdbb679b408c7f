//! Per-probe weight vectors for the six bandwidth strategies and the
//! generic shift vector.
//!
//! With `t⁺ = ‖(x−x_i)/h_x‖²` and `t⁻ = ‖(x−x_i)/h_i‖²`:
//!
//! | strategy | weight `w_i` |
//! |----------|--------------|
//! | FMS      | `g(‖(x−x_i)/h‖²)` at fixed `h` |
//! | EAMS     | `g(t⁺)` |
//! | SAMS     | `h_i^(−(d+2)) · g(t⁻)` |
//! | ESAMS    | `g(t⁺) + g(t⁻)` |
//! | WEAMS    | `h_i^(−(d+2)) · g(t⁺)` |
//! | BAMS     | `|d_i| · σ(β d_i)` with `d_i = g(t⁺) − λ g(t⁻)` |

use serde::{Deserialize, Serialize};

use crate::bandwidth::{probe_bandwidth, BandwidthField};
use crate::data::PointSet;
use crate::error::{Error, Result};
use crate::geom::scaled_sq_dist;
use crate::kernels::KernelProfile;
use crate::scalar::{real, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Fms,
    Eams,
    Sams,
    Esams,
    Weams,
    Bams,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Fms,
        Strategy::Eams,
        Strategy::Sams,
        Strategy::Esams,
        Strategy::Weams,
        Strategy::Bams,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Fms => "fms",
            Strategy::Eams => "eams",
            Strategy::Sams => "sams",
            Strategy::Esams => "esams",
            Strategy::Weams => "weams",
            Strategy::Bams => "bams",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fms" => Ok(Strategy::Fms),
            "eams" => Ok(Strategy::Eams),
            "sams" => Ok(Strategy::Sams),
            "esams" => Ok(Strategy::Esams),
            "weams" => Ok(Strategy::Weams),
            "bams" => Ok(Strategy::Bams),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

/// Strategy selector plus its parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StrategyParams<T> {
    pub strategy: Strategy,
    pub kernel: KernelProfile,
    pub k_neighbors: usize,
    /// λ in the sigmoid-stabilized difference; in [0, 1].
    pub lambda: T,
    /// β, the sigmoid steepness; positive.
    pub beta: T,
    /// Fixed bandwidth, required for FMS.
    pub fixed_h: Option<T>,
}

impl<T: Real> StrategyParams<T> {
    /// λ = 0.975, β = 100, knn k = 30.
    pub fn defaults(strategy: Strategy, kernel: KernelProfile) -> Self {
        Self {
            strategy,
            kernel,
            k_neighbors: 30,
            lambda: real(0.975),
            beta: real(100.0),
            fixed_h: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < T::zero() || self.lambda > T::one() {
            return Err(Error::InvalidParameter("lambda must be in [0, 1]".into()));
        }
        if self.beta <= T::zero() {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidParameter("knn must be positive".into()));
        }
        if self.strategy == Strategy::Fms {
            match self.fixed_h {
                Some(h) if h > T::zero() => {}
                _ => {
                    return Err(Error::InvalidParameter(
                        "fms requires a positive fixed bandwidth".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Per-sample weights for one probe, plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub w: Vec<T>,
    pub total: T,
}

/// The signed bidirectional difference
/// `d_i = g(‖(x−x_i)/h_x‖²) − λ · g(‖(x−x_i)/h_i‖²)`.
///
/// With λ = 1 this is the raw bidirectional weight.
pub fn bams_difference<T: Real>(
    x: &[T],
    x_i: &[T],
    h_x: T,
    h_i: T,
    lambda: T,
    kernel: KernelProfile,
) -> T {
    assert!(h_x > T::zero() && h_i > T::zero(), "bandwidths must be positive");
    let t_pos = scaled_sq_dist(x, x_i, h_x);
    let t_neg = scaled_sq_dist(x, x_i, h_i);
    kernel.profile_g(t_pos) - lambda * kernel.profile_g(t_neg)
}

/// Sigmoid-stabilized weight `w = |d| / (1 + e^(−β·d)) = |d|·σ(βd)`.
pub fn bams_weight<T: Real>(d: T, beta: T) -> T {
    d.abs() / (T::one() + (-beta * d).exp())
}

/// Weight vector for a probe with an explicitly supplied probe bandwidth.
///
/// The blurring engine calls this with the sample's own knn bandwidth;
/// [`strategy_weights`] derives `h_x` from `probe_bandwidth`.
pub fn strategy_weights_with_hx<T: Real>(
    probe: &[T],
    h_x: T,
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    params: &StrategyParams<T>,
) -> Result<WeightVector<T>> {
    params.validate()?;
    if field.h.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: field.h.len(),
        });
    }
    let d_exp = -(points.dim() as i32) - 2;
    let kernel = params.kernel;
    let mut w = Vec::with_capacity(points.len());
    for (p, &h_i) in points.iter().zip(&field.h) {
        let wi = match params.strategy {
            Strategy::Fms => {
                let h = params.fixed_h.expect("validated");
                kernel.profile_g(scaled_sq_dist(probe, p, h))
            }
            Strategy::Eams => kernel.profile_g(scaled_sq_dist(probe, p, h_x)),
            Strategy::Sams => {
                h_i.powi(d_exp) * kernel.profile_g(scaled_sq_dist(probe, p, h_i))
            }
            Strategy::Esams => {
                kernel.profile_g(scaled_sq_dist(probe, p, h_x))
                    + kernel.profile_g(scaled_sq_dist(probe, p, h_i))
            }
            Strategy::Weams => {
                h_i.powi(d_exp) * kernel.profile_g(scaled_sq_dist(probe, p, h_x))
            }
            Strategy::Bams => {
                let d = bams_difference(probe, p, h_x, h_i, params.lambda, kernel);
                bams_weight(d, params.beta)
            }
        };
        w.push(wi);
    }
    let mut total = T::zero();
    for &wi in &w {
        total += wi;
    }
    Ok(WeightVector { w, total })
}

/// Per-sample weights for one probe under the selected strategy.
///
/// `h_x` is `probe_bandwidth(probe, points, k_neighbors)` for strategies
/// that use it. A zero total is not an error here; the engine treats it
/// as degenerate support.
pub fn strategy_weights<T: Real>(
    probe: &[T],
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    params: &StrategyParams<T>,
) -> Result<WeightVector<T>> {
    let h_x = match params.strategy {
        Strategy::Fms | Strategy::Sams => T::one(), // unused
        _ => probe_bandwidth(probe, points, params.k_neighbors)?,
    };
    strategy_weights_with_hx(probe, h_x, points, field, params)
}

/// The weighted centroid `Σ w_i x_i / Σ w_i`, summed in index order.
///
/// A zero weight total has no defined centroid and is reported as
/// degenerate support.
pub fn weighted_centroid<T: Real>(
    weights: &WeightVector<T>,
    points: &PointSet<T>,
) -> Result<Vec<T>> {
    if weights.total == T::zero() {
        return Err(Error::DegenerateSupport);
    }
    let d = points.dim();
    let mut centroid = vec![T::zero(); d];
    for (p, &wi) in points.iter().zip(&weights.w) {
        for (c, &pc) in centroid.iter_mut().zip(p) {
            *c += wi * pc;
        }
    }
    for c in &mut centroid {
        *c /= weights.total;
    }
    Ok(centroid)
}

/// The shift `m(x) = Σ w_i x_i / Σ w_i − x`.
pub fn shift_vector<T: Real>(
    weights: &WeightVector<T>,
    points: &PointSet<T>,
    probe: &[T],
) -> Result<Vec<T>> {
    let centroid = weighted_centroid(weights, points)?;
    Ok(centroid.iter().zip(probe).map(|(&c, &x)| c - x).collect())
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// The blurring-round matrices for the bidirectional strategy:
/// `G_ij = g(‖(x_j−x_i)/h_i‖²)`, `D = G − λGᵀ`, `W` the sigmoid weights of
/// `D` elementwise, and `P` the row-normalization of `W`.
///
/// Rows of `W` summing to zero become identity rows in `P` (the point does
/// not move).
pub fn pairwise_matrices<T: Real>(
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    params: &StrategyParams<T>,
) -> Result<(
    SquareMatrix<T>,
    SquareMatrix<T>,
    SquareMatrix<T>,
    SquareMatrix<T>,
)> {
    if params.strategy != Strategy::Bams {
        return Err(Error::InvalidParameter(
            "pairwise matrices are defined for the bams strategy".into(),
        ));
    }
    params.validate()?;
    let n = points.len();
    if field.h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: field.h.len(),
        });
    }
    let mut g = SquareMatrix::zeros(n);
    for i in 0..n {
        let h_i = field.h[i];
        if h_i <= T::zero() {
            return Err(Error::NonPositiveBandwidth);
        }
        for j in 0..n {
            let t = scaled_sq_dist(points.point(j), points.point(i), h_i);
            g.set(i, j, params.kernel.profile_g(t));
        }
    }
    let mut d = SquareMatrix::zeros(n);
    let mut w = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let dij = g.get(i, j) - params.lambda * g.get(j, i);
            d.set(i, j, dij);
            w.set(i, j, bams_weight(dij, params.beta));
        }
    }
    let mut p = SquareMatrix::zeros(n);
    for i in 0..n {
        let mut row_sum = T::zero();
        for j in 0..n {
            row_sum += w.get(i, j);
        }
        if row_sum == T::zero() {
            p.set(i, i, T::one());
        } else {
            for j in 0..n {
                p.set(i, j, w.get(i, j) / row_sum);
            }
        }
    }
    Ok((g, d, w, p))
}
