//! knn bandwidths and the out/in neighbor-set constructions.

use crate::data::PointSet;
use crate::error::{Error, Result};
use crate::geom::{euclid, scaled_sq_dist};
use crate::scalar::{real, Real};

/// Per-sample bandwidths `h_i` built from knn distances.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthField<T> {
    pub h: Vec<T>,
    pub k_neighbors: usize,
}

/// The four neighbor sets around a probe point, as sorted index vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSets {
    /// K⁺(x): samples within `h_x` of the probe.
    pub out_set: Vec<usize>,
    /// K⁻(x): samples `x_j` with `‖x_j − x‖ ≤ h_j`.
    pub in_set: Vec<usize>,
    /// K⁺₋(x) = K⁺ ∖ K⁻.
    pub pos_only: Vec<usize>,
    /// K⁻₊(x) = K⁻ ∖ K⁺.
    pub neg_only: Vec<usize>,
}

/// k-th smallest of a distance buffer (1-based k).
fn kth_smallest<T: Real>(dists: &mut [T], k: usize) -> T {
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| {
        a.partial_cmp(b).expect("finite distances")
    });
    *kth
}

/// Clamp floor for duplicate points: 1e−12 × data diameter, with an
/// absolute floor when the whole set is degenerate.
fn duplicate_clamp<T: Real>(points: &PointSet<T>) -> T {
    let diam = points.diameter();
    let eps = real::<T>(1e-12) * diam;
    if eps > T::zero() {
        eps
    } else {
        real(1e-12)
    }
}

/// Per-sample bandwidths: `h_i` is the distance from `x_i` to its k-th
/// nearest *other* sample. Zero distances (duplicates) are clamped to
/// 1e−12 × diameter.
pub fn knn_bandwidths<T: Real>(points: &PointSet<T>, k: usize) -> Result<BandwidthField<T>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints);
    }
    if k == 0 || k > n - 1 {
        return Err(Error::NeighborCountOutOfRange { k, n });
    }
    let mut h = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n - 1);
    let mut clamp = None;
    for i in 0..n {
        dists.clear();
        let pi = points.point(i);
        for j in 0..n {
            if j != i {
                dists.push(euclid(pi, points.point(j)));
            }
        }
        let mut hi = kth_smallest(&mut dists, k);
        if hi <= T::zero() {
            hi = *clamp.get_or_insert_with(|| duplicate_clamp(points));
        }
        h.push(hi);
    }
    Ok(BandwidthField { h, k_neighbors: k })
}

/// Probe bandwidth `h_x`: distance from `x` to its k-th nearest sample.
/// Coincident samples count (a probe is generally not a sample); zero
/// results are clamped like `knn_bandwidths`.
pub fn probe_bandwidth<T: Real>(x: &[T], points: &PointSet<T>, k: usize) -> Result<T> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::NeighborCountOutOfRange { k, n });
    }
    let mut dists: Vec<T> = points.iter().map(|p| euclid(x, p)).collect();
    let hx = kth_smallest(&mut dists, k);
    if hx > T::zero() {
        Ok(hx)
    } else {
        Ok(duplicate_clamp(points))
    }
}

/// K⁺(x): indices of samples inside the closed ball of radius `h_x`.
///
/// Membership is evaluated through the same scaled distance used for
/// kernel arguments, so `i ∈ K⁺(x)` iff the Epanechnikov `g` is 1 there.
pub fn out_knn_set<T: Real>(x: &[T], points: &PointSet<T>, h_x: T) -> Result<Vec<usize>> {
    if h_x <= T::zero() {
        return Err(Error::NonPositiveBandwidth);
    }
    Ok((0..points.len())
        .filter(|&i| scaled_sq_dist(x, points.point(i), h_x) <= T::one())
        .collect())
}

/// K⁻(x): indices of samples whose own ball contains the probe.
pub fn in_knn_set<T: Real>(
    x: &[T],
    points: &PointSet<T>,
    field: &BandwidthField<T>,
) -> Result<Vec<usize>> {
    if field.h.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: field.h.len(),
        });
    }
    Ok((0..points.len())
        .filter(|&j| scaled_sq_dist(x, points.point(j), field.h[j]) <= T::one())
        .collect())
}

/// All four sets around a probe: K⁺, K⁻, and the set differences
/// K⁺₋ = K⁺ ∖ K⁻ and K⁻₊ = K⁻ ∖ K⁺.
pub fn bidirectional_sets<T: Real>(
    x: &[T],
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    h_x: T,
) -> Result<NeighborSets> {
    let out_set = out_knn_set(x, points, h_x)?;
    let in_set = in_knn_set(x, points, field)?;
    let pos_only = out_set
        .iter()
        .copied()
        .filter(|i| in_set.binary_search(i).is_err())
        .collect();
    let neg_only = in_set
        .iter()
        .copied()
        .filter(|i| out_set.binary_search(i).is_err())
        .collect();
    Ok(NeighborSets {
        out_set,
        in_set,
        pos_only,
        neg_only,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps1(coords: &[f64]) -> PointSet<f64> {
        PointSet::from_flat(coords.to_vec(), 1).unwrap()
    }

    #[test]
    fn knn_bandwidths_first_neighbor() {
        let f = knn_bandwidths(&ps1(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(f.h, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn knn_bandwidths_second_neighbor() {
        let f = knn_bandwidths(&ps1(&[0.0, 1.0, 3.0]), 2).unwrap();
        assert_eq!(f.h, vec![3.0, 2.0, 3.0]);
    }

    #[test]
    fn knn_bandwidths_duplicate_clamp() {
        let f = knn_bandwidths(&ps1(&[0.0, 0.0, 5.0]), 1).unwrap();
        let eps = 1e-12 * 5.0;
        assert_eq!(f.h, vec![eps, eps, 5.0]);
    }

    #[test]
    fn knn_bandwidths_k_out_of_range() {
        assert!(matches!(
            knn_bandwidths(&ps1(&[0.0, 1.0]), 2),
            Err(Error::NeighborCountOutOfRange { .. })
        ));
        assert!(matches!(
            knn_bandwidths(&ps1(&[0.0]), 1),
            Err(Error::TooFewPoints)
        ));
    }

    #[test]
    fn probe_bandwidth_basic() {
        let ps = ps1(&[1.0, 2.0, 10.0]);
        assert_eq!(probe_bandwidth(&[0.0], &ps, 2).unwrap(), 2.0);
        // coincident sample counts, zero clamps
        let h = probe_bandwidth(&[1.0], &ps, 1).unwrap();
        assert_eq!(h, 1e-12 * 9.0);
        // symmetric tie: either neighbor gives 5
        assert_eq!(probe_bandwidth(&[5.0], &ps1(&[0.0, 10.0]), 1).unwrap(), 5.0);
    }

    #[test]
    fn out_knn_set_cases() {
        let ps = ps1(&[0.0, 1.0, 3.0]);
        assert_eq!(out_knn_set(&[0.0], &ps, 1.0).unwrap(), vec![0, 1]);
        assert_eq!(out_knn_set(&[0.0], &ps, 0.5).unwrap(), vec![0]);
        assert_eq!(out_knn_set(&[0.0], &ps, 10.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn in_knn_set_cases() {
        let ps = ps1(&[0.0, 1.0, 3.0]);
        let field = BandwidthField {
            h: vec![1.0, 1.0, 2.0],
            k_neighbors: 1,
        };
        assert_eq!(in_knn_set(&[0.0], &ps, &field).unwrap(), vec![0, 1]);
        assert_eq!(in_knn_set(&[2.0], &ps, &field).unwrap(), vec![1, 2]);
        assert!(in_knn_set(&[100.0], &ps, &field).unwrap().is_empty());
    }

    #[test]
    fn bidirectional_sets_cases() {
        let ps = ps1(&[0.0, 1.0, 3.0]);
        let field = BandwidthField {
            h: vec![1.0, 1.0, 2.0],
            k_neighbors: 1,
        };
        let sets = bidirectional_sets(&[0.0], &ps, &field, 3.0).unwrap();
        assert_eq!(sets.out_set, vec![0, 1, 2]);
        assert_eq!(sets.in_set, vec![0, 1]);
        assert_eq!(sets.pos_only, vec![2]);
        assert!(sets.neg_only.is_empty());
    }

    #[test]
    fn set_membership_matches_epanechnikov_indicator() {
        use crate::kernels::KernelProfile;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(5..20);
            let d = rng.gen_range(1..4);
            let coords: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ps = PointSet::from_flat(coords, d).unwrap();
            let k = rng.gen_range(1..n.min(4));
            let field = knn_bandwidths(&ps, k).unwrap();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let h_x = probe_bandwidth(&x, &ps, k).unwrap();
            let out = out_knn_set(&x, &ps, h_x).unwrap();
            let inn = in_knn_set(&x, &ps, &field).unwrap();
            for i in 0..ps.len() {
                let g_out = KernelProfile::Epanechnikov
                    .profile_g(scaled_sq_dist(&x, ps.point(i), h_x));
                assert_eq!(out.contains(&i), g_out == 1.0);
                let g_in = KernelProfile::Epanechnikov
                    .profile_g(scaled_sq_dist(&x, ps.point(i), field.h[i]));
                assert_eq!(inn.contains(&i), g_in == 1.0);
            }
        }
    }

    #[test]
    fn out_set_at_sample_has_at_least_k_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(4..15);
            let coords: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let ps = PointSet::from_flat(coords, 2).unwrap();
            let k = rng.gen_range(1..n - 1);
            for i in 0..n {
                let x = ps.point(i).to_vec();
                // self-excluded ranking: h = distance to k-th other sample
                let mut dists: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| euclid(&x, ps.point(j)))
                    .collect();
                let h = kth_smallest(&mut dists, k);
                if h <= 0.0 {
                    continue;
                }
                let out = out_knn_set(&x, &ps, h).unwrap();
                assert!(out.len() >= k, "|K+| = {} < k = {}", out.len(), k);
            }
        }
    }

    proptest! {
        #[test]
        fn knn_bandwidths_permutation_equivariant(
            coords in proptest::collection::vec(-10.0f64..10.0, 12),
        ) {
            let ps = PointSet::from_flat(coords.clone(), 2).unwrap();
            let f = knn_bandwidths(&ps, 2).unwrap();
            // reverse the points
            let mut rows: Vec<Vec<f64>> = ps.iter().map(|p| p.to_vec()).collect();
            rows.reverse();
            let ps2 = PointSet::from_rows(&rows).unwrap();
            let f2 = knn_bandwidths(&ps2, 2).unwrap();
            let rev: Vec<f64> = f.h.iter().rev().copied().collect();
            prop_assert_eq!(rev, f2.h);
        }
    }
}
