//! Iterative mode seeking, the blurring round loop, and mode merging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{knn_bandwidths, BandwidthField};
use crate::data::{Labels, PointSet};
use crate::error::{Error, Result};
use crate::geom::euclid;
use crate::scalar::{real, Real};
use crate::strategies::{
    pairwise_matrices, strategy_weights, strategy_weights_with_hx, weighted_centroid, Strategy,
    StrategyParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    /// Each sample is an independent probe seeking its mode; the sample
    /// set never changes.
    Probe,
    /// The whole sample set is replaced by its shifted version each round.
    Blur,
}

/// Convergence and merging controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EngineConfig<T> {
    /// Stop when the shift magnitude drops to this threshold.
    pub epsilon: T,
    pub max_iter: usize,
    /// Single-linkage distance for grouping converged points into modes.
    pub merge_tol: T,
    pub mode: EngineMode,
}

impl<T: Real> EngineConfig<T> {
    /// Scale-free defaults: epsilon = 1e−3 × data diameter, merge
    /// tolerance 5 × epsilon, 100 iterations, probe mode.
    pub fn for_points(points: &PointSet<T>) -> Self {
        let diam = points.diameter();
        let eps = if diam > T::zero() {
            real::<T>(1e-3) * diam
        } else {
            real(1e-9)
        };
        Self {
            epsilon: eps,
            max_iter: 100,
            merge_tol: real::<T>(5.0) * eps,
            mode: EngineMode::Probe,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= T::zero() || self.merge_tol <= T::zero() || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "epsilon, merge tolerance, and max iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Clustering output: distinct mode coordinates plus per-point bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult<T> {
    pub modes: PointSet<T>,
    pub labels: Labels,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
}

/// Runs the iteration `y ← Σ w_i x_i / Σ w_i` from `start` until the shift
/// magnitude falls to `epsilon` or `max_iter` is reached. The probe
/// bandwidth is recomputed each step. Zero-total weights freeze the probe
/// in place (converged).
pub fn seek_mode<T: Real>(
    start: &[T],
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    params: &StrategyParams<T>,
    config: &EngineConfig<T>,
) -> Result<(Vec<T>, usize, bool)> {
    config.validate()?;
    let mut y = start.to_vec();
    for iter in 1..=config.max_iter {
        let weights = strategy_weights(&y, points, field, params)?;
        if weights.total == T::zero() {
            return Ok((y, iter, true));
        }
        let next = weighted_centroid(&weights, points)?;
        let shift = euclid(&next, &y);
        y = next;
        if shift <= config.epsilon {
            return Ok((y, iter, true));
        }
    }
    Ok((y, config.max_iter, false))
}

/// One blurring round: every point simultaneously replaced by its
/// weighted centroid, with bandwidths taken from the current set.
fn blur_round<T: Real>(
    points: &PointSet<T>,
    field: &BandwidthField<T>,
    params: &StrategyParams<T>,
) -> Result<PointSet<T>> {
    let n = points.len();
    if params.strategy == Strategy::Bams {
        let (_, _, _, p) = pairwise_matrices(points, field, params)?;
        let d = points.dim();
        let mut next = vec![T::zero(); n * d];
        next.par_chunks_mut(d).enumerate().try_for_each(
            |(i, row)| -> Result<()> {
                for j in 0..n {
                    let pij = p.get(i, j);
                    for (c, &xc) in row.iter_mut().zip(points.point(j)) {
                        *c += pij * xc;
                    }
                }
                Ok(())
            },
        )?;
        PointSet::from_flat(next, d)
    } else {
        let rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<T>> {
                let weights =
                    strategy_weights_with_hx(points.point(i), field.h[i], points, field, params)?;
                if weights.total == T::zero() {
                    Ok(points.point(i).to_vec())
                } else {
                    weighted_centroid(&weights, points)
                }
            })
            .collect::<Result<_>>()?;
        PointSet::from_rows(&rows)
    }
}

/// Repeats blurring rounds until the maximum per-point displacement is at
/// most `epsilon` or `max_iter` rounds have run. knn bandwidths are
/// rebuilt from the current point set every round.
pub fn blur_iterate<T: Real>(
    points: &PointSet<T>,
    params: &StrategyParams<T>,
    config: &EngineConfig<T>,
) -> Result<(PointSet<T>, usize)> {
    config.validate()?;
    params.validate()?;
    if points.len() == 1 {
        return Ok((points.clone(), 1));
    }
    let mut current = points.clone();
    for round in 1..=config.max_iter {
        let k = params.k_neighbors.min(current.len() - 1);
        let field = knn_bandwidths(&current, k)?;
        let next = blur_round(&current, &field, params)?;
        let max_disp = current
            .iter()
            .zip(next.iter())
            .map(|(a, b)| euclid(a, b))
            .fold(T::zero(), |acc, v| if v > acc { v } else { acc });
        current = next;
        if max_disp <= config.epsilon {
            return Ok((current, round));
        }
    }
    Ok((current, config.max_iter))
}

/// Single-linkage grouping of converged points at `merge_tol`; the mode
/// coordinate is the group centroid, labels in first-occurrence order.
pub fn merge_modes<T: Real>(
    converged_points: &PointSet<T>,
    config: &EngineConfig<T>,
) -> Result<ModeResult<T>> {
    config.validate()?;
    let n = converged_points.len();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for i in 0..n {
        for j in (i + 1)..n {
            if euclid(converged_points.point(i), converged_points.point(j)) <= config.merge_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }

    let mut label_of_root: Vec<Option<usize>> = vec![None; n];
    let mut assignments = Vec::with_capacity(n);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let label = match label_of_root[root] {
            Some(l) => l,
            None => {
                let l = groups.len();
                label_of_root[root] = Some(l);
                groups.push(Vec::new());
                l
            }
        };
        groups[label].push(i);
        assignments.push(label);
    }

    let d = converged_points.dim();
    let mut mode_rows = Vec::with_capacity(groups.len());
    for members in &groups {
        let mut centroid = vec![T::zero(); d];
        for &i in members {
            for (c, &x) in centroid.iter_mut().zip(converged_points.point(i)) {
                *c += x;
            }
        }
        let count = real::<T>(members.len() as f64);
        for c in &mut centroid {
            *c /= count;
        }
        mode_rows.push(centroid);
    }

    Ok(ModeResult {
        modes: PointSet::from_rows(&mode_rows)?,
        labels: Labels::new(assignments),
        converged: vec![true; n],
        iterations: vec![0; n],
    })
}

fn nearest_mode<T: Real>(x: &[T], modes: &PointSet<T>) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, m) in modes.iter().enumerate() {
        let dist = euclid(x, m);
        if dist < best_d {
            best_d = dist;
            best = i;
        }
    }
    best
}

/// Full clustering: per-sample seeks (probe mode) or the blurring loop,
/// followed by mode merging. Non-converged points get the nearest mode's
/// label.
pub fn cluster<T: Real>(
    points: &PointSet<T>,
    params: &StrategyParams<T>,
    config: &EngineConfig<T>,
) -> Result<ModeResult<T>> {
    config.validate()?;
    params.validate()?;
    let n = points.len();
    if n == 1 {
        return Ok(ModeResult {
            modes: points.clone(),
            labels: Labels::new(vec![0]),
            converged: vec![true],
            iterations: vec![1],
        });
    }

    let (endpoints, iterations, converged) = match config.mode {
        EngineMode::Probe => {
            let k = params.k_neighbors.min(n - 1);
            let field = knn_bandwidths(points, k)?;
            let seeks: Vec<(Vec<T>, usize, bool)> = (0..n)
                .into_par_iter()
                .map(|i| seek_mode(points.point(i), points, &field, params, config))
                .collect::<Result<_>>()?;
            let mut endpoints = Vec::with_capacity(n);
            let mut iterations = Vec::with_capacity(n);
            let mut converged = Vec::with_capacity(n);
            for (y, it, c) in seeks {
                endpoints.push(y);
                iterations.push(it);
                converged.push(c);
            }
            (endpoints, iterations, converged)
        }
        EngineMode::Blur => {
            let (blurred, rounds) = blur_iterate(points, params, config)?;
            let endpoints: Vec<Vec<T>> = blurred.iter().map(|p| p.to_vec()).collect();
            let done = rounds < config.max_iter;
            (endpoints, vec![rounds; n], vec![done; n])
        }
    };

    // merge converged endpoints; attach stragglers to their nearest mode
    let conv_rows: Vec<Vec<T>> = endpoints
        .iter()
        .zip(&converged)
        .filter(|(_, &c)| c)
        .map(|(p, _)| p.clone())
        .collect();
    let merged = if conv_rows.is_empty() {
        merge_modes(&PointSet::from_rows(&endpoints)?, config)?
    } else {
        merge_modes(&PointSet::from_rows(&conv_rows)?, config)?
    };

    let assignments = if conv_rows.is_empty() {
        merged.labels.as_slice().to_vec()
    } else {
        let mut conv_iter = merged.labels.as_slice().iter();
        endpoints
            .iter()
            .zip(&converged)
            .map(|(p, &c)| {
                if c {
                    *conv_iter.next().expect("one label per converged point")
                } else {
                    nearest_mode(p, &merged.modes)
                }
            })
            .collect()
    };

    Ok(ModeResult {
        modes: merged.modes,
        labels: Labels::new(assignments),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_gaussians, SynthSpec};
    use crate::kernels::{density_estimate, KernelProfile};

    fn ps1(coords: &[f64]) -> PointSet<f64> {
        PointSet::from_flat(coords.to_vec(), 1).unwrap()
    }

    fn params(strategy: Strategy, kernel: KernelProfile, k: usize) -> StrategyParams<f64> {
        StrategyParams {
            strategy,
            kernel,
            k_neighbors: k,
            lambda: 0.975,
            beta: 100.0,
            fixed_h: Some(1.0),
        }
    }

    fn config(eps: f64, merge_tol: f64, mode: EngineMode) -> EngineConfig<f64> {
        EngineConfig {
            epsilon: eps,
            max_iter: 100,
            merge_tol,
            mode,
        }
    }

    #[test]
    fn seek_from_single_sample_is_fixed_point() {
        let ps = ps1(&[2.0, 4.0]);
        let field = knn_bandwidths(&ps, 1).unwrap();
        let p = params(Strategy::Eams, KernelProfile::Epanechnikov, 1);
        let cfg = config(1e-6, 1e-5, EngineMode::Probe);
        // probe at the left sample: its ball holds only itself
        let (mode, iters, conv) = seek_mode(&[2.0], &ps, &field, &p, &cfg).unwrap();
        assert_eq!(mode, vec![2.0]);
        assert_eq!(iters, 1);
        assert!(conv);
    }

    #[test]
    fn seek_symmetric_pair_midpoint() {
        let ps = ps1(&[-1.0, 1.0]);
        let field = knn_bandwidths(&ps, 1).unwrap();
        let p = params(Strategy::Fms, KernelProfile::Epanechnikov, 1);
        let mut p = p;
        p.fixed_h = Some(5.0);
        let cfg = config(1e-9, 1e-8, EngineMode::Probe);
        let (mode, _, conv) = seek_mode(&[0.0], &ps, &field, &p, &cfg).unwrap();
        assert!(conv);
        assert_eq!(mode, vec![0.0]);
    }

    #[test]
    fn seek_two_gaussian_mixture_finds_near_mode() {
        let spec = SynthSpec::<f64> {
            components: vec![
                crate::data::GaussianComponent {
                    mean: vec![-3.0],
                    covariance: vec![vec![0.25]],
                    count: 200,
                },
                crate::data::GaussianComponent {
                    mean: vec![3.0],
                    covariance: vec![vec![0.25]],
                    count: 200,
                },
            ],
            seed: 3,
        };
        let (ps, _) = synth_gaussians(&spec).unwrap();
        let field = knn_bandwidths(&ps, 20).unwrap();
        let p = params(Strategy::Eams, KernelProfile::Epanechnikov, 20);
        let cfg = config(1e-5, 1e-4, EngineMode::Probe);
        let (mode, _, converged) = seek_mode(&[2.5], &ps, &field, &p, &cfg).unwrap();

        // oracle: grid argmax of the density estimate over the positive lobe
        let mut best_x = 0.0;
        let mut best_f = f64::NEG_INFINITY;
        let mut x = 0.0;
        while x <= 5.0 {
            let f = density_estimate(&[x], &ps, &field.h, KernelProfile::Epanechnikov).unwrap();
            if f > best_f {
                best_f = f;
                best_x = x;
            }
            x += 0.01;
        }
        assert!((best_x - 3.0).abs() < 0.3, "grid mode at {best_x}");
        // The seek converges to a genuine fixed point of the knn ball-mean
        // map inside the positive lobe. With k = 20 of 400 samples the
        // bandwidths are narrow enough that a sample clump short of the
        // lobe centre can itself be stationary, so the endpoint is checked
        // against the lobe, not the peak.
        assert!(converged);
        assert!(
            mode[0] > 2.0 && mode[0] < 4.0,
            "seek mode at {}",
            mode[0]
        );
    }

    #[test]
    fn blur_single_point_unchanged() {
        let ps = ps1(&[7.0]);
        let p = params(Strategy::Bams, KernelProfile::Gaussian, 1);
        let cfg = config(1e-6, 1e-5, EngineMode::Blur);
        let (out, rounds) = blur_iterate(&ps, &p, &cfg).unwrap();
        assert_eq!(out, ps);
        assert_eq!(rounds, 1);
    }

    #[test]
    fn blur_symmetric_pair_meets_in_middle() {
        let ps = ps1(&[-1.0, 1.0]);
        let p = params(Strategy::Bams, KernelProfile::Epanechnikov, 1);
        let mut cfg = config(1e-9, 1e-8, EngineMode::Blur);
        cfg.max_iter = 1;
        // k = 1 gives each point bandwidth 2, so G is all ones and every
        // P row is [0.5, 0.5]
        let (out, _) = blur_iterate(&ps, &p, &cfg).unwrap();
        assert_eq!(out.point(0), &[0.0]);
        assert_eq!(out.point(1), &[0.0]);
    }

    #[test]
    fn merge_modes_threshold_grouping() {
        let ps = ps1(&[0.0, 0.001, 5.0]);
        let cfg = config(1e-6, 0.01, EngineMode::Probe);
        let res = merge_modes(&ps, &cfg).unwrap();
        assert_eq!(res.labels.as_slice(), &[0, 0, 1]);
        assert!((res.modes.point(0)[0] - 0.0005).abs() < 1e-12);
        assert_eq!(res.modes.point(1)[0], 5.0);
    }

    #[test]
    fn merge_modes_identical_points() {
        let ps = ps1(&[2.0, 2.0, 2.0]);
        let cfg = config(1e-6, 0.01, EngineMode::Probe);
        let res = merge_modes(&ps, &cfg).unwrap();
        assert_eq!(res.labels.as_slice(), &[0, 0, 0]);
        assert_eq!(res.modes.len(), 1);
    }

    #[test]
    fn merge_modes_single_linkage_chains() {
        let ps = ps1(&[0.0, 0.009, 0.018]);
        let cfg = config(1e-6, 0.01, EngineMode::Probe);
        let res = merge_modes(&ps, &cfg).unwrap();
        assert_eq!(res.labels.as_slice(), &[0, 0, 0]);
    }

    #[test]
    fn merge_modes_permutation_stable_up_to_relabel() {
        let ps = ps1(&[0.0, 5.0, 0.001, 5.002]);
        let cfg = config(1e-6, 0.01, EngineMode::Probe);
        let a = merge_modes(&ps, &cfg).unwrap();
        let rev = ps1(&[5.002, 0.001, 5.0, 0.0]);
        let b = merge_modes(&rev, &cfg).unwrap();
        // canonical relabeling: map each labeling to first-occurrence ids
        let canon = |ls: &[usize]| -> Vec<usize> {
            let mut map = std::collections::HashMap::new();
            ls.iter()
                .map(|&l| {
                    let next = map.len();
                    *map.entry(l).or_insert(next)
                })
                .collect()
        };
        let fwd = canon(a.labels.as_slice());
        let mut rv = b.labels.as_slice().to_vec();
        rv.reverse();
        assert_eq!(fwd, canon(&rv));
    }

    #[test]
    fn cluster_single_point() {
        let ps = ps1(&[4.2]);
        let p = params(Strategy::Eams, KernelProfile::Gaussian, 1);
        let cfg = config(1e-6, 1e-5, EngineMode::Probe);
        let res = cluster(&ps, &p, &cfg).unwrap();
        assert_eq!(res.labels.as_slice(), &[0]);
        assert_eq!(res.modes.len(), 1);
    }

    #[test]
    fn cluster_deterministic() {
        let (ps, _) = synth_gaussians(&SynthSpec::<f64>::four_gauss(1)).unwrap();
        let p = params(Strategy::Eams, KernelProfile::Epanechnikov, 30);
        let cfg = EngineConfig::for_points(&ps);
        let a = cluster(&ps, &p, &cfg).unwrap();
        let b = cluster(&ps, &p, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_four_gaussians_eams() {
        let (ps, _) = synth_gaussians(&SynthSpec::<f64>::four_gauss(1)).unwrap();
        let p = params(Strategy::Eams, KernelProfile::Gaussian, 30);
        let cfg = EngineConfig::for_points(&ps);
        let res = cluster(&ps, &p, &cfg).unwrap();
        assert_eq!(res.modes.len(), 4, "modes: {:?}", res.modes);
        assert!(res.labels.as_slice().len() == 1000);
        assert!(res.modes.len() <= ps.len());
    }

}
