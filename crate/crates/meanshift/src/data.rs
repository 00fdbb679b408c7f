//! Point-set representation, CSV/label I/O, and seeded Gaussian-mixture
//! generation.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::euclid;
use crate::scalar::{real, Real};

/// An n×d set of sample points, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    data: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Real> PointSet<T> {
    /// Builds a point set from a flat row-major buffer of `n·d` coordinates.
    pub fn from_flat(data: Vec<T>, d: usize) -> Result<Self> {
        if d == 0 || data.is_empty() || data.len() % d != 0 {
            return Err(Error::EmptyPointSet);
        }
        let n = data.len() / d;
        for (row, chunk) in data.chunks(d).enumerate() {
            if chunk.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { row });
            }
        }
        Ok(Self { data, n, d })
    }

    /// Builds a point set from per-point rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected: d,
                    found: r.len(),
                });
            }
        }
        Self::from_flat(rows.concat(), d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Coordinates of point `i`.
    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.d)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Maximum pairwise distance; 0 when all points coincide.
    pub fn diameter(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let dist = euclid(self.point(i), self.point(j));
                if dist > best {
                    best = dist;
                }
            }
        }
        best
    }
}

/// Per-point cluster assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    assignments: Vec<usize>,
}

impl Labels {
    pub fn new(assignments: Vec<usize>) -> Self {
        Self { assignments }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.assignments
    }

    /// Number of distinct cluster ids.
    pub fn n_clusters(&self) -> usize {
        let mut seen: Vec<usize> = self.assignments.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Reads a headerless CSV of comma-separated decimal floats, one point per
/// row. Errors carry 1-based line numbers.
pub fn load_points<T: Real>(path: impl AsRef<Path>) -> Result<PointSet<T>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut data: Vec<T> = Vec::new();
    let mut d = 0usize;
    let mut n = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = 0usize;
        for token in line.split(',') {
            let token = token.trim();
            let v: f64 = token.parse().map_err(|_| Error::InvalidNumber {
                line: idx + 1,
                token: token.to_string(),
            })?;
            data.push(real(v));
            cols += 1;
        }
        if n == 0 {
            d = cols;
        } else if cols != d {
            return Err(Error::RaggedRow {
                line: idx + 1,
                expected: d,
                found: cols,
            });
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    PointSet::from_flat(data, d)
}

/// Writes a point set as headerless CSV.
pub fn save_points<T: Real>(points: &PointSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for p in points.iter() {
        let row: Vec<String> = p.iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes labels one integer per line, newline-terminated.
pub fn save_labels(labels: &Labels, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for &l in labels.as_slice() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a label file, one non-negative integer per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut assignments = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: usize = line.parse().map_err(|_| Error::InvalidNumber {
            line: idx + 1,
            token: line.to_string(),
        })?;
        assignments.push(v);
    }
    Ok(Labels::new(assignments))
}

/// One Gaussian mixture component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianComponent<T> {
    pub mean: Vec<T>,
    /// d×d symmetric positive-definite covariance.
    pub covariance: Vec<Vec<T>>,
    pub count: usize,
}

/// A seeded mixture specification; identical specs produce bit-identical
/// samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec<T> {
    pub components: Vec<GaussianComponent<T>>,
    pub seed: u64,
}

impl<T: Real> SynthSpec<T> {
    /// Four unit-covariance Gaussians at (±5, ±5), 250 points each.
    pub fn four_gauss(seed: u64) -> Self {
        let mut components = Vec::new();
        for (mx, my) in [(5.0, 5.0), (5.0, -5.0), (-5.0, 5.0), (-5.0, -5.0)] {
            components.push(GaussianComponent {
                mean: vec![real(mx), real(my)],
                covariance: vec![vec![real(1.0), real(0.0)], vec![real(0.0), real(1.0)]],
                count: 250,
            });
        }
        Self { components, seed }
    }

    /// Ground-truth component means as a point set.
    pub fn means(&self) -> Result<PointSet<T>> {
        let rows: Vec<Vec<T>> = self.components.iter().map(|c| c.mean.clone()).collect();
        PointSet::from_rows(&rows)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
fn cholesky<T: Real>(m: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let d = m.len();
    for row in m {
        if row.len() != d {
            return Err(Error::NotPositiveDefinite);
        }
    }
    let mut l = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= T::zero() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Deterministic standard-normal source: ChaCha8 uniforms through the
/// Box–Muller transform, pairs cached.
struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Draws the mixture component by component in spec order, returning the
/// samples and their ground-truth component labels.
pub fn synth_gaussians<T: Real>(spec: &SynthSpec<T>) -> Result<(PointSet<T>, Labels)> {
    if spec.components.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let d = spec.components[0].mean.len();
    let mut normal = NormalSource::new(spec.seed);
    let mut data: Vec<T> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (ci, comp) in spec.components.iter().enumerate() {
        if comp.mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: comp.mean.len(),
            });
        }
        if comp.count == 0 {
            return Err(Error::InvalidParameter(
                "component count must be positive".into(),
            ));
        }
        let l = cholesky(&comp.covariance)?;
        for _ in 0..comp.count {
            let z: Vec<T> = (0..d).map(|_| real(normal.next())).collect();
            for i in 0..d {
                let mut x = comp.mean[i];
                for k in 0..=i {
                    x += l[i][k] * z[k];
                }
                data.push(x);
            }
            labels.push(ci);
        }
    }
    Ok((PointSet::from_flat(data, d)?, Labels::new(labels)))
}
