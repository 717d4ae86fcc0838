//! Generative-quality metrics over feature sets: FID, the k-NN manifold
//! metrics (precision, recall, density, coverage) and CLIP-Score, plus the
//! feature file formats and the built-in trajectory featurizer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::pose::{angle_delta, CameraTrajectory};

pub const BINARY_MAGIC: &[u8; 5] = b"FSET1";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("row count mismatch: {0} vs {1}")]
    RowCountMismatch(usize, usize),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("k = {k} must satisfy 1 <= k < {n}")]
    BadK { k: usize, n: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("row {0} has zero norm")]
    ZeroNorm(usize),
    #[error("feature set must have positive dimension")]
    ZeroDimension,
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// `N` row vectors of dimension `D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, MetricsError> {
        if dim == 0 {
            return Err(MetricsError::ZeroDimension);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(MetricsError::DimensionMismatch(dim, data.len() % dim));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        Ok(FeatureSet { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(MetricsError::DimensionMismatch(dim, bad.len()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }
}

fn same_dim(a: &FeatureSet, b: &FeatureSet) -> Result<(), MetricsError> {
    if a.dim != b.dim {
        Err(MetricsError::DimensionMismatch(a.dim, b.dim))
    } else {
        Ok(())
    }
}

/// Mean and unbiased covariance.
fn moments(x: &FeatureSet) -> (DVector<f64>, DMatrix<f64>) {
    let m = x.matrix();
    let n = x.len() as f64;
    let mean = m.row_sum().transpose() / n;
    let mut centered = m;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n - 1.0);
    (mean, cov)
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Frechet distance between Gaussian fits of the two sets.
pub fn fid(real: &FeatureSet, gen: &FeatureSet) -> Result<f64, MetricsError> {
    same_dim(real, gen)?;
    for s in [real, gen] {
        if s.len() < 2 {
            return Err(MetricsError::TooFewRows { need: 2, got: s.len() });
        }
    }
    let (mu_r, cov_r) = moments(real);
    let (mu_g, cov_g) = moments(gen);
    // tr sqrt(Sg^1/2 Sr Sg^1/2) is the nuclear norm of Sg^1/2 Sr^1/2; the
    // singular values avoid square roots of tiny eigenvalues.
    let cross: f64 = (psd_sqrt(&cov_g) * psd_sqrt(&cov_r)).singular_values().sum();
    let value = (mu_r - mu_g).norm_squared() + cov_r.trace() + cov_g.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

/// Euclidean distance, accumulated in index order.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifoldParams {
    pub k: usize,
}

impl Default for ManifoldParams {
    fn default() -> Self {
        ManifoldParams { k: 5 }
    }
}

fn check_k(k: usize, n: usize) -> Result<(), MetricsError> {
    if k == 0 || k >= n {
        Err(MetricsError::BadK { k, n })
    } else {
        Ok(())
    }
}

/// Distance from row `index` to its `k`-th nearest other row. Coincident
/// rows count as neighbors at distance zero.
pub fn knn_radius(set: &FeatureSet, index: usize, k: usize) -> Result<f64, MetricsError> {
    check_k(k, set.len())?;
    Ok(radius_unchecked(set, index, k))
}

fn radius_unchecked(set: &FeatureSet, index: usize, k: usize) -> f64 {
    let x = set.row(index);
    let mut d: Vec<f64> = (0..set.len())
        .filter(|&j| j != index)
        .map(|j| distance(x, set.row(j)))
        .collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// k-NN radii of every row.
pub fn knn_radii(set: &FeatureSet, k: usize) -> Result<Vec<f64>, MetricsError> {
    check_k(k, set.len())?;
    Ok((0..set.len())
        .into_par_iter()
        .map(|i| radius_unchecked(set, i, k))
        .collect())
}

/// `counts[j]` = number of manifold balls containing `queries[j]`
/// (closed balls).
fn ball_counts(manifold: &FeatureSet, radii: &[f64], queries: &FeatureSet) -> Vec<usize> {
    (0..queries.len())
        .into_par_iter()
        .map(|j| {
            let y = queries.row(j);
            (0..manifold.len())
                .filter(|&i| distance(y, manifold.row(i)) <= radii[i])
                .count()
        })
        .collect()
}

fn prepared(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<Vec<f64>, MetricsError> {
    same_dim(real, gen)?;
    if gen.is_empty() {
        return Err(MetricsError::TooFewRows { need: 1, got: 0 });
    }
    knn_radii(real, p.k)
}

/// Fraction of generated rows inside at least one real k-NN ball.
pub fn precision(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<f64, MetricsError> {
    let radii = prepared(real, gen, p)?;
    let inside = ball_counts(real, &radii, gen).iter().filter(|&&c| c > 0).count();
    Ok(inside as f64 / gen.len() as f64)
}

/// Precision with the roles of the two sets swapped.
pub fn recall(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<f64, MetricsError> {
    precision(gen, real, p)
}

/// Mean number of real balls containing each generated row, over `k`.
pub fn density(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<f64, MetricsError> {
    let radii = prepared(real, gen, p)?;
    let total: usize = ball_counts(real, &radii, gen).iter().sum();
    Ok(total as f64 / (p.k as f64 * gen.len() as f64))
}

/// Fraction of real rows whose k-NN ball holds at least one generated row.
pub fn coverage(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<f64, MetricsError> {
    let radii = prepared(real, gen, p)?;
    let covered = (0..real.len())
        .into_par_iter()
        .filter(|&i| {
            let x = real.row(i);
            gen.rows().any(|y| distance(y, x) <= radii[i])
        })
        .count();
    Ok(covered as f64 / real.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldScores {
    pub precision: f64,
    pub recall: f64,
    pub density: f64,
    pub coverage: f64,
}

/// All four manifold metrics, sharing the radius computations.
pub fn manifold_scores(real: &FeatureSet, gen: &FeatureSet, p: ManifoldParams) -> Result<ManifoldScores, MetricsError> {
    let real_radii = prepared(real, gen, p)?;
    let gen_radii = prepared(gen, real, p)?;
    let counts = ball_counts(real, &real_radii, gen);
    let m = gen.len() as f64;
    let covered = (0..real.len())
        .into_par_iter()
        .filter(|&i| gen.rows().any(|y| distance(y, real.row(i)) <= real_radii[i]))
        .count();
    let recalled = ball_counts(gen, &gen_radii, real).iter().filter(|&&c| c > 0).count();
    Ok(ManifoldScores {
        precision: counts.iter().filter(|&&c| c > 0).count() as f64 / m,
        recall: recalled as f64 / real.len() as f64,
        density: counts.iter().sum::<usize>() as f64 / (p.k as f64 * m),
        coverage: covered as f64 / real.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipScoreMode {
    /// `scale` times the mean cosine.
    #[default]
    Mean,
    /// `scale` times the summed cosine.
    Sum,
}

/// Cosine similarity of paired rows, aggregated per `mode` and scaled.
pub fn clip_score(traj_emb: &FeatureSet, prompt_emb: &FeatureSet, scale: f64, mode: ClipScoreMode) -> Result<f64, MetricsError> {
    same_dim(traj_emb, prompt_emb)?;
    if traj_emb.len() != prompt_emb.len() {
        return Err(MetricsError::RowCountMismatch(traj_emb.len(), prompt_emb.len()));
    }
    if traj_emb.is_empty() {
        return Err(MetricsError::TooFewRows { need: 1, got: 0 });
    }
    let mut sum = 0.0;
    for (i, (c, v)) in traj_emb.rows().zip(prompt_emb.rows()).enumerate() {
        let nc = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nc == 0.0 || nv == 0.0 {
            return Err(MetricsError::ZeroNorm(i));
        }
        let dot: f64 = c.iter().zip(v).map(|(a, b)| a * b).sum();
        sum += (dot / (nc * nv)).clamp(-1.0, 1.0);
    }
    Ok(match mode {
        ClipScoreMode::Mean => scale * sum / traj_emb.len() as f64,
        ClipScoreMode::Sum => scale * sum,
    })
}

/// Flattens a trajectory into per-frame position offsets from frame 0,
/// wrapped Euler offsets from frame 0 and fov.
pub fn trajectory_features(traj: &CameraTrajectory) -> Vec<f64> {
    let mut out = Vec::with_capacity(traj.len() * 7);
    let Some(first) = traj.frames.first() else {
        return out;
    };
    for pose in &traj.frames {
        out.extend((pose.position - first.position).iter());
        out.extend((0..3).map(|a| angle_delta(first.rotation[a], pose.rotation[a])));
        out.push(pose.fov);
    }
    out
}

pub fn featurize(trajectories: &[CameraTrajectory]) -> Result<FeatureSet, MetricsError> {
    let rows: Vec<Vec<f64>> = trajectories.iter().map(trajectory_features).collect();
    FeatureSet::from_rows(&rows)
}

/// Per-dimension affine standardization. Constant dimensions are only
/// centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(set: &FeatureSet) -> Result<Self, MetricsError> {
        if set.len() < 2 {
            return Err(MetricsError::TooFewRows { need: 2, got: set.len() });
        }
        let n = set.len() as f64;
        let mut mean = vec![0.0; set.dim];
        for row in set.rows() {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; set.dim];
        for row in set.rows() {
            var.iter_mut()
                .zip(row.iter().zip(&mean))
                .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / (n - 1.0)).sqrt();
                if s > 1e-12 { s } else { 1.0 }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, set: &FeatureSet) -> Result<FeatureSet, MetricsError> {
        if set.dim != self.mean.len() {
            return Err(MetricsError::DimensionMismatch(self.mean.len(), set.dim));
        }
        let data = set
            .rows()
            .flat_map(|row| {
                row.iter()
                    .zip(self.mean.iter().zip(&self.scale))
                    .map(|(x, (m, s))| (x - m) / s)
            })
            .collect();
        FeatureSet::new(set.dim, data)
    }
}

pub fn write_text(set: &FeatureSet, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{} {}", set.dim, set.len())?;
    for row in set.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_binary(set: &FeatureSet, w: &mut impl Write) -> std::io::Result<()> {
    let too_big = |_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "feature set too large");
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&u32::try_from(set.dim).map_err(too_big)?.to_le_bytes())?;
    w.write_all(&u32::try_from(set.len()).map_err(too_big)?.to_le_bytes())?;
    for x in &set.data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn format_err(line: usize, message: impl Into<String>) -> MetricsError {
    MetricsError::Format {
        line,
        message: message.into(),
    }
}

pub fn read_text(r: impl BufRead) -> Result<FeatureSet, MetricsError> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let (hline, header) = lines.next().ok_or_else(|| format_err(1, "missing header"))?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let [d, n] = parts[..] else {
        return Err(format_err(hline, "header must be \"D N\""));
    };
    let dim: usize = d.parse().map_err(|_| format_err(hline, "bad dimension"))?;
    let n: usize = n.parse().map_err(|_| format_err(hline, "bad row count"))?;
    let mut data = Vec::with_capacity(dim.saturating_mul(n));
    let mut rows = 0;
    for (line, text) in lines {
        let text = text?;
        let before = data.len();
        for tok in text.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| format_err(line, format!("bad number {tok:?}")))?);
        }
        if data.len() - before != dim {
            return Err(format_err(line, format!("expected {dim} values, got {}", data.len() - before)));
        }
        rows += 1;
    }
    if rows != n {
        return Err(format_err(0, format!("header declares {n} rows, found {rows}")));
    }
    FeatureSet::new(dim, data)
}

pub fn read_binary(mut r: impl Read) -> Result<FeatureSet, MetricsError> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(format_err(0, "bad magic"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    let mut data = Vec::with_capacity(dim.saturating_mul(n));
    let mut buf = [0u8; 8];
    for _ in 0..dim * n {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    FeatureSet::new(dim, data)
}

/// Reads either format, detected from the leading magic bytes.
pub fn read_features(path: &Path) -> Result<FeatureSet, MetricsError> {
    let mut r = BufReader::new(File::open(path)?);
    let binary = r.fill_buf()?.starts_with(BINARY_MAGIC);
    if binary {
        read_binary(r)
    } else {
        read_text(r)
    }
}

pub fn write_features(set: &FeatureSet, path: &Path, binary: bool) -> Result<(), MetricsError> {
    let mut w = BufWriter::new(File::create(path)?);
    if binary {
        write_binary(set, &mut w)?;
    } else {
        write_text(set, &mut w)?;
    }
    w.flush()?;
    Ok(())
}
