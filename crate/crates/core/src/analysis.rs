//! Embedding-space diagnostics: a three-component PCA and extractor
//! dispersion statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::extractor::ExtractorVec;
use crate::linalg::{axpy, dot};

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca3 {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, strongest first.
    pub basis: [Vec<f64>; 3],
    /// Sample-covariance variance along each basis row.
    pub variances: [f64; 3],
    pub projected: Vec<[f64; 3]>,
}

impl Pca3 {
    pub fn project(&self, point: &[f64]) -> [f64; 3] {
        let centered: Vec<f64> = point.iter().zip(&self.mean).map(|(p, m)| p - m).collect();
        [
            dot(&self.basis[0], &centered),
            dot(&self.basis[1], &centered),
            dot(&self.basis[2], &centered),
        ]
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = libm::sqrt(dot(v, v));
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    m.chunks_exact(v.len()).map(|row| dot(row, v)).collect()
}

/// Top-3 principal components by power iteration with deflation.
pub fn pca3(points: &[Vec<f64>]) -> Result<Pca3> {
    if points.len() < 4 {
        return Err(Error::EmptyInput("at least four points"));
    }
    let k = points[0].len();
    if k < 3 {
        return Err(Error::InvalidConfig("points need at least three dimensions"));
    }
    if points.iter().any(|p| p.len() != k) {
        return Err(Error::ShapeMismatch {
            context: "point dimension",
            expected: k,
            found: points.iter().map(Vec::len).find(|&l| l != k).unwrap_or(k),
        });
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; k];
    for p in points {
        axpy(1.0 / n, p, &mut mean);
    }
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, m)| a - m).collect())
        .collect();
    let mut cov = vec![0.0; k * k];
    for c in &centered {
        for i in 0..k {
            axpy(c[i] / (n - 1.0), c, &mut cov[i * k..(i + 1) * k]);
        }
    }
    let trace: f64 = (0..k).map(|i| cov[i * k + i]).sum();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut variances = [0.0; 3];
    for comp in 0..3 {
        // Start from the strongest remaining covariance column.
        let start = (0..k)
            .max_by(|&a, &b| {
                let na = dot(&cov[a * k..(a + 1) * k], &cov[a * k..(a + 1) * k]);
                let nb = dot(&cov[b * k..(b + 1) * k], &cov[b * k..(b + 1) * k]);
                na.total_cmp(&nb)
            })
            .unwrap_or(0);
        let mut v = cov[start * k..(start + 1) * k].to_vec();
        if normalize(&mut v) == 0.0 {
            return Err(Error::DegeneratePointSet);
        }
        for _ in 0..POWER_MAX_ITERATIONS {
            let mut next = mat_vec(&cov, &v);
            for b in &basis {
                let proj = dot(b, &next);
                axpy(-proj, b, &mut next);
            }
            if normalize(&mut next) == 0.0 {
                return Err(Error::DegeneratePointSet);
            }
            let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            v = next;
            if libm::sqrt(delta) < POWER_TOLERANCE {
                break;
            }
        }
        let lambda = dot(&v, &mat_vec(&cov, &v));
        if !(lambda > 1e-12 * trace.max(f64::MIN_POSITIVE)) {
            return Err(Error::DegeneratePointSet);
        }
        for i in 0..k {
            let scale = lambda * v[i];
            axpy(-scale, &v, &mut cov[i * k..(i + 1) * k]);
        }
        let largest = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if largest < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        variances[comp] = lambda;
        basis.push(v);
    }
    let basis: [Vec<f64>; 3] = [basis[0].clone(), basis[1].clone(), basis[2].clone()];
    let projected = centered
        .iter()
        .map(|c| [dot(&basis[0], c), dot(&basis[1], c), dot(&basis[2], c)])
        .collect();
    Ok(Pca3 {
        mean,
        basis,
        variances,
        projected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityStats {
    pub centroid: ExtractorVec,
    pub mean_distance: f64,
    pub max_distance: f64,
    /// Mean distance to the centroid relative to the centroid's norm.
    pub dispersion_ratio: f64,
}

pub fn extractor_stability(extractors: &[ExtractorVec]) -> Result<StabilityStats> {
    if extractors.len() < 2 {
        return Err(Error::EmptyInput("at least two extractors"));
    }
    let centroid = crate::extractor::preset_extractor(extractors)?;
    let distances: Vec<f64> = extractors.iter().map(|e| e.distance(&centroid)).collect();
    let mean_distance = distances.iter().sum::<f64>() / distances.len() as f64;
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    let norm = centroid.norm();
    let dispersion_ratio = if norm > 0.0 {
        mean_distance / norm
    } else if mean_distance == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(StabilityStats {
        centroid,
        mean_distance,
        max_distance,
        dispersion_ratio,
    })
}
