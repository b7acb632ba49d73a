//! Stochastic complementation analysis: spectral embedding of the distance
//! matrix, azimuth grouping, and radial-variance dating.

pub mod jacobi;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corpus::DistanceMatrix;
use crate::error::{Error, Result};

/// Row-stochastic transition matrix T = Δ⁻¹D.
pub fn transition_matrix(m: &DistanceMatrix) -> Result<Vec<Vec<f64>>> {
    let n = m.n();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        let s: f64 = m.row(i).iter().sum();
        if s <= 0.0 {
            return Err(Error::DisconnectedDoculect(m.labels()[i].clone()));
        }
        for j in 0..n {
            out[i][j] = m.get(i, j) / s;
        }
    }
    Ok(out)
}

/// Spectrum of the symmetrized operator S = Δ^(−1/2) D Δ^(−1/2), which
/// shares eigenvalues with T.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSpectrum {
    /// Transition eigenvalues, descending; mu[0] = 1 (stationary).
    pub mu: Vec<f64>,
    /// Kernel eigenvalues 1/(1−μ), with 0 for the stationary direction
    /// (group-inverse convention).
    pub kernel: Vec<f64>,
    /// Orthonormal eigenvectors of S, matching `mu` order; sign fixed so
    /// each vector's largest-magnitude component is positive.
    pub vectors: Vec<Vec<f64>>,
}

pub fn kernel_spectrum(m: &DistanceMatrix) -> Result<KernelSpectrum> {
    let n = m.n();
    let sums: Vec<f64> = (0..n).map(|i| m.row(i).iter().sum()).collect();
    for (i, &s) in sums.iter().enumerate() {
        if s <= 0.0 {
            return Err(Error::DisconnectedDoculect(m.labels()[i].clone()));
        }
    }
    let mut s_mat = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s_mat[i][j] = m.get(i, j) / (sums[i] * sums[j]).sqrt();
        }
    }
    let eig = jacobi::eigh(&s_mat)?;
    let mut vectors = eig.vectors;
    for v in vectors.iter_mut() {
        let mut arg = 0;
        for (i, &x) in v.iter().enumerate() {
            if x.abs() > v[arg].abs() {
                arg = i;
            }
        }
        if v[arg] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
    let kernel: Vec<f64> = eig
        .values
        .iter()
        .enumerate()
        .map(|(k, &mu)| if k == 0 { 0.0 } else { 1.0 / (1.0 - mu) })
        .collect();
    Ok(KernelSpectrum { mu: eig.values, kernel, vectors })
}

/// Which nontrivial eigendirections supply the embedding coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentRanking {
    /// Smallest kernel eigenvalues first (fastest-relaxing directions).
    KernelAscending,
    /// 2nd–4th eigenvectors by descending transition eigenvalue μ.
    TransitionDescending,
}

#[derive(Debug, Clone)]
pub struct EmbedConfig {
    pub ranking: ComponentRanking,
    /// Doculect ids whose circular-mean azimuth is rotated to 0.
    pub central_group: Vec<String>,
}

/// The five dialects that stay central after the azimuth regrouping.
pub const DEFAULT_CENTRAL_GROUP: [&str; 5] =
    ["mananjary", "manakara", "fianarantsoa", "antananarivo", "fenoarivo-est"];

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            ranking: ComponentRanking::KernelAscending,
            central_group: DEFAULT_CENTRAL_GROUP.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Three-dimensional spectral coordinates per doculect.
#[derive(Debug, Clone, Serialize)]
pub struct ScaEmbedding {
    pub labels: Vec<String>,
    pub mu: Vec<f64>,
    pub kernel: Vec<f64>,
    /// Indices (into the descending-μ spectrum) of the chosen components.
    pub components: [usize; 3],
    pub q2: Vec<f64>,
    pub q3: Vec<f64>,
    pub q4: Vec<f64>,
    /// r = sqrt(q2² + q3² + q4²).
    pub r: Vec<f64>,
    /// Azimuth in the (q3,q4) plane after the central-group rotation, in
    /// (−π, π].
    pub phi: Vec<f64>,
    /// Rotation applied so the central group's circular-mean azimuth is 0.
    pub rotation: f64,
}

pub fn embed(m: &DistanceMatrix, config: &EmbedConfig) -> Result<ScaEmbedding> {
    let n = m.n();
    if n < 4 {
        return Err(Error::TooFew { need: 4, got: n });
    }
    let spec = kernel_spectrum(m)?;
    let components: [usize; 3] = match config.ranking {
        ComponentRanking::TransitionDescending => [1, 2, 3],
        ComponentRanking::KernelAscending => [n - 1, n - 2, n - 3],
    };
    // Warn when the boundary eigenvalue is degenerate: the embedding plane
    // is then only defined up to a rotation inside the tied subspace.
    let boundary = match config.ranking {
        ComponentRanking::TransitionDescending => (spec.mu[3] - spec.mu[4]).abs(),
        ComponentRanking::KernelAscending => (spec.mu[n - 3] - spec.mu[n - 4]).abs(),
    };
    if boundary < 1e-9 {
        log::warn!("ambiguous embedding: eigenvalue tie at the component boundary ({boundary:e})");
    }

    let q2 = spec.vectors[components[0]].clone();
    let q3 = spec.vectors[components[1]].clone();
    let q4 = spec.vectors[components[2]].clone();
    let r: Vec<f64> = (0..n)
        .map(|i| (q2[i] * q2[i] + q3[i] * q3[i] + q4[i] * q4[i]).sqrt())
        .collect();

    let raw: Vec<f64> = (0..n).map(|i| q4[i].atan2(q3[i])).collect();
    let mut sin_sum = 0.0;
    let mut cos_sum = 0.0;
    let mut found = 0usize;
    for id in &config.central_group {
        let i = m.index_of(id)?;
        sin_sum += raw[i].sin();
        cos_sum += raw[i].cos();
        found += 1;
    }
    let rotation = if found == 0 { 0.0 } else { sin_sum.atan2(cos_sum) };
    let phi: Vec<f64> = raw.iter().map(|&a| wrap_angle(a - rotation)).collect();

    Ok(ScaEmbedding {
        labels: m.labels().to_vec(),
        mu: spec.mu,
        kernel: spec.kernel,
        components,
        q2,
        q3,
        q4,
        r,
        phi,
        rotation,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Azimuth classes. Wing identity (north vs south) is anchored on the wing
/// containing Vohemar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    North,
    South,
    Center,
    Outlier,
}

pub const DEFAULT_AZIMUTH_THRESHOLDS: (f64, f64) = (-0.25, 0.25);
pub const DEFAULT_OUTLIER_FACTOR: f64 = 3.0;
pub const NORTH_ANCHOR: &str = "vohemar";

/// Doculects whose (q3,q4) plane distance from the plane centroid exceeds
/// `factor` times the median distance.
pub fn plane_outliers(e: &ScaEmbedding, factor: f64) -> Vec<usize> {
    let n = e.labels.len();
    let cx: f64 = e.q3.iter().sum::<f64>() / n as f64;
    let cy: f64 = e.q4.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = (0..n)
        .map(|i| ((e.q3[i] - cx).powi(2) + (e.q4[i] - cy).powi(2)).sqrt())
        .collect();
    let mut sorted = d.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    (0..n).filter(|&i| d[i] > factor * median).collect()
}

/// Assign each doculect to north / south / center / outlier by its azimuth.
///
/// `thresholds` = (negative, positive) angles in radians; φ between them is
/// center. Outliers (by the plane rule) are removed first.
pub fn classify_by_azimuth(
    e: &ScaEmbedding,
    thresholds: (f64, f64),
    outlier_factor: f64,
) -> Vec<(String, Group)> {
    let (lo, hi) = thresholds;
    let outl = plane_outliers(e, outlier_factor);
    // Provisional wings by sign of phi.
    let wing = |i: usize| -> Option<bool> {
        if e.phi[i] > hi {
            Some(true)
        } else if e.phi[i] < lo {
            Some(false)
        } else {
            None
        }
    };
    // The wing holding the anchor is north; if the anchor is central or an
    // outlier, the sign of its azimuth decides.
    let anchor = e.labels.iter().position(|l| l == NORTH_ANCHOR);
    let north_is_positive = match anchor {
        Some(a) => wing(a).unwrap_or(e.phi[a] > 0.0),
        None => true,
    };
    e.labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let g = if outl.contains(&i) {
                Group::Outlier
            } else {
                match wing(i) {
                    Some(pos) if pos == north_is_positive => Group::North,
                    Some(_) => Group::South,
                    None => Group::Center,
                }
            };
            (l.clone(), g)
        })
        .collect()
}

/// Least-squares line through the radial Q-Q plot.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadialFit {
    pub slope: f64,
    pub intercept: f64,
    /// σ² = slope².
    pub sigma2: f64,
    pub r_squared: f64,
}

/// Fit sorted radii against standard normal quantiles at the Blom plotting
/// positions (i − 3/8)/(N + 1/4).
pub fn fit_radial_variance(e: &ScaEmbedding) -> Result<RadialFit> {
    fit_radial_from(&e.r)
}

pub fn fit_radial_from(radii: &[f64]) -> Result<RadialFit> {
    let n = radii.len();
    if n < 5 {
        return Err(Error::TooFew { need: 5, got: n });
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z: Vec<f64> = (1..=n)
        .map(|i| normal.inverse_cdf((i as f64 - 0.375) / (n as f64 + 0.25)))
        .collect();

    let zm = z.iter().sum::<f64>() / n as f64;
    let rm = rs.iter().sum::<f64>() / n as f64;
    let sxy: f64 = z.iter().zip(&rs).map(|(&x, &y)| (x - zm) * (y - rm)).sum();
    let sxx: f64 = z.iter().map(|&x| (x - zm) * (x - zm)).sum();
    let syy: f64 = rs.iter().map(|&y| (y - rm) * (y - rm)).sum();
    if syy == 0.0 || rs[n - 1] - rs[0] <= 0.0 {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = rm - slope * zm;
    let ss_res: f64 = z
        .iter()
        .zip(&rs)
        .map(|(&x, &y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    Ok(RadialFit {
        slope,
        intercept,
        sigma2: slope * slope,
        r_squared: 1.0 - ss_res / syy,
    })
}

/// Default ratio between age in years and radial variance.
pub const DEFAULT_PACE: f64 = 1.367e6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DatingResult {
    pub sigma2: f64,
    pub pace: f64,
    /// t = pace · σ², years before the survey date.
    pub age_years: f64,
    pub landing_year: f64,
}

pub fn date_from_variance(sigma2: f64, pace: f64, survey_year: f64) -> DatingResult {
    let age_years = pace * sigma2;
    DatingResult { sigma2, pace, age_years, landing_year: survey_year - age_years }
}
