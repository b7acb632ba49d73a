//! Homeland inference: local distance/geography regression and the
//! diversity index it normalizes.

use serde::Serialize;

use crate::corpus::{DistanceMatrix, GeoPoint, GeoTable};
use crate::error::{Error, Result};

/// Central angle between two points on the sphere, in radians (haversine).
pub fn great_circle_angle(p: GeoPoint, q: GeoPoint) -> f64 {
    let la1 = p.lat.to_radians();
    let la2 = q.lat.to_radians();
    let dla = (la2 - la1) / 2.0;
    let dlo = (q.lon - p.lon).to_radians() / 2.0;
    let h = dla.sin().powi(2) + la1.cos() * la2.cos() * dlo.sin().powi(2);
    2.0 * h.sqrt().asin()
}

/// Fraction of smallest-angle pairs used by the regression.
pub const REGRESSION_FRACTION: f64 = 0.2;

/// OLS fit of D = a + bΔ over the closest pairs. b is lexical distance per
/// radian of central angle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeoRegression {
    pub intercept: f64,
    pub slope: f64,
    /// Pairs actually used (cutoff ties included).
    pub pairs_used: usize,
    /// Largest central angle among the selected pairs.
    pub max_angle: f64,
}

/// Regress lexical distance on geographic angle over the ⌈fraction·M⌉
/// smallest-angle pairs; pairs tied with the cutoff angle are all included.
pub fn fit_geo_regression(
    m: &DistanceMatrix,
    geo: &GeoTable,
    fraction: f64,
) -> Result<GeoRegression> {
    let n = m.n();
    if n < 3 {
        return Err(Error::TooFew { need: 3, got: n });
    }
    let points: Vec<GeoPoint> = m
        .labels()
        .iter()
        .map(|l| geo.get(l).copied().ok_or_else(|| Error::MissingCoordinates(l.clone())))
        .collect::<Result<_>>()?;

    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((great_circle_angle(points[i], points[j]), m.get(i, j)));
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (fraction * pairs.len() as f64).ceil() as usize;
    let k = k.clamp(2, pairs.len());
    let cutoff = pairs[k - 1].0;
    let sel: Vec<&(f64, f64)> = pairs.iter().take_while(|p| p.0 <= cutoff).collect();

    let nf = sel.len() as f64;
    let xm = sel.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = sel.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = sel.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::SingularRegression);
    }
    let sxy: f64 = sel.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    Ok(GeoRegression {
        intercept: ym - slope * xm,
        slope,
        pairs_used: sel.len(),
        max_angle: cutoff,
    })
}

/// One doculect's diversity score.
#[derive(Debug, Clone, Serialize)]
pub struct DiversityEntry {
    pub id: String,
    /// V(l) = mean over others of D / (a + bΔ).
    pub diversity: f64,
    /// V / max V.
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiversityReport {
    pub regression: GeoRegression,
    /// Sorted by diversity descending; ties keep matrix order.
    pub entries: Vec<DiversityEntry>,
}

impl DiversityReport {
    pub fn get(&self, id: &str) -> Option<&DiversityEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Rank doculects by geography-corrected lexical diversity. The most
/// diverse location is the inferred homeland.
pub fn diversity(m: &DistanceMatrix, geo: &GeoTable) -> Result<DiversityReport> {
    diversity_with_fraction(m, geo, REGRESSION_FRACTION)
}

/// Same as [`diversity`] with an explicit regression fraction.
pub fn diversity_with_fraction(
    m: &DistanceMatrix,
    geo: &GeoTable,
    fraction: f64,
) -> Result<DiversityReport> {
    let regression = fit_geo_regression(m, geo, fraction)?;
    let n = m.n();
    let points: Vec<GeoPoint> = m
        .labels()
        .iter()
        .map(|l| geo.get(l).copied().ok_or_else(|| Error::MissingCoordinates(l.clone())))
        .collect::<Result<_>>()?;

    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let expected = regression.intercept
                + regression.slope * great_circle_angle(points[i], points[j]);
            if expected <= 0.0 {
                return Err(Error::NonpositiveDenominator(
                    m.labels()[i].clone(),
                    m.labels()[j].clone(),
                ));
            }
            sum += m.get(i, j) / expected;
        }
        scores.push(sum / (n - 1) as f64);
    }
    let max = scores.iter().cloned().fold(f64::MIN, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let entries = order
        .into_iter()
        .map(|i| DiversityEntry {
            id: m.labels()[i].clone(),
            diversity: scores[i],
            normalized: scores[i] / max,
        })
        .collect();
    Ok(DiversityReport { regression, entries })
}
