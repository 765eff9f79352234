//! Alternative plausibility rules over the Siamese embedding.
//!
//! Both replace the autoencoder: [`ClusterScorer`] decays with the distance to
//! the mean embedding of the group's real placements, [`KdeScorer`] uses a
//! Gaussian kernel density fitted on those embeddings.

use crate::error::{Error, Result};
use crate::model::{GroupModel, PlacementContext};
use crate::placement::PlacementScorer;
use crate::scene::{Scene, SceneObject};

/// Bandwidths never shrink below this, so constant dimensions stay usable.
pub const KDE_MIN_BANDWIDTH: f64 = 1e-3;

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidParam(format!("dimension mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Arithmetic mean of equally sized vectors.
pub fn cluster_mean(outputs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = outputs.first().ok_or_else(|| Error::InsufficientData("cluster mean of no outputs".into()))?;
    let mut mu = vec![0.0; first.len()];
    for y in outputs {
        check_dims(y, &mu)?;
        mu.iter_mut().zip(y).for_each(|(m, v)| *m += v);
    }
    let n = outputs.len() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    Ok(mu)
}

/// `exp(-|y - mu|)` with the Euclidean norm.
pub fn siamese_plausibility(y: &[f64], mu: &[f64]) -> Result<f64> {
    check_dims(y, mu)?;
    let d2: f64 = y.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-d2.sqrt()).exp())
}

/// Product-Gaussian kernel density with one Silverman bandwidth per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    points: Vec<Vec<f64>>,
    bandwidth: Vec<f64>,
}

impl Kde {
    pub fn fit(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!("kde needs at least 2 points, got {}", points.len())));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidParam("kde over zero-dimensional points".into()));
        }
        for p in &points {
            check_dims(p, &points[0])?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("kde point"));
            }
        }
        let n = points.len() as f64;
        let factor = (4.0 / (d as f64 + 2.0)).powf(1.0 / (d as f64 + 4.0)) * n.powf(-1.0 / (d as f64 + 4.0));
        let bandwidth = (0..d)
            .map(|j| {
                let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
                let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (factor * var.sqrt()).max(KDE_MIN_BANDWIDTH)
            })
            .collect();
        Ok(Self { points, bandwidth })
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Natural log of the density, computed with a log-sum-exp so far-away
    /// queries stay finite.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        check_dims(y, &self.bandwidth)?;
        let d = self.bandwidth.len() as f64;
        let norm = -0.5 * d * (2.0 * std::f64::consts::PI).ln() - self.bandwidth.iter().map(|h| h.ln()).sum::<f64>();
        let logs: Vec<f64> = self
            .points
            .iter()
            .map(|p| -0.5 * p.iter().zip(y).zip(&self.bandwidth).map(|((x, v), h)| ((v - x) / h).powi(2)).sum::<f64>())
            .collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        Ok(norm + top + (sum / self.points.len() as f64).ln())
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        Ok(self.log_density(y)?.exp())
    }
}

fn positive_embeddings(model: &GroupModel, positives: &[PlacementContext]) -> Result<Vec<Vec<f64>>> {
    positives.iter().map(|c| model.project(c)).collect()
}

/// Cluster-mean plausibility on a trained model's embedding.
pub struct ClusterScorer<'m> {
    pub model: &'m GroupModel,
    pub mean: Vec<f64>,
}

impl<'m> ClusterScorer<'m> {
    pub fn fit(model: &'m GroupModel, positives: &[PlacementContext]) -> Result<Self> {
        Ok(Self { model, mean: cluster_mean(&positive_embeddings(model, positives)?)? })
    }
}

impl PlacementScorer for ClusterScorer<'_> {
    fn score(&self, scene: &Scene, candidate: &SceneObject) -> Result<f64> {
        siamese_plausibility(&self.model.project(&self.model.context(candidate, scene)?)?, &self.mean)
    }
}

/// KDE plausibility on a trained model's embedding.
///
/// Raw densities are unbounded, so scores are divided by the largest density
/// attained at a fitted point and clipped to 1. Rankings are unchanged.
pub struct KdeScorer<'m> {
    pub model: &'m GroupModel,
    pub kde: Kde,
    log_peak: f64,
}

impl<'m> KdeScorer<'m> {
    pub fn fit(model: &'m GroupModel, positives: &[PlacementContext]) -> Result<Self> {
        let kde = Kde::fit(positive_embeddings(model, positives)?)?;
        let log_peak = kde
            .points()
            .iter()
            .map(|p| kde.log_density(p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { model, kde, log_peak })
    }
}

impl PlacementScorer for KdeScorer<'_> {
    fn score(&self, scene: &Scene, candidate: &SceneObject) -> Result<f64> {
        let y = self.model.project(&self.model.context(candidate, scene)?)?;
        Ok((self.kde.log_density(&y)? - self.log_peak).exp().min(1.0))
    }
}
