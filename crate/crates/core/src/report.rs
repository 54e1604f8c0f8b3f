//! Structured experiment outputs.

use serde::Serialize;

use crate::multicomm::RatioStatus;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementPoint {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub n: usize,
    pub radius: f64,
    pub pass: bool,
    pub refinement: Vec<RefinementPoint>,
    /// Least-squares slope of log residual against log Δ, when meaningful.
    pub order: Option<f64>,
}

impl IdentityReport {
    /// Residual and pass flag are taken from the finest grid.
    pub fn from_series(name: &str, radius: f64, tolerance: f64, refinement: Vec<RefinementPoint>) -> Self {
        let last = refinement.last().cloned().unwrap_or(RefinementPoint { n: 0, value: f64::NAN });
        let order = empirical_order(&refinement);
        IdentityReport {
            name: name.to_string(),
            residual: last.value,
            tolerance,
            n: last.n,
            radius,
            pass: last.value <= tolerance,
            refinement,
            order,
        }
    }
}

/// Slope of log(value) vs log(1/n); None with fewer than two positive points.
pub fn empirical_order(series: &[RefinementPoint]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|p| p.value > 0.0 && p.value.is_finite())
        .map(|p| (-(p.n as f64).ln(), p.value.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioTrial {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub numerator: f64,
    pub factors: Vec<f64>,
    pub ratio: Option<f64>,
    pub status: RatioStatus,
    pub truncation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub estimate: String,
    pub factor_names: Vec<String>,
    pub trials: Vec<RatioTrial>,
    /// Ensemble max at each grid size.
    pub refinement: Vec<RefinementPoint>,
    pub max: f64,
    pub median: f64,
    pub degenerate: usize,
    pub max_truncation: f64,
}

impl RatioReport {
    pub fn new(estimate: &str, factor_names: &[&str], trials: Vec<RatioTrial>) -> Self {
        let mut ns: Vec<usize> = trials.iter().map(|t| t.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let refinement = ns
            .iter()
            .map(|&n| RefinementPoint { n, value: max_of(trials.iter().filter(|t| t.n == n).filter_map(|t| t.ratio)) })
            .collect();
        let mut all: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
        all.sort_by(|a, b| a.total_cmp(b));
        let median = if all.is_empty() {
            f64::NAN
        } else if all.len() % 2 == 1 {
            all[all.len() / 2]
        } else {
            0.5 * (all[all.len() / 2 - 1] + all[all.len() / 2])
        };
        RatioReport {
            estimate: estimate.to_string(),
            factor_names: factor_names.iter().map(|s| s.to_string()).collect(),
            max: max_of(all.iter().copied()),
            median,
            degenerate: trials.iter().filter(|t| t.status == RatioStatus::Degenerate).count(),
            max_truncation: trials.iter().map(|t| t.truncation).fold(0.0, f64::max),
            refinement,
            trials,
        }
    }

    pub fn max_at(&self, n: usize) -> Option<f64> {
        self.refinement.iter().find(|p| p.n == n).map(|p| p.value)
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NAN, |a, b| if a.is_nan() || b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_clean_series() {
        let s: Vec<_> = [64usize, 128, 256].iter().map(|&n| RefinementPoint { n, value: 1.0 / (n * n) as f64 }).collect();
        assert!((empirical_order(&s).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_excluded() {
        let t = |r: Option<f64>| RatioTrial {
            trial: 0,
            seed: 0,
            n: 8,
            numerator: 0.0,
            factors: vec![],
            ratio: r,
            status: if r.is_some() { RatioStatus::Ok } else { RatioStatus::Degenerate },
            truncation: 0.0,
        };
        let r = RatioReport::new("x", &[], vec![t(Some(1.0)), t(None), t(Some(3.0))]);
        assert_eq!((r.max, r.median, r.degenerate), (3.0, 2.0, 1));
    }
}
