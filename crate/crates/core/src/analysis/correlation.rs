use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::Spearman),
            other => Err(Error::InvalidParameter(format!(
                "unknown correlation method `{other}`"
            ))),
        }
    }
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pearson => "pearson",
            Self::Spearman => "spearman",
        })
    }
}

/// Symmetric metric-by-metric correlation across systems. `None` marks an
/// undefined entry (a metric constant across systems).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub method: CorrelationMethod,
    pub systems: Vec<String>,
    pub metrics: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Metrics with zero variance across systems.
    pub constant: Vec<String>,
    pub warnings: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.metrics.iter().position(|m| m == a)?;
        let j = self.metrics.iter().position(|m| m == b)?;
        self.values[i][j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (m, row) in self.metrics.iter().zip(&self.values) {
            out.push_str(m);
            for v in row {
                out.push(',');
                match v {
                    Some(v) => out.push_str(&format!("{v:.6}")),
                    None => out.push_str("NA"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Below this many systems the matrix is flagged as noisy.
const FEW_SYSTEMS: usize = 10;

/// Pearson correlation; `None` if either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Fractional ranks (1-based, ties share their mean rank).
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = mean;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Correlates every pair of `metrics` across `reports` (one per system).
/// With `metrics = None` the first report's score keys are used.
pub fn correlate(
    reports: &[MetricReport],
    metrics: Option<&[String]>,
    method: CorrelationMethod,
) -> Result<CorrelationMatrix> {
    if reports.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "correlation needs at least 3 systems, got {}",
            reports.len()
        )));
    }
    let metrics: Vec<String> = match metrics {
        Some(m) => m.to_vec(),
        None => reports[0].scores.keys().cloned().collect(),
    };
    let columns: Vec<Vec<f64>> = metrics
        .iter()
        .map(|m| {
            reports
                .iter()
                .map(|r| {
                    r.scores
                        .get(m)
                        .copied()
                        .ok_or_else(|| Error::MissingMetric {
                            report: r.corpus_id.clone(),
                            metric: m.clone(),
                        })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let corr = match method {
        CorrelationMethod::Pearson => pearson,
        CorrelationMethod::Spearman => spearman,
    };
    let k = metrics.len();
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let v = if i == j {
                corr(&columns[i], &columns[i]).map(|_| 1.0)
            } else {
                corr(&columns[i], &columns[j])
            };
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    let constant: Vec<String> = metrics
        .iter()
        .zip(&columns)
        .filter(|(_, c)| c.iter().all(|v| *v == c[0]))
        .map(|(m, _)| m.clone())
        .collect();
    let mut warnings = Vec::new();
    if reports.len() < FEW_SYSTEMS {
        warnings.push(format!(
            "only {} systems; correlations are noisy below {FEW_SYSTEMS}",
            reports.len()
        ));
    }
    for m in &constant {
        warnings.push(format!(
            "`{m}` is constant across systems; its correlations are undefined"
        ));
    }
    Ok(CorrelationMatrix {
        method,
        systems: reports.iter().map(|r| r.corpus_id.clone()).collect(),
        metrics,
        values,
        constant,
        warnings,
    })
}
