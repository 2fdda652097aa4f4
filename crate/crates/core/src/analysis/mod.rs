//! Length control, the all-metrics report and correlation analysis.

mod correlation;
mod length;
mod report;

pub use correlation::{correlate, pearson, spearman, CorrelationMatrix, CorrelationMethod};
pub use length::{truncate_to_shortest, SystemGroup};
pub use report::{compute_all_metrics, compute_metric, Metric, MetricReport, MetricsConfig};
